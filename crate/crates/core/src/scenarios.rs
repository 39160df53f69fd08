//! Hypothesis pairs for the illumination cases.
//!
//! Mode A is the detector mode (the returning probe plus noise), mode B the
//! idler. Under hypothesis 0 the object is present: the probe meets an
//! environment of mean `n̄_env/(1-ε)` on a beam splitter of reflectivity ε.
//! Under hypothesis 1 the probe is swapped out for `thermal(n̄_env)`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{
    coherent_vector, epr_state, initial_dim, poisson_dim, thermal_dim, squeezed_coherent_vector, thermal_state,
    FockState, ThermalLossChannel, TruncationSpec, DEFAULT_TRACE_TOL,
};
use crate::gaussian::{illumination_cm, GaussianState};

/// Environment tail dropped inside the channel.
pub const ENV_TOL: f64 = 1e-13;

#[derive(Clone, Debug)]
pub enum Probe {
    /// Two-mode squeezed vacuum; the idler is kept as mode B.
    Epr,
    /// Coherent state with real amplitude `√n̄`.
    Coherent,
    /// `D(α)S(r)|0⟩` with real `α = √(n̄ - sinh²r)`.
    SqueezedCoherent { r: f64 },
    /// Arbitrary single-mode probe; its mean photon number must equal
    /// `nbar_probe`.
    CustomFock(FockState),
}

impl Probe {
    pub fn is_two_mode(&self) -> bool {
        matches!(self, Probe::Epr)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Probe::Epr => "epr",
            Probe::Coherent => "coherent",
            Probe::SqueezedCoherent { .. } => "squeezed",
            Probe::CustomFock(_) => "custom",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hypothesis {
    /// x = 0: object present.
    Present,
    /// x = 1: object absent.
    Absent,
}

#[derive(Clone, Debug)]
pub struct ScenarioParams {
    pub epsilon: f64,
    pub nbar_probe: f64,
    pub nbar_env: f64,
    pub p0: f64,
    pub p1: f64,
    pub probe: Probe,
}

impl ScenarioParams {
    pub fn new(epsilon: f64, nbar_probe: f64, nbar_env: f64, p0: f64, probe: Probe) -> Result<Self> {
        let p = Self {
            epsilon,
            nbar_probe,
            nbar_env,
            p0,
            p1: 1.0 - p0,
            probe,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(invalid(format!("epsilon must lie in [0, 1), got {}", self.epsilon)));
        }
        if !(self.nbar_probe >= 0.0) || !self.nbar_probe.is_finite() {
            return Err(invalid(format!("nbar_probe must be >= 0, got {}", self.nbar_probe)));
        }
        if !(self.nbar_env >= 0.0) || !self.nbar_env.is_finite() {
            return Err(invalid(format!("nbar_env must be >= 0, got {}", self.nbar_env)));
        }
        if !(0.0..=1.0).contains(&self.p0) || !(0.0..=1.0).contains(&self.p1) || (self.p0 + self.p1 - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("priors must be a distribution, got ({}, {})", self.p0, self.p1)));
        }
        if let Probe::SqueezedCoherent { r } = self.probe {
            if !r.is_finite() || r.sinh().powi(2) > self.nbar_probe {
                return Err(invalid(format!(
                    "squeezing r = {r} needs sinh²r <= nbar_probe = {}",
                    self.nbar_probe
                )));
            }
        }
        Ok(())
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        let mut p = self.clone();
        p.epsilon = epsilon;
        p.validate()?;
        Ok(p)
    }

    pub fn with_probe(&self, probe: Probe, nbar_probe: f64) -> Result<Self> {
        let mut p = self.clone();
        p.probe = probe;
        p.nbar_probe = nbar_probe;
        p.validate()?;
        Ok(p)
    }

    /// Mean photon number of the environment mode at the beam splitter.
    pub fn nbar_env_rescaled(&self) -> f64 {
        self.nbar_env / (1.0 - self.epsilon)
    }
}

/// Fock cutoffs for the probe input, the detector output and the idler.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairDims {
    pub probe: usize,
    pub detector: usize,
    /// Unused for single-mode probes.
    pub idler: usize,
}

impl PairDims {
    /// Starting cutoffs: thermal-style `12 + 10 n̄` per mode, Poisson-style
    /// for coherent probes.
    pub fn initial(params: &ScenarioParams) -> Self {
        let n = params.nbar_probe;
        let probe = match &params.probe {
            Probe::Epr => initial_dim(n),
            Probe::Coherent => poisson_dim(n, 1e-14).max(8),
            Probe::SqueezedCoherent { r } => poisson_dim(n, 1e-14).max(8) + (40.0 * r.sinh().powi(2)) as usize + 8,
            Probe::CustomFock(st) => st.dims()[0],
        };
        let received = params.epsilon * n + params.nbar_env;
        // the heuristic alone can leave a received tail above the trace
        // tolerance once n̄_env is a few photons
        let detector =
            initial_dim(received.max(params.nbar_env_rescaled())).max(thermal_dim(received, DEFAULT_TRACE_TOL / 10.0));
        Self {
            probe,
            detector,
            idler: probe,
        }
    }

    pub fn doubled(&self, params: &ScenarioParams) -> Self {
        let probe = match params.probe {
            Probe::CustomFock(_) => self.probe,
            _ => 2 * self.probe,
        };
        Self {
            probe,
            detector: 2 * self.detector,
            idler: probe,
        }
    }
}

/// Cutoff for a single-mode Gaussian probe: Poisson-style for the
/// displacement, padded for squeezing and any thermal part.
pub fn gaussian_probe_dim(g: &GaussianState) -> usize {
    let c = g.cov_entries();
    let m = g.mean();
    let det = (c[0] * c[3] - c[1] * c[2]).max(1.0);
    let nu = det.sqrt();
    let half_tr = (c[0] + c[3]) / 2.0;
    let top = half_tr + (((c[0] - c[3]) / 2.0).powi(2) + c[1] * c[2]).max(0.0).sqrt();
    let r = 0.5 * (top / nu).max(1.0).ln();
    let displacement = (m[0] * m[0] + m[1] * m[1]) / 4.0;
    let thermal = (nu - 1.0) / 2.0;
    poisson_dim(displacement, 1e-14).max(8) + (40.0 * r.sinh().powi(2)) as usize + 8 + (10.0 * thermal).ceil() as usize
}

/// The two hypothesis states seen by the receiver.
#[derive(Clone, Debug)]
pub struct EncodedPair {
    pub rho0: FockState,
    pub rho1: FockState,
    pub gauss0: Option<GaussianState>,
    pub gauss1: Option<GaussianState>,
    pub truncation: TruncationSpec,
    pub dims: PairDims,
}

impl EncodedPair {
    pub fn is_two_mode(&self) -> bool {
        self.truncation.modes() == 2
    }

    /// Wraps an arbitrary pair of states on a common space.
    pub fn from_states(rho0: FockState, rho1: FockState) -> Result<Self> {
        if rho0.dims() != rho1.dims() {
            return Err(Error::DimensionMismatch("hypothesis states on different spaces".into()));
        }
        let truncation = rho0.spec().clone();
        let d = truncation.dims()[0];
        Ok(Self {
            rho0,
            rho1,
            gauss0: None,
            gauss1: None,
            truncation,
            dims: PairDims {
                probe: d,
                detector: d,
                idler: d,
            },
        })
    }
}

/// The channel used for `params` at the given cutoffs.
pub fn channel_for(params: &ScenarioParams, dims: &PairDims) -> Result<ThermalLossChannel> {
    ThermalLossChannel::new(params.epsilon, params.nbar_env_rescaled(), dims.probe, dims.detector, ENV_TOL)
}

/// Probe state before the object: single-mode, or (probe, idler) for EPR.
pub fn probe_state(params: &ScenarioParams, dims: &PairDims) -> Result<FockState> {
    let tol = DEFAULT_TRACE_TOL;
    let n = params.nbar_probe;
    match &params.probe {
        Probe::Epr => epr_state(n, &TruncationSpec::new(vec![dims.probe, dims.idler], tol)?),
        Probe::Coherent => {
            coherent_vector(C64::new(n.sqrt(), 0.0), dims.probe).to_state(&TruncationSpec::single(dims.probe, tol)?)
        }
        Probe::SqueezedCoherent { r } => {
            let alpha = (n - r.sinh().powi(2)).max(0.0).sqrt();
            squeezed_coherent_vector(*r, C64::new(alpha, 0.0), dims.probe)
                .to_state(&TruncationSpec::single(dims.probe, tol)?)
        }
        Probe::CustomFock(st) => {
            if st.spec().modes() != 1 {
                return Err(invalid("custom probes must be single-mode"));
            }
            let mean = st.mean_photons(0) / st.trace();
            if (mean - n).abs() > 1e-9 {
                return Err(invalid(format!("custom probe carries {mean} photons, expected {n}")));
            }
            Ok(st.clone())
        }
    }
}

/// Builds the pair at the initial cutoffs.
pub fn build_pair(params: &ScenarioParams) -> Result<EncodedPair> {
    let dims = PairDims::initial(params);
    build_pair_with(params, &dims)
}

pub fn build_pair_with(params: &ScenarioParams, dims: &PairDims) -> Result<EncodedPair> {
    let channel = channel_for(params, dims)?;
    build_pair_on(params, dims, &channel)
}

/// Builds the pair reusing a prepared channel (its input dim may exceed
/// the probe's).
pub fn build_pair_on(params: &ScenarioParams, dims: &PairDims, channel: &ThermalLossChannel) -> Result<EncodedPair> {
    params.validate()?;
    if (channel.epsilon() - params.epsilon).abs() > 0.0
        || (channel.nbar_env() - params.nbar_env_rescaled()).abs() > 1e-15 * params.nbar_env.max(1.0)
    {
        return Err(invalid("channel does not match the scenario"));
    }
    let d_out = channel.output_dim();
    let tol = DEFAULT_TRACE_TOL;
    let probe = probe_state(params, dims)?;
    let rho0 = channel.apply(&probe, 0)?.renormalized()?;
    let env = thermal_state(params.nbar_env, &TruncationSpec::single(d_out, tol)?)?;
    let (rho1, gauss) = if params.probe.is_two_mode() {
        let idler = probe.partial_trace(&[1])?;
        let rho1 = env.tensor(&idler)?.renormalized()?;
        let g0 = illumination_cm(params, Hypothesis::Present)?;
        let g1 = illumination_cm(params, Hypothesis::Absent)?;
        (rho1, Some((g0, g1)))
    } else {
        let rho1 = env.renormalized()?;
        let g = single_mode_cm(params)?;
        (rho1, g)
    };
    let truncation = rho0.spec().clone();
    let (gauss0, gauss1) = match gauss {
        Some((a, b)) => (Some(a), Some(b)),
        None => (None, None),
    };
    let mut used = *dims;
    used.detector = d_out;
    Ok(EncodedPair {
        rho0,
        rho1,
        gauss0,
        gauss1,
        truncation,
        dims: used,
    })
}

/// Covariance matrices of the received single-mode states when the probe
/// is Gaussian.
fn single_mode_cm(params: &ScenarioParams) -> Result<Option<(GaussianState, GaussianState)>> {
    let n = params.nbar_probe;
    let probe = match &params.probe {
        Probe::Coherent => GaussianState::coherent(C64::new(n.sqrt(), 0.0)),
        Probe::SqueezedCoherent { r } => {
            GaussianState::squeezed_coherent(*r, C64::new((n - r.sinh().powi(2)).max(0.0).sqrt(), 0.0))
        }
        _ => return Ok(None),
    };
    received_cm(params, &probe).map(Some)
}

/// Both hypothesis states for a single-mode Gaussian probe: the probe is
/// attenuated by ε and topped up with `n̄_env` photons of noise.
pub fn received_cm(params: &ScenarioParams, probe: &GaussianState) -> Result<(GaussianState, GaussianState)> {
    if probe.modes() != 1 {
        return Err(invalid("expected a single-mode probe"));
    }
    let eps = params.epsilon;
    let noise = 2.0 * params.nbar_env + 1.0 - eps;
    let c = probe.cov_entries();
    let cov = vec![eps * c[0] + noise, eps * c[1], eps * c[2], eps * c[3] + noise];
    let m = probe.mean();
    let g0 = GaussianState::new(vec![eps.sqrt() * m[0], eps.sqrt() * m[1]], cov)?;
    Ok((g0, GaussianState::thermal(params.nbar_env)?))
}

/// Heterodyne collapse of an EPR probe: measuring outcome β on the idler
/// leaves the probe in the coherent state `-λβ*`, so the probe energy
/// `E = λ²|β|²` is exponentially distributed with mean `n̄`.
#[derive(Clone, Copy, Debug)]
pub struct CollapsedDistribution {
    pub nbar: f64,
    pub lambda: f64,
}

impl CollapsedDistribution {
    pub fn mean_energy(&self) -> f64 {
        self.lambda * self.lambda * (self.nbar + 1.0)
    }

    /// Density of the collapsed probe energy; `None` signals the point
    /// mass at `E = 0` when `n̄ = 0`.
    pub fn energy_density(&self, e: f64) -> Option<f64> {
        if self.nbar == 0.0 {
            return None;
        }
        Some(if e < 0.0 { 0.0 } else { (-e / self.nbar).exp() / self.nbar })
    }

    /// Density of the heterodyne outcome β over the complex plane.
    pub fn outcome_density(&self, beta: C64) -> f64 {
        (-beta.norm_sqr() / (self.nbar + 1.0)).exp() / (PI * (self.nbar + 1.0))
    }

    pub fn amplitude(&self, beta: C64) -> C64 {
        -self.lambda * beta.conj()
    }
}

pub fn collapsed_probe_distribution(params: &ScenarioParams) -> Result<CollapsedDistribution> {
    if !matches!(params.probe, Probe::Epr) {
        return Err(invalid("the collapsed distribution is defined for EPR probes"));
    }
    let n = params.nbar_probe;
    Ok(CollapsedDistribution {
        nbar: n,
        lambda: (n / (n + 1.0)).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::GaussianState;

    #[test]
    fn param_validation() {
        assert!(ScenarioParams::new(1.0, 0.5, 4.0, 0.5, Probe::Epr).is_err());
        assert!(ScenarioParams::new(0.1, -0.5, 4.0, 0.5, Probe::Epr).is_err());
        assert!(ScenarioParams::new(0.1, 0.5, 4.0, 1.5, Probe::Epr).is_err());
        assert!(ScenarioParams::new(0.1, 0.01, 4.0, 0.5, Probe::SqueezedCoherent { r: 0.5 }).is_err());
        let p = ScenarioParams::new(0.1, 0.5, 4.0, 0.5, Probe::Epr).unwrap();
        assert!((p.nbar_env_rescaled() - 4.0 / 0.9).abs() < 1e-15);
    }

    #[test]
    fn zero_reflectivity_gives_identical_states() {
        for probe in [Probe::Epr, Probe::Coherent] {
            let p = ScenarioParams::new(0.0, 0.5, 1.0, 0.5, probe).unwrap();
            let pair = build_pair(&p).unwrap();
            assert!(pair.rho0.max_abs_diff(&pair.rho1).unwrap() < 1e-10);
        }
    }

    #[test]
    fn coherent_pair_is_displaced_thermal() {
        let p = ScenarioParams::new(0.2, 0.5, 1.0, 0.5, Probe::Coherent).unwrap();
        let dims = PairDims::initial(&p).doubled(&p);
        let pair = build_pair_with(&p, &dims).unwrap();
        let g = GaussianState::from_fock(&pair.rho0).unwrap();
        assert!(g.max_abs_diff(pair.gauss0.as_ref().unwrap()) < 1e-7, "{g:?}");
        let g1 = GaussianState::from_fock(&pair.rho1).unwrap();
        assert!(g1.max_abs_diff(pair.gauss1.as_ref().unwrap()) < 1e-7);
        assert!((pair.rho1.mean_photons(0) - 1.0).abs() < 1e-7);
    }

    #[test]
    fn collapsed_mean_energy() {
        let p = ScenarioParams::new(0.1, 0.5, 4.0, 0.5, Probe::Epr).unwrap();
        let c = collapsed_probe_distribution(&p).unwrap();
        assert!((c.mean_energy() - 0.5).abs() < 1e-15);
        let z = collapsed_probe_distribution(&ScenarioParams::new(0.1, 0.0, 4.0, 0.5, Probe::Epr).unwrap()).unwrap();
        assert!(z.energy_density(0.3).is_none());
        assert!(collapsed_probe_distribution(&ScenarioParams::new(0.1, 0.5, 4.0, 0.5, Probe::Coherent).unwrap()).is_err());
    }
}
