//! Random perturbations of a coherent probe at fixed mean photon number.
//!
//! Each sample adds a random complex direction of norm η to the truncated
//! coherent vector, renormalises, and then restores the mean photon number
//! exactly by a real displacement `D(δ)`. The direction has components
//! `c_n z_n` (coherent amplitudes times complex Gaussians), so it lives
//! where the probe does; an isotropic direction would spend most of its
//! norm on nearly empty Fock levels and make the study depend on the
//! cutoff.
//!
//! Every probe, the reference included, goes through one channel at the
//! heuristic starting cutoffs, so truncation error is common to all samples
//! and cancels in the comparison.

use num_complex::Complex64 as C64;
use qillum::fock::{coherent_vector, displacement_matrix, FockState, TruncationSpec};
use qillum::info::holevo;
use qillum::scenarios::{build_pair_on, channel_for, PairDims, Probe, ScenarioParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, ExpError, Result};

pub const HISTOGRAM_BINS: usize = 40;
/// Resampling attempts per sample before the study gives up.
pub const MAX_ATTEMPTS: usize = 100;
const PHOTON_TOL: f64 = 1e-13;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerturbationStudySpec {
    pub samples: usize,
    /// Norm of the added direction; 0 reproduces the coherent probe.
    pub eta: f64,
    pub seed: u64,
    /// Fraction of samples, ranked by Holevo information, kept for the
    /// histogram.
    pub keep_fraction: f64,
}

impl PerturbationStudySpec {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(config("need at least one sample"));
        }
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(config(format!("eta must be a finite non-negative number, got {}", self.eta)));
        }
        if !(self.keep_fraction > 0.0 && self.keep_fraction <= 1.0) {
            return Err(config(format!("keep fraction must lie in (0, 1], got {}", self.keep_fraction)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PerturbationStudy {
    pub spec: PerturbationStudySpec,
    pub dims: PairDims,
    /// Holevo information of the unperturbed probe through the same path.
    pub reference: f64,
    /// All sample values in sample order.
    pub values: Vec<f64>,
    /// Samples whose displacement restoration failed and were redrawn.
    pub rejected: usize,
    pub kept: usize,
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Fraction of all samples above the reference.
    pub fraction_above: f64,
    pub best: f64,
}

fn mean_photons(v: &[C64]) -> f64 {
    let norm: f64 = v.iter().map(|c| c.norm_sqr()).sum();
    v.iter().enumerate().map(|(n, c)| n as f64 * c.norm_sqr()).sum::<f64>() / norm
}

fn normalize(v: &mut [C64]) {
    let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|c| *c /= n);
}

fn displaced(v: &[C64], delta: f64) -> Vec<C64> {
    let d = v.len();
    let m = displacement_matrix(C64::new(delta, 0.0), d, d);
    let mut out: Vec<C64> = (0..d).map(|r| (0..d).map(|c| m[(r, c)] * v[c]).sum()).collect();
    normalize(&mut out);
    out
}

/// Real displacement bringing the truncated, renormalised state to mean
/// photon number `target`, or `None` when no such displacement exists.
///
/// Without truncation `⟨n⟩(δ) = ⟨n⟩ + 2δ Re⟨a⟩ + δ²`; its smaller root
/// seeds a secant iteration on the truncated state.
pub fn restore_mean(v: &[C64], target: f64) -> Option<(Vec<C64>, f64)> {
    let n0 = mean_photons(v);
    let a: C64 = (1..v.len()).map(|n| v[n - 1].conj() * v[n] * (n as f64).sqrt()).sum();
    let b = a.re;
    let disc = b * b - (n0 - target);
    if disc < 0.0 {
        return None;
    }
    let r1 = -b + disc.sqrt();
    let r2 = -b - disc.sqrt();
    let mut x1 = if r1.abs() <= r2.abs() { r1 } else { r2 };
    let f = |delta: f64| mean_photons(&displaced(v, delta)) - target;
    let mut f1 = f(x1);
    let mut x0 = x1 + 1e-6;
    let mut f0 = f(x0);
    for _ in 0..50 {
        if f1.abs() < PHOTON_TOL {
            return Some((displaced(v, x1), x1));
        }
        if f1 == f0 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        (x0, f0) = (x1, f1);
        x1 = x2;
        f1 = f(x1);
    }
    (f1.abs() < PHOTON_TOL).then(|| (displaced(v, x1), x1))
}

/// One perturbed probe vector from its own counter stream.
fn sample_vector(base: &[C64], eta: f64, target: f64, seed: u64, index: u64) -> Result<(Vec<C64>, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    for attempt in 0..MAX_ATTEMPTS {
        let mut dir: Vec<C64> = (0..base.len())
            .map(|n| base[n] * C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm = dir.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        dir.iter_mut().for_each(|c| *c *= eta / norm);
        let mut v: Vec<C64> = base.iter().zip(&dir).map(|(a, b)| a + b).collect();
        normalize(&mut v);
        if let Some((w, _)) = restore_mean(&v, target) {
            return Ok((w, attempt));
        }
    }
    Err(ExpError::Failed(format!(
        "sample {index}: mean photon number could not be restored in {MAX_ATTEMPTS} draws"
    )))
}

/// Equal-width histogram of `values` over their range.
pub fn histogram(values: &[f64], bins: usize) -> (Vec<f64>, Vec<usize>) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        hi = lo + lo.abs().max(1e-300) * 1e-9;
    }
    let edges: Vec<f64> = (0..=bins).map(|k| lo + (hi - lo) * k as f64 / bins as f64).collect();
    let mut counts = vec![0; bins];
    for &v in values {
        let k = (((v - lo) / (hi - lo)) * bins as f64) as usize;
        counts[k.min(bins - 1)] += 1;
    }
    (edges, counts)
}

/// Runs the study for a coherent probe with the scenario's parameters.
pub fn run_perturbation_study(spec: &PerturbationStudySpec, params: &ScenarioParams) -> Result<PerturbationStudy> {
    spec.validate()?;
    if !matches!(params.probe, Probe::Coherent) {
        return Err(config("the perturbation study starts from a coherent probe"));
    }
    let n = params.nbar_probe;
    let dims = PairDims::initial(params);
    let channel = channel_for(params, &dims)?;
    let d = dims.probe;
    let tspec = TruncationSpec::single(d, qillum::fock::DEFAULT_TRACE_TOL)?;
    let score = |v: &[C64]| -> Result<f64> {
        let st = FockState::from_pure(tspec.clone(), v)?;
        let mean = st.mean_photons(0) / st.trace();
        let p = params.with_probe(Probe::CustomFock(st), mean)?;
        Ok(holevo(&build_pair_on(&p, &dims, &channel)?, p.p0)?)
    };

    let base = coherent_vector(C64::new(n.sqrt(), 0.0), d).normalized().amps;
    let (reference_vec, _) =
        restore_mean(&base, n).ok_or_else(|| ExpError::Failed("coherent reference cannot be normalised".into()))?;
    let reference = score(&reference_vec)?;

    let draws = (0..spec.samples as u64)
        .into_par_iter()
        .map(|i| {
            let (v, rejected) = sample_vector(&base, spec.eta, n, spec.seed, i)?;
            Ok((score(&v)?, rejected))
        })
        .collect::<Result<Vec<(f64, usize)>>>()?;
    let values: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let rejected = draws.iter().map(|d| d.1).sum();

    let mut ranked = values.clone();
    ranked.sort_by(|a, b| b.total_cmp(a));
    let kept = ((spec.keep_fraction * spec.samples as f64).ceil() as usize).clamp(1, spec.samples);
    ranked.truncate(kept);
    let (edges, counts) = histogram(&ranked, HISTOGRAM_BINS);
    let above = values.iter().filter(|&&v| v > reference).count();
    Ok(PerturbationStudy {
        spec: spec.clone(),
        dims,
        reference,
        fraction_above: above as f64 / spec.samples as f64,
        best: ranked[0],
        values,
        rejected,
        kept,
        edges,
        counts,
    })
}
