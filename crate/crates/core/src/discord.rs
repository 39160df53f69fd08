//! Gaussian discord of the encoded states and the consumed discord.
//!
//! `δ⁽⁰⁾` is the discord of the Gaussian state received when the object is
//! present and has a closed form. The prior mixture `ρ̄` is not Gaussian;
//! its Gaussian-measurement discord is evaluated in Fock space by
//! conditioning on heterodyne (or general-dyne) outcomes of the idler.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{project_coherent, project_onto, squeezed_coherent_vector, von_neumann_entropy, FockState};
use crate::gaussian::{gaussian_discord, gaussian_discord_opt, illumination_cm, mutual_information, GeneralDyne};
use crate::info::{chi_c_generaldyne, integrated_local, quadrant_outcomes, UpperOptions, HERMITE_NODES, LAGUERRE_NODES};
use crate::linalg::thermal_entropy;
use crate::quadrature::gauss_legendre_on;
use crate::scenarios::{EncodedPair, Hypothesis, Probe, ScenarioParams};
use crate::truncation::converged_pair;

/// Default radial node count for the heterodyne integral.
pub const RADIAL_NODES: usize = 48;

/// Outcome probability mass left outside the radial cutoff.
pub const RADIAL_TAIL: f64 = 1e-8;

/// Structural tolerance for the product-state and shared-idler conditions.
pub const CONDITION_TOL: f64 = 1e-9;

/// Budget for `|δ_con - (χ_q - χ_c)|`, bits.
pub const THEOREM1_TOL: f64 = 5e-4;

fn require_epr(params: &ScenarioParams) -> Result<()> {
    if !matches!(params.probe, Probe::Epr) {
        return Err(invalid("discord of the encoded states needs an EPR probe"));
    }
    params.validate()
}

/// Closed-form Gaussian discord of `ρ⁽⁰⁾` under heterodyne detection of
/// the idler.
pub fn discord_encoded_state(params: &ScenarioParams) -> Result<f64> {
    require_epr(params)?;
    gaussian_discord(&illumination_cm(params, Hypothesis::Present)?, &GeneralDyne::heterodyne())
}

/// Gaussian discord of `ρ⁽⁰⁾` minimised over the general-dyne family:
/// `(δ, t*)`.
pub fn discord_encoded_opt(params: &ScenarioParams) -> Result<(f64, f64)> {
    require_epr(params)?;
    gaussian_discord_opt(&illumination_cm(params, Hypothesis::Present)?)
}

/// `S(A|β)` averaged over heterodyne outcomes, with the conditional states
/// built from `rho` in Fock space.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ConditionalAverage {
    pub value: f64,
    /// Total outcome probability captured by the quadrature.
    pub mass: f64,
}

fn radius_max(nbar: f64) -> f64 {
    ((nbar + 1.0) * (1.0 / RADIAL_TAIL).ln()).sqrt()
}

/// Conditional entropy of mode 0 after heterodyne outcome `beta` on mode 1,
/// with the outcome density.
pub fn conditional_entropy(rho: &FockState, beta: C64) -> Result<(f64, f64)> {
    // the projector is exact on the state's own support, whatever its tail
    let (cond, density) = project_coherent(rho, 1, beta, 1.0)?;
    if density <= 0.0 {
        return Ok((0.0, 0.0));
    }
    Ok((von_neumann_entropy(&cond.scaled(1.0 / density))?, density))
}

/// Posterior weights `(w₀, w₁)` of the two hypotheses after heterodyne
/// outcome `beta` on the idler: the conditional state of the mixture is
/// `w₀ρ⁽⁰⁾_{A|β} + w₁ρ⁽¹⁾_{A|β}`.
pub fn conditional_weights(pair: &EncodedPair, p0: f64, beta: C64) -> Result<[f64; 2]> {
    if !pair.is_two_mode() {
        return Err(invalid("conditioning needs a two-mode pair"));
    }
    let (_, d0) = project_coherent(&pair.rho0, 1, beta, 1.0)?;
    let (_, d1) = project_coherent(&pair.rho1, 1, beta, 1.0)?;
    let (a, b) = (p0 * d0, (1.0 - p0) * d1);
    if a + b <= 0.0 {
        return Err(invalid(format!("outcome {beta} has zero density")));
    }
    Ok([a / (a + b), b / (a + b)])
}

/// Radial heterodyne average for a phase-covariant two-mode state whose
/// idler marginal is thermal with mean `nbar_idler`.
pub fn heterodyne_average(rho: &FockState, nbar_idler: f64, nodes: usize) -> Result<ConditionalAverage> {
    let rule = gauss_legendre_on(nodes, 0.0, radius_max(nbar_idler))?;
    let terms = rule
        .nodes
        .par_iter()
        .zip(&rule.weights)
        .map(|(&r, &w)| {
            let (s, density) = conditional_entropy(rho, C64::new(r, 0.0))?;
            let jac = w * 2.0 * PI * r;
            Ok((jac * density * s, jac * density))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConditionalAverage {
        value: terms.iter().map(|t| t.0).sum(),
        mass: terms.iter().map(|t| t.1).sum(),
    })
}

/// `δ̄` with its quadrature bookkeeping.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MixtureDiscord {
    pub value: f64,
    pub nodes: usize,
    /// Change against twice the radial nodes.
    pub node_change: f64,
    /// Outcome probability mass captured by the radial rule.
    pub mass: f64,
    pub dims: Vec<usize>,
}

fn prior_mixture(pair: &EncodedPair, params: &ScenarioParams) -> Result<FockState> {
    FockState::combine(&[(params.p0, &pair.rho0), (params.p1, &pair.rho1)])
}

/// Heterodyne-based Gaussian discord of the prior mixture
/// `δ̄ = S(B̄) - S(ρ̄) + ∫ p(β) S(ρ̄_{A|β}) d²β`, using the phase symmetry
/// of the outcome distribution to reduce the integral to one radial
/// dimension.
pub fn discord_mixture_detail(params: &ScenarioParams, radial_nodes: usize) -> Result<MixtureDiscord> {
    require_epr(params)?;
    let conv = converged_pair(params)?;
    let mix = prior_mixture(&conv.pair, params)?;
    let base = thermal_entropy(params.nbar_probe) - von_neumann_entropy(&mix)?;
    let coarse = heterodyne_average(&mix, params.nbar_probe, radial_nodes)?;
    let fine = heterodyne_average(&mix, params.nbar_probe, 2 * radial_nodes)?;
    Ok(MixtureDiscord {
        value: (base + fine.value).max(0.0),
        nodes: 2 * radial_nodes,
        node_change: (fine.value - coarse.value).abs(),
        mass: fine.mass,
        dims: conv.pair.truncation.dims().to_vec(),
    })
}

pub fn discord_mixture(params: &ScenarioParams, radial_nodes: usize) -> Result<f64> {
    Ok(discord_mixture_detail(params, radial_nodes)?.value)
}

/// `δ̄(t)`: the mixture's discord for a general-dyne measurement of the
/// idler, with the outcome integral done by Gauss–Hermite over one
/// quadrant.
pub fn discord_mixture_generaldyne(params: &ScenarioParams, t: f64, nodes: usize) -> Result<f64> {
    require_epr(params)?;
    let m = GeneralDyne::new(t)?;
    let conv = converged_pair(params)?;
    let mix = prior_mixture(&conv.pair, params)?;
    let base = thermal_entropy(params.nbar_probe) - von_neumann_entropy(&mix)?;
    let vb = 2.0 * params.nbar_probe + 1.0;
    let sigma = m.sigma();
    let v = [[vb + sigma[0], 0.0], [0.0, vb + sigma[1]]];
    let outcomes = quadrant_outcomes(v, nodes)?;
    let d_b = conv.pair.truncation.dims()[1];
    let r = m.squeezing();
    let terms = outcomes
        .par_iter()
        .map(|&(o, w)| {
            let alpha = C64::new(o[0] / 2.0, o[1] / 2.0);
            let proj = squeezed_coherent_vector(r, alpha, d_b);
            let cond = project_onto(&mix, 1, &proj.amps)?.scaled(1.0 / (4.0 * PI));
            let density = cond.trace();
            let gauss = (-0.5 * (o[0] * o[0] / v[0][0] + o[1] * o[1] / v[1][1])).exp()
                / (2.0 * PI * (v[0][0] * v[1][1]).sqrt());
            if density <= 0.0 {
                return Ok(0.0);
            }
            let s = von_neumann_entropy(&cond.scaled(1.0 / density))?;
            Ok(w * density / gauss * s)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((base + terms.iter().sum::<f64>()).max(0.0))
}

/// The discord budget of the encoding.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscordReport {
    /// `δ⁽⁰⁾`, closed form at heterodyne.
    pub discord_rho0: f64,
    /// `δ̄`, heterodyne conditioning in Fock space.
    pub discord_mixture: f64,
    /// `p₀δ⁽⁰⁾ - δ̄`.
    pub consumed: f64,
    /// `p₁δ⁽⁰⁾`.
    pub loss: f64,
    /// Minimiser of the general-dyne discord of `ρ⁽⁰⁾`.
    pub optimal_measurement_t: f64,
    pub quadrature_nodes: usize,
    pub mixture_node_change: f64,
}

impl DiscordReport {
    /// `δ_loss + δ̄ + δ_con`, which equals the discord `δ⁽⁰⁾` of the
    /// unencoded state.
    pub fn total(&self) -> f64 {
        self.loss + self.discord_mixture + self.consumed
    }
}

pub fn consumed_discord_with(params: &ScenarioParams, radial_nodes: usize) -> Result<DiscordReport> {
    require_epr(params)?;
    let d0 = discord_encoded_state(params)?;
    let (_, t_star) = discord_encoded_opt(params)?;
    let mixture = discord_mixture_detail(params, radial_nodes)?;
    Ok(DiscordReport {
        discord_rho0: d0,
        discord_mixture: mixture.value,
        consumed: params.p0 * d0 - mixture.value,
        loss: params.p1 * d0,
        optimal_measurement_t: t_star,
        quadrature_nodes: mixture.nodes,
        mixture_node_change: mixture.node_change,
    })
}

pub fn consumed_discord(params: &ScenarioParams) -> Result<DiscordReport> {
    consumed_discord_with(params, RADIAL_NODES)
}

/// Outcome of the structural conditions on a pair.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionReport {
    /// Largest elementwise difference between the idler marginals.
    pub idler_mismatch: f64,
    /// Largest elementwise difference between `ρ⁽¹⁾` and the product of its
    /// marginals.
    pub product_defect: f64,
    /// Mutual information of the hypothesis-1 covariance matrix, when known.
    pub gaussian_mutual_info: Option<f64>,
}

impl ConditionReport {
    pub fn shared_idler(&self) -> bool {
        self.idler_mismatch <= CONDITION_TOL
    }

    pub fn product_absent(&self) -> bool {
        self.product_defect <= CONDITION_TOL && self.gaussian_mutual_info.is_none_or(|i| i.abs() <= CONDITION_TOL)
    }
}

pub fn check_conditions(pair: &EncodedPair) -> Result<ConditionReport> {
    if !pair.is_two_mode() {
        return Err(invalid("the conditions concern two-mode pairs"));
    }
    let b0 = pair.rho0.partial_trace(&[1])?;
    let b1 = pair.rho1.partial_trace(&[1])?;
    let a1 = pair.rho1.partial_trace(&[0])?;
    let product = a1.tensor(&b1)?;
    Ok(ConditionReport {
        idler_mismatch: b0.max_abs_diff(&b1)?,
        product_defect: pair.rho1.max_abs_diff(&product)?,
        gaussian_mutual_info: pair.gauss1.as_ref().map(mutual_information).transpose()?,
    })
}

/// Grid locations of the measurement optimum for each quantity of the
/// third condition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasurementCheck {
    pub t_grid: Vec<f64>,
    pub chi_c: Vec<f64>,
    pub mixture_discord: Vec<f64>,
    pub argmax_chi_c: f64,
    pub argmin_mixture: f64,
    /// Continuous minimiser for `δ⁽⁰⁾`.
    pub t_rho0: f64,
    pub tolerance: f64,
}

impl MeasurementCheck {
    pub fn passed(&self) -> bool {
        (self.argmax_chi_c - self.argmin_mixture).abs() <= self.tolerance
            && (self.argmax_chi_c - self.t_rho0).abs() <= self.tolerance
    }
}

/// Nine transmissivities around heterodyne.
pub fn default_t_grid() -> Vec<f64> {
    (0..9).map(|k| 0.3 + 0.05 * k as f64).collect()
}

fn argbest(grid: &[f64], vals: &[f64], max: bool) -> f64 {
    let mut best = 0;
    for k in 1..vals.len() {
        if (max && vals[k] > vals[best]) || (!max && vals[k] < vals[best]) {
            best = k;
        }
    }
    grid[best]
}

pub fn measurement_check(params: &ScenarioParams, t_grid: &[f64], nodes: usize) -> Result<MeasurementCheck> {
    require_epr(params)?;
    if t_grid.len() < 2 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("t grid must be strictly increasing with at least two points"));
    }
    let chi_c = t_grid
        .iter()
        .map(|&t| chi_c_generaldyne(params, t, nodes))
        .collect::<Result<Vec<_>>>()?;
    let mixture_discord = t_grid
        .iter()
        .map(|&t| discord_mixture_generaldyne(params, t, nodes))
        .collect::<Result<Vec<_>>>()?;
    let (_, t_rho0) = discord_encoded_opt(params)?;
    let step = t_grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    Ok(MeasurementCheck {
        argmax_chi_c: argbest(t_grid, &chi_c, true),
        argmin_mixture: argbest(t_grid, &mixture_discord, false),
        t_grid: t_grid.to_vec(),
        chi_c,
        mixture_discord,
        t_rho0,
        tolerance: step / 2.0 + 1e-12,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem1Status {
    Pass,
    /// Conditions hold but the two sides differ by more than the tolerance.
    EqualityFailed,
    /// A precondition failed; the equality was not evaluated.
    ConditionFailed(u8),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Theorem1Result {
    pub status: Theorem1Status,
    pub conditions: ConditionReport,
    pub measurement: Option<MeasurementCheck>,
    /// `δ_con` from the discord path.
    pub consumed: Option<f64>,
    /// `χ_q - χ_c` from the information path.
    pub advantage: Option<f64>,
    pub residual: Option<f64>,
    pub tol: f64,
}

impl Theorem1Result {
    pub fn passed(&self) -> bool {
        self.status == Theorem1Status::Pass
    }
}

#[derive(Clone, Debug)]
pub struct Theorem1Options {
    pub t_grid: Vec<f64>,
    pub hermite_nodes: usize,
    /// Skip the (costly) measurement scan of the third condition.
    pub check_measurement: bool,
}

impl Default for Theorem1Options {
    fn default() -> Self {
        Self {
            t_grid: default_t_grid(),
            hermite_nodes: HERMITE_NODES,
            check_measurement: true,
        }
    }
}

/// Checks the theorem's conditions on `pair` and, if they hold, compares
/// the consumed discord (discord path) with `χ_q - χ_c` (information path).
pub fn theorem1_check_pair(
    params: &ScenarioParams,
    pair: &EncodedPair,
    tol: f64,
    opts: &Theorem1Options,
) -> Result<Theorem1Result> {
    require_epr(params)?;
    let conditions = check_conditions(pair)?;
    let fail = |status, conditions, measurement| Theorem1Result {
        status,
        conditions,
        measurement,
        consumed: None,
        advantage: None,
        residual: None,
        tol,
    };
    if !conditions.shared_idler() {
        return Ok(fail(Theorem1Status::ConditionFailed(1), conditions, None));
    }
    if !conditions.product_absent() {
        return Ok(fail(Theorem1Status::ConditionFailed(2), conditions, None));
    }
    let measurement = if opts.check_measurement && params.epsilon > 0.0 {
        let m = measurement_check(params, &opts.t_grid, opts.hermite_nodes)?;
        if !m.passed() {
            return Ok(fail(Theorem1Status::ConditionFailed(3), conditions, Some(m)));
        }
        Some(m)
    } else {
        None
    };
    let chi_q = crate::info::holevo(pair, params.p0)?;
    let chi_c = integrated_local(params, false, LAGUERRE_NODES, &UpperOptions::default())?.holevo;
    let report = consumed_discord(params)?;
    let advantage = chi_q - chi_c;
    let residual = (report.consumed - advantage).abs();
    Ok(Theorem1Result {
        status: if residual <= tol {
            Theorem1Status::Pass
        } else {
            Theorem1Status::EqualityFailed
        },
        conditions,
        measurement,
        consumed: Some(report.consumed),
        advantage: Some(advantage),
        residual: Some(residual),
        tol,
    })
}

pub fn theorem1_check(params: &ScenarioParams, tol: f64) -> Result<Theorem1Result> {
    theorem1_check_with(params, tol, &Theorem1Options::default())
}

pub fn theorem1_check_with(params: &ScenarioParams, tol: f64, opts: &Theorem1Options) -> Result<Theorem1Result> {
    require_epr(params)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let conv = converged_pair(params)?;
    theorem1_check_pair(params, &conv.pair, tol, opts)
}
