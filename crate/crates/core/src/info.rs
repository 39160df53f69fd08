//! Information functionals on a hypothesis pair: Holevo information, the
//! Fuchs–Caves lower and upper bounds on the accessible information,
//! mutual information of a given POVM, and the local-measurement
//! quantities obtained by integrating single-probe values.
//!
//! Everything is evaluated block-wise on the joint block partition of the
//! two hypothesis states, so phase-covariant two-mode pairs cost no more
//! than a handful of small eigenproblems.

use std::f64::consts::{LN_2, PI};

use faer::Mat;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{spectral, von_neumann_entropy, FockState, JointBlocks, TruncationSpec, DEFAULT_TRACE_TOL};
use crate::gaussian::{conditional_after_generaldyne, epr_cm, gaussian_entropy, GaussianState, GeneralDyne};
use crate::linalg::hermitian_eigen;
use crate::quadrature::{gauss_hermite, gauss_laguerre, simpson};
use crate::scenarios::{
    build_pair_on, channel_for, collapsed_probe_distribution, gaussian_probe_dim, received_cm, EncodedPair,
    PairDims, Probe, ScenarioParams,
};

/// Pairs `λ_j + λ_k` below this fraction of the largest eigenvalue of the
/// mixture are excluded from the lowering superoperator.
pub const SPECTRAL_FLOOR: f64 = 1e-12;

/// Eigenvalues of the lowered operator below this are dropped with their
/// projectors.
pub const LOWERED_FLOOR: f64 = 1e-12;

/// Eigenvalues of the lowered operator more negative than this signal a
/// broken truncation rather than roundoff.
const LOWERED_NEG_TOL: f64 = 1e-8;

/// Denominator floor for the relative Fuchs gap.
pub const GAP_FLOOR: f64 = 1e-12;

/// Relative change after a node doubling beyond which the upper bound is
/// declared unconverged.
pub const UPPER_CONVERGENCE_LIMIT: f64 = 1e-5;

/// Laguerre weights below this are skipped; their total is reported.
pub const LAGUERRE_SKIP: f64 = 1e-15;

/// Default node count of the heterodyne-collapse integral.
pub const LAGUERRE_NODES: usize = 40;

/// Change in the integrated Holevo value that ends the cutoff doubling.
pub const LOCAL_TRUNCATION_TOL: f64 = 1e-7;

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    let h = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    h(p) + h(1.0 - p)
}

fn check_prior(p0: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p0) {
        return Err(invalid(format!("prior must lie in [0, 1], got {p0}")));
    }
    Ok(())
}

fn state_entropy(rho: &FockState, gauss: Option<&GaussianState>) -> Result<f64> {
    match gauss {
        Some(g) => gaussian_entropy(g),
        None => von_neumann_entropy(rho),
    }
}

/// Holevo information `S(ρ̄) - p₀S(ρ⁽⁰⁾) - p₁S(ρ⁽¹⁾)` in bits. The mixture is
/// always diagonalised in Fock space; the individual entropies use the
/// covariance matrices when the pair carries them.
pub fn holevo(pair: &EncodedPair, p0: f64) -> Result<f64> {
    check_prior(p0)?;
    let p1 = 1.0 - p0;
    if p0 == 0.0 || p1 == 0.0 {
        return Ok(0.0);
    }
    let mix = FockState::combine(&[(p0, &pair.rho0), (p1, &pair.rho1)])?;
    let s_mix = von_neumann_entropy(&mix)?;
    let s0 = state_entropy(&pair.rho0, pair.gauss0.as_ref())?;
    let s1 = state_entropy(&pair.rho1, pair.gauss1.as_ref())?;
    Ok((s_mix - p0 * s0 - p1 * s1).max(0.0))
}

/// Holevo information with every entropy taken from the Fock matrices.
pub fn holevo_fock(pair: &EncodedPair, p0: f64) -> Result<f64> {
    check_prior(p0)?;
    let p1 = 1.0 - p0;
    if p0 == 0.0 || p1 == 0.0 {
        return Ok(0.0);
    }
    let mix = FockState::combine(&[(p0, &pair.rho0), (p1, &pair.rho1)])?;
    let v = von_neumann_entropy(&mix)?
        - p0 * von_neumann_entropy(&pair.rho0)?
        - p1 * von_neumann_entropy(&pair.rho1)?;
    Ok(v.max(0.0))
}

/// A POVM on the full truncated space, stored as dense operators.
#[derive(Clone, Debug)]
pub struct PovmDescription {
    elements: Vec<Mat<C64>>,
}

impl PovmDescription {
    /// Checks positivity and completeness (to 1e-9).
    pub fn new(elements: Vec<Mat<C64>>) -> Result<Self> {
        let first = elements.first().ok_or_else(|| invalid("a POVM needs at least one element"))?;
        let n = first.nrows();
        let mut sum = Mat::<C64>::zeros(n, n);
        for e in &elements {
            if e.nrows() != n || e.ncols() != n {
                return Err(Error::DimensionMismatch("POVM elements of different sizes".into()));
            }
            let (vals, _) = hermitian_eigen(e.as_ref())?;
            if let Some(&v) = vals.last() {
                if v < -1e-10 {
                    return Err(Error::NotPsd(v));
                }
            }
            sum += e;
        }
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let id = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((sum[(i, j)] - C64::new(id, 0.0)).norm());
            }
        }
        if worst > 1e-9 {
            return Err(invalid(format!("POVM elements miss the identity by {worst:e}")));
        }
        Ok(Self { elements })
    }

    /// The single-outcome measurement `{I}`.
    pub fn trivial(dim: usize) -> Result<Self> {
        Self::new(vec![Mat::from_fn(dim, dim, |i, j| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0))])
    }

    /// Projective measurement onto the columns of an orthonormal basis.
    pub fn projective(basis: &Mat<C64>) -> Result<Self> {
        let n = basis.nrows();
        let elements = (0..basis.ncols())
            .map(|k| Mat::from_fn(n, n, |i, j| basis[(i, k)] * basis[(j, k)].conj()))
            .collect();
        Self::new(elements)
    }

    /// Photon counting in the product number basis.
    pub fn number_basis(dim: usize) -> Result<Self> {
        Self::projective(&Mat::from_fn(dim, dim, |i, j| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0)))
    }

    pub fn elements(&self) -> &[Mat<C64>] {
        &self.elements
    }
}

/// `Tr(E ρ)` for a dense `E`.
fn outcome_probability(e: &Mat<C64>, rho: &FockState) -> f64 {
    let mut acc = 0.0;
    for b in rho.blocks() {
        let ix = b.indices();
        let m = b.matrix();
        for (q, &j) in ix.iter().enumerate() {
            for (p, &i) in ix.iter().enumerate() {
                acc += (e[(j, i)] * m[(p, q)]).re;
            }
        }
    }
    acc
}

/// Mutual information between the prior and the outcomes of `povm`, bits.
pub fn mutual_information_povm(pair: &EncodedPair, p0: f64, povm: &PovmDescription) -> Result<f64> {
    check_prior(p0)?;
    let n = pair.truncation.total_dim();
    if povm.elements[0].nrows() != n {
        return Err(Error::DimensionMismatch("POVM and states live on different spaces".into()));
    }
    let priors = [p0, 1.0 - p0];
    let states = [&pair.rho0, &pair.rho1];
    let mut info = 0.0;
    for e in &povm.elements {
        let q: Vec<f64> = states.iter().map(|s| outcome_probability(e, s).max(0.0)).collect();
        let qk = priors[0] * q[0] + priors[1] * q[1];
        for x in 0..2 {
            if priors[x] > 0.0 && q[x] > 0.0 && qk > 0.0 {
                info += priors[x] * q[x] * (q[x] / qk).log2();
            }
        }
    }
    Ok(info.max(0.0))
}

/// Eigen-decomposition of the mixture `(1-s) ρ⁽⁰⁾ + s ρ⁽¹⁾` on every joint
/// block, plus the exclusion threshold for `λ_j + λ_k`.
fn mixture_eigen(jb: &JointBlocks, s: f64) -> Result<(Vec<(Vec<f64>, Mat<C64>)>, f64)> {
    let eig = (0..jb.len())
        .map(|b| {
            let m = &jb.mats[0][b] * faer::Scale(C64::new(1.0 - s, 0.0)) + &jb.mats[1][b] * faer::Scale(C64::new(s, 0.0));
            hermitian_eigen(m.as_ref())
        })
        .collect::<Result<Vec<_>>>()?;
    let top = eig
        .iter()
        .filter_map(|(v, _)| v.first().copied())
        .fold(0.0f64, f64::max);
    Ok((eig, SPECTRAL_FLOOR * top))
}

/// Value of the Fuchs lower bound and the prior-weighted probability that
/// falls outside the support of the lowered operators.
#[derive(Clone, Copy, Debug)]
pub struct LowerBound {
    pub value: f64,
    pub discarded_weight: f64,
}

/// Fuchs lower bound `Σ_x p_x Tr[ρ⁽ˣ⁾ log₂ L_ρ̄(ρ⁽ˣ⁾)]`, with the lowering
/// superoperator in its standard form
/// `L_ρ̄(X) = Σ 2⟨ψ_j|X|ψ_k⟩/(λ_j+λ_k) |ψ_j⟩⟨ψ_k|`.
pub fn fuchs_lower_detail(pair: &EncodedPair, p0: f64) -> Result<LowerBound> {
    check_prior(p0)?;
    let priors = [p0, 1.0 - p0];
    if priors.contains(&0.0) {
        return Ok(LowerBound {
            value: 0.0,
            discarded_weight: 0.0,
        });
    }
    let jb = JointBlocks::new(&[&pair.rho0, &pair.rho1])?;
    let (eig, floor) = mixture_eigen(&jb, priors[1])?;
    let mut value = 0.0;
    let mut discarded = 0.0;
    for (b, (lam, v)) in eig.iter().enumerate() {
        // Eigenvalues come sorted, so the support is a leading run. Keeping
        // a pair (j, k) whose sum clears the floor while dropping the
        // diagonal of the tiny partner would make the lowered operator
        // indefinite, so the cut is applied per eigenvector.
        let n = lam.iter().take_while(|&&l| 2.0 * l > floor).count();
        for x in 0..2 {
            let y_full = v.adjoint() * &jb.mats[x][b] * v;
            let outside: f64 = (n..lam.len()).map(|j| y_full[(j, j)].re).sum();
            discarded += priors[x] * outside.max(0.0);
            if n == 0 {
                continue;
            }
            let y = y_full.as_ref().submatrix(0, 0, n, n).to_owned();
            let lowered = Mat::<C64>::from_fn(n, n, |j, k| y[(j, k)] * (2.0 / (lam[j] + lam[k])));
            let (mu, w) = hermitian_eigen(lowered.as_ref())?;
            let z = w.adjoint() * &y * &w;
            for m in 0..n {
                let weight = z[(m, m)].re;
                if mu[m] > LOWERED_FLOOR {
                    value += priors[x] * weight * mu[m].log2();
                } else {
                    if mu[m] < -LOWERED_NEG_TOL * mu[0].max(1.0) {
                        return Err(Error::NotPsd(mu[m]));
                    }
                    discarded += priors[x] * weight;
                }
            }
        }
    }
    Ok(LowerBound {
        value: value.max(0.0),
        discarded_weight: discarded.max(0.0),
    })
}

pub fn fuchs_lower(pair: &EncodedPair, p0: f64) -> Result<f64> {
    Ok(fuchs_lower_detail(pair, p0)?.value)
}

/// `d²I/dp₁²` of the upper bound at `p₁ = s`, in bits.
fn upper_curvature(jb: &JointBlocks, s: f64) -> Result<f64> {
    let (eig, floor) = mixture_eigen(jb, s)?;
    let mut f = 0.0;
    for (b, (lam, v)) in eig.iter().enumerate() {
        let delta = &jb.mats[1][b] - &jb.mats[0][b];
        let d = v.adjoint() * &delta * v;
        let n = lam.len();
        for k in 0..n {
            for j in 0..n {
                let sum = lam[j] + lam[k];
                if sum > floor {
                    f -= 2.0 * d[(j, k)].norm_sqr() / sum;
                }
            }
        }
    }
    Ok(f / LN_2)
}

/// Controls for the upper-bound quadrature.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct UpperOptions {
    /// Simpson nodes per half-interval at the first level; odd, >= 21.
    pub nodes: usize,
    /// Stop once the extrapolated value changes by less than this,
    /// relative.
    pub rel_tol: f64,
    pub max_nodes: usize,
}

impl Default for UpperOptions {
    fn default() -> Self {
        Self {
            nodes: 21,
            rel_tol: 1e-8,
            max_nodes: 641,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct UpperBound {
    pub value: f64,
    /// Simpson nodes per half-interval at the last level.
    pub nodes: usize,
    /// Relative change of the last doubling.
    pub rel_change: f64,
}

/// One half of the Green's-function integral `∫ g(s) ds` between `from`
/// and `to`, refined level by level. Nodes are uniform in `u` with
/// `s = from + (to - from) u²`, which clusters them towards `from`, where
/// small eigenvalues of the mixture put a boundary layer into `g`.
struct Half {
    from: f64,
    to: f64,
    values: Vec<f64>,
}

impl Half {
    fn integrand(&self, u: f64, g: &(dyn Fn(f64) -> Result<f64> + Sync)) -> Result<f64> {
        if u == 0.0 {
            // the Jacobian vanishes; g stays bounded there
            return Ok(0.0);
        }
        let span = self.to - self.from;
        let s = if u == 1.0 { self.to } else { self.from + span * u * u };
        Ok(g(s)? * 2.0 * span.abs() * u)
    }

    fn new(from: f64, to: f64, n: usize, g: &(dyn Fn(f64) -> Result<f64> + Sync)) -> Result<Self> {
        let mut half = Self {
            from,
            to,
            values: Vec::new(),
        };
        let h = 1.0 / (n - 1) as f64;
        half.values = (0..n)
            .into_par_iter()
            .map(|k| half.integrand(if k + 1 == n { 1.0 } else { h * k as f64 }, g))
            .collect::<Result<Vec<_>>>()?;
        Ok(half)
    }

    fn refine(&mut self, g: &(dyn Fn(f64) -> Result<f64> + Sync)) -> Result<()> {
        let n = self.values.len();
        let m = 2 * n - 1;
        let h = 1.0 / (m - 1) as f64;
        let fresh = (0..n - 1)
            .into_par_iter()
            .map(|k| self.integrand(h * (2 * k + 1) as f64, g))
            .collect::<Result<Vec<_>>>()?;
        let mut values = Vec::with_capacity(m);
        for k in 0..n {
            values.push(self.values[k]);
            if k + 1 < n {
                values.push(fresh[k]);
            }
        }
        self.values = values;
        Ok(())
    }

    fn integrate(&self) -> Result<f64> {
        let rule = simpson(self.values.len(), 0.0, 1.0)?;
        Ok(rule.weights.iter().zip(&self.values).map(|(&w, &v)| w * v).sum())
    }
}

/// Fuchs upper bound at prior `p0`.
///
/// With `F(p₁)` the curvature above and boundary values `I(0) = I(1) = 0`,
/// the solution is `I(p) = -(1-p)∫₀^p s F(s) ds - p ∫_p^1 (1-s) F(s) ds`.
/// Both integrals use composite Simpson on a grid graded towards the outer
/// endpoint, doubled until the Richardson-extrapolated value settles.
pub fn fuchs_upper_detail(pair: &EncodedPair, p0: f64, opts: &UpperOptions) -> Result<UpperBound> {
    check_prior(p0)?;
    if opts.nodes < 21 || opts.nodes % 2 == 0 {
        return Err(invalid(format!("upper bound needs an odd node count >= 21, got {}", opts.nodes)));
    }
    let p = 1.0 - p0;
    if p == 0.0 || p == 1.0 {
        return Ok(UpperBound {
            value: 0.0,
            nodes: opts.nodes,
            rel_change: 0.0,
        });
    }
    let jb = JointBlocks::new(&[&pair.rho0, &pair.rho1])?;
    let fl = |s: f64| Ok(s * upper_curvature(&jb, s)?);
    let fr = |s: f64| Ok((1.0 - s) * upper_curvature(&jb, s)?);
    let mut left = Half::new(0.0, p, opts.nodes, &fl)?;
    let mut right = Half::new(1.0, p, opts.nodes, &fr)?;
    let eval = |l: &Half, r: &Half| -> Result<f64> { Ok(-(1.0 - p) * l.integrate()? - p * r.integrate()?) };
    let mut simpson_prev = eval(&left, &right)?;
    let mut extrap_prev: Option<f64> = None;
    let mut change = f64::INFINITY;
    loop {
        let n = left.values.len();
        if 2 * n - 1 > opts.max_nodes {
            return match extrap_prev {
                Some(v) if change <= UPPER_CONVERGENCE_LIMIT => Ok(UpperBound {
                    value: v.max(0.0),
                    nodes: n,
                    rel_change: change,
                }),
                _ => Err(Error::Convergence {
                    what: "Fuchs upper bound",
                    change,
                }),
            };
        }
        left.refine(&fl)?;
        right.refine(&fr)?;
        let s = eval(&left, &right)?;
        let extrap = s + (s - simpson_prev) / 15.0;
        if let Some(prev) = extrap_prev {
            change = (extrap - prev).abs() / extrap.abs().max(GAP_FLOOR);
            if change < opts.rel_tol || extrap.abs() < GAP_FLOOR {
                return Ok(UpperBound {
                    value: extrap.max(0.0),
                    nodes: left.values.len(),
                    rel_change: change,
                });
            }
        }
        simpson_prev = s;
        extrap_prev = Some(extrap);
    }
}

pub fn fuchs_upper(pair: &EncodedPair, p0: f64, nodes: usize) -> Result<f64> {
    let opts = UpperOptions {
        nodes,
        ..UpperOptions::default()
    };
    Ok(fuchs_upper_detail(pair, p0, &opts)?.value)
}

/// Holevo value and Fuchs bounds for one pair.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InfoReport {
    pub holevo: f64,
    pub fuchs_lower: f64,
    pub fuchs_upper: f64,
    /// `(upper - lower) / max(lower, GAP_FLOOR)`.
    pub gap_rel: f64,
    pub truncation: TruncationSpec,
    pub quadrature_nodes: usize,
    pub upper_rel_change: f64,
    /// Probability weight outside the support of the lowered operators.
    pub discarded_weight: f64,
}

pub fn info_report(pair: &EncodedPair, p0: f64, opts: &UpperOptions) -> Result<InfoReport> {
    let holevo = holevo(pair, p0)?;
    let lower = fuchs_lower_detail(pair, p0)?;
    let upper = fuchs_upper_detail(pair, p0, opts)?;
    Ok(InfoReport {
        holevo,
        fuchs_lower: lower.value,
        fuchs_upper: upper.value,
        gap_rel: (upper.value - lower.value) / lower.value.max(GAP_FLOOR),
        truncation: pair.truncation.clone(),
        quadrature_nodes: upper.nodes,
        upper_rel_change: upper.rel_change,
        discarded_weight: lower.discarded_weight,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocalQuantity {
    Holevo,
    FuchsLower,
    FuchsUpper,
}

/// Single-probe quantities integrated over the heterodyne-collapsed energy
/// distribution.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalIntegral {
    pub holevo: f64,
    pub fuchs_lower: Option<f64>,
    pub fuchs_upper: Option<f64>,
    /// Laguerre nodes of the rule (including skipped ones).
    pub nodes: usize,
    /// Laguerre weight of the skipped far-tail nodes.
    pub skipped_weight: f64,
    /// Change of the Holevo integral under node doubling.
    pub node_change: f64,
    /// Change of the Holevo integral under the last cutoff doubling.
    pub truncation_change: f64,
    /// Cutoffs at the largest retained energy.
    pub dims: PairDims,
}

struct NodeValues {
    holevo: f64,
    lower: f64,
    upper: f64,
}

/// Energies and weights of the Laguerre rule for mean `nbar`, with the
/// negligible far tail dropped.
fn laguerre_energies(nbar: f64, nodes: usize) -> Result<(Vec<(f64, f64)>, f64)> {
    let rule = gauss_laguerre(nodes)?;
    let mut kept = Vec::new();
    let mut skipped = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        if w < LAGUERRE_SKIP {
            skipped += w;
        } else {
            kept.push((nbar * x, w));
        }
    }
    Ok((kept, skipped))
}

/// Cutoffs for a coherent probe of energy `e`, scaled by `2^level`.
fn coherent_dims(params: &ScenarioParams, e: f64, level: u32) -> Result<PairDims> {
    let p = params.with_probe(Probe::Coherent, e)?;
    let mut d = PairDims::initial(&p);
    for _ in 0..level {
        d = d.doubled(&p);
    }
    Ok(d)
}

/// Evaluates the single-probe quantities at the given energies, sharing one
/// channel sized for the largest energy.
fn local_nodes(
    params: &ScenarioParams,
    energies: &[(f64, f64)],
    level: u32,
    bounds: bool,
    upper: &UpperOptions,
) -> Result<(Vec<NodeValues>, PairDims)> {
    let e_max = energies.iter().map(|&(e, _)| e).fold(0.0, f64::max);
    let top = coherent_dims(params, e_max, level)?;
    let channel = channel_for(&params.with_probe(Probe::Coherent, e_max)?, &top)?;
    let values = energies
        .par_iter()
        .map(|&(e, _)| {
            let p = params.with_probe(Probe::Coherent, e)?;
            let mut dims = coherent_dims(params, e, level)?;
            dims.detector = top.detector;
            let pair = build_pair_on(&p, &dims, &channel)?;
            let holevo = holevo(&pair, params.p0)?;
            let (lower, up) = if bounds {
                (fuchs_lower(&pair, params.p0)?, fuchs_upper_detail(&pair, params.p0, upper)?.value)
            } else {
                (f64::NAN, f64::NAN)
            };
            Ok(NodeValues {
                holevo,
                lower,
                upper: up,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((values, top))
}

fn weighted(energies: &[(f64, f64)], vals: &[NodeValues], pick: impl Fn(&NodeValues) -> f64) -> f64 {
    energies.iter().zip(vals).map(|(&(_, w), v)| w * pick(v)).sum()
}

/// `∫ p(E) Q_s(E) dE` over the collapsed-energy distribution of an EPR
/// probe, for the Holevo value and optionally both Fuchs bounds.
///
/// The Holevo integral is checked against a rule with twice the nodes and
/// against doubled cutoffs (repeated until it changes by less than
/// [`LOCAL_TRUNCATION_TOL`]); the bounds are evaluated once at the final
/// cutoffs.
pub fn integrated_local(params: &ScenarioParams, bounds: bool, nodes: usize, upper: &UpperOptions) -> Result<LocalIntegral> {
    let dist = collapsed_probe_distribution(params)?;
    if dist.nbar == 0.0 {
        let dims = coherent_dims(params, 0.0, 0)?;
        return Ok(LocalIntegral {
            holevo: 0.0,
            fuchs_lower: bounds.then_some(0.0),
            fuchs_upper: bounds.then_some(0.0),
            nodes,
            skipped_weight: 0.0,
            node_change: 0.0,
            truncation_change: 0.0,
            dims,
        });
    }
    let (energies, skipped) = laguerre_energies(dist.nbar, nodes)?;
    let (dense, _) = laguerre_energies(dist.nbar, 2 * nodes)?;
    let (vals, _) = local_nodes(params, &dense, 0, false, upper)?;
    let dense_holevo = weighted(&dense, &vals, |v| v.holevo);

    let mut level = 0;
    let (vals, _) = local_nodes(params, &energies, level, false, upper)?;
    let mut dims;
    let mut value = weighted(&energies, &vals, |v| v.holevo);
    let node_change = (dense_holevo - value).abs();
    let mut truncation_change;
    loop {
        level += 1;
        let (next, next_dims) = local_nodes(params, &energies, level, false, upper)?;
        let next_value = weighted(&energies, &next, |v| v.holevo);
        truncation_change = (next_value - value).abs();
        value = next_value;
        dims = next_dims;
        if truncation_change < LOCAL_TRUNCATION_TOL {
            break;
        }
        if level >= 3 {
            return Err(Error::Convergence {
                what: "integrated local information cutoff",
                change: truncation_change,
            });
        }
    }
    let (fl, fu) = if bounds {
        let (bvals, _) = local_nodes(params, &energies, level, true, upper)?;
        (
            Some(weighted(&energies, &bvals, |v| v.lower)),
            Some(weighted(&energies, &bvals, |v| v.upper)),
        )
    } else {
        (None, None)
    };
    Ok(LocalIntegral {
        holevo: value,
        fuchs_lower: fl,
        fuchs_upper: fu,
        nodes,
        skipped_weight: skipped,
        node_change,
        truncation_change,
        dims,
    })
}

/// One integrated local quantity (χ_c, or a bound on A_c), bits.
pub fn integrated_local_info(params: &ScenarioParams, quantity: LocalQuantity) -> Result<f64> {
    let bounds = quantity != LocalQuantity::Holevo;
    let r = integrated_local(params, bounds, LAGUERRE_NODES, &UpperOptions::default())?;
    Ok(match quantity {
        LocalQuantity::Holevo => r.holevo,
        LocalQuantity::FuchsLower => r.fuchs_lower.unwrap_or(0.0),
        LocalQuantity::FuchsUpper => r.fuchs_upper.unwrap_or(0.0),
    })
}

/// Node count per axis of the general-dyne outcome integrals.
pub const HERMITE_NODES: usize = 16;

/// Outcome grid of a general-dyne measurement on a mode with covariance
/// `v_b`: `(outcome, probability weight)` over the positive quadrant only,
/// weights already multiplied by four. Valid for integrands even in each
/// outcome component.
pub fn quadrant_outcomes(v_b: [[f64; 2]; 2], nodes: usize) -> Result<Vec<([f64; 2], f64)>> {
    if nodes % 2 == 1 {
        return Err(invalid("quadrant symmetry needs an even Hermite node count"));
    }
    if v_b[0][1].abs() > 1e-12 * (v_b[0][0] + v_b[1][1]) {
        return Err(invalid("outcome covariance must be diagonal"));
    }
    let rule = gauss_hermite(nodes)?;
    let half: Vec<(f64, f64)> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .filter(|(&x, _)| x > 0.0)
        .map(|(&x, &w)| (x, w / PI.sqrt()))
        .collect();
    let (sx, sp) = ((2.0 * v_b[0][0]).sqrt(), (2.0 * v_b[1][1]).sqrt());
    let mut out = Vec::with_capacity(half.len() * half.len());
    for &(ux, wx) in &half {
        for &(up, wp) in &half {
            out.push(([sx * ux, sp * up], 4.0 * wx * wp));
        }
    }
    Ok(out)
}

/// `χ_c(t)`: Holevo information averaged over the outcomes of a
/// general-dyne measurement with transmissivity `t` on the idler of an EPR
/// probe. Each outcome leaves a pure Gaussian probe whose single-mode Holevo
/// value is computed in Fock space.
pub fn chi_c_generaldyne(params: &ScenarioParams, t: f64, nodes: usize) -> Result<f64> {
    if !matches!(params.probe, Probe::Epr) {
        return Err(invalid("general-dyne collapse needs an EPR probe"));
    }
    let m = GeneralDyne::new(t)?;
    let cond = conditional_after_generaldyne(&epr_cm(params.nbar_probe)?, &m)?;
    let outcomes = quadrant_outcomes(cond.outcome_cov, nodes)?;
    let probes: Vec<(GaussianState, f64)> = outcomes.iter().map(|&(o, w)| (cond.state_for(o), w)).collect();
    let n_max = probes.iter().map(|(g, _)| gaussian_mean_photons(g)).fold(0.0, f64::max);
    let d_max = probes.iter().map(|(g, _)| gaussian_probe_dim(g)).max().unwrap_or(8);
    let top_params = params.with_probe(Probe::Coherent, n_max)?;
    let dims = PairDims::initial(&top_params).doubled(&top_params);
    let dims = PairDims {
        probe: d_max,
        detector: dims.detector,
        idler: d_max,
    };
    let channel = channel_for(&top_params, &dims)?;
    let values = probes
        .par_iter()
        .map(|(g, w)| {
            let d = gaussian_probe_dim(g);
            let fock = g.to_fock(&TruncationSpec::single(d, DEFAULT_TRACE_TOL)?)?;
            let n = fock.mean_photons(0) / fock.trace();
            let p = params.with_probe(Probe::CustomFock(fock), n)?;
            let local = PairDims {
                probe: d,
                detector: dims.detector,
                idler: d,
            };
            let mut pair = build_pair_on(&p, &local, &channel)?;
            let (g0, g1) = received_cm(&p, g)?;
            pair.gauss0 = Some(g0);
            pair.gauss1 = Some(g1);
            Ok(w * holevo(&pair, params.p0)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(values.iter().sum())
}

/// Mean photon number of a single-mode Gaussian state.
pub fn gaussian_mean_photons(g: &GaussianState) -> f64 {
    let c = g.cov_entries();
    let m = g.mean();
    (c[0] + c[3]) / 4.0 - 0.5 + (m[0] * m[0] + m[1] * m[1]) / 4.0
}

/// Eigenvectors of the prior mixture, ordered by descending eigenvalue.
pub fn mixture_eigenbasis(pair: &EncodedPair, p0: f64) -> Result<Mat<C64>> {
    check_prior(p0)?;
    let mix = FockState::combine(&[(p0, &pair.rho0), (1.0 - p0, &pair.rho1)])?;
    Ok(spectral(&mix)?.eigenvectors())
}
