//! Covariance-matrix formalism for one- and two-mode Gaussian states.
//!
//! Quadratures are `x = a + a†`, `p = i(a† - a)`, so the vacuum has unit
//! variance and `σ_ij = ⟨{ΔR_i, ΔR_j}⟩/2` with `R = (x₁, p₁, x₂, p₂)`.

use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::fock::{squeezed_coherent_vector, FockState, Ladder, TruncationSpec};
use crate::linalg::ZERO;
use crate::scenarios::{Hypothesis, ScenarioParams};

pub type M2 = [[f64; 2]; 2];

const SYMMETRY_TOL: f64 = 1e-12;
const UNCERTAINTY_TOL: f64 = 1e-9;

/// Mean vector and covariance matrix of an m-mode Gaussian state.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState {
    mean: Vec<f64>,
    /// Row-major `2m × 2m`.
    cov: Vec<f64>,
}

impl GaussianState {
    /// Validates symmetry and the uncertainty relation `σ + iΩ ⪰ 0`.
    pub fn new(mean: Vec<f64>, cov: Vec<f64>) -> Result<Self> {
        let g = Self::new_unchecked(mean, cov)?;
        let n = g.dim();
        for i in 0..n {
            for j in 0..i {
                let a = (g.c(i, j) - g.c(j, i)).abs();
                if a > SYMMETRY_TOL {
                    return Err(invalid(format!("covariance not symmetric ({a:.3e})")));
                }
            }
        }
        let min = g.uncertainty_min_eigenvalue()?;
        if min < -UNCERTAINTY_TOL {
            return Err(Error::Unphysical(min));
        }
        Ok(g)
    }

    fn new_unchecked(mean: Vec<f64>, cov: Vec<f64>) -> Result<Self> {
        let n = mean.len();
        if n == 0 || n % 2 != 0 || cov.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "mean of length {n} with {} covariance entries",
                cov.len()
            )));
        }
        if mean.iter().chain(&cov).any(|v| !v.is_finite()) {
            return Err(invalid("non-finite moments"));
        }
        Ok(Self { mean, cov })
    }

    pub fn vacuum(modes: usize) -> Self {
        let n = 2 * modes;
        let cov = (0..n * n).map(|k| if k / n == k % n { 1.0 } else { 0.0 }).collect();
        Self {
            mean: vec![0.0; n],
            cov,
        }
    }

    pub fn thermal(nbar: f64) -> Result<Self> {
        if !(nbar >= 0.0) {
            return Err(invalid(format!("thermal photon number must be >= 0, got {nbar}")));
        }
        let v = 2.0 * nbar + 1.0;
        Ok(Self {
            mean: vec![0.0; 2],
            cov: vec![v, 0.0, 0.0, v],
        })
    }

    pub fn coherent(alpha: C64) -> Self {
        Self {
            mean: vec![2.0 * alpha.re, 2.0 * alpha.im],
            cov: vec![1.0, 0.0, 0.0, 1.0],
        }
    }

    /// `D(α) S(r)|0⟩` with x-variance `e^{-2r}`.
    pub fn squeezed_coherent(r: f64, alpha: C64) -> Self {
        Self {
            mean: vec![2.0 * alpha.re, 2.0 * alpha.im],
            cov: vec![(-2.0 * r).exp(), 0.0, 0.0, (2.0 * r).exp()],
        }
    }

    /// Two-mode state from 2×2 blocks `[[A, C], [Cᵀ, B]]`.
    pub fn from_blocks(mean: Vec<f64>, a: M2, b: M2, c: M2) -> Result<Self> {
        let mut cov = vec![0.0; 16];
        for i in 0..2 {
            for j in 0..2 {
                cov[i * 4 + j] = a[i][j];
                cov[(i + 2) * 4 + j + 2] = b[i][j];
                cov[i * 4 + j + 2] = c[i][j];
                cov[(j + 2) * 4 + i] = c[i][j];
            }
        }
        Self::new(mean, cov)
    }

    pub fn modes(&self) -> usize {
        self.mean.len() / 2
    }

    fn dim(&self) -> usize {
        self.mean.len()
    }

    #[inline]
    fn c(&self, i: usize, j: usize) -> f64 {
        self.cov[i * self.dim() + j]
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.c(i, j)
    }

    pub fn cov_entries(&self) -> &[f64] {
        &self.cov
    }

    /// The 2×2 block coupling modes `k` and `l`.
    pub fn block(&self, k: usize, l: usize) -> M2 {
        [
            [self.c(2 * k, 2 * l), self.c(2 * k, 2 * l + 1)],
            [self.c(2 * k + 1, 2 * l), self.c(2 * k + 1, 2 * l + 1)],
        ]
    }

    pub fn reduced(&self, mode: usize) -> Result<Self> {
        if mode >= self.modes() {
            return Err(invalid(format!("mode {mode} out of range")));
        }
        let b = self.block(mode, mode);
        Ok(Self {
            mean: vec![self.mean[2 * mode], self.mean[2 * mode + 1]],
            cov: vec![b[0][0], b[0][1], b[1][0], b[1][1]],
        })
    }

    /// Smallest eigenvalue of `σ + iΩ`.
    pub fn uncertainty_min_eigenvalue(&self) -> Result<f64> {
        let n = self.dim();
        let m = Mat::<C64>::from_fn(n, n, |i, j| {
            let omega = if i / 2 == j / 2 {
                match (i % 2, j % 2) {
                    (0, 1) => 1.0,
                    (1, 0) => -1.0,
                    _ => 0.0,
                }
            } else {
                0.0
            };
            C64::new(self.c(i, j), omega)
        });
        let vals = m.self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::Eigen)?;
        Ok(vals.iter().copied().fold(f64::INFINITY, f64::min))
    }

    /// First and second moments of a Fock-space state.
    pub fn from_fock(rho: &FockState) -> Result<Self> {
        let m = rho.spec().modes();
        let n = 2 * m;
        let a: Vec<C64> = (0..m).map(|k| rho.expect(&[Ladder::Lower(k)])).collect();
        let mut mean = vec![0.0; n];
        for k in 0..m {
            mean[2 * k] = 2.0 * a[k].re;
            mean[2 * k + 1] = 2.0 * a[k].im;
        }
        let mut cov = vec![0.0; n * n];
        for k in 0..m {
            for l in 0..m {
                // z = ⟨a_k† a_l⟩, w = ⟨a_k a_l⟩ (normal ordered)
                let z = rho.expect(&[Ladder::Raise(k), Ladder::Lower(l)]);
                let w = rho.expect(&[Ladder::Lower(k), Ladder::Lower(l)]);
                let delta = if k == l { 1.0 } else { 0.0 };
                cov[(2 * k) * n + 2 * l] = 2.0 * w.re + 2.0 * z.re + delta - 4.0 * a[k].re * a[l].re;
                cov[(2 * k + 1) * n + 2 * l + 1] =
                    -2.0 * w.re + 2.0 * z.re + delta - 4.0 * a[k].im * a[l].im;
                cov[(2 * k) * n + 2 * l + 1] = 2.0 * z.im + 2.0 * w.im - 4.0 * a[k].re * a[l].im;
            }
        }
        for k in 0..m {
            for l in 0..m {
                cov[(2 * l + 1) * n + 2 * k] = cov[(2 * k) * n + 2 * l + 1];
            }
        }
        Self::new_unchecked(mean, cov)
    }

    /// Largest elementwise difference in means and covariances.
    pub fn max_abs_diff(&self, other: &GaussianState) -> f64 {
        self.mean
            .iter()
            .zip(&other.mean)
            .chain(self.cov.iter().zip(&other.cov))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Fock representation of a single-mode Gaussian state on `spec`.
    pub fn to_fock(&self, spec: &TruncationSpec) -> Result<FockState> {
        if self.modes() != 1 || spec.modes() != 1 {
            return Err(invalid("Fock conversion is implemented for single modes"));
        }
        let d = spec.dims()[0];
        let (probs, vecs) = single_mode_ensemble(self, d, spec.trace_tol().max(1e-16))?;
        let k = probs.len();
        let weighted = Mat::<C64>::from_fn(d, k, |i, j| vecs[(i, j)] * probs[j]);
        let rho = &weighted * vecs.adjoint();
        let trace: f64 = (0..d).map(|i| rho[(i, i)].re).sum();
        let deficit = (1.0 - trace).max(0.0);
        spec.check_deficit("Gaussian state", deficit)?;
        let mut herm = rho;
        for c in 0..d {
            herm[(c, c)].im = 0.0;
            for r in 0..c {
                let avg = (herm[(r, c)] + herm[(c, r)].conj()) * 0.5;
                herm[(r, c)] = avg;
                herm[(c, r)] = avg.conj();
            }
        }
        FockState::from_dense(spec.clone(), herm.as_ref())
    }
}

/// Decomposition `ρ = Σ_n p_n |ψ_n⟩⟨ψ_n|` with `|ψ_n⟩ = D(γ) R(φ) S(r) |n⟩`
/// and thermal `p_n`, truncated to `d` levels and to populations above
/// `tail`.
fn single_mode_ensemble(g: &GaussianState, d: usize, tail: f64) -> Result<(Vec<f64>, Mat<C64>)> {
    let (sxx, sxp, spp) = (g.c(0, 0), g.c(0, 1), g.c(1, 1));
    let det = sxx * spp - sxp * sxp;
    if !(det > 0.0) {
        return Err(Error::Unphysical(det));
    }
    let nu = det.sqrt();
    if nu < 1.0 - UNCERTAINTY_TOL {
        return Err(Error::Unphysical(nu - 1.0));
    }
    let nbar = ((nu - 1.0) / 2.0).max(0.0);
    // σ/ν = M(φ) diag(e^{-2r}, e^{2r}) M(φ)ᵀ, M rotating (x, p) by -φ
    let (a, b, c) = (sxx / nu, sxp / nu, spp / nu);
    let half_tr = (a + c) / 2.0;
    let disc = (((a - c) / 2.0).powi(2) + b * b).sqrt();
    let small = half_tr - disc;
    let r = -0.5 * small.max(1e-300).ln();
    // eigenvector of the smaller eigenvalue
    let (ux, uy) = if b.abs() > 1e-300 {
        (b, small - a)
    } else if a <= c {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    };
    let phi = (-uy).atan2(ux);
    let gamma = C64::new(g.mean[0] / 2.0, g.mean[1] / 2.0);

    let q = nbar / (nbar + 1.0);
    let count = if q == 0.0 {
        1
    } else {
        (((tail * 1e-2).ln() / q.ln()).ceil() as usize).clamp(1, 4 * d + 200)
    };
    let pad = d + count + 40 + (4.0 * gamma.norm()).ceil() as usize + (20.0 * r.sinh().powi(2)) as usize;

    // ψ_0 = D(γ) R(φ) S(r)|0⟩ = R(φ) D(γ e^{iφ}) S(r)|0⟩ on the padded space
    let base = squeezed_coherent_vector(r, gamma * C64::from_polar(1.0, phi), pad);
    let mut psi: Vec<C64> = base
        .amps
        .iter()
        .enumerate()
        .map(|(k, &v)| v * C64::from_polar(1.0, -phi * k as f64))
        .collect();
    // ψ_n = [(a† - γ*) e^{-iφ} cosh r + (a - γ) e^{iφ} sinh r] ψ_{n-1} / √n
    let up = C64::from_polar(r.cosh(), -phi);
    let down = C64::from_polar(r.sinh(), phi);
    let shift = -(gamma.conj() * up + gamma * down);
    let mut vecs = Mat::<C64>::zeros(d, count);
    let mut probs = Vec::with_capacity(count);
    let mut p = 1.0 / (nbar + 1.0);
    for n in 0..count {
        if n > 0 {
            let s = 1.0 / (n as f64).sqrt();
            let mut next = vec![ZERO; pad];
            for i in 0..pad {
                let raised = if i > 0 { psi[i - 1] * (i as f64).sqrt() } else { ZERO };
                let lowered = if i + 1 < pad { psi[i + 1] * ((i + 1) as f64).sqrt() } else { ZERO };
                next[i] = (up * raised + down * lowered + shift * psi[i]) * s;
            }
            psi = next;
            p *= q;
        }
        for i in 0..d {
            vecs[(i, n)] = psi[i];
        }
        probs.push(p);
    }
    Ok((probs, vecs))
}


/// `f(ν)`: entropy in bits contributed by one symplectic eigenvalue.
pub fn entropy_f(nu: f64) -> f64 {
    if nu <= 1.0 + 1e-12 {
        return 0.0;
    }
    let (p, m) = ((nu + 1.0) / 2.0, (nu - 1.0) / 2.0);
    p * p.log2() - m * m.log2()
}

fn det2(m: &M2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Symplectic eigenvalues, ascending.
pub fn symplectic_eigenvalues(g: &GaussianState) -> Result<Vec<f64>> {
    match g.modes() {
        1 => {
            let d = det2(&g.block(0, 0));
            if d < 0.0 {
                return Err(Error::Unphysical(d));
            }
            Ok(vec![d.sqrt()])
        }
        2 => {
            let (a, b, c) = (g.block(0, 0), g.block(1, 1), g.block(0, 1));
            let delta = det2(&a) + det2(&b) + 2.0 * det2(&c);
            let det = det4(g);
            // a degenerate pair sits under pure roundoff; don't let the
            // square root blow it up to ~1e-8
            let mut disc = delta * delta - 4.0 * det;
            if disc < 16.0 * f64::EPSILON * delta * delta {
                disc = 0.0;
            }
            let hi = ((delta + disc.sqrt()) / 2.0).max(0.0).sqrt();
            let lo = if hi > 0.0 { det.max(0.0).sqrt() / hi } else { 0.0 };
            Ok(vec![lo, hi])
        }
        m => Err(invalid(format!("symplectic spectrum implemented for 1 or 2 modes, got {m}"))),
    }
}

fn det4(g: &GaussianState) -> f64 {
    let m = Mat::<f64>::from_fn(4, 4, |i, j| g.c(i, j));
    m.determinant()
}

/// Von Neumann entropy in bits.
pub fn gaussian_entropy(g: &GaussianState) -> Result<f64> {
    Ok(symplectic_eigenvalues(g)?.into_iter().map(entropy_f).sum())
}

/// Quantum mutual information between the two modes.
pub fn mutual_information(g: &GaussianState) -> Result<f64> {
    Ok(gaussian_entropy(&g.reduced(0)?)? + gaussian_entropy(&g.reduced(1)?)? - gaussian_entropy(g)?)
}

/// Two-mode squeezed vacuum with the `(-λ)ⁿ` phase: `A = B = (2n̄+1)I`,
/// `C = 2√(n̄(n̄+1)) diag(-1, 1)`.
pub fn epr_cm(nbar: f64) -> Result<GaussianState> {
    if !(nbar >= 0.0) {
        return Err(invalid(format!("EPR photon number must be >= 0, got {nbar}")));
    }
    let v = 2.0 * nbar + 1.0;
    let c = 2.0 * (nbar * (nbar + 1.0)).sqrt();
    GaussianState::from_blocks(vec![0.0; 4], [[v, 0.0], [0.0, v]], [[v, 0.0], [0.0, v]], [[-c, 0.0], [0.0, c]])
}

/// Covariance matrix of the received (mode A) and idler (mode B) state
/// for an EPR probe.
pub fn illumination_cm(params: &ScenarioParams, hypothesis: Hypothesis) -> Result<GaussianState> {
    let (eps, n, ne) = (params.epsilon, params.nbar_probe, params.nbar_env);
    let vb = 2.0 * n + 1.0;
    let b = [[vb, 0.0], [0.0, vb]];
    match hypothesis {
        Hypothesis::Present => {
            let va = 2.0 * eps * n + 2.0 * ne + 1.0;
            let c = eps.sqrt() * 2.0 * (n * (n + 1.0)).sqrt();
            GaussianState::from_blocks(vec![0.0; 4], [[va, 0.0], [0.0, va]], b, [[-c, 0.0], [0.0, c]])
        }
        Hypothesis::Absent => {
            let va = 2.0 * ne + 1.0;
            GaussianState::from_blocks(vec![0.0; 4], [[va, 0.0], [0.0, va]], b, [[0.0; 2]; 2])
        }
    }
}

/// Gaussian measurement on one mode: a beam splitter of transmissivity `t`
/// followed by conjugate homodynes. Equivalent to projecting onto pure
/// Gaussian states with covariance `diag((1-t)/t, t/(1-t))`; `t = 1/2` is
/// heterodyne.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneralDyne {
    t: f64,
}

impl GeneralDyne {
    pub fn new(t: f64) -> Result<Self> {
        if !(t > 0.0 && t < 1.0) {
            return Err(invalid(format!("general-dyne transmissivity must lie in (0, 1), got {t}")));
        }
        Ok(Self { t })
    }

    pub fn heterodyne() -> Self {
        Self { t: 0.5 }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Diagonal of the projected state's covariance.
    pub fn sigma(&self) -> [f64; 2] {
        let t = self.t;
        [(1.0 - t) / t, t / (1.0 - t)]
    }

    /// Squeezing of the projected state: x-variance `e^{-2r}`.
    pub fn squeezing(&self) -> f64 {
        -0.5 * ((1.0 - self.t) / self.t).ln()
    }
}

/// Outcome statistics and conditional state of mode A after a general-dyne
/// measurement on mode B. Outcomes `m` are quadrature-valued, with density
/// `N(μ_B, B + Σ_m)`.
#[derive(Clone, Debug)]
pub struct Conditional {
    /// Outcome-independent conditional covariance of mode A.
    pub cov: M2,
    /// Conditional mean is `mean_a + gain · (m - mean_b)`.
    pub gain: M2,
    pub mean_a: [f64; 2],
    pub mean_b: [f64; 2],
    pub outcome_cov: M2,
}

impl Conditional {
    pub fn state_for(&self, outcome: [f64; 2]) -> GaussianState {
        let dm = [outcome[0] - self.mean_b[0], outcome[1] - self.mean_b[1]];
        let mean = vec![
            self.mean_a[0] + self.gain[0][0] * dm[0] + self.gain[0][1] * dm[1],
            self.mean_a[1] + self.gain[1][0] * dm[0] + self.gain[1][1] * dm[1],
        ];
        GaussianState {
            mean,
            cov: vec![self.cov[0][0], self.cov[0][1], self.cov[1][0], self.cov[1][1]],
        }
    }

    pub fn covariance_state(&self) -> GaussianState {
        self.state_for(self.mean_b)
    }
}

fn mul2(a: &M2, b: &M2) -> M2 {
    let mut o = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            o[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    o
}

fn inv2(m: &M2) -> Result<M2> {
    let d = det2(m);
    if d.abs() < 1e-300 || !d.is_finite() {
        return Err(Error::Singular("B + Σ_m"));
    }
    Ok([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
}

fn transpose2(m: &M2) -> M2 {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

pub fn conditional_after_generaldyne(g: &GaussianState, m: &GeneralDyne) -> Result<Conditional> {
    if g.modes() != 2 {
        return Err(invalid("general-dyne conditioning needs a two-mode state"));
    }
    let (a, b, c) = (g.block(0, 0), g.block(1, 1), g.block(0, 1));
    let s = m.sigma();
    let bs = [[b[0][0] + s[0], b[0][1]], [b[1][0], b[1][1] + s[1]]];
    let inv = inv2(&bs)?;
    let gain = mul2(&c, &inv);
    let corr = mul2(&gain, &transpose2(&c));
    let mut cov = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            cov[i][j] = a[i][j] - corr[i][j];
        }
    }
    let sym = 0.5 * (cov[0][1] + cov[1][0]);
    cov[0][1] = sym;
    cov[1][0] = sym;
    Ok(Conditional {
        cov,
        gain,
        mean_a: [g.mean[0], g.mean[1]],
        mean_b: [g.mean[2], g.mean[3]],
        outcome_cov: bs,
    })
}

/// Gaussian discord `δ(A|B)` for a fixed general-dyne measurement on B.
pub fn gaussian_discord(g: &GaussianState, m: &GeneralDyne) -> Result<f64> {
    let min = g.uncertainty_min_eigenvalue()?;
    if min < -UNCERTAINTY_TOL {
        return Err(Error::Unphysical(min));
    }
    let cond = conditional_after_generaldyne(g, m)?;
    let sb = entropy_f(det2(&g.block(1, 1)).max(0.0).sqrt());
    let sab = gaussian_entropy(g)?;
    let sc = entropy_f(det2(&cond.cov).max(0.0).sqrt());
    Ok(sb - sab + sc)
}

/// Golden-section minimum of `f` on `[lo, hi]`.
pub(crate) fn golden_min(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// Minimum of the discord over the general-dyne family: a 19-point grid on
/// `[0.05, 0.95]` refined by golden section. Returns `(δ, t*)`.
pub fn gaussian_discord_opt(g: &GaussianState) -> Result<(f64, f64)> {
    let eval = |t: f64| gaussian_discord(g, &GeneralDyne::new(t)?);
    let grid: Vec<f64> = (0..19).map(|k| 0.05 + 0.05 * k as f64).collect();
    let mut best = (f64::INFINITY, 0.5);
    for &t in &grid {
        let v = eval(t)?;
        if v < best.0 {
            best = (v, t);
        }
    }
    let lo = (best.1 - 0.05).max(0.05);
    let hi = (best.1 + 0.05).min(0.95);
    let (t, v) = golden_min(lo, hi, 1e-6, eval)?;
    Ok(if v < best.0 { (v, t) } else { best })
}
