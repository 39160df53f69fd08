use faer::Mat;
use num_complex::Complex64 as C64;

use super::{FockState, TruncationSpec};
use crate::error::{invalid, Result};
use crate::linalg::ZERO;

/// A pure state vector over a single truncated mode, with the norm lost to
/// truncation.
#[derive(Clone, Debug)]
pub struct PureState {
    pub amps: Vec<C64>,
    pub deficit: f64,
}

impl PureState {
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn mean_photons(&self) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(n, c)| n as f64 * c.norm_sqr())
            .sum()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            self.amps.iter_mut().for_each(|c| *c /= n);
        }
        self
    }

    /// Density matrix; fails if the deficit exceeds the spec's tolerance.
    pub fn to_state(&self, spec: &TruncationSpec) -> Result<FockState> {
        spec.check_deficit("pure state", self.deficit)?;
        Ok(FockState::from_pure(spec.clone(), &self.amps)?.with_meta(true, self.deficit))
    }
}

fn single_dim(spec: &TruncationSpec) -> Result<usize> {
    if spec.modes() != 1 {
        return Err(invalid(format!("expected a single-mode truncation, got {}", spec.modes())));
    }
    Ok(spec.dims()[0])
}

/// Coherent amplitudes `c_n = e^{-|α|²/2} αⁿ/√n!` for `n < d`.
pub fn coherent_vector(alpha: C64, d: usize) -> PureState {
    let mut amps = vec![ZERO; d];
    amps[0] = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 1..d {
        amps[n] = amps[n - 1] * alpha / (n as f64).sqrt();
    }
    let kept: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
    PureState {
        amps,
        deficit: (1.0 - kept).max(0.0),
    }
}

pub fn coherent_state(alpha: C64, spec: &TruncationSpec) -> Result<FockState> {
    let d = single_dim(spec)?;
    coherent_vector(alpha, d).to_state(spec)
}

pub fn thermal_state(nbar: f64, spec: &TruncationSpec) -> Result<FockState> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(invalid(format!("thermal mean photon number must be >= 0, got {nbar}")));
    }
    let d = single_dim(spec)?;
    let q = nbar / (nbar + 1.0);
    let deficit = q.powi(d as i32);
    spec.check_deficit("thermal state", deficit)?;
    let mut diag = vec![0.0; d];
    let mut p = 1.0 / (nbar + 1.0);
    for slot in diag.iter_mut() {
        *slot = p;
        p *= q;
    }
    Ok(FockState::from_diagonal(spec.clone(), &diag)?.with_meta(false, deficit))
}

/// Two-mode squeezed vacuum `√(1-λ²) Σ (-λ)ⁿ |n,n⟩`, `λ² = n̄/(n̄+1)`.
pub fn epr_state(nbar: f64, spec: &TruncationSpec) -> Result<FockState> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(invalid(format!("EPR mean photon number must be >= 0, got {nbar}")));
    }
    if spec.modes() != 2 {
        return Err(invalid("the EPR state needs a two-mode truncation"));
    }
    let d = spec.dims()[0].min(spec.dims()[1]);
    let l2 = nbar / (nbar + 1.0);
    let lambda = l2.sqrt();
    let deficit = l2.powi(d as i32);
    spec.check_deficit("EPR state", deficit)?;
    let mut amps = vec![ZERO; spec.total_dim()];
    let mut c = (1.0 - l2).sqrt();
    for n in 0..d {
        amps[spec.encode(&[n, n])] = C64::new(c, 0.0);
        c *= -lambda;
    }
    Ok(FockState::from_pure(spec.clone(), &amps)?.with_meta(true, deficit))
}

/// Matrix elements `⟨m|D(α)|n⟩` for `m < rows`, `n < cols`.
///
/// Columns follow `D|n⟩ = (a† - α*) D|n-1⟩ / √n`; every kept row is exact.
pub fn displacement_matrix(alpha: C64, rows: usize, cols: usize) -> Mat<C64> {
    let mut m = Mat::<C64>::zeros(rows, cols);
    if rows == 0 || cols == 0 {
        return m;
    }
    let first = coherent_vector(alpha, rows);
    for r in 0..rows {
        m[(r, 0)] = first.amps[r];
    }
    let ac = alpha.conj();
    for n in 1..cols {
        let s = 1.0 / (n as f64).sqrt();
        for r in 0..rows {
            let raised = if r > 0 {
                m[(r - 1, n - 1)] * (r as f64).sqrt()
            } else {
                ZERO
            };
            m[(r, n)] = (raised - m[(r, n - 1)] * ac) * s;
        }
    }
    m
}

/// Squeezed vacuum `S(r)|0⟩` with `S = exp((r/2)(a² - a†²))`, so the
/// x-quadrature variance is `e^{-2r}`.
pub(crate) fn squeezed_vacuum(r: f64, d: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    let t = -r.tanh();
    let mut c = 1.0 / r.cosh().sqrt();
    let mut k = 0;
    while 2 * k < d {
        v[2 * k] = c;
        // c_{k+1}/c_k = t √((2k+1)(2k+2)) / (2(k+1))
        c *= t * (((2 * k + 1) * (2 * k + 2)) as f64).sqrt() / (2.0 * (k + 1) as f64);
        k += 1;
    }
    v
}

/// Matrix elements `⟨m|S(r)|n⟩` for `m < rows`, `n < cols`.
pub fn squeeze_matrix(r: f64, rows: usize, cols: usize) -> Mat<f64> {
    // S|n⟩ = (a† cosh r + a sinh r) S|n-1⟩ / √n; the lowering term pulls
    // error down from the padding edge one row per column.
    let pad = rows + cols + 20;
    let (ch, sh) = (r.cosh(), r.sinh());
    let mut prev = squeezed_vacuum(r, pad);
    let mut out = Mat::<f64>::zeros(rows, cols);
    for n in 0..cols {
        if n > 0 {
            let mut next = vec![0.0; pad];
            let s = 1.0 / (n as f64).sqrt();
            for m in 0..pad {
                let up = if m > 0 { prev[m - 1] * (m as f64).sqrt() } else { 0.0 };
                let down = if m + 1 < pad { prev[m + 1] * ((m + 1) as f64).sqrt() } else { 0.0 };
                next[m] = (up * ch + down * sh) * s;
            }
            prev = next;
        }
        for m in 0..rows {
            out[(m, n)] = prev[m];
        }
    }
    out
}

/// `D(α) S(r) |0⟩` truncated to `d` levels; mean photon number
/// `sinh²r + |α|²`.
///
/// Amplitudes come from the annihilator of the state,
/// `(a cosh r + a† sinh r - γ)|ψ⟩ = 0` with `γ = α cosh r + α* sinh r`,
/// which gives a three-term recurrence that stays accurate for large `|α|`
/// (displacing a padded squeezed vacuum does not).
pub fn squeezed_coherent_vector(r: f64, alpha: C64, d: usize) -> PureState {
    let mut amps = vec![ZERO; d];
    if d == 0 {
        return PureState { amps, deficit: 1.0 };
    }
    let (ch, sh) = (r.cosh(), r.sinh());
    let gamma = alpha * ch + alpha.conj() * sh;
    amps[0] = (-0.5 * alpha.norm_sqr() - 0.5 * alpha.conj() * alpha.conj() * r.tanh()).exp() / ch.sqrt();
    if d > 1 {
        amps[1] = gamma * amps[0] / ch;
    }
    for n in 1..d.saturating_sub(1) {
        amps[n + 1] = (gamma * amps[n] - amps[n - 1] * (sh * (n as f64).sqrt())) / (ch * ((n + 1) as f64).sqrt());
    }
    let kept: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
    PureState {
        amps,
        deficit: (1.0 - kept).max(0.0),
    }
}

pub fn squeezed_coherent_state(r: f64, alpha: C64, spec: &TruncationSpec) -> Result<FockState> {
    let d = single_dim(spec)?;
    squeezed_coherent_vector(r, alpha, d).to_state(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coherent_examples() {
        let vac = coherent_vector(ZERO, 8);
        assert_eq!(vac.amps[0], C64::new(1.0, 0.0));
        assert!(vac.amps[1..].iter().all(|c| *c == ZERO));
        let a = C64::new(0.5f64.sqrt(), 0.0);
        let v = coherent_vector(a, 30);
        assert!((v.mean_photons() - 0.5).abs() < 1e-10);
        let short = coherent_vector(C64::new(1.0, 0.0), 2);
        assert!((short.deficit - (1.0 - 2.0 * (-1f64).exp())).abs() < 1e-12);
        let spec = TruncationSpec::single(2, 1e-6).unwrap();
        assert!(coherent_state(C64::new(1.0, 0.0), &spec).is_err());
    }

    #[test]
    fn thermal_examples() {
        let spec = TruncationSpec::single(70, 1e-6).unwrap();
        let t = thermal_state(4.0, &spec).unwrap();
        assert!((t.trace() - 1.0).abs() < 1e-6);
        assert!((t.mean_photons(0) - 4.0).abs() < 1e-3);
        let small = TruncationSpec::single(10, 1e-6).unwrap();
        assert!(thermal_state(4.0, &small).is_err());
        let vac = thermal_state(0.0, &small).unwrap();
        assert_eq!(vac.entry(0, 0).re, 1.0);
        assert!(thermal_state(-1.0, &small).is_err());
    }

    #[test]
    fn displacement_is_unitary_on_kept_block() {
        let alpha = C64::new(0.8, -0.3);
        let big = displacement_matrix(alpha, 80, 80);
        // columns far from the edge are normalised and mutually orthogonal
        for j in 0..20 {
            for k in 0..20 {
                let mut s = ZERO;
                for r in 0..80 {
                    s += big[(r, j)].conj() * big[(r, k)];
                }
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!((s - C64::new(expect, 0.0)).norm() < 1e-12, "{j} {k}");
            }
        }
        // D(α)|0⟩ = |α⟩ and D(α)D(-α) = I on the low block
        let back = displacement_matrix(-alpha, 80, 80);
        let prod = &big * &back;
        for j in 0..20 {
            for i in 0..20 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - C64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn squeezing_examples() {
        let sv = squeezed_coherent_vector(0.1, ZERO, 40);
        for (n, c) in sv.amps.iter().enumerate() {
            if n % 2 == 1 {
                assert!(c.norm() < 1e-15);
            }
        }
        assert!((sv.mean_photons() - 0.1f64.sinh().powi(2)).abs() < 1e-12);
        let a = C64::new(0.5f64.sqrt(), 0.0);
        let zero_r = squeezed_coherent_vector(0.0, a, 30);
        let coh = coherent_vector(a, 30);
        for (x, y) in zero_r.amps.iter().zip(&coh.amps) {
            assert!((x - y).norm() < 1e-14);
        }
        let r = 0.00279f64;
        let alpha = C64::new((0.5 - r.sinh().powi(2)).sqrt(), 0.0);
        let st = squeezed_coherent_vector(r, alpha, 40);
        assert!((st.mean_photons() - 0.5).abs() < 1e-9);
        // matrix columns agree with the direct vacuum column
        let s = squeeze_matrix(0.3, 30, 10);
        let vac = squeezed_coherent_vector(0.3, ZERO, 30);
        for m in 0..30 {
            assert!((s[(m, 0)] - vac.amps[m].re).abs() < 1e-14);
        }
        // strongly squeezed and far displaced: D(α)S|0⟩ = S(S†D(α)S)|0⟩ is
        // still normalised, with the closed-form energy
        for (r, alpha) in [(-1.47, C64::new(6.0, 0.3)), (1.47, C64::new(13.0, -0.3))] {
            let v = squeezed_coherent_vector(r, alpha, 500);
            assert!((v.norm_sqr() - 1.0).abs() < 1e-9, "{}", v.norm_sqr());
            let e = r.sinh().powi(2) + alpha.norm_sqr();
            assert!((v.mean_photons() - e).abs() < 1e-7 * e);
        }
    }

    #[test]
    fn squeeze_matrix_is_unitary_and_squeezes_x() {
        let r = 0.4;
        let s = squeeze_matrix(r, 90, 15);
        for j in 0..15 {
            for k in 0..15 {
                let dot: f64 = (0..90).map(|m| s[(m, j)] * s[(m, k)]).sum();
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-12);
            }
        }
        // ⟨x²⟩ of S|0⟩ with x = a + a†
        let v: Vec<f64> = (0..90).map(|m| s[(m, 0)]).collect();
        let mut x2 = 0.0;
        for m in 0..90 {
            // (a + a†)² = a² + a†² + 2a†a + 1
            x2 += v[m] * v[m] * (2.0 * m as f64 + 1.0);
            if m + 2 < 90 {
                x2 += 2.0 * v[m] * v[m + 2] * (((m + 1) * (m + 2)) as f64).sqrt();
            }
        }
        assert!((x2 - (-2.0 * r).exp()).abs() < 1e-12);
    }

    #[test]
    fn epr_reduces_to_thermal() {
        let spec = TruncationSpec::new(vec![30, 30], 1e-6).unwrap();
        let epr = epr_state(0.5, &spec).unwrap();
        let red = epr.partial_trace(&[1]).unwrap();
        let th = thermal_state(0.5, &TruncationSpec::single(30, 1e-6).unwrap()).unwrap();
        assert!(red.max_abs_diff(&th).unwrap() < 1e-10);
        let vac = epr_state(0.0, &spec).unwrap();
        assert_eq!(vac.entry(0, 0).re, 1.0);
    }
}
