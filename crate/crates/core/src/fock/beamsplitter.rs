use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use super::{FockState, TruncationSpec};
use crate::error::{invalid, Error, Result};
use crate::linalg::ZERO;

/// Largest total-number block worth exponentiating densely.
const MAX_BLOCK: usize = 4096;

fn check_reflectivity(epsilon: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(invalid(format!("reflectivity must lie in [0, 1], got {epsilon}")));
    }
    Ok(())
}

/// `exp(θK)` with `K = a_i†a_j - a_i a_j†` on the total-number-`N` block,
/// restricted to `lo ≤ n_i ≤ hi`. Row/column `k` is `|lo+k, N-lo-k⟩`.
///
/// The restricted generator is exponentiated exactly, so the result is
/// unitary even when the restriction cuts the block.
fn generator_exp(theta: f64, n_total: usize, lo: usize, hi: usize) -> Result<Mat<f64>> {
    let m = hi + 1 - lo;
    if m > MAX_BLOCK {
        return Err(Error::DimensionOverflow(m as u128));
    }
    if theta == 0.0 || m == 1 {
        return Ok(Mat::identity(m, m));
    }
    // i K is Hermitian; conjugating by diag(i^k) makes it real symmetric
    // tridiagonal with off-diagonal √((n+1)(N-n)).
    let h = Mat::<f64>::from_fn(m, m, |r, c| {
        let (a, b) = if r > c { (c, r) } else { (r, c) };
        if b == a + 1 {
            let n = (lo + a) as f64;
            ((n + 1.0) * (n_total as f64 - n)).sqrt()
        } else {
            0.0
        }
    });
    let evd = h.self_adjoint_eigen(Side::Lower).map_err(|_| Error::Eigen)?;
    let s = evd.S().column_vector();
    let v = evd.U();
    // Σ_l e^{-iθλ_l} v_rl v_cl = C - iS with two real products
    let vc = Mat::<f64>::from_fn(m, m, |r, l| v[(r, l)] * (theta * s[l]).cos());
    let vs = Mat::<f64>::from_fn(m, m, |r, l| v[(r, l)] * (theta * s[l]).sin());
    let cm = &vc * v.transpose();
    let sm = &vs * v.transpose();
    // multiply by i^{r-c} and keep the real part
    let out = Mat::<f64>::from_fn(m, m, |r, c| match (r + 4 * m - c) % 4 {
        0 => cm[(r, c)],
        1 => sm[(r, c)],
        2 => -cm[(r, c)],
        _ => -sm[(r, c)],
    });
    Ok(out)
}

/// Beam-splitter unitary on the full total-number-`N` block of two modes,
/// with `sin²θ = ε`. Row/column `k` is `|k, N-k⟩`.
pub fn beamsplitter_block(epsilon: f64, n_total: usize) -> Result<Mat<f64>> {
    check_reflectivity(epsilon)?;
    generator_exp(epsilon.sqrt().asin(), n_total, 0, n_total)
}

/// Largest state handled by the dense conjugation in `apply_beamsplitter`.
const DENSE_LIMIT: usize = 3000;

/// Conjugates `rho` by the beam splitter on `modes = (i, j)` with
/// reflectivity `ε`: the output annihilator of mode `i` is
/// `√(1-ε) a_i + √ε a_j`.
///
/// The generator is restricted to the truncated space, so the map is
/// exactly unitary there and agrees with the ideal beam splitter on states
/// whose populations stay clear of the cutoff.
pub fn apply_beamsplitter(rho: &FockState, modes: (usize, usize), epsilon: f64) -> Result<FockState> {
    check_reflectivity(epsilon)?;
    let spec = rho.spec();
    let (i, j) = modes;
    spec.check_mode(i)?;
    spec.check_mode(j)?;
    if i == j {
        return Err(invalid("beam splitter needs two distinct modes"));
    }
    let d = spec.dims()[i];
    if spec.dims()[j] != d {
        return Err(Error::DimensionMismatch(format!(
            "beam splitter modes have dims {} and {}",
            d,
            spec.dims()[j]
        )));
    }
    let total = spec.total_dim();
    if total > DENSE_LIMIT {
        return Err(Error::DimensionOverflow(total as u128));
    }
    let theta = epsilon.sqrt().asin();
    let blocks: Vec<(usize, Mat<f64>)> = (0..=2 * (d - 1))
        .map(|n| {
            let lo = n.saturating_sub(d - 1);
            let hi = n.min(d - 1);
            generator_exp(theta, n, lo, hi).map(|u| (lo, u))
        })
        .collect::<Result<_>>()?;
    let strides = spec.strides();
    // sparse columns of U on the full space
    let ucols: Vec<Vec<(usize, f64)>> = (0..total)
        .map(|c| {
            let ni = spec.occupation(c, i, &strides);
            let nj = spec.occupation(c, j, &strides);
            let n = ni + nj;
            let (lo, u) = &blocks[n];
            let base = c - ni * strides[i] - nj * strides[j];
            (0..u.nrows())
                .filter_map(|k| {
                    let v = u[(k, ni - lo)];
                    (v != 0.0).then(|| {
                        let oi = lo + k;
                        (base + oi * strides[i] + (n - oi) * strides[j], v)
                    })
                })
                .collect()
        })
        .collect();
    let dense = rho.to_dense();
    // X = U ρ, then X U†
    let mut x = Mat::<C64>::zeros(total, total);
    for col in 0..total {
        for (k, uk) in ucols.iter().enumerate() {
            let r = dense[(k, col)];
            if r == ZERO {
                continue;
            }
            for &(row, v) in uk {
                x[(row, col)] += r * v;
            }
        }
    }
    let mut y = Mat::<C64>::zeros(total, total);
    for (k, uk) in ucols.iter().enumerate() {
        for &(col, v) in uk {
            for row in 0..total {
                let xv = x[(row, k)];
                if xv != ZERO {
                    y[(row, col)] += xv * v;
                }
            }
        }
    }
    for c in 0..total {
        y[(c, c)].im = 0.0;
        for r in 0..c {
            let avg = (y[(r, c)] + y[(c, r)].conj()) * 0.5;
            y[(r, c)] = avg;
            y[(c, r)] = avg.conj();
        }
    }
    Ok(FockState::from_dense(spec.clone(), y.as_ref())?.with_meta(rho.is_pure_hint(), rho.deficit()))
}

/// The reflected-probe channel: the probe meets a thermal environment on a
/// beam splitter, the detector keeps `√ε a_probe + √(1-ε) a_env`, and the
/// environment output is traced out.
///
/// Equivalent to building `probe ⊗ thermal(n̄_env)`, applying the beam
/// splitter and tracing the environment, but computed through a transfer
/// table `Φ(|n⟩⟨m|) = Σ_s T(n, m, s) |n+s⟩⟨m+s|` using untruncated
/// total-number blocks.
#[derive(Clone, Debug)]
pub struct ThermalLossChannel {
    epsilon: f64,
    nbar_env: f64,
    d_in: usize,
    d_out: usize,
    d_env: usize,
    /// `table[(n * d_in + m) * d_out + n']`, with `m' = m + n' - n`.
    table: Vec<f64>,
}

impl ThermalLossChannel {
    /// `nbar_env` is the mean photon number of the environment mode at the
    /// beam splitter input (already rescaled by the caller if desired).
    /// The environment is truncated where its thermal tail drops below
    /// `env_tol`.
    pub fn new(epsilon: f64, nbar_env: f64, d_in: usize, d_out: usize, env_tol: f64) -> Result<Self> {
        check_reflectivity(epsilon)?;
        if !(nbar_env >= 0.0) || !nbar_env.is_finite() {
            return Err(invalid(format!("environment photon number must be >= 0, got {nbar_env}")));
        }
        if d_in < 2 || d_out < 2 {
            return Err(invalid("channel dims must be >= 2"));
        }
        if !(env_tol > 0.0 && env_tol < 1.0) {
            return Err(invalid(format!("env_tol must lie in (0, 1), got {env_tol}")));
        }
        let q = nbar_env / (nbar_env + 1.0);
        let d_env = if q == 0.0 {
            1
        } else {
            ((env_tol.ln() / q.ln()).ceil() as usize).max(1)
        };
        // cosθ = √ε keeps √ε of the probe in the detector mode
        let theta = (1.0 - epsilon).sqrt().asin();
        let n_max = d_in - 1 + d_env - 1;
        let blocks: Vec<Mat<f64>> = (0..=n_max)
            .map(|n| generator_exp(theta, n, 0, n))
            .collect::<Result<_>>()?;
        let mut table = vec![0.0; d_in * d_in * d_out];
        let mut pe = 1.0 / (nbar_env + 1.0);
        for e in 0..d_env {
            for n in 0..d_in {
                let un = &blocks[n + e];
                for m in 0..d_in {
                    let um = &blocks[m + e];
                    let base = (n * d_in + m) * d_out;
                    // env output k runs over 0..=e + min(n, m)
                    for k in 0..=(e + n.min(m)) {
                        let np = n + e - k;
                        let mp = m + e - k;
                        if np >= d_out || mp >= d_out {
                            continue;
                        }
                        table[base + np] += pe * un[(np, n)] * um[(mp, m)];
                    }
                }
            }
            pe *= q;
        }
        Ok(Self {
            epsilon,
            nbar_env,
            d_in,
            d_out,
            d_env,
            table,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn nbar_env(&self) -> f64 {
        self.nbar_env
    }

    pub fn env_dim(&self) -> usize {
        self.d_env
    }

    pub fn input_dim(&self) -> usize {
        self.d_in
    }

    pub fn output_dim(&self) -> usize {
        self.d_out
    }

    /// Probability that input `|n⟩` leaves the kept output space.
    pub fn leakage(&self, n: usize) -> f64 {
        let base = (n * self.d_in + n) * self.d_out;
        1.0 - self.table[base..base + self.d_out].iter().sum::<f64>()
    }

    /// Applies the channel to mode `mode` of `rho`; that mode's cutoff
    /// becomes the channel's output dim. Fails if the lost probability
    /// exceeds the state's trace tolerance.
    pub fn apply(&self, rho: &FockState, mode: usize) -> Result<FockState> {
        let spec = rho.spec();
        spec.check_mode(mode)?;
        let d = spec.dims()[mode];
        if d > self.d_in {
            return Err(Error::DimensionMismatch(format!(
                "mode has {d} levels, channel accepts {}",
                self.d_in
            )));
        }
        let mut dims = spec.dims().to_vec();
        dims[mode] = self.d_out;
        let out_spec = TruncationSpec::new(dims, spec.trace_tol())?;
        let strides = spec.strides();
        let out_strides = out_spec.strides();
        let mut entries = Vec::new();
        let mut lost = 0.0;
        for b in rho.blocks() {
            let loc: Vec<(usize, usize)> = b
                .indices()
                .iter()
                .map(|&i| {
                    let n = spec.occupation(i, mode, &strides);
                    let mut rest = 0;
                    for k in 0..spec.modes() {
                        if k != mode {
                            rest += spec.occupation(i, k, &strides) * out_strides[k];
                        }
                    }
                    (n, rest)
                })
                .collect();
            let mat = b.matrix();
            for (q, &(m, rc)) in loc.iter().enumerate() {
                for (p, &(n, rr)) in loc.iter().enumerate() {
                    let v = mat[(p, q)];
                    if v == ZERO {
                        continue;
                    }
                    if p == q {
                        lost += v.re * self.leakage(n);
                    }
                    let base = (n * self.d_in + m) * self.d_out;
                    let lo = n.saturating_sub(m);
                    let hi = (self.d_out + n).saturating_sub(m).min(self.d_out);
                    for np in lo..hi {
                        let t = self.table[base + np];
                        if t == 0.0 {
                            continue;
                        }
                        let mp = m + np - n;
                        entries.push((rr + np * out_strides[mode], rc + mp * out_strides[mode], v * t));
                    }
                }
            }
        }
        let deficit = rho.deficit() + lost.max(0.0);
        spec.check_deficit("thermal loss channel output", deficit)?;
        Ok(FockState::from_triplets(out_spec, &entries)?.with_meta(false, deficit))
    }
}
