//! Dense Hermitian kernels shared by the Fock-space code.

use faer::{Mat, MatRef, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Eigenvalues strictly below this threshold contribute nothing to entropies.
pub const ENTROPY_FLOOR: f64 = 1e-14;

/// Negative eigenvalues down to `-PSD_REPAIR` are treated as roundoff.
pub const PSD_REPAIR: f64 = 1e-10;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

fn is_real(m: MatRef<'_, C64>) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].im == 0.0))
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues sorted descending.
///
/// Real symmetric inputs take the cheaper real path.
pub fn hermitian_eigen(m: MatRef<'_, C64>) -> Result<(Vec<f64>, Mat<C64>)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let (vals, vecs) = if is_real(m) {
        let r = Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)].re);
        let evd = r.self_adjoint_eigen(Side::Lower).map_err(|_| Error::Eigen)?;
        let s = evd.S().column_vector();
        let u = evd.U();
        let vals: Vec<f64> = (0..n).map(|i| s[i]).collect();
        let vecs = Mat::<C64>::from_fn(n, n, |i, j| C64::new(u[(i, j)], 0.0));
        (vals, vecs)
    } else {
        let evd = m.self_adjoint_eigen(Side::Lower).map_err(|_| Error::Eigen)?;
        let s = evd.S().column_vector();
        let vals: Vec<f64> = (0..n).map(|i| s[i].re).collect();
        (vals, evd.U().to_owned())
    };
    // faer sorts ascending
    let order: Vec<usize> = (0..n).rev().collect();
    let sorted: Vec<f64> = order.iter().map(|&k| vals[k]).collect();
    let v = Mat::<C64>::from_fn(n, n, |i, j| vecs[(i, order[j])]);
    Ok((sorted, v))
}

/// Eigenvalues only, sorted descending.
pub fn hermitian_eigenvalues(m: MatRef<'_, C64>) -> Result<Vec<f64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut vals = if is_real(m) {
        let r = Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)].re);
        r.self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::Eigen)?
    } else {
        m.self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::Eigen)?
    };
    vals.reverse();
    Ok(vals)
}

/// Largest |m_ij - conj(m_ji)|.
pub fn max_asymmetry(m: MatRef<'_, C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Clip roundoff negatives and rescale so the sum is unchanged.
pub fn repair_spectrum(vals: &mut [f64]) -> Result<()> {
    let total: f64 = vals.iter().sum();
    let mut clipped = false;
    for v in vals.iter_mut() {
        if *v < 0.0 {
            if *v < -PSD_REPAIR {
                return Err(Error::NotPsd(*v));
            }
            *v = 0.0;
            clipped = true;
        }
    }
    if clipped {
        let kept: f64 = vals.iter().sum();
        if kept > 0.0 {
            let scale = total / kept;
            vals.iter_mut().for_each(|v| *v *= scale);
        }
    }
    Ok(())
}

/// Shannon entropy in bits of a (repaired) spectrum.
pub fn spectrum_entropy(vals: &[f64]) -> f64 {
    let s: f64 = vals
        .iter()
        .filter(|&&v| v > ENTROPY_FLOOR)
        .map(|&v| -v * v.log2())
        .sum();
    s.max(0.0)
}

/// Entropy in bits of a thermal state with mean photon number `nbar`.
pub fn thermal_entropy(nbar: f64) -> f64 {
    if nbar <= 0.0 {
        return 0.0;
    }
    (nbar + 1.0) * (nbar + 1.0).log2() - nbar * nbar.log2()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_descending_and_reconstructs() {
        let m = Mat::<C64>::from_fn(4, 4, |i, j| {
            if i == j {
                C64::new(i as f64 + 1.0, 0.0)
            } else if i < j {
                C64::new(0.1, 0.2)
            } else {
                C64::new(0.1, -0.2)
            }
        });
        let (vals, v) = hermitian_eigen(m.as_ref()).unwrap();
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        let d = Mat::<C64>::from_fn(4, 4, |i, j| if i == j { C64::new(vals[i], 0.0) } else { ZERO });
        let back = &v * &d * v.adjoint();
        for i in 0..4 {
            for j in 0..4 {
                assert!((back[(i, j)] - m[(i, j)]).norm() < 1e-12);
            }
        }
        let only = hermitian_eigenvalues(m.as_ref()).unwrap();
        for (a, b) in only.iter().zip(&vals) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn repair_clips_roundoff_and_rejects_real_negatives() {
        let mut v = vec![0.5, 0.5 + 1e-12, -1e-12];
        repair_spectrum(&mut v).unwrap();
        assert_eq!(v[2], 0.0);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let mut bad = vec![1.0, -1e-6];
        assert!(matches!(repair_spectrum(&mut bad), Err(Error::NotPsd(_))));
    }

    #[test]
    fn thermal_entropy_closed_form() {
        assert_eq!(thermal_entropy(0.0), 0.0);
        let expect = 5.0 * 5f64.log2() - 4.0 * 4f64.log2();
        assert!((thermal_entropy(4.0) - expect).abs() < 1e-15);
        // direct sum over the geometric distribution
        let direct: f64 = (0..400)
            .map(|k| 0.5f64.powi(k) / 1.5f64.powi(k + 1))
            .map(|p| -p * p.log2())
            .sum();
        assert!((thermal_entropy(0.5) - direct).abs() < 1e-12);
    }
}
