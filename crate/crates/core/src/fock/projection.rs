use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::{coherent_vector, FockState, TruncationSpec};
use crate::error::{invalid, Error, Result};
use crate::linalg::ZERO;

/// `(I ⊗ ⟨v|) ρ (I ⊗ |v⟩)` with `v` acting on `mode`; unnormalised.
pub fn project_onto(rho: &FockState, mode: usize, v: &[C64]) -> Result<FockState> {
    let spec = rho.spec();
    spec.check_mode(mode)?;
    if spec.modes() < 2 {
        return Err(invalid("projection must leave at least one mode"));
    }
    let d = spec.dims()[mode];
    if v.len() < d {
        return Err(Error::DimensionMismatch(format!(
            "projector has {} components, mode has {d} levels",
            v.len()
        )));
    }
    let rest_dims: Vec<usize> = (0..spec.modes())
        .filter(|&k| k != mode)
        .map(|k| spec.dims()[k])
        .collect();
    let out_spec = TruncationSpec::new(rest_dims, spec.trace_tol())?;
    let strides = spec.strides();
    let out_strides = out_spec.strides();
    let mut entries = Vec::new();
    for b in rho.blocks() {
        let loc: Vec<(C64, usize)> = b
            .indices()
            .iter()
            .map(|&i| {
                let n = spec.occupation(i, mode, &strides);
                let mut rest = 0;
                let mut slot = 0;
                for k in 0..spec.modes() {
                    if k != mode {
                        rest += spec.occupation(i, k, &strides) * out_strides[slot];
                        slot += 1;
                    }
                }
                (v[n], rest)
            })
            .collect();
        let mat = b.matrix();
        for (q, &(vq, rq)) in loc.iter().enumerate() {
            if vq == ZERO {
                continue;
            }
            for (p, &(vp, rp)) in loc.iter().enumerate() {
                if vp == ZERO {
                    continue;
                }
                entries.push((rp, rq, vp.conj() * mat[(p, q)] * vq));
            }
        }
    }
    FockState::from_triplets(out_spec, &entries)
}

/// Heterodyne outcome `β` on `mode`: the unnormalised conditional state
/// `(I ⊗ ⟨β|) ρ (I ⊗ |β⟩) / π` and its trace, the outcome density.
///
/// `beta_tol` bounds the norm of `|β⟩` lost above the mode's cutoff.
pub fn project_coherent(rho: &FockState, mode: usize, beta: C64, beta_tol: f64) -> Result<(FockState, f64)> {
    rho.spec().check_mode(mode)?;
    let d = rho.spec().dims()[mode];
    let v = coherent_vector(beta, d);
    if v.deficit > beta_tol {
        return Err(Error::Truncation {
            what: "coherent projector",
            deficit: v.deficit,
            tol: beta_tol,
        });
    }
    let cond = project_onto(rho, mode, &v.amps)?.scaled(1.0 / PI);
    let density = cond.trace();
    Ok((cond, density))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, epr_state, thermal_state};

    #[test]
    fn vacuum_projection() {
        let s = TruncationSpec::single(6, 1e-6).unwrap();
        let vac = thermal_state(0.0, &s).unwrap();
        let both = vac.tensor(&vac).unwrap();
        let (cond, dens) = project_coherent(&both, 1, ZERO, 1e-9).unwrap();
        assert!((dens - 1.0 / PI).abs() < 1e-15);
        assert!((cond.entry(0, 0).re - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn epr_collapses_to_coherent() {
        let nbar = 0.5;
        let spec = TruncationSpec::new(vec![40, 40], 1e-6).unwrap();
        let epr = epr_state(nbar, &spec).unwrap();
        let lambda = (nbar / (nbar + 1.0)).sqrt();
        let beta = C64::new(0.7, -0.4);
        let (cond, dens) = project_coherent(&epr, 1, beta, 1e-9).unwrap();
        // B marginal is thermal, so the density is its Q function
        let q = (-beta.norm_sqr() / (nbar + 1.0)).exp() / (PI * (nbar + 1.0));
        assert!((dens - q).abs() < 1e-10);
        let expect = coherent_state(-lambda * beta.conj(), &TruncationSpec::single(40, 1e-6).unwrap()).unwrap();
        assert!(cond.scaled(1.0 / dens).max_abs_diff(&expect).unwrap() < 1e-10);
    }

    #[test]
    fn rejects_short_projector() {
        let spec = TruncationSpec::new(vec![4, 4], 1e-6).unwrap();
        let epr = epr_state(0.01, &spec).unwrap();
        assert!(project_coherent(&epr, 1, C64::new(3.0, 0.0), 1e-9).is_err());
        assert!(project_coherent(&epr, 2, ZERO, 1e-9).is_err());
    }
}
