//! Truncated Fock-space state engine.
//!
//! States are stored as Hermitian matrices over the product basis
//! `|n_0, n_1, ...⟩` (row-major, mode 0 slowest). The matrix is kept in
//! block-diagonal form: every state carries the finest partition of basis
//! indices into mutually decoupled blocks that its sparsity pattern allows.
//! Phase-covariant two-mode states therefore decompose into small
//! photon-number-difference sectors without any special casing.

mod beamsplitter;
mod constructors;
mod projection;
mod spectral;
mod state;

pub use beamsplitter::{apply_beamsplitter, beamsplitter_block, ThermalLossChannel};
pub use constructors::{
    coherent_state, coherent_vector, displacement_matrix, epr_state, squeeze_matrix,
    squeezed_coherent_state, squeezed_coherent_vector, thermal_state, PureState,
};
pub use projection::{project_coherent, project_onto};
pub use spectral::{spectral, von_neumann_entropy, SpectralBlock, SpectralDecomposition};
pub use state::{Block, FockState, JointBlocks, Ladder};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default admissible trace deficit for constructors.
pub const DEFAULT_TRACE_TOL: f64 = 1e-6;

/// Upper bound on the product dimension of any state.
pub const MAX_TOTAL_DIM: usize = 1 << 24;

/// Per-mode Fock cutoffs together with the admissible trace deficit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationSpec {
    dims: Vec<usize>,
    trace_tol: f64,
}

impl TruncationSpec {
    pub fn new(dims: Vec<usize>, trace_tol: f64) -> Result<Self> {
        if dims.is_empty() {
            return Err(invalid("a truncation needs at least one mode"));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(invalid(format!("every mode needs dim >= 2, got {d}")));
        }
        if !(0.0..1.0).contains(&trace_tol) {
            return Err(invalid(format!("trace_tol must lie in [0, 1), got {trace_tol}")));
        }
        let total = dims.iter().try_fold(1u128, |acc, &d| acc.checked_mul(d as u128));
        match total {
            Some(t) if t <= MAX_TOTAL_DIM as u128 => {}
            Some(t) => return Err(Error::DimensionOverflow(t)),
            None => return Err(Error::DimensionOverflow(u128::MAX)),
        }
        Ok(Self { dims, trace_tol })
    }

    pub fn single(d: usize, trace_tol: f64) -> Result<Self> {
        Self::new(vec![d], trace_tol)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn modes(&self) -> usize {
        self.dims.len()
    }

    pub fn trace_tol(&self) -> f64 {
        self.trace_tol
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn with_trace_tol(&self, trace_tol: f64) -> Result<Self> {
        Self::new(self.dims.clone(), trace_tol)
    }

    /// Stride of each mode in the flattened index.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.dims[k + 1];
        }
        s
    }

    /// Occupation of `mode` in the flattened basis index `idx`.
    #[inline]
    pub fn occupation(&self, idx: usize, mode: usize, strides: &[usize]) -> usize {
        (idx / strides[mode]) % self.dims[mode]
    }

    pub fn decode(&self, idx: usize) -> Vec<usize> {
        let strides = self.strides();
        (0..self.dims.len()).map(|k| self.occupation(idx, k, &strides)).collect()
    }

    pub fn encode(&self, occ: &[usize]) -> usize {
        let strides = self.strides();
        occ.iter().zip(&strides).map(|(n, s)| n * s).sum()
    }

    pub(crate) fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.dims.len() {
            return Err(invalid(format!(
                "mode {mode} out of range for a {}-mode state",
                self.dims.len()
            )));
        }
        Ok(())
    }

    pub(crate) fn check_deficit(&self, what: &'static str, deficit: f64) -> Result<()> {
        if deficit > self.trace_tol {
            return Err(Error::Truncation {
                what,
                deficit,
                tol: self.trace_tol,
            });
        }
        Ok(())
    }
}

/// Initial cutoff for a mode whose populations fall off like a thermal state
/// with mean photon number `nbar_eff`.
pub fn initial_dim(nbar_eff: f64) -> usize {
    (12.0 + 10.0 * nbar_eff.max(0.0)).ceil() as usize
}

/// Smallest cutoff leaving less than `tail` thermal weight above it.
pub fn thermal_dim(nbar: f64, tail: f64) -> usize {
    if nbar <= 0.0 {
        return 2;
    }
    let q = nbar / (nbar + 1.0);
    ((tail.ln() / q.ln()).ceil() as usize).max(2)
}

/// Smallest cutoff leaving less than `tail` Poisson weight above it.
pub fn poisson_dim(mean: f64, tail: f64) -> usize {
    let mean = mean.max(0.0);
    let mut p = (-mean).exp();
    let mut acc = p;
    let mut n = 0usize;
    while 1.0 - acc > tail && n < 100_000 {
        n += 1;
        p *= mean / n as f64;
        acc += p;
        if p < f64::MIN_POSITIVE && n as f64 > mean {
            break;
        }
    }
    (n + 2).max(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        assert!(TruncationSpec::new(vec![1], 0.0).is_err());
        assert!(TruncationSpec::new(vec![], 0.0).is_err());
        assert!(TruncationSpec::new(vec![4], 1.0).is_err());
        assert!(matches!(
            TruncationSpec::new(vec![1 << 13; 3], 0.0),
            Err(Error::DimensionOverflow(_))
        ));
        let s = TruncationSpec::new(vec![3, 4, 5], 1e-6).unwrap();
        assert_eq!(s.strides(), vec![20, 5, 1]);
        assert_eq!(s.decode(s.encode(&[2, 1, 3])), vec![2, 1, 3]);
    }

    #[test]
    fn dim_rules() {
        assert_eq!(initial_dim(0.0), 12);
        assert_eq!(initial_dim(4.44), 57);
        let d = poisson_dim(0.5, 1e-12);
        let mut p = (-0.5f64).exp();
        let mut kept = 0.0;
        for k in 0..d {
            if k > 0 {
                p *= 0.5 / k as f64;
            }
            kept += p;
        }
        assert!(1.0 - kept < 1e-12);
        assert!(d < 20);
    }
}
