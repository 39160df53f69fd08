use faer::Mat;
use num_complex::Complex64 as C64;

use super::FockState;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hermitian_eigenvalues, repair_spectrum, spectrum_entropy};

/// Eigen-decomposition of one block of a block-diagonal state.
#[derive(Clone, Debug)]
pub struct SpectralBlock {
    pub indices: Vec<usize>,
    /// Descending.
    pub values: Vec<f64>,
    /// Orthonormal columns, aligned with `values`.
    pub vectors: Mat<C64>,
}

/// Spectral decomposition of a density matrix, kept block-wise.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub dim: usize,
    pub blocks: Vec<SpectralBlock>,
}

impl SpectralDecomposition {
    /// All eigenvalues in descending order; unpopulated basis states add zeros.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.blocks.iter().flat_map(|b| b.values.iter().copied()).collect();
        v.resize(self.dim, 0.0);
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    /// Dense eigenvector matrix with columns ordered like `eigenvalues`.
    pub fn eigenvectors(&self) -> Mat<C64> {
        let mut cols: Vec<(f64, Vec<(usize, C64)>)> = Vec::with_capacity(self.dim);
        let mut covered = vec![false; self.dim];
        for b in &self.blocks {
            for (k, &val) in b.values.iter().enumerate() {
                let col = b.indices.iter().enumerate().map(|(p, &i)| (i, b.vectors[(p, k)])).collect();
                cols.push((val, col));
            }
            for &i in &b.indices {
                covered[i] = true;
            }
        }
        for (i, c) in covered.iter().enumerate() {
            if !c {
                cols.push((0.0, vec![(i, C64::new(1.0, 0.0))]));
            }
        }
        cols.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut m = Mat::<C64>::zeros(self.dim, self.dim);
        for (j, (_, col)) in cols.iter().enumerate() {
            for &(i, v) in col {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// `V Λ V†` as a dense matrix.
    pub fn reconstruct(&self) -> Mat<C64> {
        let mut m = Mat::<C64>::zeros(self.dim, self.dim);
        for b in &self.blocks {
            let n = b.indices.len();
            let scaled = Mat::<C64>::from_fn(n, n, |i, k| b.vectors[(i, k)] * b.values[k]);
            let local = &scaled * b.vectors.adjoint();
            for (q, &j) in b.indices.iter().enumerate() {
                for (p, &i) in b.indices.iter().enumerate() {
                    m[(i, j)] = local[(p, q)];
                }
            }
        }
        m
    }
}

pub fn spectral(rho: &FockState) -> Result<SpectralDecomposition> {
    let asym = rho.max_asymmetry();
    if asym > super::state::HERMITIAN_TOL {
        return Err(Error::NotHermitian(asym));
    }
    let blocks = rho
        .blocks()
        .iter()
        .map(|b| {
            let (values, vectors) = hermitian_eigen(b.matrix())?;
            Ok(SpectralBlock {
                indices: b.indices().to_vec(),
                values,
                vectors,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralDecomposition {
        dim: rho.spec().total_dim(),
        blocks,
    })
}

/// Populated eigenvalues of every block, unsorted and unrepaired.
pub(crate) fn raw_eigenvalues(rho: &FockState) -> Result<Vec<f64>> {
    let mut all = Vec::new();
    for b in rho.blocks() {
        if b.len() == 1 {
            all.push(b.matrix()[(0, 0)].re);
        } else {
            all.extend(hermitian_eigenvalues(b.matrix())?);
        }
    }
    Ok(all)
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &FockState) -> Result<f64> {
    let mut vals = raw_eigenvalues(rho)?;
    repair_spectrum(&mut vals)?;
    Ok(spectrum_entropy(&vals))
}
