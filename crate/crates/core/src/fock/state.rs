use std::collections::HashMap;

use faer::{Mat, MatRef};
use num_complex::Complex64 as C64;

use super::TruncationSpec;
use crate::error::{invalid, Error, Result};
use crate::linalg::{max_asymmetry, ZERO};

/// Hermiticity tolerance (max-norm) for matrices handed to `from_dense`.
pub const HERMITIAN_TOL: f64 = 1e-12;

const NONE: u32 = u32::MAX;

/// One diagonal block of a block-diagonal density matrix.
#[derive(Clone, Debug)]
pub struct Block {
    indices: Vec<usize>,
    matrix: Mat<C64>,
}

impl Block {
    /// Flattened basis indices spanned by the block, ascending.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn matrix(&self) -> MatRef<'_, C64> {
        self.matrix.as_ref()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// A ladder operator acting on one mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Lower(usize),
    Raise(usize),
}

/// Density matrix on a truncated multi-mode Fock space.
#[derive(Clone, Debug)]
pub struct FockState {
    spec: TruncationSpec,
    blocks: Vec<Block>,
    locator: Vec<(u32, u32)>,
    pure_hint: bool,
    deficit: f64,
}

struct UnionFind {
    parent: Vec<u32>,
    touched: Vec<bool>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            touched: vec![false; n],
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn touch(&mut self, i: usize) {
        self.touched[i] = true;
    }

    fn link(&mut self, i: usize, j: usize) {
        self.touched[i] = true;
        self.touched[j] = true;
        let (a, b) = (self.find(i as u32), self.find(j as u32));
        if a != b {
            // keep the smaller index as root so block order is stable
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            self.parent[hi as usize] = lo;
        }
    }

    fn into_layout(mut self) -> (Vec<Vec<usize>>, Vec<(u32, u32)>) {
        let n = self.parent.len();
        let mut block_of_root: HashMap<u32, u32> = HashMap::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut locator = vec![(NONE, NONE); n];
        for i in 0..n {
            if !self.touched[i] {
                continue;
            }
            let r = self.find(i as u32);
            let b = *block_of_root.entry(r).or_insert_with(|| {
                blocks.push(Vec::new());
                (blocks.len() - 1) as u32
            });
            locator[i] = (b, blocks[b as usize].len() as u32);
            blocks[b as usize].push(i);
        }
        (blocks, locator)
    }
}

struct Accumulator {
    indices: Vec<Vec<usize>>,
    locator: Vec<(u32, u32)>,
    mats: Vec<Mat<C64>>,
}

impl Accumulator {
    fn new(uf: UnionFind) -> Self {
        let (indices, locator) = uf.into_layout();
        let mats = indices.iter().map(|ix| Mat::zeros(ix.len(), ix.len())).collect();
        Self {
            indices,
            locator,
            mats,
        }
    }

    #[inline]
    fn add(&mut self, i: usize, j: usize, v: C64) {
        let (bi, pi) = self.locator[i];
        let (bj, pj) = self.locator[j];
        debug_assert!(bi == bj && bi != NONE);
        self.mats[bi as usize][(pi as usize, pj as usize)] += v;
    }

    fn finish(self, spec: TruncationSpec, pure_hint: bool, deficit: f64) -> FockState {
        let blocks = self
            .indices
            .into_iter()
            .zip(self.mats)
            .map(|(indices, mut matrix)| {
                hermitize(&mut matrix);
                Block { indices, matrix }
            })
            .collect();
        FockState {
            spec,
            blocks,
            locator: self.locator,
            pure_hint,
            deficit,
        }
    }
}

fn hermitize(m: &mut Mat<C64>) {
    let n = m.nrows();
    for j in 0..n {
        m[(j, j)].im = 0.0;
        for i in 0..j {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

impl FockState {
    /// Wraps a dense Hermitian matrix, discovering its block structure.
    pub fn from_dense(spec: TruncationSpec, m: MatRef<'_, C64>) -> Result<Self> {
        let n = spec.total_dim();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, truncation implies {n}",
                m.nrows(),
                m.ncols()
            )));
        }
        let asym = max_asymmetry(m);
        if asym > HERMITIAN_TOL {
            return Err(Error::NotHermitian(asym));
        }
        let mut uf = UnionFind::new(n);
        for j in 0..n {
            for i in 0..n {
                if m[(i, j)] != ZERO {
                    uf.link(i, j);
                }
            }
        }
        let mut acc = Accumulator::new(uf);
        for j in 0..n {
            for i in 0..n {
                let v = m[(i, j)];
                if v != ZERO {
                    acc.add(i, j, v);
                }
            }
        }
        Ok(acc.finish(spec, false, 0.0))
    }

    /// Builds a state from (row, col, value) entries; duplicates are summed.
    /// The entries must describe a Hermitian matrix.
    pub fn from_triplets(spec: TruncationSpec, entries: &[(usize, usize, C64)]) -> Result<Self> {
        let n = spec.total_dim();
        let mut uf = UnionFind::new(n);
        for &(i, j, v) in entries {
            if i >= n || j >= n {
                return Err(invalid(format!("entry ({i}, {j}) outside a {n}-dim space")));
            }
            if v != ZERO {
                uf.link(i, j);
            }
        }
        let mut acc = Accumulator::new(uf);
        for &(i, j, v) in entries {
            if v != ZERO {
                acc.add(i, j, v);
            }
        }
        Ok(acc.finish(spec, false, 0.0))
    }

    /// Diagonal state; each populated level is its own block.
    pub fn from_diagonal(spec: TruncationSpec, diag: &[f64]) -> Result<Self> {
        let n = spec.total_dim();
        if diag.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} diagonal entries for a {n}-dim space",
                diag.len()
            )));
        }
        let mut uf = UnionFind::new(n);
        for (i, &p) in diag.iter().enumerate() {
            if p != 0.0 {
                uf.touch(i);
            }
        }
        let mut acc = Accumulator::new(uf);
        for (i, &p) in diag.iter().enumerate() {
            if p != 0.0 {
                acc.add(i, i, C64::new(p, 0.0));
            }
        }
        Ok(acc.finish(spec, false, 0.0))
    }

    /// |ψ⟩⟨ψ| for an amplitude vector over the full product basis.
    pub fn from_pure(spec: TruncationSpec, amps: &[C64]) -> Result<Self> {
        let n = spec.total_dim();
        if amps.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for a {n}-dim space",
                amps.len()
            )));
        }
        let support: Vec<usize> = (0..n).filter(|&i| amps[i] != ZERO).collect();
        let mut locator = vec![(NONE, NONE); n];
        for (p, &i) in support.iter().enumerate() {
            locator[i] = (0, p as u32);
        }
        let k = support.len();
        let matrix = Mat::from_fn(k, k, |p, q| amps[support[p]] * amps[support[q]].conj());
        let blocks = if k == 0 {
            Vec::new()
        } else {
            vec![Block {
                indices: support,
                matrix,
            }]
        };
        Ok(Self {
            spec,
            blocks,
            locator,
            pure_hint: true,
            deficit: 0.0,
        })
    }

    /// Assembles a state from disjoint blocks.
    pub fn from_blocks(spec: TruncationSpec, blocks: Vec<(Vec<usize>, Mat<C64>)>) -> Result<Self> {
        let n = spec.total_dim();
        let mut locator = vec![(NONE, NONE); n];
        let mut out = Vec::with_capacity(blocks.len());
        for (b, (indices, matrix)) in blocks.into_iter().enumerate() {
            if matrix.nrows() != indices.len() || matrix.ncols() != indices.len() {
                return Err(Error::DimensionMismatch("block matrix vs index list".into()));
            }
            for (p, &i) in indices.iter().enumerate() {
                if i >= n || locator[i].0 != NONE {
                    return Err(invalid(format!("block index {i} invalid or repeated")));
                }
                locator[i] = (b as u32, p as u32);
            }
            out.push(Block { indices, matrix });
        }
        Ok(Self {
            spec,
            blocks: out,
            locator,
            pure_hint: false,
            deficit: 0.0,
        })
    }

    pub(crate) fn with_meta(mut self, pure_hint: bool, deficit: f64) -> Self {
        self.pure_hint = pure_hint;
        self.deficit = deficit;
        self
    }

    pub fn spec(&self) -> &TruncationSpec {
        &self.spec
    }

    pub fn dims(&self) -> &[usize] {
        self.spec.dims()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// True when the state was built as a pure state.
    pub fn is_pure_hint(&self) -> bool {
        self.pure_hint
    }

    /// Probability mass lost to truncation when the state was constructed.
    pub fn deficit(&self) -> f64 {
        self.deficit
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        let (bi, pi) = self.locator[i];
        let (bj, pj) = self.locator[j];
        if bi == NONE || bi != bj {
            return ZERO;
        }
        self.blocks[bi as usize].matrix[(pi as usize, pj as usize)]
    }

    /// Dense copy of the full matrix. Only sensible for small spaces.
    pub fn to_dense(&self) -> Mat<C64> {
        let n = self.spec.total_dim();
        let mut m = Mat::zeros(n, n);
        for b in &self.blocks {
            for (q, &j) in b.indices.iter().enumerate() {
                for (p, &i) in b.indices.iter().enumerate() {
                    m[(i, j)] = b.matrix[(p, q)];
                }
            }
        }
        m
    }

    pub fn trace(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| (0..b.len()).map(|p| b.matrix[(p, p)].re).sum::<f64>())
            .sum()
    }

    /// Tr ρ².
    pub fn purity(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let mut s = 0.0;
                for q in 0..b.len() {
                    for p in 0..b.len() {
                        s += b.matrix[(p, q)].norm_sqr();
                    }
                }
                s
            })
            .sum()
    }

    pub fn max_asymmetry(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| max_asymmetry(b.matrix.as_ref()))
            .fold(0.0, f64::max)
    }

    /// Multiplies every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for b in &mut out.blocks {
            for q in 0..b.len() {
                for p in 0..b.len() {
                    b.matrix[(p, q)] *= factor;
                }
            }
        }
        out
    }

    /// The state divided by its trace.
    pub fn renormalized(&self) -> Result<Self> {
        let t = self.trace();
        if t <= 0.0 {
            return Err(invalid("cannot renormalise a state with zero trace"));
        }
        Ok(self.scaled(1.0 / t))
    }

    /// Convex (or any real linear) combination of states on the same space.
    pub fn combine(terms: &[(f64, &FockState)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| invalid("empty combination"))?
            .1;
        let spec = first.spec.clone();
        for (_, s) in terms {
            if s.spec.dims() != spec.dims() {
                return Err(Error::DimensionMismatch("combining states on different spaces".into()));
            }
        }
        let mut uf = UnionFind::new(spec.total_dim());
        for (w, s) in terms {
            if *w == 0.0 {
                continue;
            }
            for b in &s.blocks {
                let head = b.indices[0];
                uf.touch(head);
                for &i in &b.indices[1..] {
                    uf.link(head, i);
                }
            }
        }
        let mut acc = Accumulator::new(uf);
        for (w, s) in terms {
            if *w == 0.0 {
                continue;
            }
            for b in &s.blocks {
                for (q, &j) in b.indices.iter().enumerate() {
                    for (p, &i) in b.indices.iter().enumerate() {
                        acc.add(i, j, b.matrix[(p, q)] * *w);
                    }
                }
            }
        }
        let deficit = terms.iter().map(|(w, s)| w.abs() * s.deficit).sum();
        Ok(acc.finish(spec, false, deficit))
    }

    /// Kronecker product `self ⊗ other` with concatenated modes.
    pub fn tensor(&self, other: &FockState) -> Result<Self> {
        let mut dims = self.spec.dims().to_vec();
        dims.extend_from_slice(other.spec.dims());
        let tol = self.spec.trace_tol().max(other.spec.trace_tol());
        let spec = TruncationSpec::new(dims, tol)?;
        let db = other.spec.total_dim();
        let mut blocks = Vec::with_capacity(self.blocks.len() * other.blocks.len());
        for a in &self.blocks {
            for b in &other.blocks {
                let (na, nb) = (a.len(), b.len());
                let indices: Vec<usize> = a
                    .indices
                    .iter()
                    .flat_map(|&i| b.indices.iter().map(move |&j| i * db + j))
                    .collect();
                let matrix = Mat::from_fn(na * nb, na * nb, |r, c| {
                    a.matrix[(r / nb, c / nb)] * b.matrix[(r % nb, c % nb)]
                });
                blocks.push((indices, matrix));
            }
        }
        let deficit = 1.0 - (1.0 - self.deficit) * (1.0 - other.deficit);
        Ok(Self::from_blocks(spec, blocks)?.with_meta(self.pure_hint && other.pure_hint, deficit))
    }

    /// Reduced state on the modes in `keep` (in the given order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(invalid("partial trace must keep at least one mode"));
        }
        let m = self.spec.modes();
        let mut seen = vec![false; m];
        for &k in keep {
            self.spec.check_mode(k)?;
            if seen[k] {
                return Err(invalid(format!("mode {k} listed twice")));
            }
            seen[k] = true;
        }
        let discard: Vec<usize> = (0..m).filter(|k| !seen[*k]).collect();
        let kept_dims: Vec<usize> = keep.iter().map(|&k| self.spec.dims()[k]).collect();
        let out_spec = TruncationSpec::new(kept_dims, self.spec.trace_tol())?;
        let out_strides = out_spec.strides();
        let strides = self.spec.strides();

        let mut entries = Vec::new();
        for b in &self.blocks {
            // group block positions by their discarded occupations
            let mut groups: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
            for (p, &i) in b.indices.iter().enumerate() {
                let mut key = 0usize;
                for &k in &discard {
                    key = key * self.spec.dims()[k] + self.spec.occupation(i, k, &strides);
                }
                let kept: usize = keep
                    .iter()
                    .zip(&out_strides)
                    .map(|(&k, s)| self.spec.occupation(i, k, &strides) * s)
                    .sum();
                groups.entry(key).or_default().push((p, kept));
            }
            for members in groups.values() {
                for &(q, kj) in members {
                    for &(p, ki) in members {
                        entries.push((ki, kj, b.matrix[(p, q)]));
                    }
                }
            }
        }
        Ok(Self::from_triplets(out_spec, &entries)?.with_meta(false, self.deficit))
    }

    /// Tr(ρ · O) for a product of ladder operators, applied right to left.
    pub fn expect(&self, ops: &[Ladder]) -> C64 {
        let strides = self.spec.strides();
        let dims = self.spec.dims();
        let mut total = ZERO;
        for b in &self.blocks {
            for (p, &r) in b.indices.iter().enumerate() {
                let mut idx = r;
                let mut coef = 1.0;
                let mut alive = true;
                for op in ops.iter().rev() {
                    match *op {
                        Ladder::Lower(k) => {
                            let n = (idx / strides[k]) % dims[k];
                            if n == 0 {
                                alive = false;
                                break;
                            }
                            coef *= (n as f64).sqrt();
                            idx -= strides[k];
                        }
                        Ladder::Raise(k) => {
                            let n = (idx / strides[k]) % dims[k];
                            if n + 1 >= dims[k] {
                                alive = false;
                                break;
                            }
                            coef *= ((n + 1) as f64).sqrt();
                            idx += strides[k];
                        }
                    }
                }
                if !alive {
                    continue;
                }
                // ⟨c|O|r⟩ = coef δ_{c,idx}; contributes ρ_{r,idx}
                let (bt, pt) = self.locator[idx];
                if bt == NONE || self.blocks[bt as usize].indices[0] != b.indices[0] {
                    continue;
                }
                total += b.matrix[(p, pt as usize)] * coef;
            }
        }
        total
    }

    pub fn mean_photons(&self, mode: usize) -> f64 {
        self.expect(&[Ladder::Raise(mode), Ladder::Lower(mode)]).re
    }

    /// Σ_k n_k over all modes.
    pub fn total_photons(&self) -> f64 {
        (0..self.spec.modes()).map(|k| self.mean_photons(k)).sum()
    }

    /// Largest |ρ_ij − σ_ij| over the union of both supports.
    pub fn max_abs_diff(&self, other: &FockState) -> Result<f64> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch("comparing states on different spaces".into()));
        }
        let mut worst = 0.0f64;
        for (s, o) in [(self, other), (other, self)] {
            for b in &s.blocks {
                for (q, &j) in b.indices.iter().enumerate() {
                    for (p, &i) in b.indices.iter().enumerate() {
                        worst = worst.max((b.matrix[(p, q)] - o.entry(i, j)).norm());
                    }
                }
            }
        }
        Ok(worst)
    }
}

/// Common block partition of several states on the same space, with each
/// state's restriction to every joint block as a dense matrix.
pub struct JointBlocks {
    pub indices: Vec<Vec<usize>>,
    /// `mats[s][b]` is state `s` restricted to joint block `b`.
    pub mats: Vec<Vec<Mat<C64>>>,
}

impl JointBlocks {
    pub fn new(states: &[&FockState]) -> Result<Self> {
        let first = states.first().ok_or_else(|| invalid("no states"))?;
        let spec = first.spec();
        for s in states {
            if s.dims() != spec.dims() {
                return Err(Error::DimensionMismatch("joint blocks need a common space".into()));
            }
        }
        let mut uf = UnionFind::new(spec.total_dim());
        for s in states {
            for b in &s.blocks {
                let head = b.indices[0];
                uf.touch(head);
                for &i in &b.indices[1..] {
                    uf.link(head, i);
                }
            }
        }
        let (indices, locator) = uf.into_layout();
        let mats = states
            .iter()
            .map(|s| {
                let mut mats: Vec<Mat<C64>> =
                    indices.iter().map(|ix| Mat::zeros(ix.len(), ix.len())).collect();
                for b in &s.blocks {
                    let jb = locator[b.indices[0]].0 as usize;
                    for (q, &j) in b.indices.iter().enumerate() {
                        let pj = locator[j].1 as usize;
                        for (p, &i) in b.indices.iter().enumerate() {
                            mats[jb][(locator[i].1 as usize, pj)] = b.matrix[(p, q)];
                        }
                    }
                }
                mats
            })
            .collect();
        Ok(Self { indices, mats })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}
