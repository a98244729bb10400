use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::SdpError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Psd,
    Diag,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub size: usize,
    pub kind: BlockKind,
}

/// Symmetric sparse matrix stored as its upper triangle `(i, j, v)` with `i <= j`, 0-based,
/// sorted row-major, no duplicates and no explicit zeros. Diagonal blocks only use `i == j`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseSym {
    entries: Vec<(u32, u32, f64)>,
}

impl SparseSym {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds from arbitrary triplets; lower-triangle entries are mirrored to the upper
    /// triangle and duplicates summed.
    pub fn from_triplets<I: IntoIterator<Item = (usize, usize, f64)>>(it: I) -> Self {
        let mut e: Vec<(u32, u32, f64)> = it
            .into_iter()
            .map(|(i, j, v)| {
                let (i, j) = if i <= j { (i, j) } else { (j, i) };
                (i as u32, j as u32, v)
            })
            .collect();
        e.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut out: Vec<(u32, u32, f64)> = Vec::with_capacity(e.len());
        for (i, j, v) in e {
            match out.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => out.push((i, j, v)),
            }
        }
        out.retain(|t| t.2 != 0.0);
        Self { entries: out }
    }

    /// Drops entries with `|v| <= tol · max|v|`.
    pub fn pruned(mut self, tol: f64) -> Self {
        let mx = self.entries.iter().fold(0.0f64, |a, e| a.max(e.2.abs()));
        self.entries.retain(|e| e.2.abs() > tol * mx);
        self
    }

    pub fn entries(&self) -> &[(u32, u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.iter().map(|e| e.1 as usize).max()
    }

    pub fn scale(&self, c: f64) -> SparseSym {
        SparseSym::from_triplets(self.entries.iter().map(|&(i, j, v)| (i as usize, j as usize, v * c)))
    }

    /// Sorted distinct row/column indices touched by the matrix.
    pub fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self
            .entries
            .iter()
            .flat_map(|&(i, j, _)| [i as usize, j as usize])
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn to_dense(&self, n: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        for &(i, j, v) in &self.entries {
            m[(i as usize, j as usize)] = v;
            m[(j as usize, i as usize)] = v;
        }
        m
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self, SdpError> {
        let asym = (m - m.transpose()).abs().max();
        if asym > 0.0 {
            return Err(SdpError::NotSymmetric(asym));
        }
        let n = m.nrows();
        let mut t = Vec::new();
        for i in 0..n {
            for j in i..n {
                if m[(i, j)] != 0.0 {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Ok(Self::from_triplets(t))
    }

    /// `⟨A, X⟩` against a block value.
    pub fn dot(&self, x: &BlockMat) -> f64 {
        match x {
            BlockMat::Dense(m) => self
                .entries
                .iter()
                .map(|&(i, j, v)| {
                    let (i, j) = (i as usize, j as usize);
                    if i == j {
                        v * m[(i, i)]
                    } else {
                        2.0 * v * m[(i, j)]
                    }
                })
                .sum(),
            BlockMat::Diag(d) => self
                .entries
                .iter()
                .filter(|e| e.0 == e.1)
                .map(|&(i, _, v)| v * d[i as usize])
                .sum(),
        }
    }

    /// `x += c·A`.
    pub fn add_to(&self, x: &mut BlockMat, c: f64) {
        match x {
            BlockMat::Dense(m) => {
                for &(i, j, v) in &self.entries {
                    let (i, j) = (i as usize, j as usize);
                    m[(i, j)] += c * v;
                    if i != j {
                        m[(j, i)] += c * v;
                    }
                }
            }
            BlockMat::Diag(d) => {
                for &(i, j, v) in &self.entries {
                    if i == j {
                        d[i as usize] += c * v;
                    }
                }
            }
        }
    }
}

/// Dense value of one block: a full symmetric matrix or the diagonal of a diagonal block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum BlockMat {
    Dense(DMatrix<f64>),
    Diag(DVector<f64>),
}

impl BlockMat {
    pub fn zeros(b: &BlockSpec) -> Self {
        match b.kind {
            BlockKind::Psd => BlockMat::Dense(DMatrix::zeros(b.size, b.size)),
            BlockKind::Diag => BlockMat::Diag(DVector::zeros(b.size)),
        }
    }

    pub fn identity(b: &BlockSpec) -> Self {
        match b.kind {
            BlockKind::Psd => BlockMat::Dense(DMatrix::identity(b.size, b.size)),
            BlockKind::Diag => BlockMat::Diag(DVector::from_element(b.size, 1.0)),
        }
    }

    pub fn inner(&self, o: &BlockMat) -> f64 {
        match (self, o) {
            (BlockMat::Dense(a), BlockMat::Dense(b)) => a.dot(b),
            (BlockMat::Diag(a), BlockMat::Diag(b)) => a.dot(b),
            _ => panic!("block kinds differ"),
        }
    }

    pub fn axpy(&mut self, c: f64, o: &BlockMat) {
        match (self, o) {
            (BlockMat::Dense(a), BlockMat::Dense(b)) => a.zip_apply(b, |x, y| *x += c * y),
            (BlockMat::Diag(a), BlockMat::Diag(b)) => a.axpy(c, b, 1.0),
            _ => panic!("block kinds differ"),
        }
    }

    pub fn scale_mut(&mut self, c: f64) {
        match self {
            BlockMat::Dense(a) => *a *= c,
            BlockMat::Diag(a) => *a *= c,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            BlockMat::Dense(a) => a.iter().all(|v| v.is_finite()),
            BlockMat::Diag(a) => a.iter().all(|v| v.is_finite()),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        match self {
            BlockMat::Dense(a) => a.norm_squared(),
            BlockMat::Diag(a) => a.norm_squared(),
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            BlockMat::Dense(a) => a.trace(),
            BlockMat::Diag(a) => a.sum(),
        }
    }

    /// Smallest eigenvalue (smallest entry for diagonal blocks).
    pub fn min_eigenvalue(&self) -> f64 {
        match self {
            BlockMat::Dense(a) if a.nrows() == 0 => f64::INFINITY,
            BlockMat::Dense(a) => a.clone().symmetric_eigenvalues().min(),
            BlockMat::Diag(a) if a.is_empty() => f64::INFINITY,
            BlockMat::Diag(a) => a.min(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            BlockMat::Dense(a) => a.clone(),
            BlockMat::Diag(d) => DMatrix::from_diagonal(d),
        }
    }
}

/// One equality constraint `Σ_k ⟨A_k, X_k⟩ = b_i` given by its nonzero blocks.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub parts: Vec<(usize, SparseSym)>,
}

/// Block-structured SDP in the standard primal/dual pair
///
/// `(P) min ⟨C, X⟩ s.t. ⟨A_i, X⟩ = b_i, X ⪰ 0` and `(D) max bᵀy s.t. C − Σ y_i A_i = S ⪰ 0`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConicSdp {
    pub blocks: Vec<BlockSpec>,
    /// Objective matrix per block.
    pub c: Vec<SparseSym>,
    pub constraints: Vec<Constraint>,
    pub b: Vec<f64>,
}

impl ConicSdp {
    pub fn new(blocks: Vec<BlockSpec>) -> Self {
        let c = vec![SparseSym::new(); blocks.len()];
        Self {
            blocks,
            c,
            constraints: Vec::new(),
            b: Vec::new(),
        }
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn add_constraint(&mut self, parts: Vec<(usize, SparseSym)>, b: f64) {
        let mut parts: Vec<(usize, SparseSym)> = parts.into_iter().filter(|p| !p.1.is_empty()).collect();
        parts.sort_by_key(|p| p.0);
        self.constraints.push(Constraint { parts });
        self.b.push(b);
    }

    /// Total cone dimension (sum of block orders).
    pub fn cone_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.size).sum()
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        if self.c.len() != self.blocks.len() {
            return Err(SdpError::Dimension(format!(
                "{} objective blocks for {} cone blocks",
                self.c.len(),
                self.blocks.len()
            )));
        }
        if self.b.len() != self.constraints.len() {
            return Err(SdpError::Dimension(format!(
                "{} right-hand sides for {} constraints",
                self.b.len(),
                self.constraints.len()
            )));
        }
        let check = |blk: usize, m: &SparseSym| -> Result<(), SdpError> {
            let spec = self
                .blocks
                .get(blk)
                .ok_or_else(|| SdpError::Dimension(format!("block {blk} does not exist")))?;
            if spec.size == 0 {
                return Err(SdpError::Dimension(format!("block {blk} has size 0")));
            }
            if let Some(mx) = m.max_index() {
                if mx >= spec.size {
                    return Err(SdpError::Dimension(format!(
                        "index {mx} outside block {blk} of size {}",
                        spec.size
                    )));
                }
            }
            if spec.kind == BlockKind::Diag && m.entries().iter().any(|e| e.0 != e.1) {
                return Err(SdpError::Dimension(format!(
                    "off-diagonal entry in diagonal block {blk}"
                )));
            }
            Ok(())
        };
        for (k, m) in self.c.iter().enumerate() {
            check(k, m)?;
        }
        for con in &self.constraints {
            for (k, m) in &con.parts {
                check(*k, m)?;
            }
        }
        if self.b.iter().any(|v| !v.is_finite()) {
            return Err(SdpError::Dimension("non-finite right-hand side".into()));
        }
        Ok(())
    }

    /// `A(X)_i = Σ_k ⟨A_ik, X_k⟩`.
    pub fn apply(&self, x: &[BlockMat]) -> DVector<f64> {
        DVector::from_iterator(
            self.constraints.len(),
            self.constraints
                .iter()
                .map(|c| c.parts.iter().map(|(k, a)| a.dot(&x[*k])).sum::<f64>()),
        )
    }

    /// `Σ_i y_i A_i` per block.
    pub fn apply_adjoint(&self, y: &DVector<f64>) -> Vec<BlockMat> {
        let mut out: Vec<BlockMat> = self.blocks.iter().map(BlockMat::zeros).collect();
        for (i, c) in self.constraints.iter().enumerate() {
            if y[i] == 0.0 {
                continue;
            }
            for (k, a) in &c.parts {
                a.add_to(&mut out[*k], y[i]);
            }
        }
        out
    }

    pub fn objective_blocks(&self) -> Vec<BlockMat> {
        let mut out: Vec<BlockMat> = self.blocks.iter().map(BlockMat::zeros).collect();
        for (k, c) in self.c.iter().enumerate() {
            c.add_to(&mut out[k], 1.0);
        }
        out
    }

    pub fn primal_objective(&self, x: &[BlockMat]) -> f64 {
        self.c.iter().zip(x).map(|(c, xk)| c.dot(xk)).sum()
    }
}
