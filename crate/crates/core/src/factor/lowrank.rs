//! Low-rank blocks `V Uᵀ` and the randomized range finder that builds them from
//! products with the exact block and its transpose.

use crate::dense::{gaussian_matrix, matmul, matmul_nt, matmul_tn, orthonormalize, DenseMatrix};
use crate::error::FactorError;

/// `V Uᵀ` with orthonormal `U`; `V` has one row per block row and `U` one row per block column.
#[derive(Clone, Debug, PartialEq)]
pub struct LowRankBlock {
    pub v: DenseMatrix,
    pub u: DenseMatrix,
    /// `Uᵀ U`, kept so products through two blocks avoid touching `U` again.
    pub u_prod: DenseMatrix,
}

impl LowRankBlock {
    pub fn new(v: DenseMatrix, u: DenseMatrix) -> Self {
        assert_eq!(v.ncols(), u.ncols(), "factor ranks differ");
        let u_prod = matmul_tn(&u, &u);
        Self { v, u, u_prod }
    }

    pub fn rank(&self) -> usize {
        self.v.ncols()
    }

    pub fn nrows(&self) -> usize {
        self.v.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.u.nrows()
    }

    pub fn stored_scalars(&self) -> usize {
        (self.v.nrows() + self.u.nrows()) * self.rank()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        matmul_nt(&self.v, &self.u)
    }

    /// `V Uᵀ G`
    pub fn apply(&self, g: &DenseMatrix) -> DenseMatrix {
        matmul(&self.v, &matmul_tn(&self.u, g))
    }

    /// `U Vᵀ G`
    pub fn apply_trans(&self, g: &DenseMatrix) -> DenseMatrix {
        matmul(&self.u, &matmul_tn(&self.v, g))
    }
}

/// Rank used for an `m x n` block: `ceil(alpha sqrt(k) log2 k) + oversample` with
/// `k = min(m, n)`, capped at `k`.
pub fn block_rank(m: usize, n: usize, alpha: f64, oversample: usize) -> usize {
    let k = m.min(n);
    if k == 0 {
        return 0;
    }
    let kf = k as f64;
    let base = (alpha * kf.sqrt() * kf.log2()).ceil().max(0.0) as usize;
    (base + oversample).min(k)
}

/// A block known only through products with itself and its transpose.
pub trait BlockOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `B G` for `G` with `ncols()` rows.
    fn apply(&self, g: &DenseMatrix) -> Result<DenseMatrix, FactorError>;
    /// `Bᵀ G` for `G` with `nrows()` rows.
    fn apply_trans(&self, g: &DenseMatrix) -> Result<DenseMatrix, FactorError>;
}

/// Explicitly stored block, useful for testing the range finder.
pub struct DenseOperator<'a>(pub &'a DenseMatrix);

impl BlockOperator for DenseOperator<'_> {
    fn nrows(&self) -> usize {
        self.0.nrows()
    }

    fn ncols(&self) -> usize {
        self.0.ncols()
    }

    fn apply(&self, g: &DenseMatrix) -> Result<DenseMatrix, FactorError> {
        Ok(matmul(self.0, g))
    }

    fn apply_trans(&self, g: &DenseMatrix) -> Result<DenseMatrix, FactorError> {
        Ok(matmul_tn(self.0, g))
    }
}

/// Randomized approximation `B ≈ V Uᵀ` of target rank `rank`.
///
/// A Gaussian sketch is pulled through `Bᵀ`, refined by `power_iters` rounds of
/// `Bᵀ B`, orthonormalized into `U`, and `V = B U`. Dependent sketch columns are
/// dropped, so the returned rank can be smaller than requested.
pub fn randomized_low_rank(op: &dyn BlockOperator, rank: usize, power_iters: usize, seed: u64) -> Result<LowRankBlock, FactorError> {
    let s = rank.min(op.nrows()).min(op.ncols());
    if s == 0 {
        return Ok(LowRankBlock::new(DenseMatrix::zeros(op.nrows(), 0), DenseMatrix::zeros(op.ncols(), 0)));
    }
    let omega = gaussian_matrix(op.nrows(), s, seed);
    let mut g = op.apply_trans(&omega)?;
    for _ in 0..power_iters {
        let y = op.apply(&g)?;
        g = op.apply_trans(&y)?;
    }
    let u = orthonormalize(&g);
    let v = op.apply(&u)?;
    Ok(LowRankBlock::new(v, u))
}
