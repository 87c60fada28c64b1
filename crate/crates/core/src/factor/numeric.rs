//! Left-looking supernodal factorization with optional compression of separator blocks.
//!
//! Supernode `j` owns columns `C_j` and the rows `R_j` below its diagonal block. A
//! descendant is either an earlier supernode with an explicit (dense or low-rank)
//! off-diagonal block, or a whole interior block whose off-diagonal rows are never
//! stored and are recomputed from the matrix and the block's own exact factor.

use std::ops::Range;
use std::sync::Arc;

use super::lowrank::{block_rank, randomized_low_rank, BlockOperator, LowRankBlock};
use crate::dense::{cholesky, derive_seed, matmul, matmul_nt, matmul_tn, tri_solve, tri_solve_in_place, DenseMatrix, Side};
use crate::diag::DiagBlockTree;
use crate::error::{DenseError, FactorError};
use crate::interior::InteriorBlock;
use crate::ordering::BlockTreeShape;
use crate::sparse::SparseSpdMatrix;
use crate::symbolic::Symbolic;

/// Factor of the diagonal block of a supernode.
#[derive(Clone, Debug)]
pub enum DiagFactor {
    Dense(DenseMatrix),
    Tree(DiagBlockTree),
}

/// Off-diagonal block `L(R_j, C_j)`.
#[derive(Clone, Debug)]
pub enum OffDiagFactor {
    Dense(DenseMatrix),
    LowRank(LowRankBlock),
}

impl OffDiagFactor {
    pub fn nrows(&self) -> usize {
        match self {
            Self::Dense(d) => d.nrows(),
            Self::LowRank(l) => l.nrows(),
        }
    }

    pub fn stored_scalars(&self) -> usize {
        match self {
            Self::Dense(d) => d.nrows() * d.ncols(),
            Self::LowRank(l) => l.stored_scalars(),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            Self::Dense(d) => d.clone(),
            Self::LowRank(l) => l.to_dense(),
        }
    }

    /// `B G`
    pub fn apply(&self, g: &DenseMatrix) -> DenseMatrix {
        match self {
            Self::Dense(d) => matmul(d, g),
            Self::LowRank(l) => l.apply(g),
        }
    }

    /// `Bᵀ G`
    pub fn apply_trans(&self, g: &DenseMatrix) -> DenseMatrix {
        match self {
            Self::Dense(d) => matmul_tn(d, g),
            Self::LowRank(l) => l.apply_trans(g),
        }
    }

    /// `B(rows_a, :) B(rows_b, :)ᵀ`
    pub(crate) fn outer(&self, rows_a: &[usize], rows_b: &[usize]) -> DenseMatrix {
        match self {
            Self::Dense(d) => matmul_nt(&d.select_rows(rows_a), &d.select_rows(rows_b)),
            Self::LowRank(l) => {
                let va = l.v.select_rows(rows_a);
                let vb = l.v.select_rows(rows_b);
                matmul_nt(&matmul(&va, &l.u_prod), &vb)
            }
        }
    }

    /// `B(rows_a, :) B(rows_b, :)ᵀ G`
    pub(crate) fn outer_apply(&self, rows_a: &[usize], rows_b: &[usize], g: &DenseMatrix) -> DenseMatrix {
        match self {
            Self::Dense(d) => {
                let t = matmul_tn(&d.select_rows(rows_b), g);
                matmul(&d.select_rows(rows_a), &t)
            }
            Self::LowRank(l) => {
                let t = matmul_tn(&l.v.select_rows(rows_b), g);
                let t = matmul(&l.u_prod, &t);
                matmul(&l.v.select_rows(rows_a), &t)
            }
        }
    }
}

/// Per-supernode factorization state.
#[derive(Clone, Debug)]
pub enum NodeFactor {
    Pending,
    /// Diagonal block done, off-diagonal block still being computed.
    Partial(DiagFactor),
    Explicit { diag: DiagFactor, off: OffDiagFactor },
    /// Member of the interior block with this index.
    Interior(usize),
}

/// How each supernode is treated by the numerical phase.
#[derive(Clone, Debug)]
pub enum NodePlan {
    /// Exact dense diagonal and off-diagonal blocks.
    Standard,
    /// Part of an interior block.
    Interior(usize),
    /// Large separator: low-rank off-diagonal block and, with a shape, a compressed diagonal.
    Compressed { tree: Option<BlockTreeShape> },
}

/// Compression parameters of one factorization attempt.
#[derive(Clone, Copy, Debug)]
pub struct NumericParams {
    pub alpha_o: f64,
    pub alpha_d: f64,
    pub oversample: usize,
    pub power_iters: usize,
    pub seed: u64,
    /// Blocks whose target rank reaches this fraction of the smaller dimension stay dense.
    pub dense_fraction: f64,
}

/// Passed to a leaf hook before a diagonal leaf is factored.
#[derive(Clone, Copy, Debug)]
pub struct LeafEvent {
    pub supernode: usize,
    pub block: usize,
    pub alpha_d: f64,
}

/// Returns `true` to make the leaf report an indefinite Schur complement.
pub type LeafHook = dyn Fn(&LeafEvent) -> bool + Send + Sync;

/// A descendant contributing to a later supernode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Unit {
    Node(usize),
    Interior(usize),
}

/// Numerical factor in the permuted numbering.
pub struct NumericFactor {
    pub(crate) a: SparseSpdMatrix,
    pub(crate) sym: Symbolic,
    pub(crate) plan: Vec<NodePlan>,
    pub(crate) nodes: Vec<NodeFactor>,
    pub(crate) interior: Vec<InteriorBlock>,
    pub(crate) params: NumericParams,
    pub(crate) leaf_hook: Option<Arc<LeafHook>>,
}

impl std::fmt::Debug for NumericFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NumericFactor")
            .field("n", &self.a.n())
            .field("supernodes", &self.sym.len())
            .field("interior_blocks", &self.interior.len())
            .finish()
    }
}

pub(crate) fn range_vec(r: Range<usize>) -> Vec<usize> {
    r.collect()
}

/// Matching positions of two sorted lists: `(positions in a, positions in b)`.
pub(crate) fn overlap(a: &[usize], b: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let (mut pa, mut pb) = (Vec::new(), Vec::new());
    let (mut i, mut k) = (0, 0);
    while i < a.len() && k < b.len() {
        match a[i].cmp(&b[k]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => k += 1,
            std::cmp::Ordering::Equal => {
                pa.push(i);
                pb.push(k);
                i += 1;
                k += 1;
            }
        }
    }
    (pa, pb)
}

/// `out[pos[i], :] -= m[i, :]`
pub(crate) fn scatter_sub(out: &mut DenseMatrix, pos: &[usize], m: &DenseMatrix) {
    for c in 0..m.ncols() {
        let src = m.col(c);
        let dst = out.col_mut(c);
        for (i, &p) in pos.iter().enumerate() {
            dst[p] -= src[i];
        }
    }
}

/// `A(x, y) G` for sorted index lists `x`, `y` of the full symmetric matrix.
pub(crate) fn sparse_block_apply(a: &SparseSpdMatrix, x: &[usize], y: &[usize], g: &DenseMatrix) -> DenseMatrix {
    let r = g.ncols();
    let mut out = DenseMatrix::zeros(x.len(), r);
    // lower-triangle entries (row in x, column in y)
    for (jc, &c) in y.iter().enumerate() {
        let (rows, vals) = a.column(c);
        for (&row, &v) in rows.iter().zip(vals) {
            if let Ok(ir) = x.binary_search(&row) {
                for k in 0..r {
                    out[(ir, k)] += v * g[(jc, k)];
                }
            }
        }
    }
    // strictly upper entries, stored in the columns indexed by x
    for (ir, &row) in x.iter().enumerate() {
        let (cols, vals) = a.column(row);
        for (&c, &v) in cols[1..].iter().zip(&vals[1..]) {
            if let Ok(jc) = y.binary_search(&c) {
                for k in 0..r {
                    out[(ir, k)] += v * g[(jc, k)];
                }
            }
        }
    }
    out
}

/// `A(x, y)ᵀ G`, i.e. `A(y, x) G`.
pub(crate) fn sparse_block_apply_trans(a: &SparseSpdMatrix, x: &[usize], y: &[usize], g: &DenseMatrix) -> DenseMatrix {
    sparse_block_apply(a, y, x, g)
}

fn indefinite(supernode: usize, block: usize, e: DenseError) -> FactorError {
    match e {
        DenseError::Indefinite { pivot, .. } => FactorError::Indefinite { supernode, block, pivot },
        other => FactorError::Dense(other),
    }
}

impl NumericFactor {
    pub(crate) fn new(a: SparseSpdMatrix, sym: Symbolic, plan: Vec<NodePlan>, interior: Vec<InteriorBlock>, params: NumericParams) -> Self {
        let m = sym.len();
        Self {
            a,
            sym,
            plan,
            nodes: vec![NodeFactor::Pending; m],
            interior,
            params,
            leaf_hook: None,
        }
    }

    pub fn matrix(&self) -> &SparseSpdMatrix {
        &self.a
    }

    pub fn symbolic(&self) -> &Symbolic {
        &self.sym
    }

    pub fn node(&self, j: usize) -> &NodeFactor {
        &self.nodes[j]
    }

    pub fn plan(&self, j: usize) -> &NodePlan {
        &self.plan[j]
    }

    pub fn interior_blocks(&self) -> &[InteriorBlock] {
        &self.interior
    }

    pub fn params(&self) -> &NumericParams {
        &self.params
    }

    pub(crate) fn reset(&mut self) {
        self.nodes.iter_mut().for_each(|n| *n = NodeFactor::Pending);
    }

    /// Factors every supernode in order.
    pub(crate) fn run(&mut self) -> Result<(), FactorError> {
        for j in 0..self.sym.len() {
            self.factor_node(j)?;
        }
        Ok(())
    }

    fn factor_node(&mut self, j: usize) -> Result<(), FactorError> {
        match self.plan[j].clone() {
            NodePlan::Interior(i) => {
                self.nodes[j] = NodeFactor::Interior(i);
            }
            NodePlan::Standard => {
                let (ld, lo) = self.factor_supernode(j)?;
                self.nodes[j] = NodeFactor::Explicit {
                    diag: DiagFactor::Dense(ld),
                    off: OffDiagFactor::Dense(lo),
                };
            }
            NodePlan::Compressed { tree } => {
                let diag = match tree {
                    None => {
                        let c = range_vec(self.sym.cols(j));
                        let ud = self.schur_block(j, &c, &c);
                        DiagFactor::Dense(cholesky(&ud).map_err(|e| indefinite(j, 0, e))?)
                    }
                    Some(shape) => DiagFactor::Tree(self.build_diag_tree(j, shape)?),
                };
                self.nodes[j] = NodeFactor::Partial(diag);
                let off = self.compress_off_diagonal(j)?;
                let NodeFactor::Partial(diag) = std::mem::replace(&mut self.nodes[j], NodeFactor::Pending) else {
                    unreachable!("diagonal stored just above")
                };
                self.nodes[j] = NodeFactor::Explicit { diag, off };
            }
        }
        Ok(())
    }

    fn compress_off_diagonal(&self, j: usize) -> Result<OffDiagFactor, FactorError> {
        let nr = self.sym.rows[j].len();
        let nc = self.sym.cols(j).len();
        if nr == 0 {
            return Ok(OffDiagFactor::Dense(DenseMatrix::zeros(0, nc)));
        }
        let p = &self.params;
        let rank = block_rank(nr, nc, p.alpha_o, p.oversample);
        if rank as f64 >= p.dense_fraction * nr.min(nc) as f64 {
            return Ok(OffDiagFactor::Dense(self.off_diagonal_multiply(j, &DenseMatrix::identity(nc))?));
        }
        Ok(OffDiagFactor::LowRank(self.approximate_off_diagonal(j, rank, p.power_iters, derive_seed(p.seed, j as u64, 0))?))
    }

    /// Descendants of `j` with each interior block listed once.
    pub(crate) fn units(&self, j: usize) -> Vec<Unit> {
        let mut out: Vec<Unit> = Vec::new();
        for &k in &self.sym.descendants[j] {
            let u = match &self.nodes[k] {
                NodeFactor::Interior(i) => Unit::Interior(*i),
                NodeFactor::Explicit { .. } => Unit::Node(k),
                _ => panic!("descendant {k} of supernode {j} is not factored"),
            };
            if out.last() != Some(&u) {
                out.push(u);
            }
        }
        out
    }

    pub(crate) fn off_of(&self, k: usize) -> &OffDiagFactor {
        match &self.nodes[k] {
            NodeFactor::Explicit { off, .. } => off,
            _ => panic!("supernode {k} has no off-diagonal factor"),
        }
    }

    pub(crate) fn diag_of(&self, j: usize) -> &DiagFactor {
        match &self.nodes[j] {
            NodeFactor::Explicit { diag, .. } | NodeFactor::Partial(diag) => diag,
            _ => panic!("supernode {j} has no diagonal factor"),
        }
    }

    /// `L(x, C_k) L(y, C_k)ᵀ` for one descendant, over sorted global row lists.
    pub(crate) fn descendant_outer(&self, unit: Unit, x: &[usize], y: &[usize]) -> (DenseMatrix, Vec<usize>, Vec<usize>) {
        match unit {
            Unit::Node(k) => {
                let rk = &self.sym.rows[k];
                let (kx, px) = overlap(rk, x);
                let (ky, py) = if std::ptr::eq(x, y) { (kx.clone(), px.clone()) } else { overlap(rk, y) };
                if kx.is_empty() || ky.is_empty() {
                    return (DenseMatrix::zeros(0, 0), vec![], vec![]);
                }
                (self.off_of(k).outer(&kx, &ky), px, py)
            }
            Unit::Interior(i) => {
                let (m, px, py) = self.interior_outer(i, x, y);
                (m, px, py)
            }
        }
    }

    /// `L(x, C_k) L(y, C_k)ᵀ G` for one descendant; `G` has one row per entry of `y`.
    pub(crate) fn descendant_apply(&self, unit: Unit, x: &[usize], y: &[usize], g: &DenseMatrix) -> (DenseMatrix, Vec<usize>) {
        match unit {
            Unit::Node(k) => {
                let rk = &self.sym.rows[k];
                let (kx, px) = overlap(rk, x);
                let (ky, py) = overlap(rk, y);
                if kx.is_empty() || ky.is_empty() {
                    return (DenseMatrix::zeros(0, g.ncols()), vec![]);
                }
                let gsub = g.select_rows(&py);
                (self.off_of(k).outer_apply(&kx, &ky, &gsub), px)
            }
            Unit::Interior(i) => (self.interior_block_multiply(i, x, y, g, false), (0..x.len()).collect()),
        }
    }

    /// Schur complement block `A(x, y) - Σ_k L(x, C_k) L(y, C_k)ᵀ` over the descendants of `j`.
    pub(crate) fn schur_block(&self, j: usize, x: &[usize], y: &[usize]) -> DenseMatrix {
        let mut f = self.a.dense_block(x, y);
        for unit in self.units(j) {
            let (m, px, py) = self.descendant_outer(unit, x, y);
            for (b, &q) in py.iter().enumerate() {
                for (a, &p) in px.iter().enumerate() {
                    f[(p, q)] -= m[(a, b)];
                }
            }
        }
        f
    }

    /// `Σ_k L(x, C_k) L(y, C_k)ᵀ G` over the descendants of `j`, subtracted from `w`.
    pub(crate) fn subtract_descendants(&self, j: usize, x: &[usize], y: &[usize], g: &DenseMatrix, w: &mut DenseMatrix) {
        for unit in self.units(j) {
            let (m, px) = self.descendant_apply(unit, x, y, g);
            scatter_sub(w, &px, &m);
        }
    }

    /// Exact block column of supernode `j` given its factored descendants:
    /// `L^D = chol(𝒰^D)` and `L^O = 𝒰^O (L^D)⁻ᵀ`.
    pub fn factor_supernode(&self, j: usize) -> Result<(DenseMatrix, DenseMatrix), FactorError> {
        let cols = self.sym.cols(j);
        let nc = cols.len();
        let mut x = range_vec(cols.clone());
        x.extend_from_slice(&self.sym.rows[j]);
        let c = range_vec(cols);
        let f = self.schur_block(j, &x, &c);
        let ld = cholesky(&f.block(0, nc, 0, nc)).map_err(|e| indefinite(j, 0, e))?;
        let mut lo = f.block(nc, x.len() - nc, 0, nc);
        tri_solve_in_place(&ld, &mut lo, Side::Right, true)?;
        Ok((ld, lo))
    }

    /// `(L^D_j)⁻¹ G` or `(L^D_j)⁻ᵀ G`.
    pub fn diag_solve(&self, j: usize, g: &DenseMatrix, transpose: bool) -> Result<DenseMatrix, FactorError> {
        match self.diag_of(j) {
            DiagFactor::Dense(l) => Ok(tri_solve(l, g, Side::Left, transpose)?),
            DiagFactor::Tree(t) => t.solve(g, transpose),
        }
    }

    /// `L^O_j G` without forming `L^O_j`, for `G` with `|C_j|` rows.
    pub fn off_diagonal_multiply(&self, j: usize, g: &DenseMatrix) -> Result<DenseMatrix, FactorError> {
        let c = range_vec(self.sym.cols(j));
        let r = &self.sym.rows[j];
        let g1 = self.diag_solve(j, g, true)?;
        let mut w = sparse_block_apply(&self.a, r, &c, &g1);
        self.subtract_descendants(j, r, &c, &g1, &mut w);
        Ok(w)
    }

    /// `(L^O_j)ᵀ G` without forming `L^O_j`, for `G` with `|R_j|` rows.
    pub fn off_diagonal_multiply_trans(&self, j: usize, g: &DenseMatrix) -> Result<DenseMatrix, FactorError> {
        let c = range_vec(self.sym.cols(j));
        let r = &self.sym.rows[j];
        let mut w = sparse_block_apply_trans(&self.a, r, &c, g);
        self.subtract_descendants(j, &c, r, g, &mut w);
        self.diag_solve(j, &w, false)
    }

    /// Randomized low-rank approximation of `L^O_j`.
    pub fn approximate_off_diagonal(&self, j: usize, rank: usize, power_iters: usize, seed: u64) -> Result<LowRankBlock, FactorError> {
        randomized_low_rank(&OffDiagOperator { f: self, j }, rank, power_iters, seed)
    }

    /// Solves `L X = B` in place for `B` with `n` rows.
    pub fn solve_lower_in_place(&self, x: &mut DenseMatrix) -> Result<(), FactorError> {
        let m = self.sym.len();
        let r = x.ncols();
        let mut j = 0;
        while j < m {
            match &self.nodes[j] {
                NodeFactor::Interior(i) => {
                    let blk = &self.interior[*i];
                    let b = blk.cols.clone();
                    let mut xb = x.block(b.start, b.len(), 0, r);
                    blk.factor.solve_lower_in_place(&mut xb)?;
                    let mut w = xb.clone();
                    blk.factor.solve_upper_in_place(&mut w)?;
                    let t = self.interior_coupling(*i, &blk.outer_rows, &w);
                    let pos: Vec<usize> = blk.outer_rows.clone();
                    for c in 0..r {
                        for (k, &row) in pos.iter().enumerate() {
                            x[(row, c)] -= t[(k, c)];
                        }
                    }
                    x.set_block(b.start, 0, &xb);
                    j = blk.supernodes.end;
                    continue;
                }
                NodeFactor::Explicit { diag, off } => {
                    let cols = self.sym.cols(j);
                    let mut xc = x.block(cols.start, cols.len(), 0, r);
                    xc = match diag {
                        DiagFactor::Dense(l) => tri_solve(l, &xc, Side::Left, false)?,
                        DiagFactor::Tree(t) => t.solve(&xc, false)?,
                    };
                    x.set_block(cols.start, 0, &xc);
                    let rows = &self.sym.rows[j];
                    if !rows.is_empty() {
                        let upd = off.apply(&xc);
                        for c in 0..r {
                            for (k, &row) in rows.iter().enumerate() {
                                x[(row, c)] -= upd[(k, c)];
                            }
                        }
                    }
                }
                _ => panic!("supernode {j} is not factored"),
            }
            j += 1;
        }
        Ok(())
    }

    /// Solves `Lᵀ X = B` in place for `B` with `n` rows.
    pub fn solve_upper_in_place(&self, x: &mut DenseMatrix) -> Result<(), FactorError> {
        let r = x.ncols();
        let mut j = self.sym.len();
        while j > 0 {
            j -= 1;
            match &self.nodes[j] {
                NodeFactor::Interior(i) => {
                    let blk = &self.interior[*i];
                    let b = blk.cols.clone();
                    let xr = x.select_rows(&blk.outer_rows);
                    let mut t = self.interior_coupling_t(*i, &blk.outer_rows, &xr);
                    blk.factor.solve_lower_in_place(&mut t)?;
                    let mut xb = x.block(b.start, b.len(), 0, r);
                    xb.sub_assign(&t);
                    blk.factor.solve_upper_in_place(&mut xb)?;
                    x.set_block(b.start, 0, &xb);
                    j = blk.supernodes.start;
                }
                NodeFactor::Explicit { diag, off } => {
                    let cols = self.sym.cols(j);
                    let mut xc = x.block(cols.start, cols.len(), 0, r);
                    let rows = &self.sym.rows[j];
                    if !rows.is_empty() {
                        let xr = x.select_rows(rows);
                        xc.sub_assign(&off.apply_trans(&xr));
                    }
                    xc = match diag {
                        DiagFactor::Dense(l) => tri_solve(l, &xc, Side::Left, true)?,
                        DiagFactor::Tree(t) => t.solve(&xc, true)?,
                    };
                    x.set_block(cols.start, 0, &xc);
                }
                _ => panic!("supernode {j} is not factored"),
            }
        }
        Ok(())
    }

    /// Stored scalars of the factor, counting each interior block's own factor once.
    pub fn stored_scalars(&self) -> usize {
        let mut total = 0;
        for node in &self.nodes {
            if let NodeFactor::Explicit { diag, off } = node {
                total += match diag {
                    DiagFactor::Dense(l) => l.nrows() * (l.nrows() + 1) / 2,
                    DiagFactor::Tree(t) => t.stored_scalars(),
                };
                total += off.stored_scalars();
            }
        }
        total + self.interior.iter().map(|b| b.factor.stored_scalars()).sum::<usize>()
    }

    /// Number of blocks held in low-rank form.
    pub fn compressed_blocks(&self) -> usize {
        let mut count = 0;
        for node in &self.nodes {
            if let NodeFactor::Explicit { diag, off } = node {
                if matches!(off, OffDiagFactor::LowRank(_)) {
                    count += 1;
                }
                if let DiagFactor::Tree(t) = diag {
                    count += t.low_rank_blocks();
                }
            }
        }
        count
    }
}

struct OffDiagOperator<'a> {
    f: &'a NumericFactor,
    j: usize,
}

impl BlockOperator for OffDiagOperator<'_> {
    fn nrows(&self) -> usize {
        self.f.sym.rows[self.j].len()
    }

    fn ncols(&self) -> usize {
        self.f.sym.cols(self.j).len()
    }

    fn apply(&self, g: &DenseMatrix) -> Result<DenseMatrix, FactorError> {
        self.f.off_diagonal_multiply(self.j, g)
    }

    fn apply_trans(&self, g: &DenseMatrix) -> Result<DenseMatrix, FactorError> {
        self.f.off_diagonal_multiply_trans(self.j, g)
    }
}
