//! Hierarchically compressed diagonal factor of a large separator.
//!
//! The separator columns are split by a binary tree stored in order. Leaves hold
//! dense Cholesky factors; each internal node holds the block coupling the span of
//! its right child (rows) to the span of its left child (columns), either dense or
//! low-rank.

use std::ops::Range;

use crate::dense::{cholesky, derive_seed, tri_solve, DenseMatrix, Side};
use crate::error::{DenseError, FactorError};
use crate::factor::lowrank::{block_rank, randomized_low_rank, BlockOperator, LowRankBlock};
use crate::factor::numeric::{range_vec, sparse_block_apply, sparse_block_apply_trans, DiagFactor, LeafEvent, NumericFactor, OffDiagFactor};
use crate::ordering::BlockTreeShape;

#[derive(Clone, Debug)]
pub enum DiagBlock {
    Pending,
    /// Dense lower factor of a leaf.
    Leaf(DenseMatrix),
    /// `L(span(right), span(left))` of an internal node.
    Coupling(OffDiagFactor),
}

#[derive(Clone, Debug)]
pub struct DiagBlockTree {
    pub shape: BlockTreeShape,
    pub blocks: Vec<DiagBlock>,
    /// First global column of the separator.
    pub offset: usize,
}

impl DiagBlockTree {
    pub fn new(shape: BlockTreeShape, offset: usize) -> Self {
        let blocks = vec![DiagBlock::Pending; shape.len()];
        Self { shape, blocks, offset }
    }

    pub fn len(&self) -> usize {
        self.shape.nodes[self.shape.root].span.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Global column range of node `s`.
    pub fn global_span(&self, s: usize) -> Range<usize> {
        let sp = &self.shape.nodes[s].span;
        sp.start + self.offset..sp.end + self.offset
    }

    fn left(&self, s: usize) -> usize {
        self.shape.nodes[s].left.expect("internal node")
    }

    fn right(&self, s: usize) -> usize {
        self.shape.nodes[s].right.expect("internal node")
    }

    pub(crate) fn coupling(&self, s: usize) -> &OffDiagFactor {
        match &self.blocks[s] {
            DiagBlock::Coupling(c) => c,
            _ => panic!("diagonal node {s} has no coupling block"),
        }
    }

    /// `(L^D)⁻¹ G` or `(L^D)⁻ᵀ G` restricted to the subtree of `s`.
    pub fn solve_subtree(&self, s: usize, g: &DenseMatrix, transpose: bool) -> Result<DenseMatrix, FactorError> {
        let node = &self.shape.nodes[s];
        assert_eq!(g.nrows(), node.span.len(), "right-hand side does not match the node span");
        if node.is_leaf() {
            let DiagBlock::Leaf(l) = &self.blocks[s] else {
                panic!("diagonal leaf {s} is not factored")
            };
            return Ok(tri_solve(l, g, Side::Left, transpose)?);
        }
        let (l, r) = (self.left(s), self.right(s));
        let nl = self.shape.nodes[l].span.len();
        let nr = node.span.len() - nl;
        let mut top = g.block(0, nl, 0, g.ncols());
        let mut bottom = g.block(nl, nr, 0, g.ncols());
        let d = self.coupling(s);
        if transpose {
            bottom = self.solve_subtree(r, &bottom, true)?;
            top.sub_assign(&d.apply_trans(&bottom));
            top = self.solve_subtree(l, &top, true)?;
        } else {
            top = self.solve_subtree(l, &top, false)?;
            bottom.sub_assign(&d.apply(&top));
            bottom = self.solve_subtree(r, &bottom, false)?;
        }
        Ok(DenseMatrix::vstack(&top, &bottom))
    }

    pub fn solve(&self, g: &DenseMatrix, transpose: bool) -> Result<DenseMatrix, FactorError> {
        self.solve_subtree(self.shape.root, g, transpose)
    }

    /// Lower-triangular matrix represented by the tree.
    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.len();
        let base = self.shape.nodes[self.shape.root].span.start;
        let mut out = DenseMatrix::zeros(n, n);
        for (s, node) in self.shape.nodes.iter().enumerate() {
            match &self.blocks[s] {
                DiagBlock::Leaf(l) => out.set_block(node.span.start - base, node.span.start - base, l),
                DiagBlock::Coupling(c) => {
                    let ls = &self.shape.nodes[self.left(s)].span;
                    let rs = &self.shape.nodes[self.right(s)].span;
                    out.set_block(rs.start - base, ls.start - base, &c.to_dense());
                }
                DiagBlock::Pending => {}
            }
        }
        out
    }

    pub fn stored_scalars(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| match b {
                DiagBlock::Leaf(l) => l.nrows() * (l.nrows() + 1) / 2,
                DiagBlock::Coupling(c) => c.stored_scalars(),
                DiagBlock::Pending => 0,
            })
            .sum()
    }

    pub fn low_rank_blocks(&self) -> usize {
        self.blocks.iter().filter(|b| matches!(b, DiagBlock::Coupling(OffDiagFactor::LowRank(_)))).count()
    }

    /// Ancestors `p` of `s` whose right subtree contains `s`.
    fn right_ancestors(&self, s: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = self.shape.nodes[s].parent;
        while let Some(p) = cur {
            if p < s {
                out.push(p);
            }
            cur = self.shape.nodes[p].parent;
        }
        out
    }

    /// Rows of ancestor `p`'s coupling block covering the local range `r`.
    fn local_rows(&self, p: usize, r: &Range<usize>) -> Vec<usize> {
        let start = self.shape.nodes[self.right(p)].span.start;
        (r.start - start..r.end - start).collect()
    }
}

fn local_err(supernode: usize, block: usize, e: DenseError) -> FactorError {
    match e {
        DenseError::Indefinite { pivot, .. } => FactorError::Indefinite { supernode, block, pivot },
        other => FactorError::Dense(other),
    }
}

impl NumericFactor {
    /// Dense factor of leaf `s` of supernode `j`'s diagonal tree.
    pub fn factor_diagonal(&self, j: usize, tree: &DiagBlockTree, s: usize) -> Result<DenseMatrix, FactorError> {
        if let Some(hook) = &self.leaf_hook {
            let ev = LeafEvent {
                supernode: j,
                block: s,
                alpha_d: self.params.alpha_d,
            };
            if hook(&ev) {
                return Err(FactorError::Indefinite { supernode: j, block: s + 1, pivot: 0 });
            }
        }
        let x = range_vec(tree.global_span(s));
        let mut f = self.schur_block(j, &x, &x);
        let span = tree.shape.nodes[s].span.clone();
        for p in tree.right_ancestors(s) {
            let rows = tree.local_rows(p, &span);
            f.sub_assign(&tree.coupling(p).outer(&rows, &rows));
        }
        cholesky(&f).map_err(|e| local_err(j, s + 1, e))
    }

    /// `D_s G` (or `D_sᵀ G`) for internal node `s` without forming `D_s`.
    pub fn diagonal_multiply(&self, j: usize, tree: &DiagBlockTree, s: usize, g: &DenseMatrix, transpose: bool) -> Result<DenseMatrix, FactorError> {
        let l = tree.left(s);
        let r = tree.right(s);
        let cs = range_vec(tree.global_span(l));
        let rs = range_vec(tree.global_span(r));
        let lspan = tree.shape.nodes[l].span.clone();
        let rspan = tree.shape.nodes[r].span.clone();
        let ancestors = tree.right_ancestors(s);
        if transpose {
            let mut w = sparse_block_apply_trans(&self.a, &rs, &cs, g);
            self.subtract_descendants(j, &cs, &rs, g, &mut w);
            for p in ancestors {
                let cr = tree.local_rows(p, &lspan);
                let rr = tree.local_rows(p, &rspan);
                w.sub_assign(&tree.coupling(p).outer_apply(&cr, &rr, g));
            }
            tree.solve_subtree(l, &w, false)
        } else {
            let g1 = tree.solve_subtree(l, g, true)?;
            let mut w = sparse_block_apply(&self.a, &rs, &cs, &g1);
            self.subtract_descendants(j, &rs, &cs, &g1, &mut w);
            for p in ancestors {
                let rr = tree.local_rows(p, &rspan);
                let cr = tree.local_rows(p, &lspan);
                w.sub_assign(&tree.coupling(p).outer_apply(&rr, &cr, &g1));
            }
            Ok(w)
        }
    }

    /// Randomized low-rank approximation of the coupling block of internal node `s`.
    pub fn approximate_diagonal_block(&self, j: usize, tree: &DiagBlockTree, s: usize, rank: usize, power_iters: usize, seed: u64) -> Result<LowRankBlock, FactorError> {
        randomized_low_rank(&DiagCouplingOperator { f: self, j, tree, s }, rank, power_iters, seed)
    }

    /// Builds the compressed diagonal factor of supernode `j`, visiting nodes in order.
    pub(crate) fn build_diag_tree(&self, j: usize, shape: BlockTreeShape) -> Result<DiagBlockTree, FactorError> {
        let offset = self.sym.cols(j).start;
        let mut tree = DiagBlockTree::new(shape, offset);
        let p = self.params;
        for s in 0..tree.shape.len() {
            let block = if tree.shape.nodes[s].is_leaf() {
                DiagBlock::Leaf(self.factor_diagonal(j, &tree, s)?)
            } else {
                let nc = tree.shape.nodes[tree.left(s)].span.len();
                let nr = tree.shape.nodes[tree.right(s)].span.len();
                let rank = block_rank(nr, nc, p.alpha_d, p.oversample);
                if rank as f64 >= p.dense_fraction * nr.min(nc) as f64 {
                    DiagBlock::Coupling(OffDiagFactor::Dense(self.diagonal_multiply(j, &tree, s, &DenseMatrix::identity(nc), false)?))
                } else {
                    let seed = derive_seed(p.seed, j as u64, s as u64 + 1);
                    DiagBlock::Coupling(OffDiagFactor::LowRank(self.approximate_diagonal_block(j, &tree, s, rank, p.power_iters, seed)?))
                }
            };
            tree.blocks[s] = block;
        }
        Ok(tree)
    }

    /// `D_s G` for a completed factor, using the stored tree of supernode `j`.
    pub fn stored_diagonal_multiply(&self, j: usize, s: usize, g: &DenseMatrix, transpose: bool) -> Result<DenseMatrix, FactorError> {
        match self.diag_of(j) {
            DiagFactor::Tree(t) => self.diagonal_multiply(j, t, s, g, transpose),
            DiagFactor::Dense(_) => Err(FactorError::InvalidConfig(format!("supernode {j} has a dense diagonal factor"))),
        }
    }
}

struct DiagCouplingOperator<'a> {
    f: &'a NumericFactor,
    j: usize,
    tree: &'a DiagBlockTree,
    s: usize,
}

impl BlockOperator for DiagCouplingOperator<'_> {
    fn nrows(&self) -> usize {
        self.tree.shape.nodes[self.tree.right(self.s)].span.len()
    }

    fn ncols(&self) -> usize {
        self.tree.shape.nodes[self.tree.left(self.s)].span.len()
    }

    fn apply(&self, g: &DenseMatrix) -> Result<DenseMatrix, FactorError> {
        self.f.diagonal_multiply(self.j, self.tree, self.s, g, false)
    }

    fn apply_trans(&self, g: &DenseMatrix) -> Result<DenseMatrix, FactorError> {
        self.f.diagonal_multiply(self.j, self.tree, self.s, g, true)
    }
}
