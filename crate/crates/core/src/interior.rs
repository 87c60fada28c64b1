//! Interior blocks: dissection subtrees free of compressed separators, factored
//! exactly on their own. Their off-diagonal rows are never stored; products with them
//! go through the matrix coupling and the block's factor.

use std::ops::Range;

use crate::dense::{matmul_tn, DenseMatrix};
use crate::error::FactorError;
use crate::factor::numeric::{overlap, range_vec, sparse_block_apply, NodePlan, NumericFactor, NumericParams};
use crate::ordering::SeparatorTree;
use crate::sparse::SparseSpdMatrix;
use crate::symbolic::{compute_row_structures, Symbolic, SupernodePartition};

#[derive(Debug)]
pub struct InteriorBlock {
    /// Supernodes covered by the block.
    pub supernodes: Range<usize>,
    /// Global columns covered by the block.
    pub cols: Range<usize>,
    /// Rows after the block that couple to it in the matrix.
    pub outer_rows: Vec<usize>,
    /// Exact factor of the block's principal submatrix, in local numbering.
    pub factor: NumericFactor,
}

/// Column ranges of the interior blocks: maximal subtrees containing no separator of at
/// least `tau_o` indices whose parent subtree does contain one. Empty when nothing is
/// compressed.
pub fn interior_ranges(tree: &SeparatorTree, tau_o: usize) -> Vec<Range<usize>> {
    let m = tree.nodes.len();
    let mut compressed = vec![false; m];
    for (id, node) in tree.nodes.iter().enumerate() {
        let own = node.kind == crate::ordering::NodeKind::Separator && !node.vertices.is_empty() && node.vertices.len() >= tau_o;
        compressed[id] = own || node.children.iter().any(|&c| compressed[c]);
    }
    let mut out = Vec::new();
    for (id, node) in tree.nodes.iter().enumerate() {
        if !compressed[id] {
            continue;
        }
        for &c in &node.children {
            if !compressed[c] && !tree.nodes[c].subtree.is_empty() {
                out.push(tree.nodes[c].subtree.clone());
            }
        }
    }
    out.sort_by_key(|r| r.start);
    out
}

impl InteriorBlock {
    /// Factors the principal submatrix of `a` over supernodes `supernodes` of `sym`.
    pub fn build(a: &SparseSpdMatrix, sym: &Symbolic, supernodes: Range<usize>, params: NumericParams) -> Result<Self, FactorError> {
        let cols = sym.cols(supernodes.start).start..sym.cols(supernodes.end - 1).end;
        let local = a.principal_range(cols.start, cols.end);
        let ranges = supernodes.clone().map(|j| {
            let c = sym.cols(j);
            (c.start - cols.start..c.end - cols.start, None)
        });
        let partition = SupernodePartition::from_ranges(cols.len(), ranges.collect());
        let local_sym = compute_row_structures(&local, partition);
        let plan = vec![NodePlan::Standard; local_sym.len()];
        let mut factor = NumericFactor::new(local, local_sym, plan, Vec::new(), params);
        factor.run().map_err(|e| match e {
            FactorError::Indefinite { supernode, pivot, .. } => FactorError::NotPositiveDefinite {
                supernode: supernode + supernodes.start,
                pivot,
            },
            other => other,
        })?;
        let mut outer_rows = Vec::new();
        for c in cols.clone() {
            let (rows, _) = a.column(c);
            outer_rows.extend(rows.iter().copied().filter(|&r| r >= cols.end));
        }
        outer_rows.sort_unstable();
        outer_rows.dedup();
        Ok(Self {
            supernodes,
            cols,
            outer_rows,
            factor,
        })
    }
}

impl NumericFactor {
    /// `A(rows, B) Z` for interior block `i`.
    pub(crate) fn interior_coupling(&self, i: usize, rows: &[usize], z: &DenseMatrix) -> DenseMatrix {
        let b = range_vec(self.interior[i].cols.clone());
        sparse_block_apply(&self.a, rows, &b, z)
    }

    /// `A(rows, B)ᵀ G` for interior block `i`.
    pub(crate) fn interior_coupling_t(&self, i: usize, rows: &[usize], g: &DenseMatrix) -> DenseMatrix {
        let b = range_vec(self.interior[i].cols.clone());
        sparse_block_apply(&self.a, &b, rows, g)
    }

    /// `(L^B)⁻¹ A(rows, B)ᵀ`, one column per row.
    fn interior_panel(&self, i: usize, rows: &[usize]) -> DenseMatrix {
        let mut z = self.interior_coupling_t(i, rows, &DenseMatrix::identity(rows.len()));
        self.interior[i]
            .factor
            .solve_lower_in_place(&mut z)
            .expect("interior block factor is nonsingular");
        z
    }

    /// `L(rows, B)`: the implicit off-diagonal rows of interior block `i`.
    pub fn interior_block_subrows(&self, i: usize, rows: &[usize]) -> DenseMatrix {
        self.interior_panel(i, rows).transpose()
    }

    /// `L(rows, B) L(cols, B)ᵀ G` for interior block `i`, or with `transpose` the mirror
    /// `L(cols, B) L(rows, B)ᵀ G`. `G` has one row per entry of the right-hand index list.
    pub fn interior_block_multiply(&self, i: usize, rows: &[usize], cols: &[usize], g: &DenseMatrix, transpose: bool) -> DenseMatrix {
        if transpose {
            self.interior_product(i, cols, rows, g)
        } else {
            self.interior_product(i, rows, cols, g)
        }
    }

    fn interior_product(&self, i: usize, rows: &[usize], cols: &[usize], g: &DenseMatrix) -> DenseMatrix {
        let blk = &self.interior[i];
        let mut out = DenseMatrix::zeros(rows.len(), g.ncols());
        let (pc, _) = overlap(cols, &blk.outer_rows);
        let (pr, _) = overlap(rows, &blk.outer_rows);
        if pc.is_empty() || pr.is_empty() {
            return out;
        }
        let csub: Vec<usize> = pc.iter().map(|&p| cols[p]).collect();
        let rsub: Vec<usize> = pr.iter().map(|&p| rows[p]).collect();
        let mut z = self.interior_coupling_t(i, &csub, &g.select_rows(&pc));
        blk.factor.solve_lower_in_place(&mut z).expect("interior block factor is nonsingular");
        blk.factor.solve_upper_in_place(&mut z).expect("interior block factor is nonsingular");
        let w = self.interior_coupling(i, &rsub, &z);
        for c in 0..g.ncols() {
            for (k, &p) in pr.iter().enumerate() {
                out[(p, c)] = w[(k, c)];
            }
        }
        out
    }

    /// `L(x, B) L(y, B)ᵀ` restricted to the rows of `x` and `y` that couple to the block.
    pub(crate) fn interior_outer(&self, i: usize, x: &[usize], y: &[usize]) -> (DenseMatrix, Vec<usize>, Vec<usize>) {
        let outer = &self.interior[i].outer_rows;
        let (px, _) = overlap(x, outer);
        let (py, _) = overlap(y, outer);
        if px.is_empty() || py.is_empty() {
            return (DenseMatrix::zeros(0, 0), vec![], vec![]);
        }
        let xs: Vec<usize> = px.iter().map(|&p| x[p]).collect();
        let zx = self.interior_panel(i, &xs);
        let m = if std::ptr::eq(x, y) {
            matmul_tn(&zx, &zx)
        } else {
            let ys: Vec<usize> = py.iter().map(|&p| y[p]).collect();
            matmul_tn(&zx, &self.interior_panel(i, &ys))
        };
        (m, px, py)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordering::{nested_dissection_with, NdOptions, SeparatorMethod};
    use crate::problems::{grid_coordinates, laplacian_2d};

    #[test]
    fn no_compressed_separator_means_no_blocks() {
        let a = laplacian_2d(8);
        let nd = crate::ordering::nested_dissection(&a, 8);
        assert!(interior_ranges(&nd.tree, 1000).is_empty());
    }

    #[test]
    fn blocks_are_children_of_compressed_subtrees() {
        let a = laplacian_2d(16);
        let coords = grid_coordinates(16, 16, 1);
        let opts = NdOptions {
            leaf_size: 16,
            method: SeparatorMethod::Geometric,
        };
        let nd = nested_dissection_with(&a, &opts, Some(&coords)).unwrap();
        let root = nd.tree.root();
        let ranges = interior_ranges(&nd.tree, 16);
        assert!(!ranges.is_empty());
        for w in ranges.windows(2) {
            assert!(w[0].end <= w[1].start);
        }
        for r in &ranges {
            assert!(r.end <= nd.tree.nodes[root].vertices.start);
        }
    }
}
