//! Sparse symmetric positive definite matrices stored as their lower triangle in
//! compressed sparse column form, symmetric permutations, and index-set utilities.

mod market;
mod scatter;

pub use market::{read_matrix_market, read_matrix_market_from, write_matrix_market, write_matrix_market_to};
pub use scatter::{align_set, gather_rows, is_index_list, positions_in, scatter_rows};

use crate::dense::DenseMatrix;
use crate::error::SparseError;

/// Sorted, strictly increasing list of matrix indices.
pub type IndexList = Vec<usize>;

/// Symmetric matrix holding only its lower triangle (diagonal included) in CSC form.
///
/// Row indices within each column are strictly increasing and the first entry of
/// every column is its diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSpdMatrix {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSpdMatrix {
    /// Assembles from `(row, col, value)` triplets. Entries above the diagonal are
    /// mirrored to the lower triangle and duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self, SparseError> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= n {
                return Err(SparseError::IndexOutOfBounds { index: i, dim: n });
            }
            if j >= n {
                return Err(SparseError::IndexOutOfBounds { index: j, dim: n });
            }
            let (r, c) = if i >= j { (i, j) } else { (j, i) };
            entries.push((c, r, v));
        }
        entries.sort_by_key(|e| (e.0, e.1));
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (c, r, v) in entries {
            if last == Some((c, r)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(r);
                values.push(v);
                col_ptr[c + 1] += 1;
                last = Some((c, r));
            }
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }
        let m = Self {
            n,
            col_ptr,
            row_idx,
            values,
        };
        m.validate()?;
        Ok(m)
    }

    /// Wraps raw lower-triangular CSC arrays after validating them.
    pub fn from_csc(n: usize, col_ptr: Vec<usize>, row_idx: Vec<usize>, values: Vec<f64>) -> Result<Self, SparseError> {
        if col_ptr.len() != n + 1 {
            return Err(SparseError::DimensionMismatch {
                expected: n + 1,
                found: col_ptr.len(),
            });
        }
        if row_idx.len() != values.len() || col_ptr[n] != row_idx.len() {
            return Err(SparseError::DimensionMismatch {
                expected: col_ptr[n],
                found: row_idx.len(),
            });
        }
        for c in 0..n {
            let rows = &row_idx[col_ptr[c]..col_ptr[c + 1]];
            if rows.windows(2).any(|w| w[0] >= w[1]) {
                return Err(SparseError::NotSymmetric(format!("rows of column {c} are not strictly increasing")));
            }
            if let Some(&r) = rows.first() {
                if r < c {
                    return Err(SparseError::NotSymmetric(format!("column {c} stores an upper-triangle entry")));
                }
            }
            if let Some(&r) = rows.last() {
                if r >= n {
                    return Err(SparseError::IndexOutOfBounds { index: r, dim: n });
                }
            }
        }
        let m = Self {
            n,
            col_ptr,
            row_idx,
            values,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<(), SparseError> {
        for c in 0..self.n {
            let start = self.col_ptr[c];
            if start == self.col_ptr[c + 1] || self.row_idx[start] != c {
                return Err(SparseError::MissingDiagonal { index: c });
            }
            let d = self.values[start];
            if !(d > 0.0) {
                return Err(SparseError::NonPositiveDiagonal { index: c, value: d });
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored entries of the lower triangle.
    pub fn nnz_lower(&self) -> usize {
        self.row_idx.len()
    }

    /// Structural nonzeros of the full symmetric matrix.
    pub fn nnz(&self) -> usize {
        2 * self.row_idx.len() - self.n
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Row indices and values of lower-triangle column `c`, diagonal first.
    #[inline]
    pub fn column(&self, c: usize) -> (&[usize], &[f64]) {
        let r = self.col_ptr[c]..self.col_ptr[c + 1];
        (&self.row_idx[r.clone()], &self.values[r])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|c| self.values[self.col_ptr[c]]).collect()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let (rows, vals) = self.column(c);
        match rows.binary_search(&r) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    /// `y = A x`
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        y.iter_mut().for_each(|v| *v = 0.0);
        for c in 0..self.n {
            let (rows, vals) = self.column(c);
            let xc = x[c];
            let mut acc = vals[0] * xc;
            for (&r, &v) in rows[1..].iter().zip(&vals[1..]) {
                y[r] += v * xc;
                acc += v * x[r];
            }
            y[c] += acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// Frobenius norm of the full symmetric matrix.
    pub fn norm_fro(&self) -> f64 {
        let mut s = 0.0;
        for c in 0..self.n {
            let (rows, vals) = self.column(c);
            for (&r, &v) in rows.iter().zip(vals) {
                s += if r == c { v * v } else { 2.0 * v * v };
            }
        }
        s.sqrt()
    }

    /// `P A Pᵀ`, i.e. entry `(i, j)` moves to `(perm.new_index(i), perm.new_index(j))`.
    pub fn permute(&self, perm: &Permutation) -> Self {
        assert_eq!(perm.len(), self.n, "permutation size does not match matrix");
        let mut counts = vec![0usize; self.n + 1];
        for c in 0..self.n {
            let (rows, _) = self.column(c);
            for &r in rows {
                let (pr, pc) = (perm.forward[r], perm.forward[c]);
                counts[pr.min(pc) + 1] += 1;
            }
        }
        for c in 0..self.n {
            counts[c + 1] += counts[c];
        }
        let col_ptr = counts.clone();
        let mut next = counts;
        let nnz = self.row_idx.len();
        let mut row_idx = vec![0usize; nnz];
        let mut values = vec![0.0; nnz];
        for c in 0..self.n {
            let (rows, vals) = self.column(c);
            for (&r, &v) in rows.iter().zip(vals) {
                let (pr, pc) = (perm.forward[r], perm.forward[c]);
                let (lo, hi) = (pr.min(pc), pr.max(pc));
                let k = next[lo];
                row_idx[k] = hi;
                values[k] = v;
                next[lo] += 1;
            }
        }
        for c in 0..self.n {
            let r = col_ptr[c]..col_ptr[c + 1];
            let mut pairs: Vec<(usize, f64)> = row_idx[r.clone()].iter().copied().zip(values[r.clone()].iter().copied()).collect();
            pairs.sort_by_key(|p| p.0);
            for (k, (ri, v)) in r.zip(pairs) {
                row_idx[k] = ri;
                values[k] = v;
            }
        }
        Self {
            n: self.n,
            col_ptr,
            row_idx,
            values,
        }
    }

    /// Principal submatrix on the contiguous index range `[start, end)`, renumbered from zero.
    pub fn principal_range(&self, start: usize, end: usize) -> Self {
        let n = end - start;
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for c in start..end {
            let (rows, vals) = self.column(c);
            for (&r, &v) in rows.iter().zip(vals) {
                if r < end {
                    row_idx.push(r - start);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Self {
            n,
            col_ptr,
            row_idx,
            values,
        }
    }

    /// Dense block `A(rows, cols)` of the full symmetric matrix. Both index lists must be sorted.
    pub fn dense_block(&self, rows: &[usize], cols: &[usize]) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(rows.len(), cols.len());
        for (jc, &c) in cols.iter().enumerate() {
            let (rr, vals) = self.column(c);
            for (&r, &v) in rr.iter().zip(vals) {
                if let Ok(ir) = rows.binary_search(&r) {
                    out[(ir, jc)] = v;
                }
            }
        }
        // entries above the diagonal live in the columns indexed by `rows`
        for (ir, &r) in rows.iter().enumerate() {
            let (cc, vals) = self.column(r);
            for (&c, &v) in cc[1..].iter().zip(&vals[1..]) {
                if let Ok(jc) = cols.binary_search(&c) {
                    out[(ir, jc)] = v;
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let all: Vec<usize> = (0..self.n).collect();
        self.dense_block(&all, &all)
    }

    /// Adjacency lists of the graph of the matrix (off-diagonal pattern, both directions).
    pub fn adjacency(&self) -> (Vec<usize>, Vec<usize>) {
        let mut deg = vec![0usize; self.n + 1];
        for c in 0..self.n {
            let (rows, _) = self.column(c);
            for &r in &rows[1..] {
                deg[r + 1] += 1;
                deg[c + 1] += 1;
            }
        }
        for i in 0..self.n {
            deg[i + 1] += deg[i];
        }
        let xadj = deg.clone();
        let mut next = deg;
        let mut adj = vec![0usize; xadj[self.n]];
        for c in 0..self.n {
            let (rows, _) = self.column(c);
            for &r in &rows[1..] {
                adj[next[c]] = r;
                next[c] += 1;
                adj[next[r]] = c;
                next[r] += 1;
            }
        }
        for i in 0..self.n {
            adj[xadj[i]..xadj[i + 1]].sort_unstable();
        }
        (xadj, adj)
    }
}

/// Symmetric permutation. `forward[old] = new` and `inverse[new] = old`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            forward: (0..n).collect(),
            inverse: (0..n).collect(),
        }
    }

    /// From the map `old -> new`.
    pub fn from_forward(forward: Vec<usize>) -> Result<Self, SparseError> {
        let n = forward.len();
        let mut inverse = vec![usize::MAX; n];
        for (old, &new) in forward.iter().enumerate() {
            if new >= n {
                return Err(SparseError::IndexOutOfBounds { index: new, dim: n });
            }
            if inverse[new] != usize::MAX {
                return Err(SparseError::NotSymmetric(format!("permutation repeats target {new}")));
            }
            inverse[new] = old;
        }
        Ok(Self { forward, inverse })
    }

    /// From the elimination order, i.e. the list of old indices in their new positions.
    pub fn from_order(order: Vec<usize>) -> Result<Self, SparseError> {
        let p = Self::from_forward(order)?;
        Ok(p.inverse())
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    #[inline]
    pub fn new_index(&self, old: usize) -> usize {
        self.forward[old]
    }

    #[inline]
    pub fn old_index(&self, new: usize) -> usize {
        self.inverse[new]
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn order(&self) -> &[usize] {
        &self.inverse
    }

    pub fn inverse(&self) -> Self {
        Self {
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
        }
    }

    /// Applies `self` first and then `then`.
    pub fn then(&self, then: &Permutation) -> Self {
        assert_eq!(self.len(), then.len());
        let forward: Vec<usize> = self.forward.iter().map(|&m| then.forward[m]).collect();
        Self::from_forward(forward).expect("composition of permutations is a permutation")
    }

    /// Moves a vector from old to new numbering.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for (old, &v) in x.iter().enumerate() {
            y[self.forward[old]] = v;
        }
        y
    }

    /// Moves a vector from new back to old numbering.
    pub fn apply_inverse(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; y.len()];
        for (new, &v) in y.iter().enumerate() {
            x[self.inverse[new]] = v;
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> SparseSpdMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i + 1, i, -1.0));
            }
        }
        SparseSpdMatrix::from_triplets(n, &t).unwrap()
    }

    #[test]
    fn triplets_mirror_and_sum() {
        let a = SparseSpdMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 1, 0.5), (1, 0, 0.25), (1, 1, 2.0), (1, 1, 1.0)]).unwrap();
        assert_eq!(a.get(1, 0), 0.75);
        assert_eq!(a.get(0, 1), 0.75);
        assert_eq!(a.get(1, 1), 3.0);
        assert_eq!(a.nnz_lower(), 3);
        assert_eq!(a.nnz(), 4);
    }

    #[test]
    fn missing_and_nonpositive_diagonals() {
        let e = SparseSpdMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 0, 0.5)]).unwrap_err();
        assert!(matches!(e, SparseError::MissingDiagonal { index: 1 }));
        let e = SparseSpdMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, -2.0)]).unwrap_err();
        assert!(matches!(e, SparseError::NonPositiveDiagonal { index: 1, .. }));
    }

    #[test]
    fn matvec_matches_dense() {
        let a = path(6);
        let x: Vec<f64> = (0..6).map(|i| i as f64 + 1.0).collect();
        let y = a.mul_vec(&x);
        let d = a.to_dense();
        for i in 0..6 {
            let e: f64 = (0..6).map(|j| d[(i, j)] * x[j]).sum();
            assert_eq!(y[i], e);
        }
    }

    #[test]
    fn permute_moves_entries() {
        let a = path(4);
        let p = Permutation::from_forward(vec![3, 1, 0, 2]).unwrap();
        let b = a.permute(&p);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(b.get(p.new_index(i), p.new_index(j)), a.get(i, j));
            }
        }
        assert_eq!(a.permute(&Permutation::identity(4)), a);
    }

    #[test]
    fn permutation_composition_and_vectors() {
        let p = Permutation::from_forward(vec![2, 0, 1]).unwrap();
        let q = Permutation::from_forward(vec![1, 2, 0]).unwrap();
        let pq = p.then(&q);
        for i in 0..3 {
            assert_eq!(pq.new_index(i), q.new_index(p.new_index(i)));
        }
        let x = vec![10.0, 20.0, 30.0];
        assert_eq!(p.apply_inverse(&p.apply(&x)), x);
        assert_eq!(p.apply(&x), vec![20.0, 30.0, 10.0]);
        assert!(Permutation::from_forward(vec![0, 0]).is_err());
    }

    #[test]
    fn dense_block_reads_both_triangles() {
        let a = path(5);
        let b = a.dense_block(&[1, 2], &[1, 2, 3]);
        assert_eq!(b, DenseMatrix::from_rows(2, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0]));
    }

    #[test]
    fn principal_range_renumbers() {
        let a = path(5);
        let s = a.principal_range(1, 4);
        assert_eq!(s.to_dense(), path(3).to_dense());
    }

    #[test]
    fn adjacency_lists_neighbours() {
        let (xadj, adj) = path(4).adjacency();
        assert_eq!(xadj, vec![0, 1, 3, 5, 6]);
        assert_eq!(adj, vec![1, 0, 2, 1, 3, 2]);
    }
}
