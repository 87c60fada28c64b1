//! Column-major dense matrices and the handful of kernels the factorization needs:
//! Cholesky, triangular solves, matrix products, orthonormalization and a seeded
//! Gaussian sampler.

use std::ops::{Index, IndexMut};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::DenseError;

/// Dense `f64` matrix stored column by column.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(nrows * ncols);
        for j in 0..ncols {
            for i in 0..nrows {
                data.push(f(i, j));
            }
        }
        Self { nrows, ncols, data }
    }

    /// Builds a matrix from row-major values, the natural layout for literals.
    pub fn from_rows(nrows: usize, ncols: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), nrows * ncols, "value count does not match shape");
        Self::from_fn(nrows, ncols, |i, j| values[i * ncols + j])
    }

    pub fn from_col_major(nrows: usize, ncols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), nrows * ncols, "value count does not match shape");
        Self { nrows, ncols, data }
    }

    /// Single column built from a vector.
    pub fn from_column(v: &[f64]) -> Self {
        Self::from_col_major(v.len(), 1, v.to_vec())
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)])
    }

    /// Rows `rows` of `self`, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self::from_fn(rows.len(), self.ncols, |i, j| self[(rows[i], j)])
    }

    pub fn select_cols(&self, cols: &[usize]) -> Self {
        let mut out = Self::zeros(self.nrows, cols.len());
        for (k, &c) in cols.iter().enumerate() {
            out.col_mut(k).copy_from_slice(self.col(c));
        }
        out
    }

    pub fn block(&self, row0: usize, nrows: usize, col0: usize, ncols: usize) -> Self {
        Self::from_fn(nrows, ncols, |i, j| self[(row0 + i, col0 + j)])
    }

    pub fn set_block(&mut self, row0: usize, col0: usize, src: &DenseMatrix) {
        for j in 0..src.ncols {
            let dst = &mut self.data[(col0 + j) * self.nrows + row0..][..src.nrows];
            dst.copy_from_slice(src.col(j));
        }
    }

    /// Stacks `top` above `bottom`.
    pub fn vstack(top: &DenseMatrix, bottom: &DenseMatrix) -> Self {
        assert_eq!(top.ncols, bottom.ncols);
        let mut out = Self::zeros(top.nrows + bottom.nrows, top.ncols);
        out.set_block(0, 0, top);
        out.set_block(top.nrows, 0, bottom);
        out
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn add_assign(&mut self, other: &DenseMatrix) {
        assert_eq!(self.shape(), other.shape());
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b);
    }

    pub fn sub_assign(&mut self, other: &DenseMatrix) {
        assert_eq!(self.shape(), other.shape());
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a -= b);
    }

    pub fn sub(&self, other: &DenseMatrix) -> Self {
        let mut out = self.clone();
        out.sub_assign(other);
        out
    }

    /// Zeroes the strict upper triangle.
    pub fn lower_triangle(&self) -> Self {
        Self::from_fn(self.nrows, self.ncols, |i, j| if i >= j { self[(i, j)] } else { 0.0 })
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        &self.data[j * self.nrows + i]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        &mut self.data[j * self.nrows + i]
    }
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
fn dot(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = x.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += x[k] * y[k];
        acc[1] += x[k + 1] * y[k + 1];
        acc[2] += x[k + 2] * y[k + 2];
        acc[3] += x[k + 3] * y[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..x.len() {
        s += x[k] * y[k];
    }
    s
}

/// `c = alpha * op(a) * op(b) + beta * c`, where `op` optionally transposes.
pub fn gemm(alpha: f64, a: &DenseMatrix, trans_a: bool, b: &DenseMatrix, trans_b: bool, beta: f64, c: &mut DenseMatrix) {
    let (m, ka) = if trans_a { (a.ncols, a.nrows) } else { (a.nrows, a.ncols) };
    let (kb, n) = if trans_b { (b.ncols, b.nrows) } else { (b.nrows, b.ncols) };
    assert_eq!(ka, kb, "inner dimensions differ");
    assert_eq!((c.nrows, c.ncols), (m, n), "output shape mismatch");
    if beta != 1.0 {
        c.scale(beta);
    }
    if m == 0 || n == 0 || ka == 0 || alpha == 0.0 {
        return;
    }
    match (trans_a, trans_b) {
        (false, false) => {
            for j in 0..n {
                let bj = b.col(j);
                let cj = &mut c.data[j * m..(j + 1) * m];
                for (p, &bpj) in bj.iter().enumerate() {
                    if bpj != 0.0 {
                        axpy(alpha * bpj, a.col(p), cj);
                    }
                }
            }
        }
        (true, false) => {
            for j in 0..n {
                let bj = b.col(j);
                for i in 0..m {
                    c.data[j * m + i] += alpha * dot(a.col(i), bj);
                }
            }
        }
        (false, true) => {
            for p in 0..ka {
                let ap = a.col(p);
                let bp = b.col(p);
                for j in 0..n {
                    let bjp = bp[j];
                    if bjp != 0.0 {
                        axpy(alpha * bjp, ap, &mut c.data[j * m..(j + 1) * m]);
                    }
                }
            }
        }
        (true, true) => {
            let at = a.transpose();
            gemm(alpha, &at, false, b, true, 1.0, c);
        }
    }
}

/// `a * b`
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let mut c = DenseMatrix::zeros(a.nrows, b.ncols);
    gemm(1.0, a, false, b, false, 0.0, &mut c);
    c
}

/// `aᵀ * b`
pub fn matmul_tn(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let mut c = DenseMatrix::zeros(a.ncols, b.ncols);
    gemm(1.0, a, true, b, false, 0.0, &mut c);
    c
}

/// `a * bᵀ`
pub fn matmul_nt(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let mut c = DenseMatrix::zeros(a.nrows, b.nrows);
    gemm(1.0, a, false, b, true, 0.0, &mut c);
    c
}

/// Lower Cholesky factor of the symmetric matrix whose lower triangle is stored in `a`.
/// The strict upper triangle of the input is never read.
pub fn cholesky(a: &DenseMatrix) -> Result<DenseMatrix, DenseError> {
    let mut l = a.clone();
    cholesky_in_place(&mut l)?;
    Ok(l)
}

pub fn cholesky_in_place(a: &mut DenseMatrix) -> Result<(), DenseError> {
    let n = a.nrows;
    if a.ncols != n {
        return Err(DenseError::DimensionMismatch(format!("cholesky of a {}x{} matrix", n, a.ncols)));
    }
    for j in 0..n {
        for i in 0..j {
            a.data[j * n + i] = 0.0;
        }
        // left-looking: column j minus the contributions of the finished columns
        for k in 0..j {
            let ljk = a.data[k * n + j];
            if ljk != 0.0 {
                let (done, rest) = a.data.split_at_mut(j * n);
                axpy(-ljk, &done[k * n + j..(k + 1) * n], &mut rest[j..n]);
            }
        }
        let d = a.data[j * n + j];
        if !(d > 0.0) || !d.is_finite() {
            return Err(DenseError::Indefinite { pivot: j, value: d });
        }
        let s = d.sqrt();
        let col = &mut a.data[j * n + j..(j + 1) * n];
        col[0] = s;
        let inv = 1.0 / s;
        col[1..].iter_mut().for_each(|v| *v *= inv);
    }
    Ok(())
}

/// Which side the triangular factor multiplies the unknown from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Solve `op(L) X = B`.
    Left,
    /// Solve `X op(L) = B`.
    Right,
}

fn check_diagonal(l: &DenseMatrix) -> Result<(), DenseError> {
    if l.nrows != l.ncols {
        return Err(DenseError::DimensionMismatch(format!("triangular factor is {}x{}", l.nrows, l.ncols)));
    }
    for i in 0..l.nrows {
        let d = l[(i, i)];
        if d == 0.0 || !d.is_finite() {
            return Err(DenseError::SingularDiagonal { index: i });
        }
    }
    Ok(())
}

/// Solves with the lower-triangular `l` (or its transpose) from the given side.
pub fn tri_solve(l: &DenseMatrix, b: &DenseMatrix, side: Side, transpose: bool) -> Result<DenseMatrix, DenseError> {
    let mut x = b.clone();
    tri_solve_in_place(l, &mut x, side, transpose)?;
    Ok(x)
}

pub fn tri_solve_in_place(l: &DenseMatrix, b: &mut DenseMatrix, side: Side, transpose: bool) -> Result<(), DenseError> {
    check_diagonal(l)?;
    let n = l.nrows;
    match side {
        Side::Left => {
            if b.nrows != n {
                return Err(DenseError::DimensionMismatch(format!("left solve with {} rows against order {}", b.nrows, n)));
            }
            for c in 0..b.ncols {
                let x = b.col_mut(c);
                if transpose {
                    lower_trans_solve_vec(l, x);
                } else {
                    lower_solve_vec(l, x);
                }
            }
        }
        Side::Right => {
            if b.ncols != n {
                return Err(DenseError::DimensionMismatch(format!("right solve with {} columns against order {}", b.ncols, n)));
            }
            let m = b.nrows;
            if transpose {
                // X Lᵀ = B: column j of X only depends on earlier columns
                for j in 0..n {
                    for k in 0..j {
                        let ljk = l[(j, k)];
                        if ljk != 0.0 {
                            let (done, rest) = b.data.split_at_mut(j * m);
                            axpy(-ljk, &done[k * m..(k + 1) * m], &mut rest[..m]);
                        }
                    }
                    let inv = 1.0 / l[(j, j)];
                    b.col_mut(j).iter_mut().for_each(|v| *v *= inv);
                }
            } else {
                // X L = B: backward over columns
                for j in (0..n).rev() {
                    for k in j + 1..n {
                        let lkj = l[(k, j)];
                        if lkj != 0.0 {
                            let (head, tail) = b.data.split_at_mut(k * m);
                            axpy(-lkj, &tail[..m], &mut head[j * m..(j + 1) * m]);
                        }
                    }
                    let inv = 1.0 / l[(j, j)];
                    b.col_mut(j).iter_mut().for_each(|v| *v *= inv);
                }
            }
        }
    }
    Ok(())
}

/// Forward substitution `L x = b` for a single vector, without diagonal checks.
#[inline]
pub(crate) fn lower_solve_vec(l: &DenseMatrix, x: &mut [f64]) {
    let n = l.nrows;
    for j in 0..n {
        let xj = x[j] / l.data[j * n + j];
        x[j] = xj;
        if xj != 0.0 {
            axpy(-xj, &l.data[j * n + j + 1..(j + 1) * n], &mut x[j + 1..n]);
        }
    }
}

/// Backward substitution `Lᵀ x = b` for a single vector, without diagonal checks.
#[inline]
pub(crate) fn lower_trans_solve_vec(l: &DenseMatrix, x: &mut [f64]) {
    let n = l.nrows;
    for j in (0..n).rev() {
        let s = dot(&l.data[j * n + j + 1..(j + 1) * n], &x[j + 1..n]);
        x[j] = (x[j] - s) / l.data[j * n + j];
    }
}

/// Orthonormal basis for the range of `g` by classical Gram-Schmidt with one
/// reorthogonalization pass. Columns that are numerically dependent on earlier ones
/// are dropped, so the result may have fewer columns than `g`.
pub fn orthonormalize(g: &DenseMatrix) -> DenseMatrix {
    let m = g.nrows;
    let scale = (0..g.ncols).map(|j| dot(g.col(j), g.col(j)).sqrt()).fold(0.0, f64::max);
    if scale == 0.0 || m == 0 {
        return DenseMatrix::zeros(m, 0);
    }
    let drop_tol = 1e-12 * scale;
    let mut q: Vec<f64> = Vec::with_capacity(m * g.ncols.min(m));
    let mut kept = 0usize;
    let mut coeffs = vec![0.0; g.ncols];
    for j in 0..g.ncols {
        if kept == m {
            break;
        }
        let mut v = g.col(j).to_vec();
        let start = dot(&v, &v).sqrt();
        if start <= drop_tol {
            continue;
        }
        for _pass in 0..2 {
            for k in 0..kept {
                coeffs[k] = dot(&q[k * m..(k + 1) * m], &v);
            }
            for k in 0..kept {
                axpy(-coeffs[k], &q[k * m..(k + 1) * m], &mut v);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm <= drop_tol || norm <= 1e-10 * start {
            continue;
        }
        let inv = 1.0 / norm;
        q.extend(v.iter().map(|x| x * inv));
        kept += 1;
    }
    DenseMatrix::from_col_major(m, kept, q)
}

/// Matrix of independent standard normal entries from a ChaCha stream seeded by `seed`.
/// Entries are produced column by column with the Box-Muller transform, so the result
/// depends only on the seed and the shape.
pub fn gaussian_matrix(nrows: usize, ncols: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = nrows * ncols;
    let mut data = Vec::with_capacity(total + 1);
    while data.len() < total {
        let u1 = unit_open(&mut rng);
        let u2 = unit_open(&mut rng);
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        data.push(r * theta.cos());
        data.push(r * theta.sin());
    }
    data.truncate(total);
    DenseMatrix::from_col_major(nrows, ncols, data)
}

/// Uniform sample in (0, 1].
fn unit_open(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
}

/// Mixes a base seed with block coordinates into an independent stream seed.
pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(mix(base) ^ a) ^ b.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}
