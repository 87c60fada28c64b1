//! Low eigenvectors of the graph Laplacian by a block Krylov method with full
//! orthogonalization and Rayleigh-Ritz extraction. The constant vector is deflated
//! explicitly, so the method returns the eigenvectors that follow it.

use nalgebra::{DMatrix, SymmetricEigen};

use super::graph::Graph;
use super::Coordinates;
use crate::dense::gaussian_matrix;
use crate::sparse::SparseSpdMatrix;

/// Settings for the Laplacian eigensolver.
#[derive(Clone, Copy, Debug)]
pub struct SpectralOptions {
    /// Residual tolerance relative to an upper bound on the Laplacian norm.
    pub tol: f64,
    /// Maximum number of block Krylov steps.
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            tol: 1e-2,
            max_iter: 200,
            seed: 0x5eed,
        }
    }
}

/// Result of [`laplacian_eigenvectors`].
#[derive(Clone, Debug)]
pub struct LaplacianEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub converged: bool,
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn orthogonalize_against(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, v);
            v.iter_mut().zip(q).for_each(|(vi, qi)| *vi -= c * qi);
        }
    }
}

/// The `count` smallest eigenpairs of the graph Laplacian orthogonal to the constant vector.
///
/// Vectors are unit length and signed so that their largest-magnitude entry is positive.
/// Fewer than `count` pairs are returned when the graph has fewer than `count + 1` vertices.
pub fn laplacian_eigenvectors(graph: &Graph, count: usize, opts: &SpectralOptions) -> LaplacianEigen {
    let n = graph.n();
    let want = count.min(n.saturating_sub(1));
    if want == 0 {
        return LaplacianEigen {
            values: vec![],
            vectors: vec![],
            residuals: vec![],
            converged: true,
        };
    }
    let norm_bound = (2 * graph.max_degree()).max(1) as f64;
    let block = (want + 2).min(n - 1);
    let constant = vec![1.0 / (n as f64).sqrt(); n];

    let mut basis: Vec<Vec<f64>> = vec![constant];
    let mut images: Vec<Vec<f64>> = vec![vec![0.0; n]];
    let start = gaussian_matrix(n, block, opts.seed);
    let mut pending: Vec<Vec<f64>> = (0..block).map(|j| start.col(j).to_vec()).collect();

    let mut best = LaplacianEigen {
        values: vec![],
        vectors: vec![],
        residuals: vec![],
        converged: false,
    };
    for _step in 0..opts.max_iter.max(1) {
        let mut added = 0;
        for mut v in pending.drain(..) {
            if basis.len() == n {
                break;
            }
            let before = dot(&v, &v).sqrt();
            orthogonalize_against(&mut v, &basis);
            let norm = dot(&v, &v).sqrt();
            if before == 0.0 || norm <= 1e-10 * before {
                continue;
            }
            v.iter_mut().for_each(|x| *x /= norm);
            let mut lv = vec![0.0; n];
            graph.laplacian_apply(&v, &mut lv);
            basis.push(v);
            images.push(lv);
            added += 1;
        }
        let k = basis.len() - 1;
        if k >= want {
            let t = DMatrix::from_fn(k, k, |i, j| 0.5 * (dot(&basis[i + 1], &images[j + 1]) + dot(&basis[j + 1], &images[i + 1])));
            let eig = SymmetricEigen::new(t);
            let mut idx: Vec<usize> = (0..k).collect();
            idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
            let mut values = Vec::with_capacity(want);
            let mut vectors = Vec::with_capacity(want);
            let mut residuals = Vec::with_capacity(want);
            for &e in idx.iter().take(want) {
                let theta = eig.eigenvalues[e];
                let mut x = vec![0.0; n];
                let mut lx = vec![0.0; n];
                for i in 0..k {
                    let c = eig.eigenvectors[(i, e)];
                    x.iter_mut().zip(&basis[i + 1]).for_each(|(xv, b)| *xv += c * b);
                    lx.iter_mut().zip(&images[i + 1]).for_each(|(xv, b)| *xv += c * b);
                }
                let r = lx.iter().zip(&x).map(|(a, b)| (a - theta * b).powi(2)).sum::<f64>().sqrt();
                let nx = dot(&x, &x).sqrt();
                x.iter_mut().for_each(|v| *v /= nx);
                fix_sign(&mut x);
                values.push(theta);
                vectors.push(x);
                residuals.push(r / nx);
            }
            let converged = residuals.iter().all(|&r| r <= opts.tol * norm_bound);
            best = LaplacianEigen {
                values,
                vectors,
                residuals,
                converged,
            };
            if converged || basis.len() == n {
                best.converged = true;
                break;
            }
        }
        if added == 0 || basis.len() == n {
            break;
        }
        // next block: images of the newest basis vectors
        let len = images.len();
        pending = images[len - added..].to_vec();
    }
    best
}

fn fix_sign(x: &mut [f64]) {
    let mut best = 0;
    for (i, v) in x.iter().enumerate() {
        if v.abs() > x[best].abs() * (1.0 + 1e-12) {
            best = i;
        }
    }
    if x[best] < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
}

/// Three spectral coordinates per index: the normalized constant vector followed by the
/// two lowest nontrivial Laplacian eigenvectors of the matrix graph.
pub fn spectral_coordinates(a: &SparseSpdMatrix, opts: &SpectralOptions) -> (Coordinates, LaplacianEigen) {
    let g = Graph::from_matrix(a);
    let n = g.n();
    let eig = laplacian_eigenvectors(&g, 2, opts);
    let c0 = 1.0 / (n.max(1) as f64).sqrt();
    let points = (0..n)
        .map(|i| {
            let v1 = eig.vectors.first().map_or(0.0, |v| v[i]);
            let v2 = eig.vectors.get(1).map_or(0.0, |v| v[i]);
            [c0, v1, v2]
        })
        .collect();
    (Coordinates::new(points), eig)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_graph(n: usize) -> Graph {
        let mut xadj = vec![0];
        let mut adj = vec![];
        for v in 0..n {
            if v > 0 {
                adj.push(v - 1);
            }
            if v + 1 < n {
                adj.push(v + 1);
            }
            xadj.push(adj.len());
        }
        Graph::from_adjacency(xadj, adj)
    }

    #[test]
    fn path_fiedler_vector_is_monotone() {
        let eig = laplacian_eigenvectors(&path_graph(8), 2, &SpectralOptions::default());
        let v = &eig.vectors[0];
        let inc = v.windows(2).all(|w| w[1] > w[0]);
        let dec = v.windows(2).all(|w| w[1] < w[0]);
        assert!(inc || dec, "{v:?}");
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / 8.0).cos();
        assert!((eig.values[0] - exact).abs() < 1e-10);
        let s: f64 = v.iter().sum();
        assert!(s.abs() < 1e-10);
    }

    #[test]
    fn tiny_graphs() {
        let eig = laplacian_eigenvectors(&path_graph(2), 2, &SpectralOptions::default());
        assert_eq!(eig.vectors.len(), 1);
        assert!((eig.values[0] - 2.0).abs() < 1e-12);
        let eig = laplacian_eigenvectors(&path_graph(1), 2, &SpectralOptions::default());
        assert!(eig.vectors.is_empty());
    }
}
