//! Adjacency graph of a sparse matrix with helpers for working on vertex subsets.

use crate::sparse::SparseSpdMatrix;

#[derive(Clone, Debug)]
pub struct Graph {
    xadj: Vec<usize>,
    adj: Vec<usize>,
}

impl Graph {
    pub fn from_matrix(a: &SparseSpdMatrix) -> Self {
        let (xadj, adj) = a.adjacency();
        Self { xadj, adj }
    }

    pub fn from_adjacency(xadj: Vec<usize>, adj: Vec<usize>) -> Self {
        Self { xadj, adj }
    }

    pub fn n(&self) -> usize {
        self.xadj.len() - 1
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[self.xadj[v]..self.xadj[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.xadj[v + 1] - self.xadj[v]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n()).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    /// `y = 𝕃 x` for the graph Laplacian `𝕃 = D - Adj`.
    pub fn laplacian_apply(&self, x: &[f64], y: &mut [f64]) {
        for v in 0..self.n() {
            let nb = self.neighbors(v);
            let mut s = nb.len() as f64 * x[v];
            for &u in nb {
                s -= x[u];
            }
            y[v] = s;
        }
    }

    /// Graph induced by `vertices`, renumbered by position in the list.
    pub fn induced(&self, vertices: &[usize]) -> Graph {
        let mut local = vec![usize::MAX; self.n()];
        for (k, &v) in vertices.iter().enumerate() {
            local[v] = k;
        }
        let mut xadj = Vec::with_capacity(vertices.len() + 1);
        let mut adj = Vec::new();
        xadj.push(0);
        for &v in vertices {
            for &u in self.neighbors(v) {
                if local[u] != usize::MAX {
                    adj.push(local[u]);
                }
            }
            xadj.push(adj.len());
        }
        Graph { xadj, adj }
    }
}

/// Membership marks reused across many subset queries without clearing.
pub(crate) struct Marker {
    stamp: Vec<u32>,
    current: u32,
}

impl Marker {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            stamp: vec![0; n],
            current: 0,
        }
    }

    /// Starts a fresh, empty set.
    pub(crate) fn next(&mut self) -> u32 {
        self.current += 1;
        if self.current == u32::MAX {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.current = 1;
        }
        self.current
    }

    #[inline]
    pub(crate) fn mark(&mut self, v: usize, tag: u32) {
        self.stamp[v] = tag;
    }

    #[inline]
    pub(crate) fn has(&self, v: usize, tag: u32) -> bool {
        self.stamp[v] == tag
    }
}
