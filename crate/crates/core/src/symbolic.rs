//! Elimination tree, supernode partition and supernodal row structures.

use std::ops::Range;

use serde::Serialize;

use crate::ordering::{NodeKind, SeparatorTree};
use crate::sparse::SparseSpdMatrix;

/// Parent of every column in the elimination tree of a (permuted) matrix; `None` marks roots.
pub fn build_etree(a: &SparseSpdMatrix) -> Vec<Option<usize>> {
    let n = a.n();
    let (xadj, adj) = a.adjacency();
    let mut parent = vec![None; n];
    let mut ancestor: Vec<Option<usize>> = vec![None; n];
    for k in 0..n {
        for &i in &adj[xadj[k]..xadj[k + 1]] {
            if i >= k {
                break;
            }
            let mut r = i;
            loop {
                match ancestor[r] {
                    Some(x) if x == k => break,
                    Some(x) => {
                        ancestor[r] = Some(k);
                        r = x;
                    }
                    None => {
                        ancestor[r] = Some(k);
                        parent[r] = Some(k);
                        break;
                    }
                }
            }
        }
    }
    parent
}

/// Number of nonzeros in every column of the Cholesky factor, diagonal included.
pub fn column_counts(a: &SparseSpdMatrix, etree: &[Option<usize>]) -> Vec<usize> {
    let n = a.n();
    let (xadj, adj) = a.adjacency();
    let mut counts = vec![1usize; n];
    let mut mark = vec![usize::MAX; n];
    for i in 0..n {
        mark[i] = i;
        for &k in &adj[xadj[i]..xadj[i + 1]] {
            if k >= i {
                break;
            }
            // walk the row subtree of row i from k up to i
            let mut j = k;
            while mark[j] != i {
                counts[j] += 1;
                mark[j] = i;
                j = etree[j].expect("row subtree stays below its root");
            }
        }
    }
    counts
}

/// A run of consecutive columns factored as one dense block column.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Supernode {
    pub cols: Range<usize>,
    /// Dissection-tree node when the supernode is exactly a separator of at least `tau_O` indices.
    pub separator: Option<usize>,
}

impl Supernode {
    pub fn len(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }
}

/// Ordered partition of `0..n` into supernodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupernodePartition {
    pub supernodes: Vec<Supernode>,
    pub col_to_sn: Vec<usize>,
}

impl SupernodePartition {
    pub fn from_ranges(n: usize, ranges: Vec<(Range<usize>, Option<usize>)>) -> Self {
        let mut col_to_sn = vec![usize::MAX; n];
        let mut supernodes = Vec::with_capacity(ranges.len());
        for (j, (cols, separator)) in ranges.into_iter().enumerate() {
            for c in cols.clone() {
                col_to_sn[c] = j;
            }
            supernodes.push(Supernode { cols, separator });
        }
        debug_assert!(col_to_sn.iter().all(|&s| s != usize::MAX));
        Self { supernodes, col_to_sn }
    }

    pub fn len(&self) -> usize {
        self.supernodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.supernodes.is_empty()
    }
}

/// Thresholds for relaxed amalgamation of small supernodes.
#[derive(Clone, Copy, Debug)]
pub struct Amalgamation {
    /// Merge unconditionally while the result has at most this many columns.
    pub max_cols: usize,
    /// Otherwise merge while explicit zeros stay below this fraction of stored entries.
    pub max_zero_fraction: f64,
}

impl Default for Amalgamation {
    fn default() -> Self {
        Self {
            max_cols: 32,
            max_zero_fraction: 0.25,
        }
    }
}

/// Supernode partition of a permuted matrix.
///
/// Every separator with at least `tau_o` indices becomes exactly one supernode. Other
/// columns are grouped into fundamental supernodes that are then merged along the
/// elimination tree by [`Amalgamation`]. No supernode crosses a position in `breaks`.
pub fn form_supernodes(a: &SparseSpdMatrix, etree: &[Option<usize>], septree: &SeparatorTree, tau_o: usize, breaks: &[usize], relax: Amalgamation) -> SupernodePartition {
    let n = a.n();
    let counts = column_counts(a, etree);
    let mut forced: Vec<Option<usize>> = vec![None; n];
    let mut is_break = vec![false; n + 1];
    for &b in breaks {
        if b <= n {
            is_break[b] = true;
        }
    }
    for (id, node) in septree.separators() {
        if node.kind == NodeKind::Separator && !node.vertices.is_empty() && node.vertices.len() >= tau_o {
            for c in node.vertices.clone() {
                forced[c] = Some(id);
            }
            is_break[node.vertices.start] = true;
            is_break[node.vertices.end] = true;
        }
    }
    let mut nchildren = vec![0usize; n];
    for p in etree.iter().flatten() {
        nchildren[*p] += 1;
    }

    // fundamental supernodes
    let mut fundamental: Vec<(Range<usize>, Option<usize>)> = Vec::new();
    let mut start = 0;
    for j in 1..=n {
        let split = j == n
            || is_break[j]
            || forced[j] != forced[j - 1]
            || (forced[j].is_none() && (etree[j - 1] != Some(j) || nchildren[j] != 1 || counts[j - 1] != counts[j] + 1));
        if split {
            fundamental.push((start..j, forced[start]));
            start = j;
        }
    }

    // relaxed amalgamation of adjacent child/parent pairs
    struct Group {
        cols: Range<usize>,
        separator: Option<usize>,
        true_nnz: usize,
        below: usize,
    }
    let mut groups: Vec<Group> = Vec::new();
    for (cols, separator) in fundamental {
        let true_nnz: usize = cols.clone().map(|c| counts[c]).sum();
        let below = counts[cols.end - 1] - 1;
        let current = Group {
            cols,
            separator,
            true_nnz,
            below,
        };
        if let Some(prev) = groups.last_mut() {
            let is_parent = etree[prev.cols.end - 1].is_some_and(|p| current.cols.contains(&p));
            if prev.separator.is_none() && current.separator.is_none() && !is_break[current.cols.start] && is_parent {
                let nc = prev.cols.len() + current.cols.len();
                let stored = nc * (nc + 1) / 2 + nc * current.below;
                let true_nnz = prev.true_nnz + current.true_nnz;
                let zeros = stored.saturating_sub(true_nnz);
                if nc <= relax.max_cols || (zeros as f64) < relax.max_zero_fraction * stored as f64 {
                    prev.cols = prev.cols.start..current.cols.end;
                    prev.true_nnz = true_nnz;
                    prev.below = current.below;
                    continue;
                }
            }
        }
        groups.push(current);
    }
    SupernodePartition::from_ranges(n, groups.into_iter().map(|g| (g.cols, g.separator)).collect())
}

/// Supernode partition together with row structures and the supernodal tree.
#[derive(Clone, Debug)]
pub struct Symbolic {
    pub partition: SupernodePartition,
    /// Sorted rows below each supernode's diagonal block that hold structural nonzeros.
    pub rows: Vec<Vec<usize>>,
    /// Supernode containing the first row of each structure.
    pub parent: Vec<Option<usize>>,
    /// For every supernode `j`, the earlier supernodes whose rows meet the columns of `j`.
    pub descendants: Vec<Vec<usize>>,
}

impl Symbolic {
    pub fn len(&self) -> usize {
        self.partition.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partition.is_empty()
    }

    #[inline]
    pub fn cols(&self, j: usize) -> Range<usize> {
        self.partition.supernodes[j].cols.clone()
    }

    #[inline]
    pub fn sn_of(&self, col: usize) -> usize {
        self.partition.col_to_sn[col]
    }

    pub fn n(&self) -> usize {
        self.partition.col_to_sn.len()
    }

    /// Entries of a fully dense supernodal factor: lower diagonal triangles plus rectangles.
    pub fn dense_scalars(&self) -> usize {
        (0..self.len())
            .map(|j| {
                let c = self.cols(j).len();
                c * (c + 1) / 2 + c * self.rows[j].len()
            })
            .sum()
    }
}

/// Row structure of every supernode by the supernodal symbolic factorization: the rows
/// of the original columns plus the inherited structure of the child supernodes.
pub fn compute_row_structures(a: &SparseSpdMatrix, partition: SupernodePartition) -> Symbolic {
    let m = partition.len();
    let n = a.n();
    let mut rows: Vec<Vec<usize>> = Vec::with_capacity(m);
    let mut parent = vec![None; m];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut mark = vec![usize::MAX; n];
    for j in 0..m {
        let cols = partition.supernodes[j].cols.clone();
        let mut list = Vec::new();
        for c in cols.clone() {
            let (rr, _) = a.column(c);
            for &r in rr {
                if r >= cols.end && mark[r] != j {
                    mark[r] = j;
                    list.push(r);
                }
            }
        }
        for &k in &children[j] {
            let rk: &Vec<usize> = &rows[k];
            for &r in rk {
                if r >= cols.end && mark[r] != j {
                    mark[r] = j;
                    list.push(r);
                }
            }
        }
        list.sort_unstable();
        if let Some(&first) = list.first() {
            let p = partition.col_to_sn[first];
            parent[j] = Some(p);
            children[p].push(j);
        }
        rows.push(list);
    }
    let mut descendants = vec![Vec::new(); m];
    for (k, rk) in rows.iter().enumerate() {
        let mut last = usize::MAX;
        for &r in rk {
            let s = partition.col_to_sn[r];
            if s != last {
                descendants[s].push(k);
                last = s;
            }
        }
    }
    Symbolic {
        partition,
        rows,
        parent,
        descendants,
    }
}

/// Convenience: elimination tree, supernodes and row structures in one call.
pub fn analyze(a: &SparseSpdMatrix, septree: &SeparatorTree, tau_o: usize, breaks: &[usize]) -> Symbolic {
    let etree = build_etree(a);
    let partition = form_supernodes(a, &etree, septree, tau_o, breaks, Amalgamation::default());
    compute_row_structures(a, partition)
}

/// Summary of a symbolic analysis for reports.
#[derive(Clone, Debug, Serialize)]
pub struct SymbolicSummary {
    pub supernodes: usize,
    pub separator_supernodes: usize,
    pub largest_supernode: usize,
    pub factor_entries: usize,
    pub sizes: Vec<usize>,
}

impl SymbolicSummary {
    pub fn of(sym: &Symbolic) -> Self {
        let sizes: Vec<usize> = (0..sym.len()).map(|j| sym.cols(j).len()).collect();
        Self {
            supernodes: sym.len(),
            separator_supernodes: sym.partition.supernodes.iter().filter(|s| s.separator.is_some()).count(),
            largest_supernode: sizes.iter().copied().max().unwrap_or(0),
            factor_entries: sym.dense_scalars(),
            sizes,
        }
    }
}
