//! Nested dissection producing a fill-reducing permutation and its separator tree.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::graph::{Graph, Marker};
use super::spectral::{laplacian_eigenvectors, SpectralOptions};
use super::Coordinates;
use crate::error::OrderingError;
use crate::sparse::{Permutation, SparseSpdMatrix};

/// How a connected vertex set is bisected.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeparatorMethod {
    /// Middle level of a breadth-first level structure rooted at a pseudo-peripheral vertex.
    #[default]
    LevelStructure,
    /// Median split of the Fiedler vector of the induced subgraph.
    Fiedler,
    /// Median split along the longest axis of the vertex coordinates.
    Geometric,
}

#[derive(Clone, Copy, Debug)]
pub struct NdOptions {
    /// Vertex sets of at most this size are not dissected further.
    pub leaf_size: usize,
    pub method: SeparatorMethod,
}

impl Default for NdOptions {
    fn default() -> Self {
        Self {
            leaf_size: 64,
            method: SeparatorMethod::LevelStructure,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Leaf,
    Separator,
}

/// Node of the dissection tree. Index ranges refer to the permuted numbering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SepNode {
    /// Indices owned by this node: the separator itself, or the whole leaf domain.
    pub vertices: Range<usize>,
    /// Indices of the node and all of its descendants.
    pub subtree: Range<usize>,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
    pub kind: NodeKind,
    pub depth: usize,
}

/// Dissection tree with nodes stored in post-order; the root is the last node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeparatorTree {
    pub nodes: Vec<SepNode>,
}

impl SeparatorTree {
    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn separators(&self) -> impl Iterator<Item = (usize, &SepNode)> {
        self.nodes.iter().enumerate().filter(|(_, s)| s.kind == NodeKind::Separator)
    }
}

/// Permutation plus dissection tree.
#[derive(Clone, Debug)]
pub struct NestedDissection {
    pub perm: Permutation,
    pub tree: SeparatorTree,
}

/// Nested dissection with the default level-structure separators.
pub fn nested_dissection(a: &SparseSpdMatrix, leaf_size: usize) -> NestedDissection {
    nested_dissection_with(
        a,
        &NdOptions {
            leaf_size,
            method: SeparatorMethod::LevelStructure,
        },
        None,
    )
    .expect("level-structure dissection needs no coordinates")
}

/// Nested dissection with an explicit separator method. Geometric splitting needs
/// coordinates indexed by the original matrix numbering.
pub fn nested_dissection_with(a: &SparseSpdMatrix, opts: &NdOptions, coords: Option<&Coordinates>) -> Result<NestedDissection, OrderingError> {
    if opts.method == SeparatorMethod::Geometric {
        match coords {
            None => return Err(OrderingError::MissingCoordinates),
            Some(c) if c.len() != a.n() => {
                return Err(OrderingError::DimensionMismatch {
                    expected: a.n(),
                    found: c.len(),
                })
            }
            _ => {}
        }
    }
    let graph = Graph::from_matrix(a);
    let n = graph.n();
    let mut d = Dissector {
        graph: &graph,
        opts: *opts,
        coords,
        set: Marker::new(n),
        seen: Marker::new(n),
        side: vec![0u8; n],
        order: Vec::with_capacity(n),
        nodes: Vec::new(),
    };
    if n > 0 {
        d.dissect((0..n).collect(), 0);
    } else {
        d.nodes.push(SepNode {
            vertices: 0..0,
            subtree: 0..0,
            children: vec![],
            parent: None,
            kind: NodeKind::Leaf,
            depth: 0,
        });
    }
    let perm = Permutation::from_order(d.order).expect("dissection visits every vertex once");
    Ok(NestedDissection {
        perm,
        tree: SeparatorTree { nodes: d.nodes },
    })
}

const SIDE_A: u8 = 0;
const SIDE_B: u8 = 1;
const SIDE_SEP: u8 = 2;

struct Dissector<'a> {
    graph: &'a Graph,
    opts: NdOptions,
    coords: Option<&'a Coordinates>,
    set: Marker,
    seen: Marker,
    side: Vec<u8>,
    order: Vec<usize>,
    nodes: Vec<SepNode>,
}

impl<'a> Dissector<'a> {
    fn dissect(&mut self, mut vertices: Vec<usize>, depth: usize) -> usize {
        let start = self.order.len();
        if vertices.len() <= self.opts.leaf_size.max(1) {
            vertices.sort_unstable();
            return self.push_node(vertices, vec![], start, NodeKind::Leaf, depth);
        }
        let tag = self.set.next();
        for &v in &vertices {
            self.set.mark(v, tag);
        }
        let comps = self.components(&vertices, tag);
        let (a, b, sep) = if comps.len() > 1 {
            let (a, b) = split_components(comps);
            (a, b, vec![])
        } else {
            self.bisect(&vertices, tag)
        };
        let mut children = Vec::new();
        for part in [a, b] {
            if !part.is_empty() {
                children.push(self.dissect(part, depth + 1));
            }
        }
        let mut sep = sep;
        sep.sort_unstable();
        self.push_node(sep, children, start, NodeKind::Separator, depth)
    }

    fn push_node(&mut self, vertices: Vec<usize>, children: Vec<usize>, subtree_start: usize, kind: NodeKind, depth: usize) -> usize {
        let first = self.order.len();
        self.order.extend_from_slice(&vertices);
        let id = self.nodes.len();
        for &c in &children {
            self.nodes[c].parent = Some(id);
        }
        self.nodes.push(SepNode {
            vertices: first..self.order.len(),
            subtree: subtree_start..self.order.len(),
            children,
            parent: None,
            kind,
            depth,
        });
        id
    }

    fn components(&mut self, vertices: &[usize], tag: u32) -> Vec<Vec<usize>> {
        let seen = self.seen.next();
        let mut comps = Vec::new();
        for &s in vertices {
            if self.seen.has(s, seen) {
                continue;
            }
            self.seen.mark(s, seen);
            let mut comp = vec![s];
            let mut head = 0;
            while head < comp.len() {
                let v = comp[head];
                head += 1;
                for &u in self.graph.neighbors(v) {
                    if self.set.has(u, tag) && !self.seen.has(u, seen) {
                        self.seen.mark(u, seen);
                        comp.push(u);
                    }
                }
            }
            comps.push(comp);
        }
        comps
    }

    fn bisect(&mut self, vertices: &[usize], tag: u32) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        let labelled = match self.opts.method {
            SeparatorMethod::LevelStructure => self.level_split(vertices, tag),
            SeparatorMethod::Geometric => {
                let coords = self.coords.expect("checked on entry");
                let keys: Vec<f64> = {
                    let axis = longest_axis(vertices, coords);
                    vertices.iter().map(|&v| coords.point(v)[axis]).collect()
                };
                self.median_split(vertices, tag, &keys).or_else(|| self.level_split(vertices, tag))
            }
            SeparatorMethod::Fiedler => {
                let sub = self.graph.induced(vertices);
                let eig = laplacian_eigenvectors(&sub, 1, &SpectralOptions::default());
                match eig.vectors.first() {
                    Some(f) => self.median_split(vertices, tag, f).or_else(|| self.level_split(vertices, tag)),
                    None => self.level_split(vertices, tag),
                }
            }
        };
        labelled.expect("a connected set larger than one vertex always has a level split");
        self.thin_separator(vertices, tag);
        let (mut a, mut b, mut s) = (vec![], vec![], vec![]);
        for &v in vertices {
            match self.side[v] {
                SIDE_A => a.push(v),
                SIDE_B => b.push(v),
                _ => s.push(v),
            }
        }
        (a, b, s)
    }

    fn degree_in(&self, v: usize, tag: u32) -> usize {
        self.graph.neighbors(v).iter().filter(|&&u| self.set.has(u, tag)).count()
    }

    fn levels(&mut self, root: usize, tag: u32) -> Vec<Vec<usize>> {
        let seen = self.seen.next();
        self.seen.mark(root, seen);
        let mut levels = vec![vec![root]];
        loop {
            let mut next = Vec::new();
            for &v in levels.last().unwrap() {
                for &u in self.graph.neighbors(v) {
                    if self.set.has(u, tag) && !self.seen.has(u, seen) {
                        self.seen.mark(u, seen);
                        next.push(u);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            next.sort_unstable();
            levels.push(next);
        }
        levels
    }

    fn min_degree_vertex(&self, cands: &[usize], tag: u32) -> usize {
        *cands.iter().min_by_key(|&&v| (self.degree_in(v, tag), v)).expect("nonempty candidate list")
    }

    fn level_split(&mut self, vertices: &[usize], tag: u32) -> Option<()> {
        let mut root = self.min_degree_vertex(vertices, tag);
        let mut levels = self.levels(root, tag);
        for _ in 0..8 {
            let cand = self.min_degree_vertex(levels.last().unwrap(), tag);
            let next = self.levels(cand, tag);
            if next.len() > levels.len() {
                root = cand;
                levels = next;
            } else {
                break;
            }
        }
        let _ = root;
        if levels.len() < 2 {
            return None;
        }
        let total = vertices.len();
        let mut cum = 0;
        let mut m = 0;
        for (i, l) in levels.iter().enumerate() {
            cum += l.len();
            if 2 * cum > total {
                m = i;
                break;
            }
        }
        let m = m.max(1);
        let level_of = {
            let mut lv = std::collections::HashMap::with_capacity(total);
            for (i, l) in levels.iter().enumerate() {
                for &v in l {
                    lv.insert(v, i);
                }
            }
            lv
        };
        // candidate B: the middle level itself
        let sep_b = levels[m].len();
        let a_b: usize = levels[..m].iter().map(Vec::len).sum();
        // candidate A: vertices of the previous level that touch the middle level
        let touching: Vec<usize> = levels[m - 1]
            .iter()
            .copied()
            .filter(|&v| self.graph.neighbors(v).iter().any(|u| level_of.get(u) == Some(&m)))
            .collect();
        let sep_a = touching.len();
        let a_a = a_b - sep_a;
        let b_a = total - a_b;
        let balanced = |x: usize, y: usize, s: usize| 10 * x.max(y) <= 6 * (total - s);
        let use_a = sep_a < sep_b && balanced(a_a, b_a, sep_a);
        for (i, l) in levels.iter().enumerate() {
            for &v in l {
                self.side[v] = if i < m { SIDE_A } else if i == m && !use_a { SIDE_SEP } else { SIDE_B };
            }
        }
        if use_a {
            for &v in &touching {
                self.side[v] = SIDE_SEP;
            }
        }
        Some(())
    }

    /// Splits at the median of `keys`, then takes the smaller of the two boundary layers
    /// as the separator. Returns `None` when all keys coincide.
    fn median_split(&mut self, vertices: &[usize], tag: u32, keys: &[f64]) -> Option<()> {
        let mut sorted: Vec<f64> = keys.to_vec();
        sorted.sort_by(f64::total_cmp);
        let t = sorted[(sorted.len() - 1) / 2];
        if sorted.last().copied() == Some(t) {
            return None;
        }
        for (&v, &k) in vertices.iter().zip(keys) {
            self.side[v] = if k <= t { SIDE_A } else { SIDE_B };
        }
        let boundary = |this: &Self, side: u8| -> Vec<usize> {
            vertices
                .iter()
                .copied()
                .filter(|&v| this.side[v] == side && this.graph.neighbors(v).iter().any(|&u| this.set.has(u, tag) && this.side[u] == 1 - side))
                .collect()
        };
        let ba = boundary(self, SIDE_A);
        let bb = boundary(self, SIDE_B);
        let sep = if bb.len() < ba.len() { bb } else { ba };
        for v in sep {
            self.side[v] = SIDE_SEP;
        }
        Some(())
    }

    /// Moves separator vertices that touch only one side into that side.
    fn thin_separator(&mut self, vertices: &[usize], tag: u32) {
        // with one side empty, thinning would hand the whole set back to the other side
        if !vertices.iter().any(|&v| self.side[v] == SIDE_A) || !vertices.iter().any(|&v| self.side[v] == SIDE_B) {
            return;
        }
        for &v in vertices {
            if self.side[v] != SIDE_SEP {
                continue;
            }
            let mut touches = [false; 2];
            for &u in self.graph.neighbors(v) {
                if self.set.has(u, tag) && self.side[u] < 2 {
                    touches[self.side[u] as usize] = true;
                }
            }
            if !touches[1] {
                self.side[v] = SIDE_A;
            } else if !touches[0] {
                self.side[v] = SIDE_B;
            }
        }
    }
}

/// Greedy split of components into two groups of similar total size.
fn split_components(mut comps: Vec<Vec<usize>>) -> (Vec<usize>, Vec<usize>) {
    comps.sort_by(|x, y| y.len().cmp(&x.len()).then(x.iter().min().cmp(&y.iter().min())));
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for c in comps {
        if a.len() <= b.len() {
            a.extend(c);
        } else {
            b.extend(c);
        }
    }
    (a, b)
}

fn longest_axis(idx: &[usize], coords: &Coordinates) -> usize {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in idx {
        let p = coords.point(i);
        for d in 0..3 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    (0..3).fold(0, |best, d| if hi[d] - lo[d] > hi[best] - lo[best] { d } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{grid_coordinates, laplacian_2d};

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
    fn seven_path_root_is_middle_vertex() {
        let nd = nested_dissection(&path(7), 1);
        let root = &nd.tree.nodes[nd.tree.root()];
        assert_eq!(root.vertices.len(), 1);
        assert_eq!(nd.perm.old_index(root.vertices.start), 3);
        assert_eq!(root.vertices.start, 6);
        for &c in &root.children {
            let child = &nd.tree.nodes[c];
            assert_eq!(child.subtree.len(), 3);
            let mid = nd.perm.old_index(child.vertices.start);
            assert!(mid == 1 || mid == 5, "child separator {mid}");
        }
    }

    #[test]
    fn three_path_root_is_middle_vertex() {
        let nd = nested_dissection(&path(3), 1);
        let root = &nd.tree.nodes[nd.tree.root()];
        assert_eq!(nd.perm.old_index(root.vertices.start), 1);
    }

    #[test]
    fn five_by_five_root_separator_cuts_grid() {
        let a = laplacian_2d(5);
        for method in [SeparatorMethod::LevelStructure, SeparatorMethod::Geometric] {
            let coords = grid_coordinates(5, 5, 1);
            let nd = nested_dissection_with(&a, &NdOptions { leaf_size: 4, method }, Some(&coords)).unwrap();
            let root = &nd.tree.nodes[nd.tree.root()];
            assert_eq!(root.vertices.len(), 5, "{method:?}");
            assert_eq!(root.children.len(), 2);
            let sizes: Vec<usize> = root.children.iter().map(|&c| nd.tree.nodes[c].subtree.len()).collect();
            assert_eq!(sizes, vec![10, 10], "{method:?}");
            assert_no_crossing_edges(&a, &nd);
        }
        let coords = grid_coordinates(5, 5, 1);
        let nd = nested_dissection_with(&a, &NdOptions { leaf_size: 4, method: SeparatorMethod::Geometric }, Some(&coords)).unwrap();
        let root = &nd.tree.nodes[nd.tree.root()];
        let xs: Vec<f64> = root.vertices.clone().map(|v| coords.point(nd.perm.old_index(v))[0]).collect();
        assert!(xs.iter().all(|&x| x == xs[0]), "geometric root separator is a grid line");
    }

    fn assert_no_crossing_edges(a: &SparseSpdMatrix, nd: &NestedDissection) {
        let pa = a.permute(&nd.perm);
        for node in &nd.tree.nodes {
            if node.children.len() == 2 {
                let (l, r) = (&nd.tree.nodes[node.children[0]].subtree, &nd.tree.nodes[node.children[1]].subtree);
                for c in l.clone() {
                    let (rows, _) = pa.column(c);
                    assert!(rows.iter().all(|row| !r.contains(row)), "edge between sibling subtrees");
                }
            }
        }
    }

    #[test]
    fn disconnected_graph_gets_empty_separator() {
        let mut t = Vec::new();
        for b in 0..2 {
            for i in 0..4 {
                for j in 0..=i {
                    t.push((4 * b + i, 4 * b + j, if i == j { 4.0 } else { -1.0 }));
                }
            }
        }
        let a = SparseSpdMatrix::from_triplets(8, &t).unwrap();
        let nd = nested_dissection(&a, 4);
        let root = &nd.tree.nodes[nd.tree.root()];
        assert_eq!(root.kind, NodeKind::Separator);
        assert!(root.vertices.is_empty());
        assert_eq!(root.children.len(), 2);
        assert_no_crossing_edges(&a, &nd);
    }

    #[test]
    fn post_order_ranges_nest() {
        let a = laplacian_2d(12);
        let nd = nested_dissection(&a, 8);
        let tree = &nd.tree;
        assert_eq!(tree.nodes[tree.root()].subtree, 0..144);
        for (i, node) in tree.nodes.iter().enumerate() {
            assert_eq!(node.vertices.end, node.subtree.end);
            let mut next = node.subtree.start;
            for &c in &node.children {
                assert!(c < i);
                assert_eq!(tree.nodes[c].subtree.start, next);
                next = tree.nodes[c].subtree.end;
            }
            assert_eq!(next, node.vertices.start);
        }
        assert_no_crossing_edges(&a, &nd);
    }

    #[test]
    fn fiedler_method_dissects() {
        let a = laplacian_2d(10);
        let nd = nested_dissection_with(&a, &NdOptions { leaf_size: 6, method: SeparatorMethod::Fiedler }, None).unwrap();
        assert_no_crossing_edges(&a, &nd);
        assert_eq!(nd.perm.len(), 100);
    }

    #[test]
    fn geometric_requires_coordinates() {
        let r = nested_dissection_with(&path(4), &NdOptions { leaf_size: 1, method: SeparatorMethod::Geometric }, None);
        assert!(matches!(r, Err(OrderingError::MissingCoordinates)));
    }
}
