//! Recursive coordinate bisection of a separator into the leaves of a binary block tree.

use std::ops::Range;

use super::Coordinates;

/// One node of a block tree. Nodes are stored in in-order, so a node's position is its
/// block number minus one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShapeNode {
    /// Local positions covered by the subtree rooted here.
    pub span: Range<usize>,
    pub left: Option<usize>,
    pub right: Option<usize>,
    pub parent: Option<usize>,
}

impl ShapeNode {
    pub fn is_leaf(&self) -> bool {
        self.left.is_none()
    }
}

/// Shape of the diagonal block tree of one separator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockTreeShape {
    pub nodes: Vec<ShapeNode>,
    pub root: usize,
}

impl BlockTreeShape {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// In-order positions of the leaves.
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&s| self.nodes[s].is_leaf()).collect()
    }

    /// Number of halvings needed so every leaf holds at most `leaf_max` indices.
    fn depth_for(len: usize, leaf_max: usize) -> usize {
        let mut d = 0;
        while len.div_ceil(1 << d) > leaf_max.max(1) {
            d += 1;
        }
        d
    }

    /// Tree over `len` positions kept in their given order.
    pub fn balanced(len: usize, leaf_max: usize) -> Self {
        let depth = Self::depth_for(len, leaf_max);
        let mut nodes = Vec::new();
        let root = build(&mut nodes, 0..len, depth, None, &mut |_| {});
        Self { nodes, root }
    }
}

fn build(nodes: &mut Vec<ShapeNode>, span: Range<usize>, depth: usize, parent: Option<usize>, split: &mut dyn FnMut(Range<usize>)) -> usize {
    if depth == 0 || span.len() <= 1 {
        nodes.push(ShapeNode {
            span,
            left: None,
            right: None,
            parent,
        });
        return nodes.len() - 1;
    }
    split(span.clone());
    let mid = span.start + span.len().div_ceil(2);
    let left = build(nodes, span.start..mid, depth - 1, None, split);
    let me = nodes.len();
    nodes.push(ShapeNode {
        span: span.clone(),
        left: Some(left),
        right: None,
        parent,
    });
    nodes[left].parent = Some(me);
    let right = build(nodes, mid..span.end, depth - 1, Some(me), split);
    nodes[me].right = Some(right);
    me
}

/// Reorders `indices` by recursive bisection along the longest bounding-box axis and
/// returns the reordered list with its block tree. `coords` is indexed by the entries
/// of `indices`. Every split sorts by `(coordinate, index)`, so ties are broken by the
/// original index, and the left half receives the larger share of an odd count. All
/// leaves sit at the same depth and hold at most `leaf_max` indices.
pub fn partition_separator(indices: &[usize], coords: &Coordinates, leaf_max: usize) -> (Vec<usize>, BlockTreeShape) {
    let mut order = indices.to_vec();
    let depth = BlockTreeShape::depth_for(order.len(), leaf_max);
    let mut nodes = Vec::new();
    let root = {
        let order_ref = &mut order;
        let mut split = |span: Range<usize>| {
            let part = &mut order_ref[span];
            let axis = longest_axis(part, coords);
            part.sort_by(|&a, &b| coords.point(a)[axis].total_cmp(&coords.point(b)[axis]).then(a.cmp(&b)));
        };
        build(&mut nodes, 0..indices.len(), depth, None, &mut split)
    };
    (order, BlockTreeShape { nodes, root })
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
    let mut axis = 0;
    for d in 1..3 {
        if hi[d] - lo[d] > hi[axis] - lo[axis] {
            axis = d;
        }
    }
    axis
}
