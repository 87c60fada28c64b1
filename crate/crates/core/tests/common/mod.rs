#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rsc_core::diag::DiagBlock;
use rsc_core::factor::{DiagFactor, NodeFactor, NumericFactor, OffDiagFactor, RankStructuredFactor};
use rsc_core::{DenseMatrix, SparseSpdMatrix};

pub fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn sparse_to_na(a: &SparseSpdMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.n(), a.n());
    for c in 0..a.n() {
        let (rows, vals) = a.column(c);
        for (&r, &v) in rows.iter().zip(vals) {
            d[(r, c)] = v;
            d[(c, r)] = v;
        }
    }
    d
}

fn off_dense(off: &OffDiagFactor) -> DMatrix<f64> {
    match off {
        OffDiagFactor::Dense(d) => to_na(d),
        OffDiagFactor::LowRank(l) => to_na(&l.v) * to_na(&l.u).transpose(),
    }
}

/// Lower factor assembled block by block from the stored pieces, in factor numbering.
pub fn assemble_lower(f: &NumericFactor) -> DMatrix<f64> {
    let sym = f.symbolic();
    let n = sym.n();
    let mut l = DMatrix::zeros(n, n);
    let mut j = 0;
    while j < sym.len() {
        match f.node(j) {
            NodeFactor::Explicit { diag, off } => {
                let c0 = sym.cols(j).start;
                match diag {
                    DiagFactor::Dense(d) => l.view_mut((c0, c0), (d.nrows(), d.ncols())).copy_from(&to_na(d)),
                    DiagFactor::Tree(t) => {
                        for (s, node) in t.shape.nodes.iter().enumerate() {
                            match &t.blocks[s] {
                                DiagBlock::Leaf(b) => {
                                    let o = c0 + node.span.start;
                                    l.view_mut((o, o), (b.nrows(), b.ncols())).copy_from(&to_na(b));
                                }
                                DiagBlock::Coupling(c) => {
                                    let ls = &t.shape.nodes[node.left.unwrap()].span;
                                    let rs = &t.shape.nodes[node.right.unwrap()].span;
                                    let d = off_dense(c);
                                    l.view_mut((c0 + rs.start, c0 + ls.start), (d.nrows(), d.ncols())).copy_from(&d);
                                }
                                DiagBlock::Pending => panic!("pending diagonal block"),
                            }
                        }
                    }
                }
                let d = off_dense(off);
                for (k, &r) in sym.rows[j].iter().enumerate() {
                    for c in 0..d.ncols() {
                        l[(r, c0 + c)] = d[(k, c)];
                    }
                }
                j += 1;
            }
            NodeFactor::Interior(i) => {
                let blk = &f.interior_blocks()[*i];
                let b0 = blk.cols.start;
                let lb = assemble_lower(&blk.factor);
                l.view_mut((b0, b0), (lb.nrows(), lb.ncols())).copy_from(&lb);
                // L(R, B) = A(R, B) (L^B)⁻ᵀ, formed densely
                let bcols: Vec<usize> = blk.cols.clone().collect();
                let coupling = to_na(&f.matrix().dense_block(&blk.outer_rows, &bcols));
                let sub = lb.solve_lower_triangular(&coupling.transpose()).expect("nonsingular").transpose();
                for (k, &r) in blk.outer_rows.iter().enumerate() {
                    for c in 0..sub.ncols() {
                        l[(r, b0 + c)] = sub[(k, c)];
                    }
                }
                j = blk.supernodes.end;
            }
            _ => panic!("unfactored supernode"),
        }
    }
    l
}

/// `‖L Lᵀ − P A Pᵀ‖_F / ‖A‖_F`
pub fn reconstruction_error(a: &SparseSpdMatrix, f: &RankStructuredFactor) -> f64 {
    let l = assemble_lower(f.numeric());
    let pap = sparse_to_na(&a.permute(f.permutation()));
    (&l * l.transpose() - &pap).norm() / pap.norm()
}

/// Dense `Pᵀ (L Lᵀ)⁻¹ P r` from the assembled factor.
pub fn oracle_apply(f: &RankStructuredFactor, r: &[f64]) -> Vec<f64> {
    let l = assemble_lower(f.numeric());
    let p = f.permutation();
    let rp = DVector::from_vec(p.apply(r));
    let y = l.solve_lower_triangular(&rp).expect("nonsingular");
    let x = l.transpose().solve_upper_triangular(&y).expect("nonsingular");
    p.apply_inverse(x.as_slice())
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

pub fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    rsc_core::dense::gaussian_matrix(n, 1, seed).into_vec()
}
