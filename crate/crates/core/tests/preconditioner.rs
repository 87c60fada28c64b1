mod common;

use common::*;
use nalgebra::DMatrix;
use rsc_core::diag::DiagBlock;
use rsc_core::factor::{DiagFactor, NodeFactor};
use rsc_core::problems::{elasticity, grid_coordinates, laplacian_2d, laplacian_3d};
use rsc_core::{factorize, pcg_solve, JacobiPreconditioner, PcgOptions, Preconditioner, SolverConfig, SparseSpdMatrix};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn compressing() -> SolverConfig {
    SolverConfig {
        tau_o: 30,
        tau_d: 8,
        diag_tree_factor: 1,
        leaf_size: 16,
        seed: 5,
        ..SolverConfig::default()
    }
}

#[test]
fn identity_factor_is_identity() {
    let a = SparseSpdMatrix::from_triplets(6, &(0..6).map(|i| (i, i, 1.0)).collect::<Vec<_>>()).unwrap();
    let f = factorize(&a, None, &SolverConfig::default()).unwrap();
    let r = random_vec(6, 1);
    assert_eq!(f.apply(&r), r);
    let sol = pcg_solve(&a, &r, &f, &PcgOptions::default()).unwrap();
    assert_eq!(sol.report.iterations, 1);
}

#[test]
fn diagonal_matrix_converges_in_one_iteration() {
    let a = SparseSpdMatrix::from_triplets(4, &[(0, 0, 2.0), (1, 1, 5.0), (2, 2, 0.5), (3, 3, 9.0)]).unwrap();
    let b = [1.0, -2.0, 3.0, 0.25];
    let f = factorize(&a, None, &SolverConfig::default()).unwrap();
    assert_eq!(pcg_solve(&a, &b, &f, &PcgOptions::default()).unwrap().report.iterations, 1);
    let j = JacobiPreconditioner::new(&a).unwrap();
    assert_eq!(pcg_solve(&a, &b, &j, &PcgOptions::default()).unwrap().report.iterations, 1);
}

#[test]
fn compressed_cube_is_symmetric_and_converges() {
    let a = laplacian_3d(8);
    let c = grid_coordinates(8, 8, 8);
    let f = factorize(&a, Some(&c), &compressing()).unwrap();
    assert!(f.stats().compressed_blocks > 0 && f.stats().diag_trees > 0);
    for seed in 0..5 {
        let u = random_vec(a.n(), 10 + seed);
        let v = random_vec(a.n(), 20 + seed);
        let (uv, vu) = (dot(&f.apply(&u), &v), dot(&u, &f.apply(&v)));
        assert!((uv - vu).abs() <= 1e-10 * uv.abs().max(vu.abs()), "{uv} vs {vu}");
    }
    let sol = pcg_solve(&a, &vec![1.0; a.n()], &f, &PcgOptions::default()).unwrap();
    assert!(sol.report.iterations <= 30, "{}", sol.report.iterations);
}

#[test]
fn exact_factor_inverts_and_converges_fast() {
    let exact = SolverConfig {
        tau_o: usize::MAX,
        ..SolverConfig::default()
    };
    let (ae, _) = elasticity(3, 1.0, 0.3);
    for a in [laplacian_2d(20), laplacian_3d(7), ae] {
        let f = factorize(&a, None, &exact).unwrap();
        let r = random_vec(a.n(), 3);
        let z = f.apply(&r);
        assert!(rel_diff(&a.mul_vec(&z), &r) <= 1e-10);
        let sol = pcg_solve(&a, &r, &f, &PcgOptions::default()).unwrap();
        assert!(sol.report.iterations <= 2);
    }
}

#[test]
fn tree_leaves_match_dense_cholesky_without_compression() {
    let a = laplacian_3d(8);
    let c = grid_coordinates(8, 8, 8);
    let cfg = SolverConfig {
        tau_o: 30,
        tau_d: 8,
        diag_tree_factor: 1,
        leaf_size: 16,
        alpha_o: 1e6,
        alpha_d: 1e6,
        dense_fraction: 1.0,
        ..SolverConfig::default()
    };
    let f = factorize(&a, Some(&c), &cfg).unwrap();
    let nf = f.numeric();
    let oracle = sparse_to_na(nf.matrix()).cholesky().unwrap().l();
    let sym = nf.symbolic();
    let mut leaves = 0;
    for j in 0..sym.len() {
        let NodeFactor::Explicit { diag: DiagFactor::Tree(t), .. } = nf.node(j) else { continue };
        let c0 = sym.cols(j).start;
        for (s, node) in t.shape.nodes.iter().enumerate() {
            if let DiagBlock::Leaf(b) = &t.blocks[s] {
                let o = c0 + node.span.start;
                let want: DMatrix<f64> = oracle.view((o, o), (b.nrows(), b.ncols())).into();
                assert!((to_na(b) - &want).norm() <= 1e-12 * want.norm());
                leaves += 1;
            }
        }
    }
    assert!(leaves > 0);
}

#[test]
fn interior_factors_match_restricted_cholesky() {
    let a = laplacian_3d(4);
    let c = grid_coordinates(4, 4, 4);
    let cfg = SolverConfig {
        tau_o: 10,
        leaf_size: 4,
        ..SolverConfig::default()
    };
    let f = factorize(&a, Some(&c), &cfg).unwrap();
    let nf = f.numeric();
    assert!(!nf.interior_blocks().is_empty());
    let pap = sparse_to_na(nf.matrix());
    for blk in nf.interior_blocks() {
        let k = blk.cols.len();
        let sub: DMatrix<f64> = pap.view((blk.cols.start, blk.cols.start), (k, k)).into();
        let want = sub.cholesky().unwrap().l();
        let got = assemble_lower(&blk.factor);
        assert!((got - &want).norm() <= 1e-13 * want.norm());
    }
}

#[test]
fn rsc_beats_jacobi_on_cube() {
    let a = laplacian_3d(12);
    let c = grid_coordinates(12, 12, 12);
    let cfg = SolverConfig {
        tau_o: 64,
        ..SolverConfig::default()
    };
    let f = factorize(&a, Some(&c), &cfg).unwrap();
    let b = vec![1.0; a.n()];
    let opts = PcgOptions::default();
    let rsc = pcg_solve(&a, &b, &f, &opts).unwrap();
    let jac = pcg_solve(&a, &b, &JacobiPreconditioner::new(&a).unwrap(), &opts).unwrap();
    assert!(rsc.report.iterations * 5 <= jac.report.iterations);
    assert!(rsc.report.final_relative_residual <= 1e-5);
    let z = Preconditioner::apply(&f, &b);
    assert!(dot(&z, &b) > 0.0);
}
