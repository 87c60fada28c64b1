mod common;

use common::*;
use rsc_core::problems::{elasticity, grid_coordinates, laplacian_2d, laplacian_3d};
use rsc_core::{factorize, SolverConfig};

fn exact() -> SolverConfig {
    SolverConfig {
        tau_o: usize::MAX,
        ..SolverConfig::default()
    }
}

fn compressing(tau_o: usize, tau_d: usize) -> SolverConfig {
    SolverConfig {
        tau_o,
        tau_d,
        diag_tree_factor: 1,
        leaf_size: 16,
        ..SolverConfig::default()
    }
}

#[test]
fn exact_factor_reconstructs_matrix() {
    let a = laplacian_2d(12);
    let f = factorize(&a, None, &exact()).unwrap();
    assert!(reconstruction_error(&a, &f) < 1e-13);
    assert_eq!(f.stats().compressed_blocks, 0);
    assert_eq!(f.stats().stored_scalars, f.stats().dense_scalars);
}

#[test]
fn exact_factor_inverts_matrix() {
    let a = laplacian_3d(6);
    let f = factorize(&a, None, &exact()).unwrap();
    let x = random_vec(a.n(), 3);
    let b = a.mul_vec(&x);
    assert!(rel_diff(&f.apply(&b), &x) < 1e-10);
}

#[test]
fn compressed_factor_matches_its_assembled_blocks() {
    let a = laplacian_3d(10);
    let coords = grid_coordinates(10, 10, 10);
    let f = factorize(&a, Some(&coords), &compressing(40, 16)).unwrap();
    let s = f.stats();
    assert!(s.compressed_separators > 0);
    assert!(s.diag_trees > 0);
    assert!(s.interior_blocks > 0);
    for seed in 0..3 {
        let r = random_vec(a.n(), seed);
        assert!(rel_diff(&f.apply(&r), &oracle_apply(&f, &r)) < 1e-9);
    }
    let err = reconstruction_error(&a, &f);
    assert!(err < 0.5, "reconstruction error {err}");
}

#[test]
fn full_rank_blocks_built_from_implicit_products_are_exact() {
    let a = laplacian_3d(8);
    let coords = grid_coordinates(8, 8, 8);
    let mut cfg = compressing(30, 8);
    cfg.alpha_o = 100.0;
    cfg.alpha_d = 100.0;
    cfg.dense_fraction = 1.0;
    let f = factorize(&a, Some(&coords), &cfg).unwrap();
    assert!(f.stats().compressed_separators > 0 && f.stats().diag_trees > 0);
    assert_eq!(f.stats().compressed_blocks, 0);
    assert!(reconstruction_error(&a, &f) < 1e-11);
}

#[test]
fn elasticity_exact_factor() {
    let (a, coords) = elasticity(4, 1.0, 0.3);
    let f = factorize(&a, Some(&coords), &exact()).unwrap();
    assert!(reconstruction_error(&a, &f) < 1e-12);
}
