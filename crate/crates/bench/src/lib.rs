//! Fixtures shared by the benchmarks.

use rsc_core::problems::{grid_coordinates, laplacian_3d};
use rsc_core::{Coordinates, SolverConfig, SparseSpdMatrix};

/// 7-point Laplacian on an `n³` grid with its grid coordinates.
pub fn cube(n: usize) -> (SparseSpdMatrix, Coordinates) {
    (laplacian_3d(n), grid_coordinates(n, n, n))
}

/// Configurations compared in the benchmarks, by name.
pub fn configs() -> Vec<(&'static str, SolverConfig)> {
    vec![
        (
            "exact",
            SolverConfig {
                tau_o: usize::MAX,
                ..SolverConfig::default()
            },
        ),
        ("default", SolverConfig::default()),
        (
            "compressed",
            SolverConfig {
                tau_o: 64,
                tau_d: 32,
                ..SolverConfig::default()
            },
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_factor() {
        let (a, c) = cube(6);
        for (_, cfg) in configs() {
            assert!(rsc_core::factorize(&a, Some(&c), &cfg).is_ok());
        }
    }
}
