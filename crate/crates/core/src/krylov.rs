//! Preconditioned conjugate gradients.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{KrylovError, SparseError};
use crate::factor::RankStructuredFactor;
use crate::sparse::SparseSpdMatrix;

/// Symmetric positive definite approximation of `A⁻¹`.
pub trait Preconditioner {
    fn apply(&self, r: &[f64]) -> Vec<f64>;
}

pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        r.to_vec()
    }
}

pub struct JacobiPreconditioner {
    inv_diag: Vec<f64>,
}

impl JacobiPreconditioner {
    pub fn new(a: &SparseSpdMatrix) -> Result<Self, SparseError> {
        let diag = a.diagonal();
        if let Some((index, &value)) = diag.iter().enumerate().find(|(_, &d)| !(d > 0.0)) {
            return Err(SparseError::NonPositiveDiagonal { index, value });
        }
        Ok(Self {
            inv_diag: diag.iter().map(|d| 1.0 / d).collect(),
        })
    }
}

impl Preconditioner for JacobiPreconditioner {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        r.iter().zip(&self.inv_diag).map(|(a, b)| a * b).collect()
    }
}

impl Preconditioner for RankStructuredFactor {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        RankStructuredFactor::apply(self, r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcgOptions {
    /// Target for `‖b − A x‖ / ‖b‖`.
    pub tol: f64,
    /// `None` means `10 n`.
    pub max_iter: Option<usize>,
}

impl Default for PcgOptions {
    fn default() -> Self {
        Self { tol: 1e-5, max_iter: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    /// True relative residual of the returned iterate.
    pub final_relative_residual: f64,
    /// Relative residual before the first and after every iteration.
    pub relative_residual_history: Vec<f64>,
    /// Preconditioner construction time, filled in by the caller.
    pub setup_seconds: f64,
    pub solve_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct PcgSolution {
    pub x: Vec<f64>,
    pub report: SolveReport,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn residual(a: &SparseSpdMatrix, b: &[f64], x: &[f64]) -> Vec<f64> {
    let ax = a.mul_vec(x);
    b.iter().zip(&ax).map(|(b, ax)| b - ax).collect()
}

/// Solves `A x = b` from a zero initial guess.
///
/// Convergence is declared on the recurrence residual and then confirmed on the true
/// residual; if the two disagree the iteration restarts from the true residual.
pub fn pcg_solve(a: &SparseSpdMatrix, b: &[f64], m: &dyn Preconditioner, opts: &PcgOptions) -> Result<PcgSolution, KrylovError> {
    let n = a.n();
    if b.len() != n {
        return Err(KrylovError::DimensionMismatch { expected: n, found: b.len() });
    }
    let start = Instant::now();
    let max_iter = opts.max_iter.unwrap_or(10 * n);
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(PcgSolution {
            x,
            report: SolveReport {
                iterations: 0,
                converged: true,
                final_relative_residual: 0.0,
                relative_residual_history: vec![0.0],
                setup_seconds: 0.0,
                solve_seconds: start.elapsed().as_secs_f64(),
            },
        });
    }
    let mut r = b.to_vec();
    let mut history = vec![1.0];
    let mut z = m.apply(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut it = 0;
    let mut true_rel = 1.0;
    let mut converged = false;
    while it < max_iter {
        if rz <= 0.0 || !rz.is_finite() {
            return Err(KrylovError::BreakdownNonSpd { iteration: it, curvature: rz });
        }
        let ap = a.mul_vec(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(KrylovError::BreakdownNonSpd { iteration: it, curvature: pap });
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        it += 1;
        let rel = norm(&r) / bnorm;
        history.push(rel);
        if rel <= opts.tol {
            let rt = residual(a, b, &x);
            true_rel = norm(&rt) / bnorm;
            if true_rel <= opts.tol {
                converged = true;
                break;
            }
            r = rt;
            z = m.apply(&r);
            p = z.clone();
            rz = dot(&r, &z);
            continue;
        }
        z = m.apply(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if !converged {
        true_rel = norm(&residual(a, b, &x)) / bnorm;
    }
    let report = SolveReport {
        iterations: it,
        converged,
        final_relative_residual: true_rel,
        relative_residual_history: history,
        setup_seconds: 0.0,
        solve_seconds: start.elapsed().as_secs_f64(),
    };
    if converged {
        Ok(PcgSolution { x, report })
    } else {
        Err(KrylovError::MaxIterations { x, report })
    }
}
