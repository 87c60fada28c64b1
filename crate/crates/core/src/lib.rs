//! Sparse Cholesky preconditioner with rank-structured separator blocks, used inside
//! preconditioned conjugate gradients.
//!
//! The pipeline is: nested dissection ([`ordering`]), supernodal symbolic analysis
//! ([`symbolic`]), a left-looking numerical factorization that compresses large
//! separator blocks ([`factor`], [`diag`]), and PCG with the resulting approximate
//! factor ([`krylov`]).

pub mod dense;
pub mod diag;
pub mod error;
pub mod factor;
pub mod interior;
pub mod krylov;
pub mod ordering;
pub mod problems;
pub mod report;
pub mod sparse;
pub mod symbolic;

pub use dense::DenseMatrix;
pub use error::{DenseError, FactorError, KrylovError, OrderingError, SparseError};
pub use factor::{factorize, factorize_with_hooks, FactorHooks, FactorStats, RankStructuredFactor, SolverConfig};
pub use krylov::{pcg_solve, IdentityPreconditioner, JacobiPreconditioner, PcgOptions, PcgSolution, Preconditioner, SolveReport};
pub use ordering::Coordinates;
pub use report::RunReport;
pub use sparse::{Permutation, SparseSpdMatrix};
pub use symbolic::Symbolic;
