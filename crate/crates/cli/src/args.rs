use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rsc_core::ordering::SeparatorMethod;
use rsc_core::problems::ProblemKind;
use rsc_core::{PcgOptions, SolverConfig};

#[derive(Parser, Debug)]
#[command(name = "rsc", version, about = "Rank-structured sparse Cholesky preconditioner for SPD systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a model problem as Matrix Market plus a coordinates file.
    Gen(GenArgs),
    /// Factor and solve `A x = b` with preconditioned conjugate gradients.
    Solve(SolveArgs),
    /// Factor only and report storage statistics.
    Factor(FactorArgs),
    /// Solve with no preconditioner, Jacobi, and the rank-structured factor.
    Compare(SolveArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// laplacian2d, laplacian3d, aniso-poisson or elasticity-like.
    pub kind: ProblemKind,
    /// Grid points per side (elements per side for elasticity-like).
    #[arg(short = 'n', long, default_value_t = 16, value_parser = parse_grid_size)]
    pub size: usize,
    /// Matrix Market output path.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Coordinates output path; defaults to the matrix path with extension `xyz`.
    #[arg(long)]
    pub coords_output: Option<PathBuf>,
    /// Diffusion tensor for aniso-poisson, nine comma-separated values in row order.
    #[arg(long, value_delimiter = ',', num_args = 9)]
    pub tensor: Option<Vec<f64>>,
    /// Coefficient contrast for aniso-poisson.
    #[arg(long, default_value_t = 1.0)]
    pub contrast: f64,
    #[arg(long, default_value_t = 1.0)]
    pub young: f64,
    #[arg(long, default_value_t = 0.3)]
    pub poisson: f64,
}

#[derive(Args, Debug)]
pub struct FactorArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Worker threads for the factorization.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// JSON report path; `-` writes JSON to standard output instead of the text summary.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write a JSON summary of the supernode structure.
    #[arg(long)]
    pub dump_symbolic: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub factor: FactorArgs,
    /// Relative residual target.
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    /// Iteration cap; defaults to ten times the dimension.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Right-hand side, one value per line; defaults to all ones.
    #[arg(long)]
    pub rhs: Option<PathBuf>,
    /// Write the residual history as CSV.
    #[arg(long)]
    pub residual_csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct InputArgs {
    /// Symmetric matrix in Matrix Market coordinate format.
    pub matrix: PathBuf,
    /// Coordinates file, one `x y z` line per row.
    #[arg(long, conflicts_with = "spectral")]
    pub coords: Option<PathBuf>,
    /// Compute spectral coordinates when no file is given.
    #[arg(long)]
    pub spectral: bool,
}

fn parse_grid_size(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n >= 2 => Ok(n),
        Ok(_) => Err("grid size must be at least 2".to_string()),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_threshold(s: &str) -> Result<usize, String> {
    match s {
        "inf" | "none" => Ok(usize::MAX),
        _ => s.parse().map_err(|e| format!("{e}")),
    }
}

#[derive(Args, Debug)]
pub struct SolverArgs {
    /// Minimum separator size for compression; `inf` disables compression.
    #[arg(long, default_value = "400", value_parser = parse_threshold)]
    pub tau_o: usize,
    /// Leaf size of the diagonal block trees.
    #[arg(long, default_value_t = 256)]
    pub tau_d: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha_o: f64,
    #[arg(long, default_value_t = 0.5)]
    pub alpha_d: f64,
    #[arg(long, default_value_t = 8)]
    pub oversample: usize,
    #[arg(long, default_value_t = 1)]
    pub power_iters: usize,
    /// Overridden by the RSC_SEED environment variable.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub leaf_size: usize,
    /// Separator method; by default geometric with coordinates, level structure without.
    #[arg(long)]
    pub separator: Option<SeparatorArg>,
    /// Store interior-block off-diagonal rows explicitly.
    #[arg(long)]
    pub no_interior_blocks: bool,
    /// Separators longer than this multiple of `tau_d` get a diagonal block tree.
    #[arg(long, default_value = "4", value_parser = parse_threshold)]
    pub diag_tree_factor: usize,
    #[arg(long, default_value_t = 8)]
    pub max_restarts: usize,
    #[arg(long, default_value_t = 1.25)]
    pub restart_growth: f64,
    /// Blocks whose rank reaches this fraction of the smaller side are stored dense.
    #[arg(long, default_value_t = 0.75)]
    pub dense_fraction: f64,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
pub enum SeparatorArg {
    LevelStructure,
    Fiedler,
    Geometric,
}

impl SolverArgs {
    pub fn config(&self, spectral: bool) -> SolverConfig {
        SolverConfig {
            tau_o: self.tau_o,
            tau_d: self.tau_d,
            alpha_o: self.alpha_o,
            alpha_d: self.alpha_d,
            oversample: self.oversample,
            power_iters: self.power_iters,
            seed: self.seed,
            leaf_size: self.leaf_size,
            separator_method: self.separator.map(|s| match s {
                SeparatorArg::LevelStructure => SeparatorMethod::LevelStructure,
                SeparatorArg::Fiedler => SeparatorMethod::Fiedler,
                SeparatorArg::Geometric => SeparatorMethod::Geometric,
            }),
            spectral,
            interior_blocks: !self.no_interior_blocks,
            diag_tree_factor: self.diag_tree_factor,
            max_restarts: self.max_restarts,
            restart_growth: self.restart_growth,
            dense_fraction: self.dense_fraction,
        }
    }
}

impl SolveArgs {
    pub fn pcg(&self) -> PcgOptions {
        PcgOptions {
            tol: self.tol,
            max_iter: self.max_iters,
        }
    }
}
