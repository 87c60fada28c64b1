use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use rsc_core::problems::{generate, ProblemParams};
use rsc_core::sparse::{read_matrix_market, write_matrix_market};
use rsc_core::symbolic::SymbolicSummary;
use rsc_core::{
    factorize, pcg_solve, Coordinates, FactorStats, IdentityPreconditioner, JacobiPreconditioner, KrylovError, PcgOptions, Preconditioner, RankStructuredFactor, RunReport, SolveReport,
    SolverConfig, SparseSpdMatrix,
};

use crate::args::{Command, FactorArgs, GenArgs, SolveArgs};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

pub fn run(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Gen(a) => cmd_gen(&a),
        Command::Factor(a) => cmd_factor(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Compare(a) => cmd_compare(&a),
    }
}

/// Echo of the command line, so that a report alone reproduces the run.
#[derive(Serialize)]
struct Invocation {
    command: &'static str,
    matrix: String,
    coords: Option<String>,
    threads: usize,
}

#[derive(Serialize)]
struct FactorOutput<'a> {
    invocation: Invocation,
    config: &'a SolverConfig,
    factor: &'a FactorStats,
}

#[derive(Serialize)]
struct SolveOutput {
    invocation: Invocation,
    #[serde(flatten)]
    run: RunReport,
}

#[derive(Serialize)]
struct MethodRow {
    method: &'static str,
    iterations: usize,
    converged: bool,
    final_relative_residual: f64,
    setup_seconds: f64,
    solve_seconds: f64,
    stored_scalars: usize,
}

#[derive(Serialize)]
struct CompareOutput<'a> {
    invocation: Invocation,
    config: &'a SolverConfig,
    pcg: PcgOptions,
    factor: &'a FactorStats,
    methods: Vec<MethodRow>,
}

fn cmd_gen(a: &GenArgs) -> Result<i32> {
    let mut params = ProblemParams {
        size: a.size,
        contrast: a.contrast,
        young: a.young,
        poisson: a.poisson,
        ..ProblemParams::default()
    };
    if let Some(t) = &a.tensor {
        params.tensor = [[t[0], t[1], t[2]], [t[3], t[4], t[5]], [t[6], t[7], t[8]]];
    }
    let (m, coords) = generate(a.kind, &params);
    write_matrix_market(&a.output, &m).with_context(|| format!("writing {}", a.output.display()))?;
    let coords_path = a.coords_output.clone().unwrap_or_else(|| a.output.with_extension("xyz"));
    coords.write(&coords_path).with_context(|| format!("writing {}", coords_path.display()))?;
    println!("{}: n = {}, nnz = {}, coordinates in {}", a.output.display(), m.n(), m.nnz(), coords_path.display());
    Ok(EXIT_OK)
}

struct Loaded {
    matrix: SparseSpdMatrix,
    coords: Option<Coordinates>,
    config: SolverConfig,
    invocation: Invocation,
}

fn load(f: &FactorArgs, command: &'static str) -> Result<Loaded> {
    if f.threads == 0 {
        bail!("--threads must be at least 1");
    }
    let matrix = read_matrix_market(&f.input.matrix).with_context(|| format!("reading {}", f.input.matrix.display()))?;
    let coords = match &f.input.coords {
        Some(p) => Some(Coordinates::read(p).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    let mut config = f.solver.config(f.input.spectral);
    if let Ok(v) = std::env::var("RSC_SEED") {
        config.seed = v.trim().parse().with_context(|| format!("RSC_SEED='{v}' is not an unsigned integer"))?;
    }
    config.validate()?;
    Ok(Loaded {
        matrix,
        coords,
        config,
        invocation: Invocation {
            command,
            matrix: f.input.matrix.display().to_string(),
            coords: f.input.coords.as_ref().map(|p| p.display().to_string()),
            threads: f.threads,
        },
    })
}

fn with_threads<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    Ok(pool.install(job))
}

fn build_factor(f: &FactorArgs, l: &Loaded) -> Result<RankStructuredFactor> {
    let factor = with_threads(f.threads, || factorize(&l.matrix, l.coords.as_ref(), &l.config))??;
    for w in &factor.stats().warnings {
        log::warn!("{w}");
    }
    if let Some(path) = &f.dump_symbolic {
        dump_symbolic(path, &factor, l.matrix.nnz())?;
    }
    Ok(factor)
}

#[derive(Serialize)]
struct SymbolicDump {
    #[serde(flatten)]
    summary: SymbolicSummary,
    /// Factor entries per stored entry of the lower triangle of the matrix.
    fill_ratio: f64,
}

fn dump_symbolic(path: &Path, factor: &RankStructuredFactor, nnz: usize) -> Result<()> {
    let summary = SymbolicSummary::of(factor.numeric().symbolic());
    let lower = (nnz + factor.n()) / 2;
    let dump = SymbolicDump {
        fill_ratio: summary.factor_entries as f64 / lower.max(1) as f64,
        summary,
    };
    write_json(path, &dump)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    if path == Path::new("-") {
        println!("{text}");
    } else {
        fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn json_to_stdout(report: &Option<PathBuf>) -> bool {
    report.as_deref() == Some(Path::new("-"))
}

fn print_factor_stats(s: &FactorStats) {
    println!("n                      {}", s.n);
    println!("nonzeros               {}", s.nnz);
    println!("supernodes             {}", s.supernodes);
    println!("compressed separators  {}", s.compressed_separators);
    println!("diagonal trees         {}", s.diag_trees);
    println!("interior blocks        {}", s.interior_blocks);
    println!("low-rank blocks        {}", s.compressed_blocks);
    println!("stored scalars         {} ({:.3} of exact)", s.stored_scalars, s.storage_ratio());
    println!("restarts               {}", s.restarts);
    println!("factor seconds         {:.3}", s.phase_times.total);
}

fn cmd_factor(a: &FactorArgs) -> Result<i32> {
    let l = load(a, "factor")?;
    let factor = build_factor(a, &l)?;
    let out = FactorOutput {
        invocation: l.invocation,
        config: &l.config,
        factor: factor.stats(),
    };
    if let Some(p) = &a.report {
        write_json(p, &out)?;
    }
    if !json_to_stdout(&a.report) {
        print_factor_stats(factor.stats());
    }
    Ok(EXIT_OK)
}

fn read_rhs(path: Option<&Path>, n: usize) -> Result<Vec<f64>> {
    let Some(path) = path else { return Ok(vec![1.0; n]) };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let b = text
        .split_whitespace()
        .map(|t| t.parse::<f64>().with_context(|| format!("bad value '{t}' in {}", path.display())))
        .collect::<Result<Vec<_>>>()?;
    if b.len() != n {
        bail!("right-hand side has {} values, matrix has {n} rows", b.len());
    }
    Ok(b)
}

/// Runs PCG, treating the iteration cap as a normal outcome.
fn solve_with(a: &SparseSpdMatrix, b: &[f64], m: &dyn Preconditioner, opts: &PcgOptions) -> Result<SolveReport> {
    match pcg_solve(a, b, m, opts) {
        Ok(sol) => Ok(sol.report),
        Err(KrylovError::MaxIterations { report, .. }) => Ok(report),
        Err(e) => Err(e.into()),
    }
}

fn write_residual_csv(path: &Path, history: &[f64]) -> Result<()> {
    let mut f = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
    writeln!(f, "iteration,relative_residual")?;
    for (k, r) in history.iter().enumerate() {
        writeln!(f, "{k},{r:e}")?;
    }
    Ok(())
}

fn check_pcg(a: &SolveArgs) -> Result<()> {
    if !(a.tol > 0.0 && a.tol < 1.0) {
        bail!("--tol must lie in (0, 1)");
    }
    Ok(())
}

fn cmd_solve(a: &SolveArgs) -> Result<i32> {
    check_pcg(a)?;
    let l = load(&a.factor, "solve")?;
    let b = read_rhs(a.rhs.as_deref(), l.matrix.n())?;
    let factor = build_factor(&a.factor, &l)?;
    let pcg = a.pcg();
    let mut solve = with_threads(a.factor.threads, || solve_with(&l.matrix, &b, &factor, &pcg))??;
    solve.setup_seconds = factor.stats().phase_times.total;
    if let Some(p) = &a.residual_csv {
        write_residual_csv(p, &solve.relative_residual_history)?;
    }
    let converged = solve.converged;
    let out = SolveOutput {
        invocation: l.invocation,
        run: RunReport {
            config: l.config,
            pcg,
            factor: factor.stats().clone(),
            solve,
        },
    };
    if let Some(p) = &a.factor.report {
        write_json(p, &out)?;
    }
    if !json_to_stdout(&a.factor.report) {
        print_factor_stats(&out.run.factor);
        println!("iterations             {}", out.run.solve.iterations);
        println!("relative residual      {:.3e}", out.run.solve.final_relative_residual);
        println!("converged              {converged}");
    }
    Ok(if converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn cmd_compare(a: &SolveArgs) -> Result<i32> {
    check_pcg(a)?;
    let l = load(&a.factor, "compare")?;
    let b = read_rhs(a.rhs.as_deref(), l.matrix.n())?;
    let pcg = a.pcg();
    let mut methods = Vec::new();

    let none = solve_with(&l.matrix, &b, &IdentityPreconditioner, &pcg)?;
    methods.push(row("none", &none, 0.0, 0));

    let t = Instant::now();
    let jacobi = JacobiPreconditioner::new(&l.matrix)?;
    let setup = t.elapsed().as_secs_f64();
    let report = solve_with(&l.matrix, &b, &jacobi, &pcg)?;
    methods.push(row("jacobi", &report, setup, l.matrix.n()));

    let factor = build_factor(&a.factor, &l)?;
    let report = with_threads(a.factor.threads, || solve_with(&l.matrix, &b, &factor, &pcg))??;
    methods.push(row("rsc", &report, factor.stats().phase_times.total, factor.stats().stored_scalars));
    if let Some(p) = &a.residual_csv {
        write_residual_csv(p, &report.relative_residual_history)?;
    }

    let all_converged = methods.iter().all(|m| m.converged);
    let out = CompareOutput {
        invocation: l.invocation,
        config: &l.config,
        pcg,
        factor: factor.stats(),
        methods,
    };
    if let Some(p) = &a.factor.report {
        write_json(p, &out)?;
    }
    if !json_to_stdout(&a.factor.report) {
        println!("{:<8} {:>10} {:>10} {:>12} {:>12} {:>14}", "method", "iterations", "converged", "setup (s)", "solve (s)", "stored");
        for m in &out.methods {
            println!(
                "{:<8} {:>10} {:>10} {:>12.4} {:>12.4} {:>14}",
                m.method, m.iterations, m.converged, m.setup_seconds, m.solve_seconds, m.stored_scalars
            );
        }
    }
    Ok(if all_converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn row(method: &'static str, r: &SolveReport, setup_seconds: f64, stored_scalars: usize) -> MethodRow {
    MethodRow {
        method,
        iterations: r.iterations,
        converged: r.converged,
        final_relative_residual: r.final_relative_residual,
        setup_seconds,
        solve_seconds: r.solve_seconds,
        stored_scalars,
    }
}
