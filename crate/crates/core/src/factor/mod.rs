//! Factorization driver: ordering, symbolic analysis, interior blocks, and the
//! numerical phase with restarts on indefinite diagonal leaves.

pub mod lowrank;
pub mod numeric;

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{DenseError, FactorError};
use crate::interior::{interior_ranges, InteriorBlock};
use crate::ordering::{nested_dissection_with, partition_separator, spectral_coordinates, BlockTreeShape, Coordinates, NdOptions, SeparatorMethod, SpectralOptions};
use crate::sparse::{Permutation, SparseSpdMatrix};
use crate::symbolic::{build_etree, compute_row_structures, form_supernodes, Amalgamation};

pub use lowrank::{block_rank, randomized_low_rank, BlockOperator, DenseOperator, LowRankBlock};
pub use numeric::{DiagFactor, LeafEvent, LeafHook, NodeFactor, NodePlan, NumericFactor, NumericParams, OffDiagFactor};

/// Parameters of the preconditioner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Separators with at least this many indices get compressed off-diagonal blocks.
    pub tau_o: usize,
    /// Largest leaf of a compressed diagonal block.
    pub tau_d: usize,
    pub alpha_o: f64,
    pub alpha_d: f64,
    pub oversample: usize,
    pub power_iters: usize,
    pub seed: u64,
    /// Dissection stops at vertex sets of this size.
    pub leaf_size: usize,
    /// `None` picks geometric bisection when coordinates exist, level structures otherwise.
    pub separator_method: Option<SeparatorMethod>,
    /// Derive coordinates from Laplacian eigenvectors when none are supplied.
    pub spectral: bool,
    pub interior_blocks: bool,
    /// Diagonal blocks are compressed when the separator exceeds this multiple of `tau_d`.
    pub diag_tree_factor: usize,
    pub max_restarts: usize,
    pub restart_growth: f64,
    pub dense_fraction: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tau_o: 400,
            tau_d: 256,
            alpha_o: 1.0,
            alpha_d: 0.5,
            oversample: 8,
            power_iters: 1,
            seed: 0,
            leaf_size: 64,
            separator_method: None,
            spectral: false,
            interior_blocks: true,
            diag_tree_factor: 4,
            max_restarts: 8,
            restart_growth: 1.25,
            dense_fraction: 0.75,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), FactorError> {
        let bad = |m: &str| Err(FactorError::InvalidConfig(m.to_string()));
        if self.tau_o == 0 || self.tau_d == 0 {
            return bad("tau_o and tau_d must be positive");
        }
        if !(self.alpha_o.is_finite() && self.alpha_o > 0.0 && self.alpha_d.is_finite() && self.alpha_d > 0.0) {
            return bad("alpha_o and alpha_d must be positive and finite");
        }
        if self.leaf_size == 0 {
            return bad("leaf_size must be positive");
        }
        if !(self.restart_growth.is_finite() && self.restart_growth > 1.0) {
            return bad("restart_growth must exceed 1");
        }
        if !(self.dense_fraction > 0.0 && self.dense_fraction <= 1.0) {
            return bad("dense_fraction must lie in (0, 1]");
        }
        Ok(())
    }

    fn params(&self) -> NumericParams {
        NumericParams {
            alpha_o: self.alpha_o,
            alpha_d: self.alpha_d,
            oversample: self.oversample,
            power_iters: self.power_iters,
            seed: self.seed,
            dense_fraction: self.dense_fraction,
        }
    }
}

/// Test and diagnostic hooks.
#[derive(Clone, Default)]
pub struct FactorHooks {
    pub leaf: Option<Arc<LeafHook>>,
}

impl FactorHooks {
    pub fn on_leaf(f: impl Fn(&LeafEvent) -> bool + Send + Sync + 'static) -> Self {
        Self { leaf: Some(Arc::new(f)) }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub ordering: f64,
    pub symbolic: f64,
    pub interior: f64,
    pub numeric: f64,
    pub total: f64,
}

/// Summary of a factorization.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct FactorStats {
    pub n: usize,
    pub nnz: usize,
    pub supernodes: usize,
    pub compressed_separators: usize,
    pub diag_trees: usize,
    pub interior_blocks: usize,
    pub compressed_blocks: usize,
    pub stored_scalars: usize,
    /// Entries of the exact supernodal factor with the same ordering.
    pub dense_scalars: usize,
    pub restarts: usize,
    pub alpha_d_final: f64,
    pub alpha_d_trace: Vec<f64>,
    pub separator_method: SeparatorMethod,
    pub coordinate_source: String,
    pub warnings: Vec<String>,
    pub phase_times: PhaseTimes,
}

impl FactorStats {
    pub fn storage_ratio(&self) -> f64 {
        if self.dense_scalars == 0 {
            1.0
        } else {
            self.stored_scalars as f64 / self.dense_scalars as f64
        }
    }
}

/// Approximate Cholesky factor `P A Pᵀ ≈ L Lᵀ`.
#[derive(Debug)]
pub struct RankStructuredFactor {
    perm: Permutation,
    numeric: NumericFactor,
    stats: FactorStats,
    config: SolverConfig,
}

pub fn factorize(a: &SparseSpdMatrix, coords: Option<&Coordinates>, config: &SolverConfig) -> Result<RankStructuredFactor, FactorError> {
    factorize_with_hooks(a, coords, config, FactorHooks::default())
}

pub fn factorize_with_hooks(a: &SparseSpdMatrix, coords: Option<&Coordinates>, config: &SolverConfig, hooks: FactorHooks) -> Result<RankStructuredFactor, FactorError> {
    config.validate()?;
    let start = Instant::now();
    let n = a.n();
    if let Some(c) = coords {
        if c.len() != n {
            return Err(FactorError::CoordinateMismatch { expected: n, found: c.len() });
        }
    }
    let mut warnings = Vec::new();

    // ordering
    let t = Instant::now();
    let mut source = if coords.is_some() { "supplied" } else { "none" }.to_string();
    let spectral;
    let coords = match coords {
        Some(c) => Some(c),
        None if config.spectral && n > 1 => {
            let (c, eig) = spectral_coordinates(a, &SpectralOptions::default());
            if !eig.converged {
                warnings.push("spectral coordinates did not fully converge".to_string());
            }
            source = "spectral".to_string();
            spectral = c;
            Some(&spectral)
        }
        None => None,
    };
    let method = config.separator_method.unwrap_or(if coords.is_some() { SeparatorMethod::Geometric } else { SeparatorMethod::LevelStructure });
    let opts = NdOptions {
        leaf_size: config.leaf_size,
        method,
    };
    let nd = nested_dissection_with(a, &opts, coords).map_err(|e| FactorError::InvalidConfig(e.to_string()))?;
    let ordering_time = t.elapsed().as_secs_f64();

    // symbolic
    let t = Instant::now();
    let ap = a.permute(&nd.perm);
    let ranges = if config.interior_blocks { interior_ranges(&nd.tree, config.tau_o) } else { Vec::new() };
    let breaks: Vec<usize> = ranges.iter().flat_map(|r| [r.start, r.end]).collect();
    let etree = build_etree(&ap);
    let partition = form_supernodes(&ap, &etree, &nd.tree, config.tau_o, &breaks, Amalgamation::default());

    // separator leaves follow coordinate bisection; columns are reordered inside each compressed separator
    let permuted_coords = coords.map(|c| Coordinates::new((0..n).map(|new| c.point(nd.perm.old_index(new))).collect()));
    let mut within: Vec<usize> = (0..n).collect();
    let mut shapes: Vec<Option<BlockTreeShape>> = vec![None; partition.len()];
    let mut compressed = vec![false; partition.len()];
    let mut warned = false;
    for (j, sn) in partition.supernodes.iter().enumerate() {
        if sn.separator.is_none() || sn.len() < config.tau_o {
            continue;
        }
        compressed[j] = true;
        if sn.len() <= config.diag_tree_factor.saturating_mul(config.tau_d) {
            continue;
        }
        let shape = match &permuted_coords {
            Some(pc) => {
                let idx: Vec<usize> = sn.cols.clone().collect();
                let (ordered, shape) = partition_separator(&idx, pc, config.tau_d);
                for (k, &col) in ordered.iter().enumerate() {
                    within[col] = sn.cols.start + k;
                }
                shape
            }
            None => {
                if !warned {
                    warnings.push("no coordinates: diagonal blocks are split in elimination order".to_string());
                    warned = true;
                }
                BlockTreeShape::balanced(sn.len(), config.tau_d)
            }
        };
        shapes[j] = Some(shape);
    }
    let inner = Permutation::from_forward(within).expect("separator reordering is a permutation");
    let perm = nd.perm.then(&inner);
    let ap = ap.permute(&inner);
    let sym = compute_row_structures(&ap, partition);
    let dense_scalars = sym.dense_scalars();

    let mut plan: Vec<NodePlan> = (0..sym.len())
        .map(|j| if compressed[j] { NodePlan::Compressed { tree: shapes[j].take() } } else { NodePlan::Standard })
        .collect();
    let block_supernodes: Vec<std::ops::Range<usize>> = ranges.iter().map(|r| sym.sn_of(r.start)..sym.sn_of(r.end - 1) + 1).collect();
    for (i, sns) in block_supernodes.iter().enumerate() {
        for j in sns.clone() {
            plan[j] = NodePlan::Interior(i);
        }
    }
    let symbolic_time = t.elapsed().as_secs_f64();

    // interior blocks, independent of each other
    let t = Instant::now();
    let params = config.params();
    let interior: Vec<InteriorBlock> = block_supernodes
        .into_par_iter()
        .map(|sns| InteriorBlock::build(&ap, &sym, sns, params))
        .collect::<Result<_, _>>()?;
    let interior_time = t.elapsed().as_secs_f64();

    // numeric phase with restarts
    let t = Instant::now();
    let uses_tree = plan.iter().any(|p| matches!(p, NodePlan::Compressed { tree: Some(_) }));
    let compressed_separators = plan.iter().filter(|p| matches!(p, NodePlan::Compressed { .. })).count();
    let diag_trees = plan.iter().filter(|p| matches!(p, NodePlan::Compressed { tree: Some(_) })).count();
    let mut nf = NumericFactor::new(ap, sym, plan, interior, params);
    nf.leaf_hook = hooks.leaf.clone();
    let mut trace = vec![config.alpha_d];
    let mut restarts = 0;
    loop {
        match nf.run() {
            Ok(()) => break,
            Err(FactorError::Indefinite { supernode, block, pivot }) => {
                if !uses_tree {
                    return Err(FactorError::NotPositiveDefinite { supernode, pivot });
                }
                if restarts == config.max_restarts {
                    return Err(FactorError::TooManyRestarts {
                        attempts: restarts + 1,
                        alpha_trace: trace,
                    });
                }
                restarts += 1;
                nf.params.alpha_d *= config.restart_growth;
                trace.push(nf.params.alpha_d);
                log::warn!("indefinite leaf (supernode {supernode}, block {block}); restarting with alpha_d = {}", nf.params.alpha_d);
                nf.reset();
            }
            Err(e) => return Err(e),
        }
    }
    let numeric_time = t.elapsed().as_secs_f64();

    let stats = FactorStats {
        n,
        nnz: a.nnz(),
        supernodes: nf.sym.len(),
        compressed_separators,
        diag_trees,
        interior_blocks: nf.interior.len(),
        compressed_blocks: nf.compressed_blocks(),
        stored_scalars: nf.stored_scalars(),
        dense_scalars,
        restarts,
        alpha_d_final: nf.params.alpha_d,
        alpha_d_trace: trace,
        separator_method: method,
        coordinate_source: source,
        warnings,
        phase_times: PhaseTimes {
            ordering: ordering_time,
            symbolic: symbolic_time,
            interior: interior_time,
            numeric: numeric_time,
            total: start.elapsed().as_secs_f64(),
        },
    };
    Ok(RankStructuredFactor {
        perm,
        numeric: nf,
        stats,
        config: config.clone(),
    })
}

impl RankStructuredFactor {
    pub fn n(&self) -> usize {
        self.perm.len()
    }

    /// Maps original indices to factor indices.
    pub fn permutation(&self) -> &Permutation {
        &self.perm
    }

    pub fn numeric(&self) -> &NumericFactor {
        &self.numeric
    }

    pub fn stats(&self) -> &FactorStats {
        &self.stats
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// `Pᵀ L⁻ᵀ L⁻¹ P` applied to each column of `b` (original numbering).
    pub fn apply_block(&self, b: &DenseMatrix) -> Result<DenseMatrix, FactorError> {
        let n = self.n();
        if b.nrows() != n {
            return Err(DenseError::DimensionMismatch(format!("right-hand side has {} rows, factor has {n}", b.nrows())).into());
        }
        let r = b.ncols();
        let mut x = DenseMatrix::zeros(n, r);
        for c in 0..r {
            let col = b.col(c);
            let xc = x.col_mut(c);
            for (old, &v) in col.iter().enumerate() {
                xc[self.perm.new_index(old)] = v;
            }
        }
        self.numeric.solve_lower_in_place(&mut x)?;
        self.numeric.solve_upper_in_place(&mut x)?;
        let mut out = DenseMatrix::zeros(n, r);
        for c in 0..r {
            let xc = x.col(c);
            let oc = out.col_mut(c);
            for (old, o) in oc.iter_mut().enumerate() {
                *o = xc[self.perm.new_index(old)];
            }
        }
        Ok(out)
    }

    /// Preconditioner application `z = M⁻¹ r`.
    pub fn try_apply(&self, r: &[f64]) -> Result<Vec<f64>, FactorError> {
        Ok(self.apply_block(&DenseMatrix::from_column(r))?.into_vec())
    }

    /// Like [`try_apply`](Self::try_apply); panics on a length mismatch.
    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        self.try_apply(r).expect("vector length matches the factor")
    }
}
