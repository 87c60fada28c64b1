//! Machine-readable run report shared by the command-line tool and the tests.

use serde::{Deserialize, Serialize};

use crate::factor::{FactorStats, SolverConfig};
use crate::krylov::{PcgOptions, SolveReport};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub config: SolverConfig,
    pub pcg: PcgOptions,
    pub factor: FactorStats,
    pub solve: SolveReport,
}

impl RunReport {
    /// Copy with every wall-clock field set to zero, for reproducibility checks.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        r.factor.phase_times = Default::default();
        r.solve.setup_seconds = 0.0;
        r.solve.solve_seconds = 0.0;
        r
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
