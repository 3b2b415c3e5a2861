//! Three-stage benchmark (defaults, SMOTE + tuning, class weights + tuning)
//! over the five learner families, synthetic data generation and report
//! emission.

mod grids;
mod report;
mod run;
mod svg;
mod synthetic;

use serde::{Deserialize, Serialize};

pub use grids::GridSet;
pub use report::{emit_reports, metrics_csv, METRICS_HEADER};
pub use run::{run_benchmark, BenchmarkConfig, BenchmarkReport, CellResult, SearchSummary};
pub use svg::{confusion_svg, importance_svg};
pub use synthetic::{
    generate_synthetic, generate_synthetic_table, SyntheticSpec, SYNTHETIC_TARGET,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Default hyperparameters, no balancing.
    Baseline,
    /// SMOTE on training folds plus grid search.
    SmoteTuned,
    /// Class weighting plus grid search.
    WeightedTuned,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Baseline, Stage::SmoteTuned, Stage::WeightedTuned];

    pub fn number(self) -> u8 {
        match self {
            Stage::Baseline => 1,
            Stage::SmoteTuned => 2,
            Stage::WeightedTuned => 3,
        }
    }

    pub fn from_number(n: u8) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|s| s.number() == n)
            .ok_or_else(|| {
                Error::InvalidParameter(format!("unknown stage {n}; expected 1, 2 or 3"))
            })
    }

    pub fn treatment(self) -> &'static str {
        match self {
            Stage::Baseline => "baseline",
            Stage::SmoteTuned => "smote_tuned",
            Stage::WeightedTuned => "weighted_tuned",
        }
    }

    /// Parses a comma-separated list such as `1,2,3`.
    pub fn parse_list(s: &str) -> Result<Vec<Stage>> {
        let mut out: Vec<Stage> = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<u8>()
                    .map_err(|_| Error::InvalidParameter(format!("bad stage '{p}'")))
                    .and_then(Stage::from_number)
            })
            .collect::<Result<_>>()?;
        out.sort();
        out.dedup();
        Ok(out)
    }
}
