use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::Stage;
use crate::error::{Error, Result};
use crate::model::LearnerKind;
use crate::selection::HyperGrid;

/// Source of the per-stage search grids.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSet {
    /// The published search spaces.
    #[default]
    Paper,
    /// Small grids for quick runs.
    Reduced,
    /// `<dir>/<model>_<smote|weighted>.json`.
    Dir(PathBuf),
}

macro_rules! embedded {
    ($set:literal) => {
        [
            (
                LearnerKind::Lr,
                include_str!(concat!("../../grids/", $set, "/lr_smote.json")),
                include_str!(concat!("../../grids/", $set, "/lr_weighted.json")),
            ),
            (
                LearnerKind::Dt,
                include_str!(concat!("../../grids/", $set, "/dt_smote.json")),
                include_str!(concat!("../../grids/", $set, "/dt_weighted.json")),
            ),
            (
                LearnerKind::Rf,
                include_str!(concat!("../../grids/", $set, "/rf_smote.json")),
                include_str!(concat!("../../grids/", $set, "/rf_weighted.json")),
            ),
            (
                LearnerKind::Gbt,
                include_str!(concat!("../../grids/", $set, "/gbt_smote.json")),
                include_str!(concat!("../../grids/", $set, "/gbt_weighted.json")),
            ),
            (
                LearnerKind::Mlp,
                include_str!(concat!("../../grids/", $set, "/mlp_smote.json")),
                include_str!(concat!("../../grids/", $set, "/mlp_weighted.json")),
            ),
        ]
    };
}

const PAPER: [(LearnerKind, &str, &str); 5] = embedded!("paper");
const REDUCED: [(LearnerKind, &str, &str); 5] = embedded!("reduced");

fn suffix(stage: Stage) -> Result<&'static str> {
    match stage {
        Stage::SmoteTuned => Ok("smote"),
        Stage::WeightedTuned => Ok("weighted"),
        Stage::Baseline => Err(Error::InvalidParameter(
            "the baseline stage has no grid".into(),
        )),
    }
}

impl GridSet {
    pub fn parse(s: &str) -> Self {
        match s {
            "paper" => GridSet::Paper,
            "reduced" => GridSet::Reduced,
            dir => GridSet::Dir(PathBuf::from(dir)),
        }
    }

    /// Raw JSON text of the grid for `model` in `stage`.
    pub fn text(&self, stage: Stage, model: LearnerKind) -> Result<String> {
        let sfx = suffix(stage)?;
        let table = match self {
            GridSet::Paper => &PAPER,
            GridSet::Reduced => &REDUCED,
            GridSet::Dir(dir) => {
                let path = dir.join(format!("{}_{sfx}.json", model.code()));
                return std::fs::read_to_string(&path).map_err(|e| Error::io(path, e));
            }
        };
        let (_, smote, weighted) = table
            .iter()
            .find(|(k, _, _)| *k == model)
            .expect("every family has a grid");
        Ok(if stage == Stage::SmoteTuned {
            smote
        } else {
            weighted
        }
        .to_string())
    }

    pub fn load(&self, stage: Stage, model: LearnerKind) -> Result<HyperGrid> {
        let grid = HyperGrid::from_json(&self.text(stage, model)?, None)?;
        if grid.model != model {
            return Err(Error::InvalidParameter(format!(
                "grid for {} names model {}",
                model.code(),
                grid.model.code()
            )));
        }
        Ok(grid)
    }
}
