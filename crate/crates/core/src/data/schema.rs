use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, FeatureGroup};
use super::table::RawTable;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const SCHEMA_FORMAT_VERSION: u32 = 1;

/// Category appended to any categorical column that contains missing cells.
pub const UNKNOWN_CATEGORY: &str = "Unknown";

const STD_FLOOR: f64 = 1e-12;

/// Imputation and standardization statistics of a numeric column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericStats {
    pub median: f64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnEncoding {
    Numeric(NumericStats),
    Categorical { categories: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub missing_allowed: bool,
    #[serde(flatten)]
    pub encoding: ColumnEncoding,
}

impl ColumnSpec {
    pub fn is_categorical(&self) -> bool {
        matches!(self.encoding, ColumnEncoding::Categorical { .. })
    }

    fn width(&self) -> usize {
        match &self.encoding {
            ColumnEncoding::Numeric(_) => 1,
            ColumnEncoding::Categorical { categories } => categories.len(),
        }
    }
}

/// Ordered feature columns plus the binary target, as fitted on a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub format_version: u32,
    pub target_column: String,
    pub columns: Vec<ColumnSpec>,
}

/// Overrides for [`fit_schema_with`].
#[derive(Debug, Clone, Default)]
pub struct SchemaOptions {
    /// Columns forced to categorical even when every value parses as a number.
    pub categorical: Vec<String>,
    /// Columns dropped from the feature set (identifiers and the like).
    pub exclude: Vec<String>,
}

/// Maps a raw target cell to {0, 1}: zero stays 0, any value >= 1 becomes 1.
pub fn binarize_label(raw: &str) -> Option<u8> {
    let v: f64 = raw.trim().parse().ok()?;
    if v == 0.0 {
        Some(0)
    } else if v >= 1.0 {
        Some(1)
    } else {
        None
    }
}

pub fn fit_schema(table: &RawTable, target: &str) -> Result<FeatureSchema> {
    fit_schema_with(table, target, &SchemaOptions::default())
}

pub fn fit_schema_with(
    table: &RawTable,
    target: &str,
    options: &SchemaOptions,
) -> Result<FeatureSchema> {
    if table.n_rows() == 0 {
        return Err(Error::EmptyTable);
    }
    let target_idx = table.column_index(target)?;
    let labels = target_labels(table, target_idx)?;
    if labels.iter().all(|&y| y == labels[0]) {
        log::warn!("target `{target}` has a single class");
    }
    for name in options.categorical.iter().chain(&options.exclude) {
        table.column_index(name)?;
    }

    let mut columns = Vec::new();
    for (c, name) in table.headers().iter().enumerate() {
        if c == target_idx || options.exclude.contains(name) {
            continue;
        }
        let values: Vec<Option<&str>> = table.column(c).collect();
        let has_missing = values.iter().any(Option::is_none);
        let force_cat = options.categorical.contains(name);
        let parsed: Option<Vec<Option<f64>>> = if force_cat {
            None
        } else {
            values
                .iter()
                .map(|v| match v {
                    None => Some(None),
                    Some(s) => parse_number(s).map(Some),
                })
                .collect()
        };
        let any_present = values.iter().any(Option::is_some);
        let encoding = match parsed {
            Some(nums) if any_present => {
                let all: Vec<usize> = (0..nums.len()).collect();
                ColumnEncoding::Numeric(numeric_stats(&nums, &all))
            }
            _ => {
                let mut seen = HashSet::new();
                let mut categories = Vec::new();
                for s in values.iter().flatten() {
                    if seen.insert(*s) {
                        categories.push(s.to_string());
                    }
                }
                if has_missing && !seen.contains(UNKNOWN_CATEGORY) {
                    categories.push(UNKNOWN_CATEGORY.to_string());
                }
                ColumnEncoding::Categorical { categories }
            }
        };
        columns.push(ColumnSpec {
            name: name.clone(),
            missing_allowed: has_missing,
            encoding,
        });
    }
    Ok(FeatureSchema {
        format_version: SCHEMA_FORMAT_VERSION,
        target_column: target.to_string(),
        columns,
    })
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn target_labels(table: &RawTable, target_idx: usize) -> Result<Vec<u8>> {
    let name = &table.headers()[target_idx];
    table
        .column(target_idx)
        .enumerate()
        .map(|(row, v)| {
            let raw = v.ok_or_else(|| Error::TargetNotBinary {
                column: name.clone(),
                reason: format!("missing value in row {row}"),
            })?;
            binarize_label(raw).ok_or_else(|| Error::TargetNotBinary {
                column: name.clone(),
                reason: format!("value `{raw}` in row {row} is neither 0 nor >= 1"),
            })
        })
        .collect()
}

/// Median of present values, then mean/std of the median-imputed column.
fn numeric_stats(values: &[Option<f64>], rows: &[usize]) -> NumericStats {
    let mut present: Vec<f64> = rows.iter().filter_map(|&r| values[r]).collect();
    let median = if present.is_empty() {
        0.0
    } else {
        present.sort_by(f64::total_cmp);
        let m = present.len() / 2;
        if present.len() % 2 == 1 {
            present[m]
        } else {
            0.5 * (present[m - 1] + present[m])
        }
    };
    let n = rows.len().max(1) as f64;
    let imputed = || rows.iter().map(|&r| values[r].unwrap_or(median));
    let mean = imputed().sum::<f64>() / n;
    let var = imputed().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    NumericStats {
        median,
        mean,
        std: var.sqrt(),
    }
}

impl FeatureSchema {
    pub fn n_encoded(&self) -> usize {
        self.columns.iter().map(ColumnSpec::width).sum()
    }

    pub fn encoded_feature_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.n_encoded());
        for col in &self.columns {
            match &col.encoding {
                ColumnEncoding::Numeric(_) => names.push(col.name.clone()),
                ColumnEncoding::Categorical { categories } => {
                    names.extend(categories.iter().map(|c| format!("{}={}", col.name, c)))
                }
            }
        }
        names
    }

    pub fn groups(&self) -> Vec<FeatureGroup> {
        let mut start = 0;
        self.columns
            .iter()
            .map(|c| {
                let g = FeatureGroup {
                    source: c.name.clone(),
                    start,
                    len: c.width(),
                };
                start += g.len;
                g
            })
            .collect()
    }

    /// Recomputes numeric medians/means/stds from `rows` of `table` only,
    /// keeping category lists. Used to fit scaling on a training partition.
    pub fn refit_numeric(&mut self, table: &RawTable, rows: &[usize]) -> Result<()> {
        for col in &mut self.columns {
            if let ColumnEncoding::Numeric(stats) = &mut col.encoding {
                let c = table.column_index(&col.name)?;
                let values: Vec<Option<f64>> =
                    table.column(c).map(|v| v.and_then(parse_number)).collect();
                *stats = numeric_stats(&values, rows);
            }
        }
        Ok(())
    }

    /// One-hot/standardized feature matrix for `table`; the target is not read.
    pub fn encode_features(&self, table: &RawTable) -> Result<Matrix> {
        let width = self.n_encoded();
        let mut m = Matrix::zeros(table.n_rows(), width);
        let mut offset = 0;
        for col in &self.columns {
            let c = table.column_index(&col.name)?;
            match &col.encoding {
                ColumnEncoding::Numeric(stats) => {
                    for (row, v) in table.column(c).enumerate() {
                        let x = match v {
                            None if col.missing_allowed => stats.median,
                            None => {
                                return Err(Error::UnexpectedMissing {
                                    row,
                                    column: col.name.clone(),
                                })
                            }
                            Some(s) => parse_number(s).ok_or_else(|| Error::NonNumeric {
                                row,
                                column: col.name.clone(),
                                value: s.to_string(),
                            })?,
                        };
                        let z = if stats.std > STD_FLOOR {
                            (x - stats.mean) / stats.std
                        } else {
                            0.0
                        };
                        m.set(row, offset, z);
                    }
                }
                ColumnEncoding::Categorical { categories } => {
                    let lookup: HashMap<&str, usize> = categories
                        .iter()
                        .enumerate()
                        .map(|(i, s)| (s.as_str(), i))
                        .collect();
                    for (row, v) in table.column(c).enumerate() {
                        let key = match v {
                            None if col.missing_allowed => UNKNOWN_CATEGORY,
                            None => {
                                return Err(Error::UnexpectedMissing {
                                    row,
                                    column: col.name.clone(),
                                })
                            }
                            Some(s) => s,
                        };
                        let k = *lookup.get(key).ok_or_else(|| Error::UnseenCategory {
                            row,
                            column: col.name.clone(),
                            value: key.to_string(),
                        })?;
                        m.set(row, offset + k, 1.0);
                    }
                }
            }
            offset += col.width();
        }
        Ok(m)
    }

    pub fn labels(&self, table: &RawTable) -> Result<Vec<u8>> {
        target_labels(table, table.column_index(&self.target_column)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let schema: FeatureSchema = serde_json::from_str(s)?;
        if schema.format_version != SCHEMA_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                expected: SCHEMA_FORMAT_VERSION,
                found: schema.format_version,
            });
        }
        Ok(schema)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        FeatureSchema::from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Encodes `table` with a fitted schema: standardized numerics, one-hot
/// categoricals, median / "Unknown" imputation and binarized labels.
pub fn encode(table: &RawTable, schema: &FeatureSchema) -> Result<Dataset> {
    let features = schema.encode_features(table)?;
    let labels = schema.labels(table)?;
    Dataset::new(
        features,
        labels,
        schema.encoded_feature_names(),
        schema.groups(),
    )
}
