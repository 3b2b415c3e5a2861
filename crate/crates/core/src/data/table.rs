use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Untyped CSV table. `None` marks a missing (empty) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    headers: Vec<String>,
    rows: Vec<Vec<Option<String>>>,
}

/// Per-column profile in the style of a pandas `dtypes / isna / nunique` dump.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnSummary {
    pub name: String,
    pub dtype: &'static str,
    pub num_missing: usize,
    pub num_uniques: usize,
}

impl RawTable {
    pub fn new(headers: Vec<String>, rows: Vec<Vec<Option<String>>>) -> Result<Self> {
        let mut seen = HashSet::new();
        for h in &headers {
            if !seen.insert(h.as_str()) {
                return Err(Error::DuplicateColumn(h.clone()));
            }
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != headers.len() {
                return Err(Error::RaggedRow {
                    row: i,
                    expected: headers.len(),
                    found: r.len(),
                });
            }
        }
        Ok(RawTable { headers, rows })
    }

    /// Convenience constructor for literals; empty strings become missing.
    pub fn from_strs(headers: &[&str], rows: &[Vec<&str>]) -> Result<Self> {
        RawTable::new(
            headers.iter().map(|s| s.to_string()).collect(),
            rows.iter()
                .map(|r| r.iter().map(|c| cell(c)).collect())
                .collect(),
        )
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        RawTable::from_reader(file)
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let headers = rdr
            .headers()?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            rows.push(rec.iter().map(cell).collect());
        }
        RawTable::new(headers, rows)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.to_writer(file)
    }

    pub fn to_writer<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.headers)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|c| c.as_deref().unwrap_or("")))?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn headers(&self) -> &[String] {
        &self.headers
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<Option<String>>] {
        &self.rows
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    #[inline]
    pub fn cell(&self, row: usize, col: usize) -> Option<&str> {
        self.rows[row][col].as_deref()
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = Option<&str>> + '_ {
        self.rows.iter().map(move |r| r[col].as_deref())
    }

    pub fn summarize(&self) -> Vec<ColumnSummary> {
        (0..self.headers.len())
            .map(|c| {
                let mut missing = 0;
                let mut uniques = HashSet::new();
                let mut all_int = true;
                let mut all_num = true;
                for v in self.column(c) {
                    match v {
                        None => missing += 1,
                        Some(s) => {
                            uniques.insert(s);
                            match s.parse::<f64>() {
                                Ok(x) => all_int &= x.fract() == 0.0 && s.parse::<i64>().is_ok(),
                                Err(_) => {
                                    all_num = false;
                                    all_int = false;
                                }
                            }
                        }
                    }
                }
                let dtype = if uniques.is_empty() || !all_num {
                    "object"
                } else if all_int && missing == 0 {
                    "int64"
                } else {
                    "float64"
                };
                ColumnSummary {
                    name: self.headers[c].clone(),
                    dtype,
                    num_missing: missing,
                    num_uniques: uniques.len(),
                }
            })
            .collect()
    }
}

fn cell(s: &str) -> Option<String> {
    let t = s.trim();
    if t.is_empty() {
        None
    } else {
        Some(t.to_string())
    }
}
