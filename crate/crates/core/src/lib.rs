//! Imbalanced binary classification toolkit.
//!
//! The crate covers the full path from a flat CSV table to a benchmark
//! report: schema fitting and one-hot encoding ([`data`]), SMOTE and
//! class-weight balancing ([`resample`]), five learner families
//! ([`linear`], [`tree`], [`mlp`]), imbalance-aware metrics ([`metrics`]),
//! leakage-safe cross-validated search ([`selection`]) and the benchmark
//! harness with report emission ([`bench`]).
//!
//! Positive class = 1 = "claim" throughout; it is assumed to be the minority.

pub mod bench;
pub mod data;
pub mod error;
pub mod linear;
pub mod matrix;
pub mod metrics;
pub mod mlp;
pub mod model;
pub mod resample;
pub mod rng;
pub mod selection;
pub mod tree;

pub use error::{Error, ErrorKind, Result};
pub use matrix::Matrix;
