//! Tabular ingestion: CSV tables, fitted schemas, one-hot encoding and
//! stratified splitting.

mod dataset;
mod schema;
mod split;
mod table;

pub use dataset::{Dataset, FeatureGroup};
pub use schema::{
    binarize_label, encode, fit_schema, fit_schema_with, ColumnEncoding, ColumnSpec, FeatureSchema,
    NumericStats, SchemaOptions, SCHEMA_FORMAT_VERSION, UNKNOWN_CATEGORY,
};
pub use split::{stratified_split, SplitIndices};
pub use table::{ColumnSummary, RawTable};
