//! Mixed-type tables: schema, masked datasets, CSV I/O, binning,
//! preprocessing, and numeric encoding.

mod binning;
mod dataset;
mod encode;
mod io;
mod preprocess;
mod schema;

pub use binning::{apply_binning, fit_binning, Binning, BinningRule, DEFAULT_BINS};
pub use dataset::{Column, Dataset, Value, MISSING_LEVEL, MISSING_REAL};
pub use encode::{encode_numeric, BlockKind, CategoricalDecode, EncodedBlock, Encoded, EncodingMap};
pub use io::{load_csv, read_csv, save_csv, write_csv, DEFAULT_NA_TOKEN};
pub use preprocess::{draw_sample, filter_estimand_levels, merge_rare_levels, merge_rare_levels_all, OTHER_LEVEL};
pub use schema::{Schema, VariableKind, VariableSpec};
