//! Experiment orchestration: configuration, synthetic populations, the
//! simulation loop and report tables.

mod config;
mod report;
mod run;
mod synth;

pub use config::{ExperimentConfig, MethodEntry, MissingnessConfig, PopulationSource, Profile};
pub use report::{read_long_csv, report_tables, write_long_csv, write_report_tables, LongRow, TABLE_METRICS};
pub use run::{
    evaluate_imputations, impute_file, load_population, run_experiment, simulate_sample, CellFailure, CellTiming, EstimandScore,
    ExperimentOutcome, MethodSummary, Population, SimulationData,
};
pub use synth::{generate_synthetic_population, SyntheticPopulationSpec, SyntheticVariable};
