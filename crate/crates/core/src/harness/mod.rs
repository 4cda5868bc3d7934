//! Config-driven experiments and their text outputs.

pub mod config;
pub mod emit;
pub mod experiment;
pub mod selftest;

pub use config::{default_floor, ConfigFile, ExperimentPlan, ExperimentSpec, SeparationSpec, SpectrumSpec};
pub use emit::{emit_results, emit_separation, emit_spectrum, OutputFormat, CSV_HEADER};
pub use experiment::{
    run_experiment, run_separation, run_spectrum, run_suite, validate_adam_global_config, ExperimentResult,
    GlobalConfigCheck, RepeatOutcome, SeparationReport,
};
pub use selftest::{run_selftest, SuiteOutcome};
