//! Data loading, experiment orchestration and reporting.

pub mod data;
pub mod diagnose;
pub mod experiment;
pub mod report;
pub mod synth;

pub use data::{load_and_preprocess, DataFormat, Dataset, DatasetSpec, TargetColumn};
pub use diagnose::{diagnose_spectrum, suggest, Diagnosis, Suggestion};
pub use experiment::{run_experiment, ExperimentConfig, LearnerKind, MetricsToggle, Params, RunReport};
pub use report::{emit, Sinks};
