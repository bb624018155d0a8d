//! Experiment harness: configuration, seeded batch runs, method comparison,
//! and the verification suite.

pub mod config;
pub mod experiment;
pub mod verify;

pub use config::{ExperimentConfig, SystemSource, TheoremStepFlag, VerifyFlags};
pub use experiment::{
    build_trial_system, compare_methods, run_experiment, CompareTable, ExperimentOutput,
    MethodStats, RunSummary,
};
pub use verify::{verify, CheckOutcome, TheoremCertificate, VerificationReport, CHECK_SLACK};
