//! Experiment runner: configs, metrics, transcripts, replay and benches.

pub mod bench;
pub mod config;
pub mod experiment;
pub mod replay;
pub mod transcript;

pub use bench::{bench_scaling, BenchGrid, BenchRatio, BenchReport, BenchRow};
pub use config::{adversary_hash, hex_digest, ExperimentConfig, HarnessError, OutputNames, UpdateSource};
pub use experiment::{
    plaintext_aggregate, plaintext_rlr, run_experiment, synthetic_set, write_outputs, ByteSummary, ExperimentResult,
    MetricsRecord, TimingRecord, UpdateSet,
};
pub use replay::{replay, replay_file};
pub use transcript::Transcript;
