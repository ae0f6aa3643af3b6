//! Batch experiments on top of `mbv-core`: configuration, trace files and
//! JSON summaries. The `mbv` binary is a thin wrapper around this crate.

pub mod config;
pub mod experiment;
pub mod summary;
pub mod trace;

pub use config::{parse_noise_list, ExperimentConfig, ExperimentKind, NoiseOption, StateSpec};
pub use experiment::{run_experiment, summary_path, ExperimentReport};
pub use summary::{summarize, Summary};
pub use trace::{read_trace, write_trace, TraceRow, TRACE_HEADER};
