//! Experiment runner around [`veto_core`]: file formats, configuration, and
//! the paraphrase / refinement / training-data / sweep pipelines.
//!
//! The core crate holds all decoding, constraint and metric logic and avoids
//! the standard library; this crate adds everything that touches files,
//! flags and threads:
//!
//! * [`formats`] — vocabulary files, scorer definitions, stopword lists,
//!   stemmer rule tables, and JSONL sentence records.
//! * [`config`] — a TOML config file plus command-line flags that override
//!   it key by key.
//! * [`pipeline`] — the four tasks, decoding records concurrently with
//!   deterministic, id-ordered aggregation.
//! * [`report`] — the JSON run report, the sweep CSV curve, and terminal
//!   summaries.

pub mod config;
pub mod formats;
pub mod pipeline;
pub mod report;

pub use config::{from_args, Cli, ConfigError, ExperimentConfig, Task};
pub use formats::{FormatError, LoadedScorer, RecordId, SentenceRecord};
pub use pipeline::{write_artifacts, Pipeline, PipelineError, RunArtifacts};
pub use report::{SweepRow, TaskReport};
