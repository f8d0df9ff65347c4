//! Difficulty-stratified analysis of LLM benchmark results.
//!
//! The crate ingests per-question multiple-choice evaluation records for a
//! family of models, scores them under several metrics, groups questions by
//! how well the small models do on them, and forecasts the large-model
//! accuracy by extrapolating the easy-group and hard-group trends
//! separately ("slice and sandwich"). A single-group variant (`hard_lift`)
//! and a four-parameter logistic baseline are provided for comparison.
//!
//! Pipeline in brief:
//!
//! 1. [`ingest`] loads `models.csv` / `evals.jsonl` and splits models at an
//!    emergence threshold `T` on the effective-size axis `M`.
//! 2. [`metrics`] builds a models x questions [`metrics::ScoreMatrix`].
//! 3. [`difficulty`] ranks questions by their mean score over the models
//!    below `T` and slices them into `G` groups.
//! 4. [`trendfit`] fits polynomial trends per group and projects them back
//!    onto accuracy.
//! 5. [`report`] writes CSV/JSON/SVG artifacts; [`cli`] wires it together.

pub mod cli;
pub mod difficulty;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod report;
pub mod stats;
pub mod synth;
pub mod trendfit;

pub use error::{Error, Result};
