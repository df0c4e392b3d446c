//! Two-stage evaluation of open-world classifiers: novelty detection swept
//! over a range of reporting budgets, oracle feedback on the reported
//! novelties, and accommodation of that feedback into a (K+N)-class model.
//!
//! The pipeline pieces:
//!
//! - [`synth`] builds deterministic Gaussian-prototype benchmarks.
//! - [`classifier`] is a linear softmax reference model with dummy logits.
//! - [`detection`] ranks instances by confidence and reports novelties.
//! - [`feedback`] turns a detection report into the feedback set.
//! - [`accommodation`] incorporates feedback with one of three strategies.
//! - [`metrics`] scores both stages and aggregates budget sweeps.
//! - [`runner`] ties everything into reproducible on-disk experiments.

pub mod accommodation;
pub mod classifier;
pub mod config;
pub mod detection;
pub mod error;
pub mod feedback;
pub mod io;
pub mod metrics;
pub mod runner;
pub mod synth;
pub mod types;

pub use config::{validate_config, ConfigFile, ExperimentConfig};
pub use error::{Error, Result};
pub use types::{is_novel, Instance, LabelId, SplitBundle};
