//! Experiment configuration and its flat `key = value` file format.
//!
//! ```text
//! # desk-scale benchmark
//! k_known = 10
//! n_novel = 10
//! budget_grid = 40,80,120
//! ```
//!
//! Blank lines and `#` comments are ignored. Keys not present keep their
//! desk-scale default.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::classifier::TrainSpec;
use crate::error::{Error, Result};
use crate::synth::GeneratorSpec;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub k_known: usize,
    pub n_novel: usize,
    pub train_per_known: usize,
    pub det_per_class: usize,
    pub acc_per_class: usize,
    pub balanced: bool,
    pub budget_grid: Vec<usize>,
    pub seed: u64,
    pub feature_dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2_penalty: f64,
    /// Mahalanobis ridge factor, scaled by `trace(cov) / dim`.
    pub ridge: f64,
    /// Fine-tuning epochs; `None` means `max(1, epochs / 5)`.
    pub finetune_epochs: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl ExperimentConfig {
    /// The base setting used on the full-size authorship corpus.
    pub fn full_scale() -> Self {
        ExperimentConfig {
            k_known: 100,
            n_novel: 100,
            train_per_known: 500,
            det_per_class: 100,
            acc_per_class: 500,
            balanced: true,
            budget_grid: (1..=10).map(|i| i * 1000).collect(),
            seed: 0,
            feature_dim: 768,
            ..Self::desk()
        }
    }

    /// Desk-scale synthetic benchmark, 1/100 of the base setting with the
    /// same half-novel detection stage.
    pub fn desk() -> Self {
        ExperimentConfig {
            k_known: 10,
            n_novel: 10,
            train_per_known: 50,
            det_per_class: 20,
            acc_per_class: 40,
            balanced: true,
            budget_grid: (1..=10).map(|i| i * 20).collect(),
            seed: 0,
            feature_dim: 16,
            learning_rate: 0.5,
            epochs: 100,
            batch_size: 16,
            l2_penalty: 0.02,
            ridge: 1e-6,
            finetune_epochs: None,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.k_known + self.n_novel
    }

    /// Size of the detection-stage evaluation set.
    pub fn det_capacity(&self) -> usize {
        self.num_classes() * self.det_per_class
    }

    /// Number of `D^T` instances for known class `label` (1-based).
    ///
    /// Unbalanced configs ramp linearly from `train_per_known / K` for the
    /// first class up to `train_per_known` for the last.
    pub fn train_quota(&self, label: u32) -> usize {
        if self.balanced {
            self.train_per_known
        } else {
            let scaled = (self.train_per_known * label as usize) as f64 / self.k_known as f64;
            (scaled.round() as usize).max(1)
        }
    }

    pub fn train_spec(&self) -> TrainSpec {
        TrainSpec {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            l2_penalty: self.l2_penalty,
            seed: self.seed,
        }
    }

    pub fn finetune_spec(&self) -> TrainSpec {
        TrainSpec {
            epochs: self.finetune_epochs.unwrap_or((self.epochs / 5).max(1)),
            ..self.train_spec()
        }
    }
}

/// Returns every invariant violation of `cfg`; an empty list means valid.
pub fn validate_config(cfg: &ExperimentConfig) -> Vec<String> {
    let mut out = Vec::new();
    let positive = [
        ("k_known", cfg.k_known),
        ("n_novel", cfg.n_novel),
        ("train_per_known", cfg.train_per_known),
        ("det_per_class", cfg.det_per_class),
        ("acc_per_class", cfg.acc_per_class),
        ("feature_dim", cfg.feature_dim),
        ("epochs", cfg.epochs),
        ("batch_size", cfg.batch_size),
    ];
    for (name, v) in positive {
        if v == 0 {
            out.push(format!("{name} must be positive"));
        }
    }
    if cfg.finetune_epochs == Some(0) {
        out.push("finetune_epochs must be positive".into());
    }
    if !(cfg.learning_rate.is_finite() && cfg.learning_rate > 0.0) {
        out.push(format!("learning_rate must be positive, got {}", cfg.learning_rate));
    }
    if !(cfg.l2_penalty.is_finite() && cfg.l2_penalty >= 0.0) {
        out.push(format!("l2_penalty must be nonnegative, got {}", cfg.l2_penalty));
    }
    if !(cfg.ridge.is_finite() && cfg.ridge > 0.0) {
        out.push(format!("ridge must be positive, got {}", cfg.ridge));
    }

    if cfg.budget_grid.is_empty() {
        out.push("budget_grid must not be empty".into());
    }
    let capacity = cfg.det_capacity();
    for (i, &b) in cfg.budget_grid.iter().enumerate() {
        if b == 0 {
            out.push("budget must be positive, got 0".into());
        } else if b > capacity {
            out.push(format!(
                "budget {b} exceeds detection-set capacity {capacity} ((k_known + n_novel) * det_per_class)"
            ));
        }
        if i > 0 && b <= cfg.budget_grid[i - 1] {
            out.push(format!(
                "budget_grid must be strictly ascending ({} then {b})",
                cfg.budget_grid[i - 1]
            ));
        }
    }
    out
}

/// Everything a config file carries: the experiment plus the synthetic
/// generator parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigFile {
    pub experiment: ExperimentConfig,
    pub generator: GeneratorSpec,
}

impl Default for ConfigFile {
    fn default() -> Self {
        let experiment = ExperimentConfig::desk();
        let generator = GeneratorSpec::desk(experiment.feature_dim, experiment.seed);
        ConfigFile {
            experiment,
            generator,
        }
    }
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses the `key = value` format. All problems, including unknown keys
    /// and semantic violations, are collected into one `Error::Config`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cf = ConfigFile::default();
        let mut problems = Vec::new();
        let mut separation = None;
        let mut stddev = None;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                problems.push(format!("line {}: expected key = value", lineno + 1));
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            let e = &mut cf.experiment;
            let res: std::result::Result<(), String> = match key {
                "k_known" => parse_into(value, &mut e.k_known),
                "n_novel" => parse_into(value, &mut e.n_novel),
                "train_per_known" => parse_into(value, &mut e.train_per_known),
                "det_per_class" => parse_into(value, &mut e.det_per_class),
                "acc_per_class" => parse_into(value, &mut e.acc_per_class),
                "balanced" => parse_into(value, &mut e.balanced),
                "seed" => parse_into(value, &mut e.seed),
                "feature_dim" => parse_into(value, &mut e.feature_dim),
                "learning_rate" => parse_into(value, &mut e.learning_rate),
                "epochs" => parse_into(value, &mut e.epochs),
                "batch_size" => parse_into(value, &mut e.batch_size),
                "l2_penalty" => parse_into(value, &mut e.l2_penalty),
                "ridge" => parse_into(value, &mut e.ridge),
                "finetune_epochs" => {
                    let mut v = 0usize;
                    parse_into(value, &mut v).map(|_| e.finetune_epochs = Some(v))
                }
                "budget_grid" => value
                    .split(',')
                    .map(|s| s.trim().parse::<usize>().map_err(|err| format!("{s:?}: {err}")))
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map(|grid| e.budget_grid = grid),
                "class_separation" => {
                    let mut v = 0.0;
                    parse_into(value, &mut v).map(|_| separation = Some(v))
                }
                "within_class_stddev" => {
                    let mut v = 0.0;
                    parse_into(value, &mut v).map(|_| stddev = Some(v))
                }
                _ => Err("unknown key".to_string()),
            };
            if let Err(msg) = res {
                problems.push(format!("line {}: {key}: {msg}", lineno + 1));
            }
        }

        cf.generator = GeneratorSpec {
            feature_dim: cf.experiment.feature_dim,
            class_separation: separation.unwrap_or(cf.generator.class_separation),
            within_class_stddev: stddev.unwrap_or(cf.generator.within_class_stddev),
            seed: cf.experiment.seed,
        };
        problems.extend(validate_config(&cf.experiment));
        problems.extend(cf.generator.validate());
        if problems.is_empty() {
            Ok(cf)
        } else {
            Err(Error::Config(problems))
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.experiment.seed = seed;
        self.generator.seed = seed;
        self
    }

    /// Canonical text form; `parse(render())` reproduces `self`.
    pub fn render(&self) -> String {
        let e = &self.experiment;
        let mut s = String::new();
        let grid: Vec<String> = e.budget_grid.iter().map(|b| b.to_string()).collect();
        let _ = writeln!(s, "k_known = {}", e.k_known);
        let _ = writeln!(s, "n_novel = {}", e.n_novel);
        let _ = writeln!(s, "train_per_known = {}", e.train_per_known);
        let _ = writeln!(s, "det_per_class = {}", e.det_per_class);
        let _ = writeln!(s, "acc_per_class = {}", e.acc_per_class);
        let _ = writeln!(s, "balanced = {}", e.balanced);
        let _ = writeln!(s, "budget_grid = {}", grid.join(","));
        let _ = writeln!(s, "seed = {}", e.seed);
        let _ = writeln!(s, "feature_dim = {}", e.feature_dim);
        let _ = writeln!(s, "learning_rate = {:?}", e.learning_rate);
        let _ = writeln!(s, "epochs = {}", e.epochs);
        let _ = writeln!(s, "batch_size = {}", e.batch_size);
        let _ = writeln!(s, "l2_penalty = {:?}", e.l2_penalty);
        let _ = writeln!(s, "ridge = {:?}", e.ridge);
        if let Some(ft) = e.finetune_epochs {
            let _ = writeln!(s, "finetune_epochs = {ft}");
        }
        let _ = writeln!(s, "class_separation = {:?}", self.generator.class_separation);
        let _ = writeln!(s, "within_class_stddev = {:?}", self.generator.within_class_stddev);
        s
    }
}

fn parse_into<T: std::str::FromStr>(value: &str, slot: &mut T) -> std::result::Result<(), String>
where
    T::Err: std::fmt::Display,
{
    *slot = value.parse::<T>().map_err(|e| format!("{value:?}: {e}"))?;
    Ok(())
}
