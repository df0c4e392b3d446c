//! Incorporating feedback into a (K+N)-class classifier.
//!
//! Three strategies:
//!
//! - `retrain`: a fresh model trained on `D^T ∪ D^F`.
//! - `finetune_df`: the dummy-logit base model fine-tuned on `D^F` alone.
//! - `finetune_sampled`: the base model fine-tuned on `D^F` plus a per-class
//!   sample of `D^T` whose size is the largest per-class count in `D^F`.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classifier::{fine_tune, predict_labels, train, SoftmaxModel, TrainSpec};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::feedback::FeedbackSet;
use crate::types::{Instance, LabelId, SplitBundle};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyId {
    Retrain,
    FinetuneDf,
    FinetuneSampled,
}

impl StrategyId {
    pub const ALL: [StrategyId; 3] = [StrategyId::Retrain, StrategyId::FinetuneDf, StrategyId::FinetuneSampled];

    pub fn name(self) -> &'static str {
        match self {
            StrategyId::Retrain => "retrain",
            StrategyId::FinetuneDf => "finetune_df",
            StrategyId::FinetuneSampled => "finetune_sampled",
        }
    }

    pub fn is_finetune(self) -> bool {
        self != StrategyId::Retrain
    }

    /// Full schedule for retraining, the short fine-tune schedule otherwise.
    pub fn train_spec(self, cfg: &ExperimentConfig) -> TrainSpec {
        if self.is_finetune() {
            cfg.finetune_spec()
        } else {
            cfg.train_spec()
        }
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for StrategyId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        StrategyId::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown strategy {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AccommodationRun {
    pub strategy: StrategyId,
    pub budget: usize,
    pub model: SoftmaxModel,
    /// Argmax over all K+N logits, aligned with `eval_acc`.
    pub eval_predictions: Vec<LabelId>,
}

pub fn build_training_set(
    strategy: StrategyId,
    d_train: &[Instance],
    fs: &FeedbackSet,
    cfg: &ExperimentConfig,
) -> Result<Vec<Instance>> {
    match strategy {
        StrategyId::Retrain => Ok(d_train.iter().chain(&fs.instances).cloned().collect()),
        StrategyId::FinetuneDf | StrategyId::FinetuneSampled if fs.is_empty() => Err(Error::EmptyFeedback),
        StrategyId::FinetuneDf => Ok(fs.instances.clone()),
        StrategyId::FinetuneSampled => {
            let threshold = fs.max_class_count();
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut out = Vec::new();
            for label in 1..=cfg.k_known as u32 {
                let mut pool: Vec<&Instance> = d_train.iter().filter(|i| i.true_label.0 == label).collect();
                pool.sort_by_key(|i| i.id);
                let take = threshold.min(pool.len());
                let (picked, _) = pool.partial_shuffle(&mut rng, take);
                out.extend(picked.iter().map(|&i| i.clone()));
            }
            out.extend(fs.instances.iter().cloned());
            Ok(out)
        }
    }
}

/// Trains the shared fine-tuning base: `D^T` with K+N logits, the novel ones
/// left as untouched dummies.
pub fn train_base_model(d_train: &[Instance], cfg: &ExperimentConfig) -> Result<SoftmaxModel> {
    train(d_train, cfg.num_classes(), &cfg.train_spec())
}

pub fn run_accommodation(
    strategy: StrategyId,
    bundle: &SplitBundle,
    fs: &FeedbackSet,
    base_model: Option<&SoftmaxModel>,
    cfg: &ExperimentConfig,
    spec: &TrainSpec,
) -> Result<AccommodationRun> {
    let data = build_training_set(strategy, &bundle.d_train, fs, cfg)?;
    let model = match strategy {
        StrategyId::Retrain => train(&data, cfg.num_classes(), spec)?,
        _ => {
            let base = base_model
                .filter(|m| m.num_logits == cfg.num_classes())
                .ok_or(Error::MissingBaseModel(strategy.name()))?;
            fine_tune(base, &data, spec)?
        }
    };
    let eval_predictions = predict_labels(&model, &bundle.eval_acc)?;
    Ok(AccommodationRun {
        strategy,
        budget: fs.budget,
        model,
        eval_predictions,
    })
}

/// Sweep variant of [`run_accommodation`]: a fine-tune strategy handed an
/// empty feedback set evaluates the base model unchanged (zero fine-tuning
/// steps) instead of failing.
pub fn run_accommodation_or_base(
    strategy: StrategyId,
    bundle: &SplitBundle,
    fs: &FeedbackSet,
    base_model: Option<&SoftmaxModel>,
    cfg: &ExperimentConfig,
    spec: &TrainSpec,
) -> Result<AccommodationRun> {
    match run_accommodation(strategy, bundle, fs, base_model, cfg, spec) {
        Err(Error::EmptyFeedback) => {
            let base = base_model.ok_or(Error::MissingBaseModel(strategy.name()))?;
            Ok(AccommodationRun {
                strategy,
                budget: fs.budget,
                model: base.clone(),
                eval_predictions: predict_labels(base, &bundle.eval_acc)?,
            })
        }
        other => other,
    }
}

/// One sweep cell: the strategy's own schedule, falling back to the base
/// model when the feedback set is empty.
pub fn per_strategy_run(
    strategy: StrategyId,
    bundle: &SplitBundle,
    fs: &FeedbackSet,
    base_model: &SoftmaxModel,
    cfg: &ExperimentConfig,
) -> Result<AccommodationRun> {
    run_accommodation_or_base(strategy, bundle, fs, Some(base_model), cfg, &strategy.train_spec(cfg))
}
