//! Precision, recall and F1 per segment (known / novel / overall) for both
//! stages, budget sweeps and normalized-x trapezoidal AUC.
//!
//! Macro conventions: a class with no predictions contributes precision 0;
//! classes without ground-truth instances are left out of macro recall.
//! F1 is `2PR / (P + R)` of the aggregated P and R, and 0 when `P + R = 0`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::accommodation::{run_accommodation_or_base, AccommodationRun, StrategyId};
use crate::classifier::SoftmaxModel;
use crate::config::ExperimentConfig;
use crate::detection::{report_novelties, ConfidenceRanking, DetectionReport, ScoreMatrix};
use crate::error::{Error, Result};
use crate::feedback::{build_feedback, FeedbackSet};
use crate::types::{Instance, LabelId, SplitBundle};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Segment {
    Known,
    Novel,
    Overall,
}

impl Segment {
    pub const ALL: [Segment; 3] = [Segment::Known, Segment::Novel, Segment::Overall];

    pub fn name(self) -> &'static str {
        match self {
            Segment::Known => "known",
            Segment::Novel => "novel",
            Segment::Overall => "overall",
        }
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Segment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Segment::ALL
            .into_iter()
            .find(|seg| seg.name() == s)
            .ok_or_else(|| format!("unknown segment {s:?}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Averaging {
    Micro,
    Macro,
}

impl Averaging {
    pub const ALL: [Averaging; 2] = [Averaging::Micro, Averaging::Macro];

    pub fn name(self) -> &'static str {
        match self {
            Averaging::Micro => "micro",
            Averaging::Macro => "macro",
        }
    }
}

impl fmt::Display for Averaging {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Averaging {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Averaging::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown averaging {s:?}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentScores {
    pub segment: Segment,
    pub averaging: Averaging,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ClassCounts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        f1_score(self.precision(), self.recall())
    }

    pub fn support(&self) -> usize {
        self.tp + self.fn_
    }
}

/// Per-class true/false positive and false negative counts of a
/// single-label assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct Confusion {
    counts: HashMap<LabelId, ClassCounts>,
}

impl Confusion {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (LabelId, LabelId)>) -> Self {
        let mut counts: HashMap<LabelId, ClassCounts> = HashMap::new();
        for (truth, pred) in pairs {
            if truth == pred {
                counts.entry(truth).or_default().tp += 1;
            } else {
                counts.entry(truth).or_default().fn_ += 1;
                counts.entry(pred).or_default().fp += 1;
            }
        }
        Confusion { counts }
    }

    pub fn class(&self, label: LabelId) -> ClassCounts {
        self.counts.get(&label).copied().unwrap_or_default()
    }

    pub fn scores(&self, classes: &[LabelId], segment: Segment, averaging: Averaging) -> SegmentScores {
        let (precision, recall) = match averaging {
            Averaging::Micro => {
                let mut total = ClassCounts::default();
                for &c in classes {
                    let cc = self.class(c);
                    total.tp += cc.tp;
                    total.fp += cc.fp;
                    total.fn_ += cc.fn_;
                }
                (total.precision(), total.recall())
            }
            Averaging::Macro => {
                let p = if classes.is_empty() {
                    0.0
                } else {
                    classes.iter().map(|&c| self.class(c).precision()).sum::<f64>() / classes.len() as f64
                };
                let supported: Vec<ClassCounts> = classes
                    .iter()
                    .map(|&c| self.class(c))
                    .filter(|cc| cc.support() > 0)
                    .collect();
                let r = if supported.is_empty() {
                    0.0
                } else {
                    supported.iter().map(|cc| cc.recall()).sum::<f64>() / supported.len() as f64
                };
                (p, r)
            }
        };
        SegmentScores {
            segment,
            averaging,
            precision,
            recall,
            f1: f1_score(precision, recall),
        }
    }
}

fn labels(range: std::ops::RangeInclusive<usize>) -> Vec<LabelId> {
    range.map(|l| LabelId(l as u32)).collect()
}

/// Scores a detection report against the (K+1)-class truth where every
/// novel instance's true class is the pseudo-class 0.
pub fn detection_metrics(
    eval_det: &[Instance],
    report: &DetectionReport,
    k_known: usize,
    averaging: Averaging,
) -> Result<[SegmentScores; 3]> {
    let assigned: HashMap<u64, LabelId> = report
        .instance_ids
        .iter()
        .copied()
        .zip(report.assignment.iter().copied())
        .collect();
    if assigned.len() != eval_det.len() {
        return Err(Error::IdMismatch("report does not cover the detection set".into()));
    }
    let mut pairs = Vec::with_capacity(eval_det.len());
    for inst in eval_det {
        let pred = *assigned
            .get(&inst.id)
            .ok_or_else(|| Error::IdMismatch(format!("instance {} missing from report", inst.id)))?;
        let truth = if inst.true_label.0 as usize > k_known {
            LabelId::NOVEL
        } else {
            inst.true_label
        };
        pairs.push((truth, pred));
    }
    let conf = Confusion::from_pairs(pairs);
    let known = labels(1..=k_known);
    let overall = labels(0..=k_known);
    Ok([
        conf.scores(&known, Segment::Known, averaging),
        conf.scores(&[LabelId::NOVEL], Segment::Novel, averaging),
        conf.scores(&overall, Segment::Overall, averaging),
    ])
}

fn accommodation_confusion(
    eval_acc: &[Instance],
    predictions: &[LabelId],
    k_known: usize,
    n_novel: usize,
) -> Result<Confusion> {
    if predictions.len() != eval_acc.len() {
        return Err(Error::IdMismatch(format!(
            "{} predictions for {} instances",
            predictions.len(),
            eval_acc.len()
        )));
    }
    let max = (k_known + n_novel) as u32;
    for &p in predictions {
        if p.is_pseudo() {
            return Err(Error::PseudoClassLabel);
        }
        if p.0 > max {
            return Err(Error::LabelOutOfRange { label: p.0, max });
        }
    }
    Ok(Confusion::from_pairs(
        eval_acc.iter().map(|i| i.true_label).zip(predictions.iter().copied()),
    ))
}

/// Scores (K+N)-class predictions aligned with `eval_acc`.
pub fn accommodation_metrics(
    eval_acc: &[Instance],
    predictions: &[LabelId],
    k_known: usize,
    n_novel: usize,
    averaging: Averaging,
) -> Result<[SegmentScores; 3]> {
    let conf = accommodation_confusion(eval_acc, predictions, k_known, n_novel)?;
    let known = labels(1..=k_known);
    let novel = labels(k_known + 1..=k_known + n_novel);
    let overall = labels(1..=k_known + n_novel);
    Ok([
        conf.scores(&known, Segment::Known, averaging),
        conf.scores(&novel, Segment::Novel, averaging),
        conf.scores(&overall, Segment::Overall, averaging),
    ])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterRow {
    pub label: LabelId,
    pub feedback_count: usize,
    pub f1: f64,
}

/// One row per novel class: feedback count against accommodation F1.
pub fn per_class_scatter(
    run: &AccommodationRun,
    eval_acc: &[Instance],
    fs: &FeedbackSet,
    k_known: usize,
    n_novel: usize,
) -> Result<Vec<ScatterRow>> {
    if run.budget != fs.budget {
        return Err(Error::Invariant(format!(
            "run budget {} differs from feedback budget {}",
            run.budget, fs.budget
        )));
    }
    let conf = accommodation_confusion(eval_acc, &run.eval_predictions, k_known, n_novel)?;
    Ok(labels(k_known + 1..=k_known + n_novel)
        .into_iter()
        .map(|label| ScatterRow {
            label,
            feedback_count: fs.per_class_counts.get(&label).copied().unwrap_or(0),
            f1: conf.class(label).f1(),
        })
        .collect())
}

/// Area under a curve with x rescaled to `[0, 1]` by
/// `(x - x_min) / (x_max - x_min)`, trapezoidal rule.
pub fn auc(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints(points.len()));
    }
    if points.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::NonAscending);
    }
    let x0 = points[0].0;
    let span = points[points.len() - 1].0 - x0;
    Ok(points
        .windows(2)
        .map(|w| {
            let dx = (w[1].0 - x0) / span - (w[0].0 - x0) / span;
            dx * (w[0].1 + w[1].1) / 2.0
        })
        .sum())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub budget: usize,
    pub scores: [SegmentScores; 3],
}

impl CurvePoint {
    pub fn segment(&self, segment: Segment) -> &SegmentScores {
        &self.scores[segment as usize]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricCurve {
    pub averaging: Averaging,
    pub points: Vec<CurvePoint>,
}

impl MetricCurve {
    pub fn series(&self, segment: Segment, pick: impl Fn(&SegmentScores) -> f64) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .map(|p| (p.budget as f64, pick(p.segment(segment))))
            .collect()
    }

    /// F1 AUC per segment in `Segment::ALL` order.
    pub fn auc_per_segment(&self) -> Result<[f64; 3]> {
        let mut out = [0.0; 3];
        for seg in Segment::ALL {
            out[seg as usize] = auc(&self.series(seg, |s| s.f1))?;
        }
        Ok(out)
    }
}

fn check_grid(grid: &[usize]) -> Result<()> {
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(vec!["budget grid must be nonempty and strictly ascending".into()]));
    }
    Ok(())
}

/// Detection curve: one ranking, one report per budget.
pub fn detection_sweep(
    eval_det: &[Instance],
    ranking: &ConfidenceRanking,
    scores: &ScoreMatrix,
    grid: &[usize],
    k_known: usize,
    averaging: Averaging,
) -> Result<MetricCurve> {
    check_grid(grid)?;
    let points = grid
        .iter()
        .map(|&m| {
            let report = report_novelties(ranking, scores, m)?;
            Ok(CurvePoint {
                budget: m,
                scores: detection_metrics(eval_det, &report, k_known, averaging)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricCurve { averaging, points })
}

/// Accommodation curve: for every budget the feedback set is rebuilt and the
/// strategy rerun from scratch.
pub fn accommodation_sweep(
    strategy: StrategyId,
    bundle: &SplitBundle,
    ranking: &ConfidenceRanking,
    scores: &ScoreMatrix,
    base_model: Option<&SoftmaxModel>,
    cfg: &ExperimentConfig,
    averaging: Averaging,
) -> Result<MetricCurve> {
    check_grid(&cfg.budget_grid)?;
    let spec = strategy.train_spec(cfg);
    let points = cfg
        .budget_grid
        .iter()
        .map(|&m| {
            let report = report_novelties(ranking, scores, m)?;
            let fs = build_feedback(&bundle.eval_det, &report, cfg.k_known)?;
            let run = run_accommodation_or_base(strategy, bundle, &fs, base_model, cfg, &spec)?;
            Ok(CurvePoint {
                budget: m,
                scores: accommodation_metrics(
                    &bundle.eval_acc,
                    &run.eval_predictions,
                    cfg.k_known,
                    cfg.n_novel,
                    averaging,
                )?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricCurve { averaging, points })
}
