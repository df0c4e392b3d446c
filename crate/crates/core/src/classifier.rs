//! Reference multinomial softmax classifier trained by mini-batch gradient
//! descent.
//!
//! A model may carry more logits than it has seen labels for ("dummy"
//! logits reserved for classes that arrive later). The training loss is the
//! cross-entropy of a softmax over the *active* logits: those whose label
//! appears in the current data or in any earlier training round. Logits that
//! were never active stay exactly at their zero initialization.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::detection::ScoreMatrix;
use crate::error::{Error, Result};
use crate::io::{fmt_f64, read_text, write_text};
use crate::types::{Instance, LabelId};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainSpec {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2_penalty: f64,
    pub seed: u64,
}

impl TrainSpec {
    /// A zero learning rate is accepted (it leaves parameters untouched).
    fn check(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::TrainSpec(format!("learning_rate {}", self.learning_rate)));
        }
        if self.epochs == 0 {
            return Err(Error::TrainSpec("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::TrainSpec("batch_size must be at least 1".into()));
        }
        if !(self.l2_penalty.is_finite() && self.l2_penalty >= 0.0) {
            return Err(Error::TrainSpec(format!("l2_penalty {}", self.l2_penalty)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SoftmaxModel {
    pub num_logits: usize,
    pub feature_dim: usize,
    /// Row-major `num_logits x feature_dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    /// Cumulative number of training rows seen per logit.
    pub trained_counts: Vec<u64>,
}

impl SoftmaxModel {
    pub fn zeros(num_logits: usize, feature_dim: usize) -> Self {
        SoftmaxModel {
            num_logits,
            feature_dim,
            weights: vec![0.0; num_logits * feature_dim],
            bias: vec![0.0; num_logits],
            trained_counts: vec![0; num_logits],
        }
    }

    pub fn row(&self, logit: usize) -> &[f64] {
        &self.weights[logit * self.feature_dim..(logit + 1) * self.feature_dim]
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        (0..self.num_logits)
            .map(|j| dot(self.row(j), x) + self.bias[j])
            .collect()
    }

    /// Labels that have received training rows.
    pub fn trained_labels(&self) -> Vec<LabelId> {
        (0..self.num_logits)
            .filter(|&j| self.trained_counts[j] > 0)
            .map(LabelId::from_index)
            .collect()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    fn check_data(&self, data: &[Instance]) -> Result<()> {
        if data.is_empty() {
            return Err(Error::EmptyData);
        }
        for inst in data {
            self.check_dim(&inst.features)?;
            if inst.true_label.is_pseudo() {
                return Err(Error::PseudoClassLabel);
            }
            if inst.true_label.0 as usize > self.num_logits {
                return Err(Error::LabelOutOfRange {
                    label: inst.true_label.0,
                    max: self.num_logits as u32,
                });
            }
        }
        Ok(())
    }

    fn active_mask(&self, data: &[Instance]) -> Vec<bool> {
        let mut active: Vec<bool> = self.trained_counts.iter().map(|&c| c > 0).collect();
        for inst in data {
            active[inst.true_label.index()] = true;
        }
        active
    }

    /// Writes the versioned text checkpoint.
    pub fn to_text(&self) -> String {
        let mut s = String::from("noveltask-softmax v1\n");
        let _ = writeln!(s, "num_logits {}", self.num_logits);
        let _ = writeln!(s, "feature_dim {}", self.feature_dim);
        let counts: Vec<String> = self.trained_counts.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(s, "trained_counts {}", counts.join(" "));
        s.push_str("weights\n");
        for j in 0..self.num_logits {
            let row: Vec<String> = self.row(j).iter().map(|&v| fmt_f64(v)).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s.push_str("bias\n");
        let bias: Vec<String> = self.bias.iter().map(|&v| fmt_f64(v)).collect();
        s.push_str(&bias.join(" "));
        s.push('\n');
        s
    }

    pub fn from_text(path: &Path, text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().collect();
        let fail = |line: usize, msg: &str| Error::format(path, line, msg.to_string());
        if lines.first() != Some(&"noveltask-softmax v1") {
            return Err(fail(1, "unknown checkpoint header"));
        }
        let header_value = |idx: usize, key: &str| -> Result<&str> {
            lines
                .get(idx)
                .and_then(|l| l.strip_prefix(key))
                .and_then(|l| l.strip_prefix(' '))
                .ok_or_else(|| fail(idx + 1, &format!("expected {key}")))
        };
        let num_logits: usize = header_value(1, "num_logits")?
            .parse()
            .map_err(|_| fail(2, "bad num_logits"))?;
        let feature_dim: usize = header_value(2, "feature_dim")?
            .parse()
            .map_err(|_| fail(3, "bad feature_dim"))?;
        let trained_counts = header_value(3, "trained_counts")?
            .split_whitespace()
            .map(|t| t.parse::<u64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| fail(4, "bad trained_counts"))?;
        if trained_counts.len() != num_logits {
            return Err(fail(4, "trained_counts length differs from num_logits"));
        }
        if lines.get(4) != Some(&"weights") {
            return Err(fail(5, "expected weights"));
        }
        let parse_row = |idx: usize, len: usize| -> Result<Vec<f64>> {
            let line = lines.get(idx).ok_or_else(|| fail(idx + 1, "truncated checkpoint"))?;
            let row = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| fail(idx + 1, "bad number"))?;
            if row.len() != len || row.iter().any(|v| !v.is_finite()) {
                return Err(fail(idx + 1, "wrong row length or non-finite value"));
            }
            Ok(row)
        };
        let mut weights = Vec::with_capacity(num_logits * feature_dim);
        for j in 0..num_logits {
            weights.extend(parse_row(5 + j, feature_dim)?);
        }
        if lines.get(5 + num_logits) != Some(&"bias") {
            return Err(fail(6 + num_logits, "expected bias"));
        }
        let bias = parse_row(6 + num_logits, num_logits)?;
        Ok(SoftmaxModel {
            num_logits,
            feature_dim,
            weights,
            bias,
            trained_counts,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_text())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(path, &read_text(path)?)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Numerically stable softmax restricted to `mask`; masked-out entries get 0.
fn masked_softmax(logits: &[f64], mask: &[bool]) -> Vec<f64> {
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&z, _)| z)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = logits
        .iter()
        .zip(mask)
        .map(|(&z, &m)| if m { (z - max).exp() } else { 0.0 })
        .collect();
    let total: f64 = p.iter().sum();
    for v in &mut p {
        *v /= total;
    }
    p
}

/// Gradient of the masked cross-entropy loss (plus `0.5 * l2 * |W|^2`).
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub loss: f64,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Mean cross-entropy over `batch` with softmax restricted to `active`,
/// together with its analytic gradient.
pub fn loss_and_gradient(model: &SoftmaxModel, batch: &[&Instance], active: &[bool], l2: f64) -> Gradient {
    let d = model.feature_dim;
    let mut gw = vec![0.0; model.weights.len()];
    let mut gb = vec![0.0; model.num_logits];
    let mut loss = 0.0;
    let scale = 1.0 / batch.len() as f64;
    for inst in batch {
        let p = masked_softmax(&model.logits(&inst.features), active);
        let target = inst.true_label.index();
        loss -= p[target].max(f64::MIN_POSITIVE).ln() * scale;
        for j in (0..model.num_logits).filter(|&j| active[j]) {
            let err = (p[j] - if j == target { 1.0 } else { 0.0 }) * scale;
            gb[j] += err;
            for (g, &x) in gw[j * d..(j + 1) * d].iter_mut().zip(&inst.features) {
                *g += err * x;
            }
        }
    }
    if l2 > 0.0 {
        loss += 0.5 * l2 * model.weights.iter().map(|w| w * w).sum::<f64>();
        for (g, &w) in gw.iter_mut().zip(&model.weights) {
            *g += l2 * w;
        }
    }
    Gradient {
        loss,
        weights: gw,
        bias: gb,
    }
}

fn run_epochs(model: &mut SoftmaxModel, data: &[Instance], spec: &TrainSpec) -> Vec<f64> {
    let active = model.active_mask(data);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_losses = Vec::with_capacity(spec.epochs);
    for _ in 0..spec.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(spec.batch_size) {
            let batch: Vec<&Instance> = chunk.iter().map(|&i| &data[i]).collect();
            let g = loss_and_gradient(model, &batch, &active, spec.l2_penalty);
            epoch_loss += g.loss * batch.len() as f64;
            for (w, gw) in model.weights.iter_mut().zip(&g.weights) {
                *w -= spec.learning_rate * gw;
            }
            for (b, gb) in model.bias.iter_mut().zip(&g.bias) {
                *b -= spec.learning_rate * gb;
            }
        }
        epoch_losses.push(epoch_loss / data.len() as f64);
    }
    for inst in data {
        model.trained_counts[inst.true_label.index()] += 1;
    }
    epoch_losses
}

/// Trains a fresh zero-initialized model with `num_logits` outputs.
pub fn train(data: &[Instance], num_logits: usize, spec: &TrainSpec) -> Result<SoftmaxModel> {
    train_with_history(data, num_logits, spec).map(|(m, _)| m)
}

/// Like [`train`], also returning the mean training loss of each epoch as
/// accumulated during the epoch.
pub fn train_with_history(data: &[Instance], num_logits: usize, spec: &TrainSpec) -> Result<(SoftmaxModel, Vec<f64>)> {
    spec.check()?;
    let dim = data.first().ok_or(Error::EmptyData)?.dim();
    let mut model = SoftmaxModel::zeros(num_logits, dim);
    model.check_data(data)?;
    let history = run_epochs(&mut model, data, spec);
    Ok((model, history))
}

/// Continues gradient descent from `model`'s current parameters.
pub fn fine_tune(model: &SoftmaxModel, data: &[Instance], spec: &TrainSpec) -> Result<SoftmaxModel> {
    spec.check()?;
    model.check_data(data)?;
    let mut out = model.clone();
    run_epochs(&mut out, data, spec);
    Ok(out)
}

/// Softmax over all logits. The matrix width is `num_logits`.
pub fn predict_scores(model: &SoftmaxModel, instances: &[Instance]) -> Result<ScoreMatrix> {
    predict_first_k(model, instances, model.num_logits)
}

/// Softmax over the first `k` logits only (equivalently, the full softmax
/// restricted to the first `k` entries and renormalized).
pub fn predict_known_scores(model: &SoftmaxModel, instances: &[Instance], k: usize) -> Result<ScoreMatrix> {
    if k == 0 || k > model.num_logits {
        return Err(Error::LabelOutOfRange {
            label: k as u32,
            max: model.num_logits as u32,
        });
    }
    predict_first_k(model, instances, k)
}

fn predict_first_k(model: &SoftmaxModel, instances: &[Instance], k: usize) -> Result<ScoreMatrix> {
    let mask: Vec<bool> = (0..model.num_logits).map(|j| j < k).collect();
    let mut rows = Vec::with_capacity(instances.len() * k);
    for inst in instances {
        model.check_dim(&inst.features)?;
        let p = masked_softmax(&model.logits(&inst.features), &mask);
        rows.extend_from_slice(&p[..k]);
    }
    ScoreMatrix::new(instances.iter().map(|i| i.id).collect(), k, rows)
}

/// Argmax over all logits, first index on ties.
pub fn predict_labels(model: &SoftmaxModel, instances: &[Instance]) -> Result<Vec<LabelId>> {
    instances
        .iter()
        .map(|inst| {
            model.check_dim(&inst.features)?;
            Ok(LabelId::from_index(argmax(&model.logits(&inst.features))))
        })
        .collect()
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Largest relative discrepancy between the analytic gradient and a central
/// finite-difference estimate (step `1e-5`), over every parameter.
pub fn gradient_check(model: &SoftmaxModel, batch: &[Instance], l2: f64) -> Result<f64> {
    model.check_data(batch)?;
    let active = model.active_mask(batch);
    let refs: Vec<&Instance> = batch.iter().collect();
    let analytic = loss_and_gradient(model, &refs, &active, l2);
    let h = 1e-5;
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    let mut compare = |g_analytic: f64, g_fd: f64| {
        worst = worst.max((g_analytic - g_fd).abs() / (g_fd.abs() + 1e-8));
    };

    for i in 0..model.weights.len() {
        let orig = probe.weights[i];
        probe.weights[i] = orig + h;
        let up = loss_and_gradient(&probe, &refs, &active, l2).loss;
        probe.weights[i] = orig - h;
        let down = loss_and_gradient(&probe, &refs, &active, l2).loss;
        probe.weights[i] = orig;
        compare(analytic.weights[i], (up - down) / (2.0 * h));
    }
    for j in 0..model.num_logits {
        let orig = probe.bias[j];
        probe.bias[j] = orig + h;
        let up = loss_and_gradient(&probe, &refs, &active, l2).loss;
        probe.bias[j] = orig - h;
        let down = loss_and_gradient(&probe, &refs, &active, l2).loss;
        probe.bias[j] = orig;
        compare(analytic.bias[j], (up - down) / (2.0 * h));
    }
    Ok(worst)
}
