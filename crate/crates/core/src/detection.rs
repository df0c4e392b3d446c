//! Confidence scorers and budgeted novelty reporting.
//!
//! Every scorer maps a score matrix (one probability row per instance over
//! the K known classes) to a confidence per instance, higher meaning "more
//! confidently known". Reporting a budget of `m` novelties flags the `m`
//! least confident instances; the rest get their argmax known class.

use std::collections::HashSet;
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::classifier::argmax;
use crate::error::{Error, Result};
use crate::io::{fmt_f64, read_text, write_text};
use crate::types::LabelId;

const ROW_SUM_TOL: f64 = 1e-6;
const LOAD_ROW_SUM_TOL: f64 = 1e-4;

/// Per-instance probability vectors over the K known classes.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMatrix {
    instance_ids: Vec<u64>,
    k_known: usize,
    rows: Vec<f64>,
}

impl ScoreMatrix {
    pub fn new(instance_ids: Vec<u64>, k_known: usize, rows: Vec<f64>) -> Result<Self> {
        if k_known == 0 {
            return Err(Error::ScoreMatrix("k_known must be positive".into()));
        }
        if rows.len() != instance_ids.len() * k_known {
            return Err(Error::ScoreMatrix(format!(
                "{} values for {} rows of width {}",
                rows.len(),
                instance_ids.len(),
                k_known
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = instance_ids.iter().find(|id| !seen.insert(**id)) {
            return Err(Error::ScoreMatrix(format!("duplicate instance id {dup}")));
        }
        for (i, row) in rows.chunks(k_known).enumerate() {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::ScoreMatrix(format!("row {i} has an entry outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::ScoreMatrix(format!("row {i} sums to {sum}")));
            }
        }
        Ok(ScoreMatrix {
            instance_ids,
            k_known,
            rows,
        })
    }

    pub fn len(&self) -> usize {
        self.instance_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instance_ids.is_empty()
    }

    pub fn k_known(&self) -> usize {
        self.k_known
    }

    pub fn instance_ids(&self) -> &[u64] {
        &self.instance_ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.k_known..(i + 1) * self.k_known]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.chunks(self.k_known)
    }

    /// Reorders rows to follow `ids`, which must be a permutation of the
    /// matrix ids.
    pub fn aligned_to(&self, ids: &[u64]) -> Result<ScoreMatrix> {
        let pos: std::collections::HashMap<u64, usize> =
            self.instance_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        if ids.len() != self.len() {
            return Err(Error::IdMismatch(format!(
                "score matrix has {} rows, split has {} instances",
                self.len(),
                ids.len()
            )));
        }
        let mut rows = Vec::with_capacity(self.rows.len());
        for id in ids {
            let &i = pos
                .get(id)
                .ok_or_else(|| Error::IdMismatch(format!("instance {id} missing from score matrix")))?;
            rows.extend_from_slice(self.row(i));
        }
        ScoreMatrix::new(ids.to_vec(), self.k_known, rows)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    MaxProb,
    CompMean,
    Euclid,
    Mahalanobis,
    External,
}

impl Method {
    pub const BUILTIN: [Method; 4] = [Method::MaxProb, Method::CompMean, Method::Euclid, Method::Mahalanobis];

    pub fn name(self) -> &'static str {
        match self {
            Method::MaxProb => "maxprob",
            Method::CompMean => "compmean",
            Method::Euclid => "euclid",
            Method::Mahalanobis => "mahalanobis",
            Method::External => "external",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "maxprob" => Ok(Method::MaxProb),
            "compmean" => Ok(Method::CompMean),
            "euclid" => Ok(Method::Euclid),
            "mahalanobis" => Ok(Method::Mahalanobis),
            "external" => Ok(Method::External),
            _ => Err(format!("unknown scorer {s:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfidenceRanking {
    pub method: Method,
    pub instance_ids: Vec<u64>,
    pub confidence: Vec<f64>,
    /// Indices sorted by ascending confidence, ties broken by ascending id.
    pub order: Vec<usize>,
}

impl ConfidenceRanking {
    pub fn new(method: Method, instance_ids: Vec<u64>, confidence: Vec<f64>) -> Result<Self> {
        if instance_ids.len() != confidence.len() {
            return Err(Error::ScoreMatrix("confidence length differs from ids".into()));
        }
        if let Some(i) = confidence.iter().position(|c| !c.is_finite()) {
            return Err(Error::ScoreMatrix(format!("non-finite confidence at row {i}")));
        }
        let mut order: Vec<usize> = (0..confidence.len()).collect();
        order.sort_by(|&a, &b| {
            confidence[a]
                .total_cmp(&confidence[b])
                .then(instance_ids[a].cmp(&instance_ids[b]))
        });
        Ok(ConfidenceRanking {
            method,
            instance_ids,
            confidence,
            order,
        })
    }

    /// Ids of the `m` least confident instances.
    pub fn flagged(&self, m: usize) -> Vec<u64> {
        self.order[..m.min(self.order.len())]
            .iter()
            .map(|&i| self.instance_ids[i])
            .collect()
    }
}

/// Plug-in point for confidence functions beyond the built-in four.
pub trait ConfidenceScorer {
    fn method(&self) -> Method {
        Method::External
    }

    fn confidence(&self, scores: &ScoreMatrix) -> Result<Vec<f64>>;

    fn rank(&self, scores: &ScoreMatrix) -> Result<ConfidenceRanking> {
        ConfidenceRanking::new(self.method(), scores.instance_ids().to_vec(), self.confidence(scores)?)
    }
}

/// A built-in scorer together with its parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BuiltinScorer {
    pub method: Method,
    pub ridge: f64,
}

impl ConfidenceScorer for BuiltinScorer {
    fn method(&self) -> Method {
        self.method
    }

    fn confidence(&self, scores: &ScoreMatrix) -> Result<Vec<f64>> {
        Ok(rank(self.method, scores, self.ridge)?.confidence)
    }
}

pub fn rank(method: Method, scores: &ScoreMatrix, ridge: f64) -> Result<ConfidenceRanking> {
    match method {
        Method::MaxProb => Ok(score_maxprob(scores)),
        Method::CompMean => score_compmean(scores),
        Method::Euclid => Ok(score_euclid(scores)),
        Method::Mahalanobis => score_mahalanobis(scores, ridge),
        Method::External => Err(Error::ScoreMatrix(
            "external rankings come from a score file, not a built-in scorer".into(),
        )),
    }
}

/// Confidence is the largest class probability.
pub fn score_maxprob(scores: &ScoreMatrix) -> ConfidenceRanking {
    let confidence = scores
        .rows()
        .map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    ConfidenceRanking::new(Method::MaxProb, scores.instance_ids().to_vec(), confidence)
        .expect("row maxima are finite")
}

/// Confidence is one minus the mean of the K-1 non-maximal probabilities.
pub fn score_compmean(scores: &ScoreMatrix) -> Result<ConfidenceRanking> {
    let k = scores.k_known();
    if k < 2 {
        return Err(Error::TooFewClasses(k));
    }
    let confidence = scores
        .rows()
        .map(|r| {
            let top = argmax(r);
            let rest: f64 = r.iter().enumerate().filter(|&(j, _)| j != top).map(|(_, p)| p).sum();
            1.0 - rest / (k - 1) as f64
        })
        .collect();
    ConfidenceRanking::new(Method::CompMean, scores.instance_ids().to_vec(), confidence)
}

/// Column mean, accumulated as offsets from the first row so identical rows
/// give their exact common value.
fn column_mean(points: &[f64], dim: usize) -> Vec<f64> {
    let n = points.len() / dim;
    if n == 0 {
        return vec![0.0; dim];
    }
    let first = &points[..dim];
    let mut offset = vec![0.0; dim];
    for row in points.chunks(dim) {
        for ((o, v), f) in offset.iter_mut().zip(row).zip(first) {
            *o += v - f;
        }
    }
    first.iter().zip(offset).map(|(f, o)| f + o / n as f64).collect()
}

/// Euclidean distance of each row of a row-major `n x dim` point set to the
/// column-wise mean of all rows.
pub fn euclidean_distances(points: &[f64], dim: usize) -> Vec<f64> {
    let mean = column_mean(points, dim);
    points
        .chunks(dim)
        .map(|row| row.iter().zip(&mean).map(|(x, m)| (x - m) * (x - m)).sum::<f64>().sqrt())
        .collect()
}

/// Mahalanobis distance of each row to the population mean under the
/// regularized sample covariance `S + ridge * (trace(S) / dim) * I`.
pub fn mahalanobis_distances(points: &[f64], dim: usize, ridge: f64) -> Result<Vec<f64>> {
    let n = points.len() / dim;
    if n < 2 {
        return Err(Error::ScoreMatrix(format!(
            "mahalanobis needs at least 2 rows, got {n}"
        )));
    }
    let mean = DVector::from_vec(column_mean(points, dim));
    let centered = DMatrix::from_fn(n, dim, |i, j| points[i * dim + j] - mean[j]);
    let mut cov = centered.transpose() * &centered / (n - 1) as f64;
    let shift = ridge * cov.trace() / dim as f64;
    for j in 0..dim {
        cov[(j, j)] += shift;
    }
    let chol = cov.cholesky().ok_or(Error::NotPositiveDefinite)?;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let diff = centered.row(i).transpose();
        let solved = chol.solve(&diff);
        out.push(diff.dot(&solved).max(0.0).sqrt());
    }
    Ok(out)
}

/// Confidence is the negated Euclidean distance to the mean score row.
pub fn score_euclid(scores: &ScoreMatrix) -> ConfidenceRanking {
    let confidence = euclidean_distances(&scores.rows, scores.k_known)
        .into_iter()
        .map(|d| -d)
        .collect();
    ConfidenceRanking::new(Method::Euclid, scores.instance_ids().to_vec(), confidence)
        .expect("distances are finite")
}

/// Confidence is the negated Mahalanobis distance to the mean score row.
/// Probability rows lie on the simplex, so `ridge` must be positive for the
/// covariance to be invertible.
pub fn score_mahalanobis(scores: &ScoreMatrix, ridge: f64) -> Result<ConfidenceRanking> {
    let confidence = mahalanobis_distances(&scores.rows, scores.k_known, ridge)?
        .into_iter()
        .map(|d| -d)
        .collect();
    ConfidenceRanking::new(Method::Mahalanobis, scores.instance_ids().to_vec(), confidence)
}

/// Assignment of every detection-stage instance for one budget.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectionReport {
    pub budget: usize,
    pub instance_ids: Vec<u64>,
    /// `LabelId::NOVEL` for flagged instances, argmax known class otherwise.
    pub assignment: Vec<LabelId>,
}

impl DetectionReport {
    pub fn flagged_count(&self) -> usize {
        self.assignment.iter().filter(|l| l.is_pseudo()).count()
    }
}

pub fn report_novelties(ranking: &ConfidenceRanking, scores: &ScoreMatrix, budget: usize) -> Result<DetectionReport> {
    if ranking.instance_ids != scores.instance_ids() {
        return Err(Error::IdMismatch("ranking and score matrix cover different instances".into()));
    }
    if budget > scores.len() {
        return Err(Error::BudgetOutOfRange {
            budget,
            max: scores.len(),
        });
    }
    let mut assignment: Vec<LabelId> = scores.rows().map(|r| LabelId::from_index(argmax(r))).collect();
    for &i in &ranking.order[..budget] {
        assignment[i] = LabelId::NOVEL;
    }
    Ok(DetectionReport {
        budget,
        instance_ids: scores.instance_ids().to_vec(),
        assignment,
    })
}

/// A score file produced outside this crate.
#[derive(Clone, Debug, PartialEq)]
pub struct ExternalScores {
    pub matrix: ScoreMatrix,
    pub true_labels: Vec<LabelId>,
    /// Present when the file carries a `confidence` column.
    pub ranking: Option<ConfidenceRanking>,
}

/// Parses `id,true_label,p_1,...,p_K[,confidence]`. Rows must sum to one
/// within `1e-4` and are renormalized after validation.
pub fn parse_external_scores(path: &Path, text: &str) -> Result<ExternalScores> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::format(path, 1, "empty file"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 3 || cols[0] != "id" || cols[1] != "true_label" {
        return Err(Error::format(path, 1, "header must be id,true_label,p_1,...,p_K[,confidence]"));
    }
    let has_conf = cols.last() == Some(&"confidence");
    let k = cols.len() - 2 - has_conf as usize;
    if k == 0 {
        return Err(Error::format(path, 1, "no probability columns"));
    }
    for (j, c) in cols[2..2 + k].iter().enumerate() {
        if *c != format!("p_{}", j + 1) {
            return Err(Error::format(path, 1, format!("expected column p_{}, found {c}", j + 1)));
        }
    }

    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    let mut conf = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::format(
                path,
                lineno,
                format!("expected {} fields, found {}", cols.len(), fields.len()),
            ));
        }
        let id: u64 = fields[0]
            .parse()
            .map_err(|e| Error::format(path, lineno, format!("bad id: {e}")))?;
        if !seen.insert(id) {
            return Err(Error::format(path, lineno, format!("duplicate id {id}")));
        }
        let label: u32 = fields[1]
            .parse()
            .map_err(|e| Error::format(path, lineno, format!("bad true_label: {e}")))?;
        if label == 0 {
            return Err(Error::format(path, lineno, "true_label 0 is reserved"));
        }
        let probs = fields[2..2 + k]
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::format(path, lineno, format!("bad probability: {e}")))?;
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::format(path, lineno, "probabilities must be finite and nonnegative"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > LOAD_ROW_SUM_TOL {
            return Err(Error::format(
                path,
                lineno,
                format!("row {} sums to {sum}, beyond tolerance {LOAD_ROW_SUM_TOL}", i),
            ));
        }
        rows.extend(probs.iter().map(|p| (p / sum).min(1.0)));
        if has_conf {
            let c: f64 = fields[2 + k]
                .parse()
                .map_err(|e| Error::format(path, lineno, format!("bad confidence: {e}")))?;
            if !c.is_finite() {
                return Err(Error::format(path, lineno, "confidence must be finite"));
            }
            conf.push(c);
        }
        ids.push(id);
        labels.push(LabelId(label));
    }

    let matrix = ScoreMatrix::new(ids.clone(), k, rows)?;
    let ranking = if has_conf {
        Some(ConfidenceRanking::new(Method::External, ids, conf)?)
    } else {
        None
    };
    Ok(ExternalScores {
        matrix,
        true_labels: labels,
        ranking,
    })
}

pub fn load_external_scores(path: &Path) -> Result<ExternalScores> {
    parse_external_scores(path, &read_text(path)?)
}

/// Renders a score matrix in the external score-file format.
pub fn score_matrix_to_csv(matrix: &ScoreMatrix, true_labels: &[LabelId], confidence: Option<&[f64]>) -> String {
    let mut s = String::from("id,true_label");
    for j in 1..=matrix.k_known() {
        let _ = write!(s, ",p_{j}");
    }
    if confidence.is_some() {
        s.push_str(",confidence");
    }
    s.push('\n');
    for (i, row) in matrix.rows().enumerate() {
        let _ = write!(s, "{},{}", matrix.instance_ids()[i], true_labels[i]);
        for &p in row {
            s.push(',');
            s.push_str(&fmt_f64(p));
        }
        if let Some(c) = confidence {
            s.push(',');
            s.push_str(&fmt_f64(c[i]));
        }
        s.push('\n');
    }
    s
}

pub fn write_score_matrix(
    path: &Path,
    matrix: &ScoreMatrix,
    true_labels: &[LabelId],
    confidence: Option<&[f64]>,
) -> Result<()> {
    write_text(path, &score_matrix_to_csv(matrix, true_labels, confidence))
}
