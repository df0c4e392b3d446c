//! On-disk experiment pipeline behind the `noveltask` command.
//!
//! Layout of an output directory:
//!
//! ```text
//! config.txt                 rendered configuration
//! d_train.csv eval_det.csv eval_acc.csv
//! model_base.txt             D^T model with K+N logits (novel ones dummy)
//! scores/eval_det.csv        K-class score matrix of the detection set
//! detection.csv              detection rows (detect subcommand)
//! feedback/<scorer>/budget_<m>.csv
//! accommodation.csv          accommodation rows (accommodate subcommand)
//! cells/                     per-(scorer, strategy, budget) sweep cache
//! results.csv summary.json plots/*.tsv manifest.json
//! manifest_generate.json      digests written by the generate subcommand
//! report.txt report/*.tsv
//! ```
//!
//! Every float is written with 17 significant digits, so identical inputs
//! give byte-identical artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::accommodation::{per_strategy_run, train_base_model, StrategyId};
use crate::classifier::{predict_known_scores, SoftmaxModel};
use crate::config::ConfigFile;
use crate::detection::{
    load_external_scores, rank, report_novelties, score_maxprob, write_score_matrix, ConfidenceRanking, Method,
    ScoreMatrix,
};
use crate::error::{Error, Result};
use crate::feedback::{build_feedback, feedback_histogram, FeedbackSet};
use crate::io::{
    file_digest, fmt_f64, read_instances, read_text, sha256_hex, write_instances, write_text, Fixed17,
};
use crate::metrics::{
    accommodation_metrics, auc, detection_metrics, per_class_scatter, Averaging, Segment, SegmentScores,
};
use crate::synth::generate;
use crate::types::{Instance, LabelId, SplitBundle};

pub const TOOL_VERSION: &str = concat!("noveltask ", env!("CARGO_PKG_VERSION"));
pub const RESULTS_HEADER: &str = "method,strategy,budget,segment,averaging,precision,recall,f1";
/// Strategy column value of detection-stage rows.
pub const DETECTION: &str = "detection";

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub scorers: Vec<Method>,
    pub strategies: Vec<StrategyId>,
    pub external_scores: Option<PathBuf>,
    pub averaging: Vec<Averaging>,
    /// Stop after computing this many uncached sweep cells.
    pub cell_limit: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            scorers: Method::BUILTIN.to_vec(),
            strategies: StrategyId::ALL.to_vec(),
            external_scores: None,
            averaging: Averaging::ALL.to_vec(),
            cell_limit: None,
        }
    }
}

impl RunOptions {
    fn methods(&self) -> Vec<Method> {
        let mut out: Vec<Method> = self.scorers.iter().copied().filter(|&m| m != Method::External).collect();
        if self.external_scores.is_some() {
            out.push(Method::External);
        }
        out
    }
}

/// One row of the results CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub method: String,
    pub strategy: String,
    pub budget: usize,
    pub scores: SegmentScores,
}

impl ResultRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.method,
            self.strategy,
            self.budget,
            self.scores.segment,
            self.scores.averaging,
            fmt_f64(self.scores.precision),
            fmt_f64(self.scores.recall),
            fmt_f64(self.scores.f1)
        )
    }

    pub fn parse(line: &str) -> std::result::Result<Self, String> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(format!("expected 8 fields, found {}", f.len()));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
        Ok(ResultRow {
            method: f[0].to_string(),
            strategy: f[1].to_string(),
            budget: f[2].parse().map_err(|e| format!("budget: {e}"))?,
            scores: SegmentScores {
                segment: f[3].parse()?,
                averaging: f[4].parse()?,
                precision: num(f[5])?,
                recall: num(f[6])?,
                f1: num(f[7])?,
            },
        })
    }
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let text = read_text(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(RESULTS_HEADER) {
        return Err(Error::format(path, 1, format!("expected header {RESULTS_HEADER}")));
    }
    lines
        .enumerate()
        .map(|(i, l)| ResultRow::parse(l).map_err(|msg| Error::format(path, i + 2, msg)))
        .collect()
}

fn results_csv(rows: &[ResultRow]) -> String {
    let mut s = String::from(RESULTS_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.to_csv());
        s.push('\n');
    }
    s
}

struct Layout {
    root: PathBuf,
}

impl Layout {
    fn new(root: &Path) -> Self {
        Layout { root: root.to_path_buf() }
    }
    fn p(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }
    fn split(&self, name: &str) -> PathBuf {
        self.p(&format!("{name}.csv"))
    }
    fn model(&self) -> PathBuf {
        self.p("model_base.txt")
    }
    fn scores(&self) -> PathBuf {
        self.p("scores/eval_det.csv")
    }
    fn feedback(&self, method: Method, budget: usize) -> PathBuf {
        self.p(&format!("feedback/{method}/budget_{budget}.csv"))
    }
    fn cell(&self, method: Method, strategy: &str, budget: usize) -> PathBuf {
        self.p(&format!("cells/{method}__{strategy}__{budget}.txt"))
    }
}

const SPLITS: [&str; 3] = ["d_train", "eval_det", "eval_acc"];

fn write_config(layout: &Layout, cf: &ConfigFile) -> Result<()> {
    write_text(&layout.p("config.txt"), &cf.render())
}

fn write_splits(layout: &Layout, cf: &ConfigFile, bundle: &SplitBundle) -> Result<Vec<PathBuf>> {
    let dim = cf.experiment.feature_dim;
    let mut out = Vec::new();
    for (name, split) in SPLITS.iter().zip([&bundle.d_train, &bundle.eval_det, &bundle.eval_acc]) {
        let path = layout.split(name);
        write_instances(&path, split, dim)?;
        out.push(path);
    }
    Ok(out)
}

fn load_splits(layout: &Layout, cf: &ConfigFile) -> Result<SplitBundle> {
    let bundle = SplitBundle {
        d_train: read_instances(&layout.split("d_train"))?,
        eval_det: read_instances(&layout.split("eval_det"))?,
        eval_acc: read_instances(&layout.split("eval_acc"))?,
    };
    bundle.check(cf.experiment.k_known, cf.experiment.n_novel)?;
    let dim = cf.experiment.feature_dim;
    for inst in bundle.d_train.iter().chain(&bundle.eval_det).chain(&bundle.eval_acc) {
        if inst.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: inst.dim(),
            });
        }
    }
    Ok(bundle)
}

#[derive(Serialize)]
struct Artifact {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool_version: &'a str,
    command: &'a str,
    seed: u64,
    config: String,
    scorers: Vec<String>,
    strategies: Vec<String>,
    budget_grid: &'a [usize],
    artifacts: Vec<Artifact>,
}

fn write_manifest(layout: &Layout, cf: &ConfigFile, opts: &RunOptions, command: &str, files: &[PathBuf]) -> Result<PathBuf> {
    let mut artifacts = Vec::with_capacity(files.len());
    for f in files {
        let rel = f.strip_prefix(&layout.root).unwrap_or(f);
        artifacts.push(Artifact {
            path: rel.to_string_lossy().replace('\\', "/"),
            sha256: file_digest(f)?,
        });
    }
    artifacts.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = Manifest {
        tool_version: TOOL_VERSION,
        command,
        seed: cf.experiment.seed,
        config: cf.render(),
        scorers: opts.methods().iter().map(|m| m.to_string()).collect(),
        strategies: opts.strategies.iter().map(|s| s.to_string()).collect(),
        budget_grid: &cf.experiment.budget_grid,
        artifacts,
    };
    let path = match command {
        "sweep" => layout.p("manifest.json"),
        _ => layout.p(&format!("manifest_{command}.json")),
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write_text(&path, &text)?;
    Ok(path)
}

/// Recomputes every digest listed in a manifest; returns the paths that no
/// longer match.
pub fn verify_manifest(manifest: &Path) -> Result<Vec<String>> {
    let root = manifest.parent().unwrap_or(Path::new("."));
    let value: serde_json::Value = serde_json::from_str(&read_text(manifest)?)?;
    let mut bad = Vec::new();
    for a in value["artifacts"].as_array().into_iter().flatten() {
        let path = a["path"].as_str().unwrap_or_default();
        let expected = a["sha256"].as_str().unwrap_or_default();
        match file_digest(&root.join(path)) {
            Ok(d) if d == expected => {}
            _ => bad.push(path.to_string()),
        }
    }
    Ok(bad)
}

/// Writes the three split CSVs for the configured synthetic benchmark.
pub fn cmd_generate(cf: &ConfigFile, out: &Path) -> Result<Vec<PathBuf>> {
    let layout = Layout::new(out);
    let bundle = generate(&cf.experiment, &cf.generator)?;
    write_config(&layout, cf)?;
    let mut files = write_splits(&layout, cf, &bundle)?;
    files.push(layout.p("config.txt"));
    files.push(write_manifest(&layout, cf, &RunOptions::default(), "generate", &files)?);
    Ok(files)
}

/// Trains the shared base model on `D^T` (K+N logits).
pub fn cmd_train(cf: &ConfigFile, out: &Path) -> Result<PathBuf> {
    let layout = Layout::new(out);
    let bundle = load_splits(&layout, cf)?;
    let model = train_base_model(&bundle.d_train, &cf.experiment)?;
    model.save(&layout.model())?;
    Ok(layout.model())
}

struct Prepared {
    bundle: SplitBundle,
    base: SoftmaxModel,
    scores: ScoreMatrix,
}

fn known_scores(cf: &ConfigFile, bundle: &SplitBundle, base: &SoftmaxModel) -> Result<ScoreMatrix> {
    predict_known_scores(base, &bundle.eval_det, cf.experiment.k_known)
}

fn write_scores(layout: &Layout, bundle: &SplitBundle, scores: &ScoreMatrix) -> Result<()> {
    let labels: Vec<LabelId> = bundle.eval_det.iter().map(|i| i.true_label).collect();
    write_score_matrix(&layout.scores(), scores, &labels, None)
}

fn load_prepared(layout: &Layout, cf: &ConfigFile) -> Result<Prepared> {
    let bundle = load_splits(layout, cf)?;
    let base = SoftmaxModel::load(&layout.model())?;
    if base.num_logits != cf.experiment.num_classes() || base.feature_dim != cf.experiment.feature_dim {
        return Err(Error::Invariant(format!(
            "{} does not match the configuration",
            layout.model().display()
        )));
    }
    let scores = known_scores(cf, &bundle, &base)?;
    Ok(Prepared { bundle, base, scores })
}

/// Ranking and the score matrix it reports from, for one scorer.
fn rankings(cf: &ConfigFile, opts: &RunOptions, prep: &Prepared) -> Result<Vec<(ConfidenceRanking, ScoreMatrix)>> {
    let ids: Vec<u64> = prep.bundle.eval_det.iter().map(|i| i.id).collect();
    let mut out = Vec::new();
    for method in opts.methods() {
        if method == Method::External {
            let path = opts.external_scores.as_ref().expect("methods() only lists external with a path");
            out.push(external_ranking(path, cf, &prep.bundle.eval_det, &ids)?);
        } else {
            out.push((rank(method, &prep.scores, cf.experiment.ridge)?, prep.scores.clone()));
        }
    }
    Ok(out)
}

fn external_ranking(
    path: &Path,
    cf: &ConfigFile,
    eval_det: &[Instance],
    ids: &[u64],
) -> Result<(ConfidenceRanking, ScoreMatrix)> {
    let ext = load_external_scores(path)?;
    if ext.matrix.k_known() != cf.experiment.k_known {
        return Err(Error::ScoreMatrix(format!(
            "{}: {} probability columns, configuration has k_known = {}",
            path.display(),
            ext.matrix.k_known(),
            cf.experiment.k_known
        )));
    }
    let truth: BTreeMap<u64, LabelId> = ext.matrix.instance_ids().iter().copied().zip(ext.true_labels).collect();
    for inst in eval_det {
        match truth.get(&inst.id) {
            Some(&l) if l == inst.true_label => {}
            Some(&l) => {
                return Err(Error::IdMismatch(format!(
                    "{}: instance {} has true_label {l}, detection split says {}",
                    path.display(),
                    inst.id,
                    inst.true_label
                )))
            }
            None => {
                return Err(Error::IdMismatch(format!(
                    "{}: instance {} missing",
                    path.display(),
                    inst.id
                )))
            }
        }
    }
    let matrix = ext.matrix.aligned_to(ids)?;
    let ranking = match ext.ranking {
        Some(r) => {
            let by_id: BTreeMap<u64, f64> = r.instance_ids.iter().copied().zip(r.confidence).collect();
            let conf = ids.iter().map(|id| by_id[id]).collect();
            ConfidenceRanking::new(Method::External, ids.to_vec(), conf)?
        }
        None => {
            let r = score_maxprob(&matrix);
            ConfidenceRanking::new(Method::External, r.instance_ids, r.confidence)?
        }
    };
    Ok((ranking, matrix))
}

/// Scores the detection set and writes detection-stage rows for every
/// scorer and budget.
pub fn cmd_detect(cf: &ConfigFile, out: &Path, opts: &RunOptions) -> Result<PathBuf> {
    let layout = Layout::new(out);
    let prep = load_prepared(&layout, cf)?;
    write_scores(&layout, &prep.bundle, &prep.scores)?;
    let mut rows = Vec::new();
    for (ranking, matrix) in rankings(cf, opts, &prep)? {
        for &m in &cf.experiment.budget_grid {
            let report = report_novelties(&ranking, &matrix, m)?;
            for &avg in &opts.averaging {
                for s in detection_metrics(&prep.bundle.eval_det, &report, cf.experiment.k_known, avg)? {
                    rows.push(ResultRow {
                        method: ranking.method.to_string(),
                        strategy: DETECTION.into(),
                        budget: m,
                        scores: s,
                    });
                }
            }
        }
    }
    let path = layout.p("detection.csv");
    write_text(&path, &results_csv(&rows))?;
    Ok(path)
}

/// Writes the feedback set of every scorer and budget.
pub fn cmd_feedback(cf: &ConfigFile, out: &Path, opts: &RunOptions) -> Result<Vec<PathBuf>> {
    let layout = Layout::new(out);
    let prep = load_prepared(&layout, cf)?;
    let mut files = Vec::new();
    for (ranking, matrix) in rankings(cf, opts, &prep)? {
        for &m in &cf.experiment.budget_grid {
            let report = report_novelties(&ranking, &matrix, m)?;
            let fs = build_feedback(&prep.bundle.eval_det, &report, cf.experiment.k_known)?;
            let path = layout.feedback(ranking.method, m);
            write_instances(&path, &fs.instances, cf.experiment.feature_dim)?;
            files.push(path);
        }
    }
    Ok(files)
}

fn read_feedback(path: &Path, budget: usize, cf: &ConfigFile) -> Result<FeedbackSet> {
    let instances = read_instances(path)?;
    let mut per_class_counts = BTreeMap::new();
    for inst in &instances {
        if inst.true_label.0 as usize <= cf.experiment.k_known {
            return Err(Error::format(path, 0, format!("instance {} has a known label", inst.id)));
        }
        *per_class_counts.entry(inst.true_label).or_insert(0) += 1;
    }
    Ok(FeedbackSet {
        budget,
        instances,
        per_class_counts,
    })
}

/// Runs every strategy on the feedback files written by `cmd_feedback`.
pub fn cmd_accommodate(cf: &ConfigFile, out: &Path, opts: &RunOptions) -> Result<PathBuf> {
    let layout = Layout::new(out);
    let prep = load_prepared(&layout, cf)?;
    let e = &cf.experiment;
    let mut rows = Vec::new();
    for method in opts.methods() {
        for &strategy in &opts.strategies {
            for &m in &e.budget_grid {
                let fs = read_feedback(&layout.feedback(method, m), m, cf)?;
                let run = per_strategy_run(strategy, &prep.bundle, &fs, &prep.base, e)?;
                for &avg in &opts.averaging {
                    for s in accommodation_metrics(&prep.bundle.eval_acc, &run.eval_predictions, e.k_known, e.n_novel, avg)? {
                        rows.push(ResultRow {
                            method: method.to_string(),
                            strategy: strategy.to_string(),
                            budget: m,
                            scores: s,
                        });
                    }
                }
            }
        }
    }
    let path = layout.p("accommodation.csv");
    write_text(&path, &results_csv(&rows))?;
    Ok(path)
}

/// Cached output of one sweep cell.
#[derive(Clone, Debug, Default, PartialEq)]
struct Cell {
    rows: Vec<ResultRow>,
    /// Detection cells: per-novel-class feedback counts.
    feedback: Vec<(LabelId, usize)>,
    /// Accommodation cells: (novel class, feedback count, class F1).
    scatter: Vec<(LabelId, usize, f64)>,
}

impl Cell {
    fn render(&self, key: &str) -> String {
        let mut s = format!("cell v1 {key}\n");
        for r in &self.rows {
            let _ = writeln!(s, "row,{}", r.to_csv());
        }
        for (l, c) in &self.feedback {
            let _ = writeln!(s, "feedback,{l},{c}");
        }
        for (l, c, f1) in &self.scatter {
            let _ = writeln!(s, "scatter,{l},{c},{}", fmt_f64(*f1));
        }
        s
    }

    /// `None` when the cached cell was written under a different key.
    fn parse(path: &Path, text: &str, key: &str) -> Result<Option<Cell>> {
        let mut lines = text.lines();
        if lines.next() != Some(format!("cell v1 {key}").as_str()) {
            return Ok(None);
        }
        let mut cell = Cell::default();
        for (i, line) in lines.enumerate() {
            let bad = |msg: String| Error::format(path, i + 2, msg);
            let (kind, rest) = line.split_once(',').ok_or_else(|| bad("missing record kind".into()))?;
            let f: Vec<&str> = rest.split(',').collect();
            match (kind, f.len()) {
                ("row", _) => cell.rows.push(ResultRow::parse(rest).map_err(bad)?),
                ("feedback", 2) => cell.feedback.push((
                    LabelId(f[0].parse().map_err(|e| bad(format!("{e}")))?),
                    f[1].parse().map_err(|e| bad(format!("{e}")))?,
                )),
                ("scatter", 3) => cell.scatter.push((
                    LabelId(f[0].parse().map_err(|e| bad(format!("{e}")))?),
                    f[1].parse().map_err(|e| bad(format!("{e}")))?,
                    f[2].parse().map_err(|e| bad(format!("{e}")))?,
                )),
                _ => return Err(bad(format!("unrecognized record {line:?}"))),
            }
        }
        Ok(Some(cell))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum CellKind {
    Detection,
    Accommodation(StrategyId),
}

impl CellKind {
    fn name(self) -> &'static str {
        match self {
            CellKind::Detection => DETECTION,
            CellKind::Accommodation(s) => s.name(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct CellId {
    scorer: usize,
    method: Method,
    kind: CellKind,
    budget: usize,
}

fn compute_cell(
    id: CellId,
    cf: &ConfigFile,
    opts: &RunOptions,
    prep: &Prepared,
    ranked: &[(ConfidenceRanking, ScoreMatrix)],
) -> Result<Cell> {
    let e = &cf.experiment;
    let (ranking, matrix) = &ranked[id.scorer];
    let report = report_novelties(ranking, matrix, id.budget)?;
    let fs = build_feedback(&prep.bundle.eval_det, &report, e.k_known)?;
    let mut cell = Cell::default();
    let mut push = |scores: [SegmentScores; 3]| {
        for s in scores {
            cell.rows.push(ResultRow {
                method: id.method.to_string(),
                strategy: id.kind.name().to_string(),
                budget: id.budget,
                scores: s,
            });
        }
    };
    match id.kind {
        CellKind::Detection => {
            for &avg in &opts.averaging {
                push(detection_metrics(&prep.bundle.eval_det, &report, e.k_known, avg)?);
            }
            cell.feedback = feedback_histogram(&fs, e.k_known, e.n_novel)
                .into_iter()
                .enumerate()
                .map(|(i, c)| (LabelId((e.k_known + 1 + i) as u32), c))
                .collect();
        }
        CellKind::Accommodation(strategy) => {
            let run = per_strategy_run(strategy, &prep.bundle, &fs, &prep.base, e)?;
            for &avg in &opts.averaging {
                push(accommodation_metrics(&prep.bundle.eval_acc, &run.eval_predictions, e.k_known, e.n_novel, avg)?);
            }
            cell.scatter = per_class_scatter(&run, &prep.bundle.eval_acc, &fs, e.k_known, e.n_novel)?
                .into_iter()
                .map(|r| (r.label, r.feedback_count, r.f1))
                .collect();
        }
    }
    Ok(cell)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SweepStatus {
    pub computed: usize,
    pub reused: usize,
    pub complete: bool,
}

#[derive(Serialize)]
struct AucEntry {
    method: String,
    strategy: String,
    segment: String,
    averaging: String,
    precision: Option<Fixed17>,
    recall: Option<Fixed17>,
    f1: Option<Fixed17>,
}

#[derive(Serialize)]
struct Summary<'a> {
    tool_version: &'a str,
    seed: u64,
    config: &'a crate::config::ExperimentConfig,
    generator_class_separation: Fixed17,
    generator_within_class_stddev: Fixed17,
    auc: Vec<AucEntry>,
}

/// (method, strategy, segment, averaging)
pub type CurveKey = (String, String, Segment, Averaging);

/// AUC of every (method, strategy, segment, averaging) curve in `rows`, in
/// first-appearance order. `None` when a curve has a single point.
pub fn curve_aucs(rows: &[ResultRow]) -> Vec<(CurveKey, [Option<f64>; 3])> {
    let mut order = Vec::new();
    let mut curves: BTreeMap<CurveKey, Vec<(f64, [f64; 3])>> = BTreeMap::new();
    for r in rows {
        let key = (r.method.clone(), r.strategy.clone(), r.scores.segment, r.scores.averaging);
        let entry = curves.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            Vec::new()
        });
        entry.push((r.budget as f64, [r.scores.precision, r.scores.recall, r.scores.f1]));
    }
    order
        .into_iter()
        .map(|key| {
            let pts = &curves[&key];
            let mut a = [None; 3];
            for (j, slot) in a.iter_mut().enumerate() {
                let series: Vec<(f64, f64)> = pts.iter().map(|(x, v)| (*x, v[j])).collect();
                *slot = auc(&series).ok();
            }
            (key, a)
        })
        .collect()
}

/// The full two-stage pipeline over every scorer, strategy and budget.
///
/// Splits and the base model are generated or trained when absent. Each
/// (scorer, strategy, budget) cell is cached under `cells/`; a rerun reuses
/// cached cells written under the same configuration.
pub fn cmd_sweep(cf: &ConfigFile, out: &Path, opts: &RunOptions) -> Result<SweepStatus> {
    let layout = Layout::new(out);
    let e = &cf.experiment;
    if SPLITS.iter().any(|s| !layout.split(s).exists()) {
        let bundle = generate(e, &cf.generator)?;
        write_splits(&layout, cf, &bundle)?;
    }
    write_config(&layout, cf)?;
    if !layout.model().exists() {
        cmd_train(cf, out)?;
    }
    let prep = load_prepared(&layout, cf)?;
    write_scores(&layout, &prep.bundle, &prep.scores)?;
    let ranked = rankings(cf, opts, &prep)?;

    let mut cells = Vec::new();
    for (scorer, method) in opts.methods().into_iter().enumerate() {
        let kinds = std::iter::once(CellKind::Detection).chain(opts.strategies.iter().map(|&s| CellKind::Accommodation(s)));
        for kind in kinds {
            for &budget in &e.budget_grid {
                cells.push(CellId {
                    scorer,
                    method,
                    kind,
                    budget,
                });
            }
        }
    }

    let averaging: Vec<&str> = opts.averaging.iter().map(|a| a.name()).collect();
    let input_digest = sha256_hex(
        format!(
            "{}|{}|{}|{}|{}",
            cf.render(),
            averaging.join(","),
            file_digest(&layout.model())?,
            file_digest(&layout.split("eval_det"))?,
            match &opts.external_scores {
                Some(p) => file_digest(p)?,
                None => String::new(),
            }
        )
        .as_bytes(),
    );

    let mut results: Vec<Option<Cell>> = Vec::with_capacity(cells.len());
    for id in &cells {
        let path = layout.cell(id.method, id.kind.name(), id.budget);
        let cached = match std::fs::read_to_string(&path) {
            Ok(text) => Cell::parse(&path, &text, &input_digest)?,
            Err(_) => None,
        };
        results.push(cached);
    }
    let reused = results.iter().filter(|c| c.is_some()).count();
    let mut todo: Vec<usize> = (0..cells.len()).filter(|&i| results[i].is_none()).collect();
    if let Some(limit) = opts.cell_limit {
        todo.truncate(limit);
    }
    let computed: Vec<(usize, Cell)> = todo
        .par_iter()
        .map(|&i| {
            let id = cells[i];
            let cell = compute_cell(id, cf, opts, &prep, &ranked)?;
            write_text(&layout.cell(id.method, id.kind.name(), id.budget), &cell.render(&input_digest))?;
            Ok((i, cell))
        })
        .collect::<Result<_>>()?;
    let n_computed = computed.len();
    for (i, cell) in computed {
        results[i] = Some(cell);
    }
    if results.iter().any(|c| c.is_none()) {
        return Ok(SweepStatus {
            computed: n_computed,
            reused,
            complete: false,
        });
    }

    let rows: Vec<ResultRow> = results.into_iter().flatten().flat_map(|c| c.rows).collect();
    let mut files = vec![layout.p("config.txt"), layout.model(), layout.scores()];
    files.extend(SPLITS.iter().map(|s| layout.split(s)));

    let results_path = layout.p("results.csv");
    write_text(&results_path, &results_csv(&rows))?;
    files.push(results_path);

    let aucs = curve_aucs(&rows);
    let summary = Summary {
        tool_version: TOOL_VERSION,
        seed: e.seed,
        config: e,
        generator_class_separation: Fixed17(cf.generator.class_separation),
        generator_within_class_stddev: Fixed17(cf.generator.within_class_stddev),
        auc: aucs
            .iter()
            .map(|((method, strategy, segment, averaging), a)| AucEntry {
                method: method.clone(),
                strategy: strategy.clone(),
                segment: segment.to_string(),
                averaging: averaging.to_string(),
                precision: a[0].map(Fixed17),
                recall: a[1].map(Fixed17),
                f1: a[2].map(Fixed17),
            })
            .collect(),
    };
    let summary_path = layout.p("summary.json");
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    write_text(&summary_path, &text)?;
    files.push(summary_path);

    for ((method, strategy, segment, averaging), _) in &aucs {
        let mut tsv = String::from("budget\tf1\n");
        for r in rows.iter().filter(|r| {
            &r.method == method && &r.strategy == strategy && r.scores.segment == *segment && r.scores.averaging == *averaging
        }) {
            let _ = writeln!(tsv, "{}\t{}", r.budget, fmt_f64(r.scores.f1));
        }
        let path = layout.p(&format!("plots/{method}__{strategy}__{averaging}__{segment}.tsv"));
        write_text(&path, &tsv)?;
        files.push(path);
    }

    write_manifest(&layout, cf, opts, "sweep", &files)?;
    Ok(SweepStatus {
        computed: n_computed,
        reused,
        complete: true,
    })
}

/// Reads sweep outputs and writes the feedback histogram, per-class scatter
/// and known-vs-novel tables plus a plain-text summary.
pub fn cmd_report(out: &Path) -> Result<PathBuf> {
    let layout = Layout::new(out);
    let cf = ConfigFile::load(&layout.p("config.txt"))?;
    let rows = read_results(&layout.p("results.csv"))?;
    let e = &cf.experiment;

    let mut combos: Vec<(String, String, usize)> = Vec::new();
    for r in &rows {
        let key = (r.method.clone(), r.strategy.clone(), r.budget);
        if combos.last() != Some(&key) && !combos.contains(&key) {
            combos.push(key);
        }
    }

    let mut hist = String::from("method\tbudget\tlabel\tcount\n");
    let mut scatter = String::from("method\tstrategy\tbudget\tlabel\tfeedback_count\tf1\n");
    for (method, strategy, budget) in &combos {
        let m: Method = method.parse().map_err(|e: String| Error::format(layout.p("results.csv"), 0, e))?;
        let path = layout.cell(m, strategy, *budget);
        let text = read_text(&path)?;
        let key = text.lines().next().unwrap_or_default().trim_start_matches("cell v1 ").to_string();
        let cell = Cell::parse(&path, &text, &key)?.expect("key read from the same file");
        for (label, count) in &cell.feedback {
            let _ = writeln!(hist, "{method}\t{budget}\t{label}\t{count}");
        }
        for (label, count, f1) in &cell.scatter {
            let _ = writeln!(scatter, "{method}\t{strategy}\t{budget}\t{label}\t{count}\t{}", fmt_f64(*f1));
        }
    }

    let mut kvn = String::from("method\tstrategy\tbudget\taveraging\tknown_f1\tnovel_f1\n");
    let mut seg: BTreeMap<(String, String, usize, Averaging), [f64; 3]> = BTreeMap::new();
    for r in &rows {
        seg.entry((r.method.clone(), r.strategy.clone(), r.budget, r.scores.averaging))
            .or_default()[r.scores.segment as usize] = r.scores.f1;
    }
    for (method, strategy, budget) in &combos {
        for avg in Averaging::ALL {
            if let Some(v) = seg.get(&(method.clone(), strategy.clone(), *budget, avg)) {
                let _ = writeln!(
                    kvn,
                    "{method}\t{strategy}\t{budget}\t{avg}\t{}\t{}",
                    fmt_f64(v[Segment::Known as usize]),
                    fmt_f64(v[Segment::Novel as usize])
                );
            }
        }
    }

    let mut txt = String::new();
    let _ = writeln!(
        txt,
        "{TOOL_VERSION}  K={} N={} seed={} budgets={:?}\n",
        e.k_known, e.n_novel, e.seed, e.budget_grid
    );
    let _ = writeln!(txt, "F1 AUC (budget axis normalized to [0, 1])");
    let _ = writeln!(txt, "{:<12} {:<17} {:<6} {:>8} {:>8} {:>8}", "method", "strategy", "avg", "known", "novel", "overall");
    let aucs = curve_aucs(&rows);
    let mut table: BTreeMap<(String, String, Averaging), [Option<f64>; 3]> = BTreeMap::new();
    let mut table_order = Vec::new();
    for ((m, s, segment, avg), a) in &aucs {
        let key = (m.clone(), s.clone(), *avg);
        if !table.contains_key(&key) {
            table_order.push(key.clone());
        }
        table.entry(key).or_default()[*segment as usize] = a[2];
    }
    let cellfmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    for key in &table_order {
        let v = table[key];
        let _ = writeln!(
            txt,
            "{:<12} {:<17} {:<6} {:>8} {:>8} {:>8}",
            key.0,
            key.1,
            key.2.name(),
            cellfmt(v[0]),
            cellfmt(v[1]),
            cellfmt(v[2])
        );
    }
    let _ = writeln!(txt, "\nOverall F1 per budget");
    for key in &table_order {
        let vals: Vec<String> = rows
            .iter()
            .filter(|r| r.method == key.0 && r.strategy == key.1 && r.scores.averaging == key.2 && r.scores.segment == Segment::Overall)
            .map(|r| format!("{}:{:.3}", r.budget, r.scores.f1))
            .collect();
        let _ = writeln!(txt, "{:<12} {:<17} {:<6} {}", key.0, key.1, key.2.name(), vals.join(" "));
    }

    write_text(&layout.p("report/feedback_hist.tsv"), &hist)?;
    write_text(&layout.p("report/scatter.tsv"), &scatter)?;
    write_text(&layout.p("report/known_vs_novel.tsv"), &kvn)?;
    let path = layout.p("report.txt");
    write_text(&path, &txt)?;
    Ok(path)
}
