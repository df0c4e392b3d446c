//! Independent oracles and the acceptance criteria built on them.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use noveltask::accommodation::{train_base_model, StrategyId};
use noveltask::classifier::{gradient_check, predict_known_scores, predict_labels, train, SoftmaxModel, TrainSpec};
use noveltask::detection::{
    euclidean_distances, mahalanobis_distances, rank, report_novelties, score_compmean, score_euclid, score_maxprob,
    ConfidenceRanking, DetectionReport, Method, ScoreMatrix,
};
use noveltask::feedback::build_feedback;
use noveltask::metrics::{accommodation_metrics, accommodation_sweep, auc, detection_metrics, Averaging, Segment};
use noveltask::runner::{cmd_sweep, RunOptions};
use noveltask::synth::{generate, GeneratorSpec};
use noveltask::{ConfigFile, ExperimentConfig, Instance, LabelId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- oracles

/// Brute-force per-segment precision/recall/F1 from a dense confusion
/// matrix indexed by raw label value.
pub fn oracle_scores(pairs: &[(u32, u32)], classes: &[u32], averaging: Averaging) -> (f64, f64, f64) {
    let size = pairs.iter().flat_map(|&(t, p)| [t, p]).chain(classes.iter().copied()).max().unwrap_or(0) as usize + 1;
    let mut m = vec![vec![0usize; size]; size];
    for &(t, p) in pairs {
        m[t as usize][p as usize] += 1;
    }
    let tp = |c: usize| m[c][c];
    let predicted = |c: usize| (0..size).map(|t| m[t][c]).sum::<usize>();
    let actual = |c: usize| m[c].iter().sum::<usize>();
    let div = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let (p, r) = match averaging {
        Averaging::Micro => {
            let t: usize = classes.iter().map(|&c| tp(c as usize)).sum();
            let pr: usize = classes.iter().map(|&c| predicted(c as usize)).sum();
            let ac: usize = classes.iter().map(|&c| actual(c as usize)).sum();
            (div(t, pr), div(t, ac))
        }
        Averaging::Macro => {
            let mut psum = 0.0;
            for &c in classes {
                psum += div(tp(c as usize), predicted(c as usize));
            }
            let p = if classes.is_empty() { 0.0 } else { psum / classes.len() as f64 };
            let mut rsum = 0.0;
            let mut n = 0usize;
            for &c in classes {
                if actual(c as usize) > 0 {
                    rsum += div(tp(c as usize), actual(c as usize));
                    n += 1;
                }
            }
            (p, if n == 0 { 0.0 } else { rsum / n as f64 })
        }
    };
    let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f1)
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn dense_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs())).unwrap();
        m.swap(col, piv);
        let d = m[col][col];
        for v in m[col].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Mahalanobis distances through an explicit inverse of the regularized
/// sample covariance.
pub fn oracle_mahalanobis(rows: &[Vec<f64>], ridge: f64) -> Vec<f64> {
    let n = rows.len();
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let mut cov = vec![vec![0.0; d]; d];
    for r in rows {
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]) / (n - 1) as f64;
            }
        }
    }
    let trace: f64 = (0..d).map(|i| cov[i][i]).sum();
    for (i, row) in cov.iter_mut().enumerate() {
        row[i] += ridge * trace / d as f64;
    }
    let inv = dense_inverse(&cov);
    rows.iter()
        .map(|r| {
            let diff: Vec<f64> = (0..d).map(|j| r[j] - mean[j]).collect();
            let mut q = 0.0;
            for i in 0..d {
                for j in 0..d {
                    q += diff[i] * inv[i][j] * diff[j];
                }
            }
            q.max(0.0).sqrt()
        })
        .collect()
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            l[i][j] = if i == j { (a[i][i] - s).sqrt() } else { (a[i][j] - s) / l[j][j] };
        }
    }
    l
}

/// Centers `rows` and maps them through the inverse Cholesky factor of
/// their sample covariance, giving identity sample covariance.
pub fn whiten(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let centered: Vec<Vec<f64>> = rows.iter().map(|r| (0..d).map(|j| r[j] - mean[j]).collect()).collect();
    let mut cov = vec![vec![0.0; d]; d];
    for r in &centered {
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += r[i] * r[j] / (n - 1) as f64;
            }
        }
    }
    let l = cholesky(&cov);
    centered
        .iter()
        .map(|r| {
            let mut z = vec![0.0; d];
            for i in 0..d {
                let s: f64 = (0..i).map(|k| l[i][k] * z[k]).sum();
                z[i] = (r[i] - s) / l[i][i];
            }
            z
        })
        .collect()
}

pub fn random_rows(rng: &mut ChaCha8Rng, n: usize, k: usize, temperature: f64) -> Vec<f64> {
    let mut rows = Vec::with_capacity(n * k);
    for _ in 0..n {
        let logits: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0) * temperature).collect();
        let mx = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = logits.iter().map(|l| (l - mx).exp()).collect();
        let s: f64 = e.iter().sum();
        rows.extend(e.iter().map(|v| v / s));
    }
    rows
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

// ---------------------------------------------------------------- criteria

pub fn metric_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut checks = 0usize;
    for case in 0..200 {
        let classes = rng.random_range(2..=10usize);
        let k = rng.random_range(1..classes);
        let n = classes - k;
        let len = rng.random_range(1..=50usize);
        let truth: Vec<u32> = (0..len).map(|_| rng.random_range(1..=classes as u32)).collect();
        let instances: Vec<Instance> = truth
            .iter()
            .enumerate()
            .map(|(i, &t)| Instance::new(i as u64, vec![0.0], LabelId(t)).unwrap())
            .collect();

        // detection: class 0 is the reported-novel pseudo-class
        let assign: Vec<u32> = (0..len).map(|_| rng.random_range(0..=k as u32)).collect();
        let report = DetectionReport {
            budget: assign.iter().filter(|&&a| a == 0).count(),
            instance_ids: (0..len as u64).collect(),
            assignment: assign.iter().map(|&a| LabelId(a)).collect(),
        };
        let det_pairs: Vec<(u32, u32)> = truth
            .iter()
            .zip(&assign)
            .map(|(&t, &a)| (if t as usize > k { 0 } else { t }, a))
            .collect();
        let known: Vec<u32> = (1..=k as u32).collect();
        let det_segments = [known.clone(), vec![0], (0..=k as u32).collect()];

        // accommodation: K+N-class predictions
        let preds: Vec<u32> = (0..len).map(|_| rng.random_range(1..=classes as u32)).collect();
        let acc_pairs: Vec<(u32, u32)> = truth.iter().copied().zip(preds.iter().copied()).collect();
        let acc_segments = [known, (k as u32 + 1..=classes as u32).collect(), (1..=classes as u32).collect()];
        let pred_labels: Vec<LabelId> = preds.iter().map(|&p| LabelId(p)).collect();

        for avg in Averaging::ALL {
            let det = detection_metrics(&instances, &report, k, avg).map_err(|e| e.to_string())?;
            let acc = accommodation_metrics(&instances, &pred_labels, k, n, avg).map_err(|e| e.to_string())?;
            for (got, (pairs, segs)) in [(det, (&det_pairs, &det_segments)), (acc, (&acc_pairs, &acc_segments))] {
                for (s, classes) in got.iter().zip(segs.iter()) {
                    let (p, r, f1) = oracle_scores(pairs, classes, avg);
                    ensure(s.precision == p && s.recall == r && s.f1 == f1, || {
                        format!("case {case} {avg} {}: got ({}, {}, {}) oracle ({p}, {r}, {f1})", s.segment, s.precision, s.recall, s.f1)
                    })?;
                    checks += 1;
                }
            }
        }
    }
    let t = start.elapsed();
    ensure(t.as_secs_f64() < 10.0, || format!("runtime {t:?}"))?;
    Ok(format!("200 cases, {checks} segment scores identical to brute force, {t:.2?}"))
}

pub fn scorer_correctness() -> Outcome {
    let start = Instant::now();
    let m = |ids: Vec<u64>, k: usize, rows: Vec<f64>| ScoreMatrix::new(ids, k, rows).unwrap();

    // closed-form examples
    let r = score_maxprob(&m(vec![1, 2, 3], 3, vec![0.7, 0.2, 0.1, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 1.0, 0.0, 0.0]));
    ensure(r.confidence == vec![0.7, 1.0 / 3.0, 1.0], || format!("maxprob {:?}", r.confidence))?;
    let r = score_compmean(&m(vec![1, 2], 3, vec![0.8, 0.1, 0.1, 1.0, 0.0, 0.0])).map_err(|e| e.to_string())?;
    ensure(r.confidence == vec![1.0 - 0.1, 1.0], || format!("compmean {:?}", r.confidence))?;
    let r = score_compmean(&m(vec![1], 4, vec![0.25; 4])).map_err(|e| e.to_string())?;
    ensure(r.confidence == vec![0.75], || format!("compmean uniform {:?}", r.confidence))?;
    let r = score_euclid(&m(vec![1, 2, 3], 2, vec![0.3, 0.7, 0.3, 0.7, 0.3, 0.7]));
    ensure(r.confidence.iter().all(|&c| c == 0.0), || format!("euclid identical {:?}", r.confidence))?;
    let r = score_euclid(&m(vec![1, 2], 2, vec![1.0, 0.0, 0.0, 1.0]));
    ensure(r.confidence == vec![-0.5f64.sqrt(); 2], || format!("euclid symmetric {:?}", r.confidence))?;
    let d = mahalanobis_distances(&[-2.0, 0.0, 2.0], 1, 0.0).map_err(|e| e.to_string())?;
    ensure(d == vec![1.0, 0.0, 1.0], || format!("mahalanobis 1-D {d:?}"))?;

    // random Euclid against an independent column-mean + norm computation
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let rows = random_rows(&mut rng, 5, 4, 3.0);
        let got = euclidean_distances(&rows, 4);
        for (i, g) in got.iter().enumerate() {
            let mean: Vec<f64> = (0..4).map(|j| (0..5).map(|r| rows[r * 4 + j]).sum::<f64>() / 5.0).collect();
            let want = (0..4).map(|j| (rows[i * 4 + j] - mean[j]).powi(2)).sum::<f64>().sqrt();
            ensure((g - want).abs() <= 1e-12, || format!("euclid {g} vs {want}"))?;
        }
    }

    // Mahalanobis against a dense-inverse oracle
    let mut worst = 0.0f64;
    for case in 0..50 {
        let k = 4;
        let n = rng.random_range(8..40usize);
        let rows = random_rows(&mut rng, n, k, 4.0);
        let ridge = [1e-6, 1e-3, 1e-1][case % 3];
        let got = mahalanobis_distances(&rows, k, ridge).map_err(|e| e.to_string())?;
        let nested: Vec<Vec<f64>> = rows.chunks(k).map(|c| c.to_vec()).collect();
        let want = oracle_mahalanobis(&nested, ridge);
        for (g, w) in got.iter().zip(&want) {
            let e = rel_err(*g, *w);
            worst = worst.max(e);
            ensure(e <= 1e-8, || format!("case {case}: {g} vs oracle {w} (rel {e:e})"))?;
        }
        let ranked = rank(Method::Mahalanobis, &ScoreMatrix::new((0..n as u64).collect(), k, rows).unwrap(), ridge)
            .map_err(|e| e.to_string())?;
        for (c, w) in ranked.confidence.iter().zip(&want) {
            ensure(rel_err(-c, *w) <= 1e-8, || format!("case {case}: confidence {c} vs -{w}"))?;
        }
    }

    // whitened data: Mahalanobis ranking equals Euclidean ranking
    for case in 0..20 {
        let d = rng.random_range(2..6usize);
        let n = rng.random_range(d + 5..60usize);
        let raw: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let z: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                (0..d).map(|j| z[j] * (j + 1) as f64 + z[0] * 0.5 * j as f64).collect()
            })
            .collect();
        let flat: Vec<f64> = whiten(&raw).concat();
        let ids: Vec<u64> = (0..n as u64).collect();
        let neg = |v: Vec<f64>| v.into_iter().map(|x| -x).collect::<Vec<_>>();
        let eu = ConfidenceRanking::new(Method::Euclid, ids.clone(), neg(euclidean_distances(&flat, d))).unwrap();
        let mah = ConfidenceRanking::new(
            Method::Mahalanobis,
            ids,
            neg(mahalanobis_distances(&flat, d, 1e-9).map_err(|e| e.to_string())?),
        )
        .unwrap();
        ensure(eu.order == mah.order, || format!("whitened case {case}: rankings differ"))?;
    }
    let t = start.elapsed();
    ensure(t.as_secs_f64() < 10.0, || format!("runtime {t:?}"))?;
    Ok(format!("closed forms exact; 50 Mahalanobis matrices within {worst:.1e} relative; 20 whitened rankings equal, {t:.2?}"))
}

pub fn protocol_invariants() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..20 {
        let k = rng.random_range(2..6usize);
        let n_novel = rng.random_range(1..5usize);
        let len = rng.random_range(10..80usize);
        let instances: Vec<Instance> = (0..len)
            .map(|i| Instance::new(100 + i as u64, vec![0.0], LabelId(rng.random_range(1..=(k + n_novel) as u32))).unwrap())
            .collect();
        let ids: Vec<u64> = instances.iter().map(|i| i.id).collect();
        let scores = ScoreMatrix::new(ids.clone(), k, random_rows(&mut rng, len, k, 3.0)).unwrap();
        // coarse confidences so ties occur
        let conf: Vec<f64> = (0..len).map(|_| (rng.random_range(0..8) as f64) / 8.0).collect();
        let ranking = ConfidenceRanking::new(Method::External, ids, conf).unwrap();
        let mut prev_flagged = BTreeSet::new();
        let mut prev_df = BTreeSet::new();
        for m in 0..=len {
            let report = report_novelties(&ranking, &scores, m).map_err(|e| e.to_string())?;
            let flagged: BTreeSet<u64> = report
                .instance_ids
                .iter()
                .zip(&report.assignment)
                .filter(|(_, a)| a.is_pseudo())
                .map(|(&id, _)| id)
                .collect();
            ensure(flagged.len() == m, || format!("case {case} m={m}: {} flagged", flagged.len()))?;
            ensure(prev_flagged.is_subset(&flagged), || format!("case {case} m={m}: flagged set shrank"))?;
            let fs = build_feedback(&instances, &report, k).map_err(|e| e.to_string())?;
            let df: BTreeSet<u64> = fs.instances.iter().map(|i| i.id).collect();
            ensure(prev_df.is_subset(&df), || format!("case {case} m={m}: feedback set shrank"))?;
            ensure(fs.instances.iter().all(|i| i.true_label.0 as usize > k), || format!("case {case} m={m}: known instance in feedback"))?;
            let novel_tp = instances.iter().filter(|i| i.true_label.0 as usize > k && flagged.contains(&i.id)).count();
            ensure(fs.len() == novel_tp, || format!("case {case} m={m}: |D^F| {} vs novel TP {novel_tp}", fs.len()))?;
            let counts: usize = fs.per_class_counts.values().sum();
            ensure(counts == fs.len(), || format!("case {case} m={m}: per-class counts"))?;
            prev_flagged = flagged;
            prev_df = df;
        }
    }
    let t = start.elapsed();
    ensure(t.as_secs_f64() < 5.0, || format!("runtime {t:?}"))?;
    Ok(format!("20 rankings x all budgets: exact counts, nested flagged and feedback sets, {t:.2?}"))
}

pub fn flag_all_boundary() -> Outcome {
    let cfg = ExperimentConfig::desk();
    let bundle = generate(&cfg, &GeneratorSpec::desk(cfg.feature_dim, cfg.seed)).map_err(|e| e.to_string())?;
    let base = train_base_model(&bundle.d_train, &cfg).map_err(|e| e.to_string())?;
    let scores = predict_known_scores(&base, &bundle.eval_det, cfg.k_known).map_err(|e| e.to_string())?;
    let total_novel = bundle.eval_det.iter().filter(|i| i.true_label.0 as usize > cfg.k_known).count();
    for method in Method::BUILTIN {
        let ranking = rank(method, &scores, cfg.ridge).map_err(|e| e.to_string())?;
        let report = report_novelties(&ranking, &scores, bundle.eval_det.len()).map_err(|e| e.to_string())?;
        for avg in Averaging::ALL {
            let s = detection_metrics(&bundle.eval_det, &report, cfg.k_known, avg).map_err(|e| e.to_string())?;
            ensure(s[Segment::Novel as usize].recall == 1.0, || format!("{method} {avg}: novel recall {}", s[1].recall))?;
            ensure(s[Segment::Known as usize].recall == 0.0, || format!("{method} {avg}: known recall {}", s[0].recall))?;
        }
        let fs = build_feedback(&bundle.eval_det, &report, cfg.k_known).map_err(|e| e.to_string())?;
        ensure(fs.len() == total_novel, || format!("{method}: |D^F| {} of {total_novel}", fs.len()))?;
    }
    Ok(format!("all scorers: novel recall 1, known recall 0, |D^F| = {total_novel}"))
}

pub fn classifier_numerics() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (logits, dim) = (rng.random_range(2..7usize), rng.random_range(1..6usize));
        let mut model = SoftmaxModel::zeros(logits, dim);
        for w in model.weights.iter_mut().chain(model.bias.iter_mut()) {
            *w = rng.random_range(-1.0..1.0);
        }
        let batch: Vec<Instance> = (0..rng.random_range(1..12u64))
            .map(|i| {
                let f = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
                Instance::new(i, f, LabelId(rng.random_range(1..=logits as u32))).unwrap()
            })
            .collect();
        let err = gradient_check(&model, &batch, [0.0, 1e-3, 0.1][seed as usize % 3]).map_err(|e| e.to_string())?;
        worst = worst.max(err);
        ensure(err < 1e-4, || format!("seed {seed}: gradient relative error {err:e}"))?;
    }

    let cfg = ExperimentConfig::desk();
    let bundle = generate(&cfg, &GeneratorSpec::desk(cfg.feature_dim, 3)).map_err(|e| e.to_string())?;
    let a = train(&bundle.d_train, cfg.num_classes(), &cfg.train_spec()).map_err(|e| e.to_string())?;
    let b = train(&bundle.d_train, cfg.num_classes(), &cfg.train_spec()).map_err(|e| e.to_string())?;
    let bits = |m: &SoftmaxModel| m.weights.iter().chain(&m.bias).map(|v| v.to_bits()).collect::<Vec<_>>();
    ensure(bits(&a) == bits(&b), || "retraining is not bit-identical".into())?;

    let toy: Vec<Instance> = (0..90u64)
        .map(|i| {
            let c = (i % 3) as usize;
            let mut f = vec![0.0; 3];
            f[c] = 4.0 + (i as f64 * 0.37).sin();
            f[(c + 1) % 3] = (i as f64 * 0.91).cos() * 0.5;
            Instance::new(i, f, LabelId(c as u32 + 1)).unwrap()
        })
        .collect();
    let spec = TrainSpec {
        learning_rate: 0.5,
        epochs: 50,
        batch_size: 8,
        l2_penalty: 0.0,
        seed: 1,
    };
    let model = train(&toy, 3, &spec).map_err(|e| e.to_string())?;
    let preds = predict_labels(&model, &toy).map_err(|e| e.to_string())?;
    let correct = preds.iter().zip(&toy).filter(|(p, i)| **p == i.true_label).count();
    ensure(correct == toy.len(), || format!("separable toy accuracy {correct}/{}", toy.len()))?;
    Ok(format!("gradient check worst {worst:.1e} on 20 seeds; bit-identical retraining; separable toy accuracy 1.0"))
}

/// Seed-mean accommodation curves of the desk benchmark, MaxProb ranking,
/// micro averaging.
pub struct TrendCurves {
    pub grid: Vec<usize>,
    /// (strategy, budget) -> [overall F1, known recall, known F1, novel F1]
    pub mean: BTreeMap<(StrategyId, usize), [f64; 4]>,
}

pub fn trend_curves(seeds: std::ops::Range<u64>) -> Result<TrendCurves, String> {
    let base_cfg = ExperimentConfig::desk();
    let n = (seeds.end - seeds.start) as f64;
    let per_seed: Vec<Vec<((StrategyId, usize), [f64; 4])>> = {
        use rayon::prelude::*;
        seeds
            .into_par_iter()
            .map(|seed| {
                let cfg = ExperimentConfig { seed, ..base_cfg.clone() };
                let bundle = generate(&cfg, &GeneratorSpec::desk(cfg.feature_dim, seed)).map_err(|e| e.to_string())?;
                let base = train_base_model(&bundle.d_train, &cfg).map_err(|e| e.to_string())?;
                let scores = predict_known_scores(&base, &bundle.eval_det, cfg.k_known).map_err(|e| e.to_string())?;
                let ranking = rank(Method::MaxProb, &scores, cfg.ridge).map_err(|e| e.to_string())?;
                let mut out = Vec::new();
                for st in StrategyId::ALL {
                    let curve = accommodation_sweep(st, &bundle, &ranking, &scores, Some(&base), &cfg, Averaging::Micro)
                        .map_err(|e| e.to_string())?;
                    for p in &curve.points {
                        out.push((
                            (st, p.budget),
                            [
                                p.segment(Segment::Overall).f1,
                                p.segment(Segment::Known).recall,
                                p.segment(Segment::Known).f1,
                                p.segment(Segment::Novel).f1,
                            ],
                        ));
                    }
                }
                Ok(out)
            })
            .collect::<Result<_, String>>()?
    };
    let mut mean: BTreeMap<(StrategyId, usize), [f64; 4]> = BTreeMap::new();
    for seed_rows in per_seed {
        for (key, v) in seed_rows {
            let e = mean.entry(key).or_default();
            for j in 0..4 {
                e[j] += v[j] / n;
            }
        }
    }
    Ok(TrendCurves {
        grid: base_cfg.budget_grid,
        mean,
    })
}

impl TrendCurves {
    fn get(&self, st: StrategyId, b: usize) -> [f64; 4] {
        self.mean[&(st, b)]
    }

    /// (a) retrain overall F1 never drops between consecutive budgets.
    pub fn retrain_non_decreasing(&self) -> Outcome {
        let steps: Vec<f64> = self
            .grid
            .windows(2)
            .map(|w| self.get(StrategyId::Retrain, w[1])[0] - self.get(StrategyId::Retrain, w[0])[0])
            .collect();
        let min = steps.iter().cloned().fold(f64::INFINITY, f64::min);
        ensure(min >= 0.0, || format!("smallest step {min:.4}"))?;
        Ok(format!("smallest step {min:+.4}"))
    }

    /// (b) finetune_df known recall at the largest budget trails retrain's
    /// by at least 20 points.
    pub fn forgetting_gap(&self) -> Outcome {
        let last = *self.grid.last().unwrap();
        let (re, df) = (self.get(StrategyId::Retrain, last)[1], self.get(StrategyId::FinetuneDf, last)[1]);
        let gap = re - df;
        ensure(gap >= 0.2, || format!("gap {gap:.4} (retrain {re:.4}, finetune_df {df:.4})"))?;
        Ok(format!("known recall retrain {re:.3} vs finetune_df {df:.3}, gap {gap:.3}"))
    }

    /// (c) finetune_sampled overall F1 at least finetune_df's at every budget.
    pub fn sampled_beats_df(&self) -> Outcome {
        let margins: Vec<f64> = self
            .grid
            .iter()
            .map(|&b| self.get(StrategyId::FinetuneSampled, b)[0] - self.get(StrategyId::FinetuneDf, b)[0])
            .collect();
        let min = margins.iter().cloned().fold(f64::INFINITY, f64::min);
        ensure(min >= 0.0, || format!("smallest margin {min:.4}"))?;
        Ok(format!("smallest margin {min:+.4}"))
    }

    /// (d) under retrain, known F1 at least novel F1 below the largest budget.
    pub fn known_above_novel(&self) -> Outcome {
        let sub = &self.grid[..self.grid.len() - 1];
        let margins: Vec<f64> = sub
            .iter()
            .map(|&b| {
                let v = self.get(StrategyId::Retrain, b);
                v[2] - v[3]
            })
            .collect();
        let min = margins.iter().cloned().fold(f64::INFINITY, f64::min);
        ensure(min >= 0.0, || format!("smallest margin {min:.4}"))?;
        Ok(format!("smallest margin {min:+.4}"))
    }
}

pub fn auc_examples() -> Outcome {
    let got = auc(&[(100.0, 0.5), (200.0, 0.25), (500.0, 0.75)]).map_err(|e| e.to_string())?;
    // x -> 0, 0.25, 1: 0.25 * 0.375 + 0.75 * 0.5
    ensure(got == 0.46875, || format!("three-point AUC {got}"))?;
    for c in [0.0, 0.3, 0.61803, 1.0] {
        let pts: Vec<(f64, f64)> = (1..=10).map(|i| (i as f64 * 40.0, c)).collect();
        let a = auc(&pts).map_err(|e| e.to_string())?;
        ensure((a - c).abs() <= 4.0 * f64::EPSILON, || format!("constant {c}: AUC {a}"))?;
    }
    let dyadic = auc(&[(0.0, 0.3), (1.0, 0.3), (2.0, 0.3), (4.0, 0.3)]).map_err(|e| e.to_string())?;
    ensure(dyadic == 0.3, || format!("dyadic constant {dyadic}"))?;
    Ok("three-point trapezoid 0.46875 exact; constant curves return the constant".into())
}

pub fn sweep_determinism() -> Outcome {
    let cf = ConfigFile::default();
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    for dir in [a.path(), b.path()] {
        cmd_sweep(&cf, dir, &RunOptions::default()).map_err(|e| e.to_string())?;
    }
    for f in ["results.csv", "summary.json"] {
        let (x, y) = (std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
        ensure(x == y, || format!("{f} differs between runs"))?;
    }
    let lines = std::fs::read_to_string(a.path().join("results.csv")).unwrap().lines().count();
    Ok(format!("two full sweeps: results.csv ({} rows) and summary.json byte-identical", lines - 1))
}
