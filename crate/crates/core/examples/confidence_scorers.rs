//! Rank a detection set with the built-in scorers and with a custom one.
//!
//! cargo run --example confidence_scorers

use noveltask::accommodation::train_base_model;
use noveltask::classifier::predict_known_scores;
use noveltask::detection::{BuiltinScorer, ConfidenceScorer, Method, ScoreMatrix};
use noveltask::synth::{generate, GeneratorSpec};
use noveltask::ExperimentConfig;

/// Gap between the two largest probabilities.
struct Margin;

impl ConfidenceScorer for Margin {
    fn confidence(&self, scores: &ScoreMatrix) -> noveltask::Result<Vec<f64>> {
        Ok(scores
            .rows()
            .map(|row| {
                let mut r = row.to_vec();
                r.sort_by(|a, b| b.total_cmp(a));
                r[0] - r[1]
            })
            .collect())
    }
}

fn main() -> noveltask::Result<()> {
    let cfg = ExperimentConfig::desk();
    let bundle = generate(&cfg, &GeneratorSpec::desk(cfg.feature_dim, cfg.seed))?;
    let base = train_base_model(&bundle.d_train, &cfg)?;
    let scores = predict_known_scores(&base, &bundle.eval_det, cfg.k_known)?;
    let novel_ids: std::collections::HashSet<u64> = bundle
        .eval_det
        .iter()
        .filter(|i| i.true_label.0 as usize > cfg.k_known)
        .map(|i| i.id)
        .collect();

    let mut scorers: Vec<(String, Box<dyn ConfidenceScorer>)> = Method::BUILTIN
        .iter()
        .map(|&method| (method.to_string(), Box::new(BuiltinScorer { method, ridge: cfg.ridge }) as Box<dyn ConfidenceScorer>))
        .collect();
    scorers.push(("margin".into(), Box::new(Margin)));

    let m = novel_ids.len() / 2;
    println!("novel instances among the {m} least confident:");
    for (name, scorer) in &scorers {
        let ranking = scorer.rank(&scores)?;
        let hits = ranking.flagged(m).iter().filter(|id| novel_ids.contains(id)).count();
        println!("  {name:<12} {hits:>3} / {m}");
    }
    Ok(())
}
