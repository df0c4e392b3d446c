//! The feedback phase: true labels of correctly flagged novel instances.
//!
//! cargo run --example feedback_oracle

use noveltask::accommodation::train_base_model;
use noveltask::classifier::predict_known_scores;
use noveltask::detection::{rank, report_novelties, Method};
use noveltask::feedback::{build_feedback, feedback_histogram};
use noveltask::synth::{generate, GeneratorSpec};
use noveltask::ExperimentConfig;

fn main() -> noveltask::Result<()> {
    let cfg = ExperimentConfig::desk();
    let bundle = generate(&cfg, &GeneratorSpec::desk(cfg.feature_dim, cfg.seed))?;
    let base = train_base_model(&bundle.d_train, &cfg)?;
    let scores = predict_known_scores(&base, &bundle.eval_det, cfg.k_known)?;
    let ranking = rank(Method::MaxProb, &scores, cfg.ridge)?;

    println!("budget  |D^F|  per novel class");
    for &m in &cfg.budget_grid {
        let report = report_novelties(&ranking, &scores, m)?;
        let fs = build_feedback(&bundle.eval_det, &report, cfg.k_known)?;
        println!("{m:>6}  {:>5}  {:?}", fs.len(), feedback_histogram(&fs, cfg.k_known, cfg.n_novel));
    }
    Ok(())
}
