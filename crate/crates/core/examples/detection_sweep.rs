//! Detection-stage curves: flag the m least confident instances for every
//! budget and score the resulting (K+1)-class assignment.
//!
//! cargo run --example detection_sweep

use noveltask::accommodation::train_base_model;
use noveltask::classifier::predict_known_scores;
use noveltask::detection::{rank, Method};
use noveltask::metrics::{detection_sweep, Averaging, Segment};
use noveltask::synth::{generate, GeneratorSpec};
use noveltask::ExperimentConfig;

fn main() -> noveltask::Result<()> {
    let cfg = ExperimentConfig::desk();
    let bundle = generate(&cfg, &GeneratorSpec::desk(cfg.feature_dim, cfg.seed))?;
    let base = train_base_model(&bundle.d_train, &cfg)?;
    let scores = predict_known_scores(&base, &bundle.eval_det, cfg.k_known)?;

    println!("novel F1 per budget {:?}", cfg.budget_grid);
    for method in Method::BUILTIN {
        let ranking = rank(method, &scores, cfg.ridge)?;
        let curve = detection_sweep(&bundle.eval_det, &ranking, &scores, &cfg.budget_grid, cfg.k_known, Averaging::Micro)?;
        let f1: Vec<String> = curve.points.iter().map(|p| format!("{:.2}", p.segment(Segment::Novel).f1)).collect();
        let [known, novel, overall] = curve.auc_per_segment()?;
        println!("{method:<12} {}  AUC known {known:.3} novel {novel:.3} overall {overall:.3}", f1.join(" "));
    }
    Ok(())
}
