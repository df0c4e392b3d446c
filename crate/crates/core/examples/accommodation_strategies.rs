//! Compare retrain, finetune_df and finetune_sampled at one budget.
//!
//! cargo run --example accommodation_strategies -- [budget]

use noveltask::accommodation::{per_strategy_run, train_base_model, StrategyId};
use noveltask::classifier::predict_known_scores;
use noveltask::detection::{rank, report_novelties, Method};
use noveltask::feedback::build_feedback;
use noveltask::metrics::{accommodation_metrics, Averaging};
use noveltask::synth::{generate, GeneratorSpec};
use noveltask::ExperimentConfig;

fn main() -> noveltask::Result<()> {
    let cfg = ExperimentConfig::desk();
    let budget: usize = std::env::args().nth(1).map_or(120, |s| s.parse().expect("budget"));
    let bundle = generate(&cfg, &GeneratorSpec::desk(cfg.feature_dim, cfg.seed))?;
    let base = train_base_model(&bundle.d_train, &cfg)?;
    let scores = predict_known_scores(&base, &bundle.eval_det, cfg.k_known)?;
    let ranking = rank(Method::MaxProb, &scores, cfg.ridge)?;
    let report = report_novelties(&ranking, &scores, budget)?;
    let fs = build_feedback(&bundle.eval_det, &report, cfg.k_known)?;
    println!("budget {budget}: {} feedback instances, largest class {}", fs.len(), fs.max_class_count());

    println!("{:<17} {:>12} {:>10} {:>10}", "strategy", "known recall", "novel F1", "overall F1");
    for strategy in StrategyId::ALL {
        let run = per_strategy_run(strategy, &bundle, &fs, &base, &cfg)?;
        let [known, novel, overall] =
            accommodation_metrics(&bundle.eval_acc, &run.eval_predictions, cfg.k_known, cfg.n_novel, Averaging::Micro)?;
        println!("{strategy:<17} {:>12.3} {:>10.3} {:>10.3}", known.recall, novel.f1, overall.f1);
    }
    Ok(())
}
