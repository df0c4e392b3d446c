//! Seed-averaged accommodation curves on the desk benchmark: the
//! retrain/fine-tune trends and catastrophic forgetting.
//!
//! cargo run --release --example trend_study -- [seeds]

use std::collections::BTreeMap;

use noveltask::accommodation::{train_base_model, StrategyId};
use noveltask::classifier::predict_known_scores;
use noveltask::detection::{rank, Method};
use noveltask::metrics::{accommodation_sweep, Averaging, Segment};
use noveltask::synth::{generate, GeneratorSpec};
use noveltask::ExperimentConfig;

fn main() -> noveltask::Result<()> {
    let seeds: u64 = std::env::args().nth(1).map_or(5, |s| s.parse().expect("seed count"));
    let desk = ExperimentConfig::desk();
    let mut mean: BTreeMap<(StrategyId, usize), [f64; 3]> = BTreeMap::new();
    for seed in 0..seeds {
        let cfg = ExperimentConfig { seed, ..desk.clone() };
        let bundle = generate(&cfg, &GeneratorSpec::desk(cfg.feature_dim, seed))?;
        let base = train_base_model(&bundle.d_train, &cfg)?;
        let scores = predict_known_scores(&base, &bundle.eval_det, cfg.k_known)?;
        let ranking = rank(Method::MaxProb, &scores, cfg.ridge)?;
        for strategy in StrategyId::ALL {
            let curve = accommodation_sweep(strategy, &bundle, &ranking, &scores, Some(&base), &cfg, Averaging::Micro)?;
            for p in &curve.points {
                let e = mean.entry((strategy, p.budget)).or_default();
                e[0] += p.segment(Segment::Overall).f1 / seeds as f64;
                e[1] += p.segment(Segment::Known).recall / seeds as f64;
                e[2] += p.segment(Segment::Novel).f1 / seeds as f64;
            }
        }
    }
    println!("seed-mean over {seeds} seeds: overall F1 / known recall / novel F1");
    print!("{:>6}", "budget");
    for s in StrategyId::ALL {
        print!("  {:^22}", s.name());
    }
    println!();
    for &b in &desk.budget_grid {
        print!("{b:>6}");
        for s in StrategyId::ALL {
            let v = mean[&(s, b)];
            print!("  {:.3} / {:.3} / {:.3}", v[0], v[1], v[2]);
        }
        println!();
    }
    Ok(())
}
