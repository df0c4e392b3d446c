mod common;

use noveltask::accommodation::train_base_model;
use noveltask::classifier::predict_labels;
use noveltask::config::ExperimentConfig;
use noveltask::detection::{score_compmean, score_maxprob, Method, ScoreMatrix};
use noveltask::metrics::{auc, Averaging};
use noveltask::synth::{generate, GeneratorSpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compmean_ranks_like_maxprob(seed in 0u64..10_000, n in 2usize..40, k in 2usize..8, temp in 0.1f64..8.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = common::random_rows(&mut rng, n, k, temp);
        let m = ScoreMatrix::new((0..n as u64).collect(), k, rows).unwrap();
        prop_assert_eq!(score_compmean(&m).unwrap().order, score_maxprob(&m).order);
    }

    #[test]
    fn auc_of_a_constant_is_the_constant(c in 0.0f64..1.0, steps in proptest::collection::vec(1u32..50, 1..12)) {
        let mut x = 0.0;
        let mut pts = vec![(x, c)];
        for s in steps {
            x += s as f64;
            pts.push((x, c));
        }
        prop_assert!((auc(&pts).unwrap() - c).abs() <= 1e-14);
    }

    #[test]
    fn auc_is_bounded_by_the_curve(ys in proptest::collection::vec(0.0f64..1.0, 2..12)) {
        let pts: Vec<(f64, f64)> = ys.iter().enumerate().map(|(i, &y)| (i as f64 * 20.0, y)).collect();
        let a = auc(&pts).unwrap();
        let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(a >= lo - 1e-12 && a <= hi + 1e-12);
    }

    #[test]
    fn oracle_agrees_on_perfect_predictions(labels in proptest::collection::vec(1u32..6, 1..30)) {
        let pairs: Vec<(u32, u32)> = labels.iter().map(|&l| (l, l)).collect();
        let classes: Vec<u32> = (1..6).collect();
        let (_, r, _) = common::oracle_scores(&pairs, &classes, Averaging::Micro);
        prop_assert_eq!(r, 1.0);
    }
}

#[test]
fn zero_separation_gives_chance_accuracy() {
    let mut total = 0.0;
    let seeds = 0..5u64;
    let n = seeds.end as f64;
    for seed in seeds {
        let cfg = ExperimentConfig { seed, ..ExperimentConfig::desk() };
        let spec = GeneratorSpec {
            class_separation: 0.0,
            ..GeneratorSpec::desk(cfg.feature_dim, seed)
        };
        let bundle = generate(&cfg, &spec).unwrap();
        let model = train_base_model(&bundle.d_train, &cfg).unwrap();
        let known: Vec<_> = bundle.eval_acc.iter().filter(|i| i.true_label.0 as usize <= cfg.k_known).cloned().collect();
        let preds = predict_labels(&model, &known).unwrap();
        let correct = preds.iter().zip(&known).filter(|(p, i)| **p == i.true_label).count();
        total += correct as f64 / known.len() as f64 / n;
    }
    let chance = 1.0 / ExperimentConfig::desk().k_known as f64;
    assert!((total - chance).abs() <= 0.05, "accuracy {total} vs chance {chance}");
}

#[test]
fn builtin_scorer_names_round_trip() {
    for m in Method::BUILTIN {
        assert_eq!(m.name().parse::<Method>().unwrap(), m);
    }
}
