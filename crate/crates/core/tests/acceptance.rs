//! One pass/fail line per acceptance criterion: `cargo test --test acceptance`.

mod common;

use common::Outcome;

fn line(name: &str, outcome: &Outcome) -> bool {
    match outcome {
        Ok(detail) => println!("PASS  {name}: {detail}"),
        Err(detail) => println!("FAIL  {name}: {detail}"),
    }
    outcome.is_ok()
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = vec![
        ("metric oracle equivalence", common::metric_oracle()),
        ("scorer correctness", common::scorer_correctness()),
        ("protocol invariants", common::protocol_invariants()),
        ("flag-all boundary", common::flag_all_boundary()),
        ("classifier numerics", common::classifier_numerics()),
    ];

    let start = std::time::Instant::now();
    match common::trend_curves(0..10) {
        Ok(curves) => {
            let elapsed = start.elapsed();
            let timed = |o: Outcome| {
                if elapsed.as_secs() >= 300 {
                    Err(format!("sweep took {elapsed:?}"))
                } else {
                    o.map(|d| format!("{d} (10 seeds, {elapsed:.1?})"))
                }
            };
            results.push(("trend (a) retrain F1 non-decreasing", timed(curves.retrain_non_decreasing())));
            results.push(("trend (b) finetune_df forgetting gap >= 20 points", timed(curves.forgetting_gap())));
            results.push(("trend (c) finetune_sampled >= finetune_df", timed(curves.sampled_beats_df())));
            results.push(("trend (d) retrain known F1 >= novel F1", timed(curves.known_above_novel())));
        }
        Err(e) => results.push(("trend reproduction", Err(e))),
    }

    results.push(("AUC examples", common::auc_examples()));
    results.push(("end-to-end determinism", common::sweep_determinism()));

    let failed: Vec<&str> = results.iter().filter(|(n, o)| !line(n, o)).map(|(n, _)| *n).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", results.len());
    } else {
        println!("acceptance: failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
