//! Micro and macro scores on a hand-made confusion, and the budget-axis AUC.
//!
//! cargo run --example metrics_and_auc

use noveltask::metrics::{auc, Averaging, Confusion, Segment};
use noveltask::LabelId;

fn main() -> noveltask::Result<()> {
    // (truth, prediction); classes 1-2 known, 3 novel
    let pairs = [(1, 1), (1, 1), (1, 1), (1, 2), (2, 2), (3, 1), (3, 3), (2, 3)].map(|(t, p)| (LabelId(t), LabelId(p)));
    let conf = Confusion::from_pairs(pairs);
    for label in 1..=3 {
        let c = conf.class(LabelId(label));
        println!("class {label}: tp {} fp {} fn {}", c.tp, c.fp, c.fn_);
    }
    let all = [LabelId(1), LabelId(2), LabelId(3)];
    for avg in Averaging::ALL {
        let s = conf.scores(&all, Segment::Overall, avg);
        println!("{avg:<5}  P {:.4}  R {:.4}  F1 {:.4}", s.precision, s.recall, s.f1);
    }

    // budgets map to [0, 1] before the trapezoid rule
    let curve = [(100.0, 0.5), (200.0, 0.25), (500.0, 0.75)];
    println!("AUC of {curve:?} = {}", auc(&curve)?);
    Ok(())
}
