//! Train the softmax classifier, verify its gradient and round-trip a
//! checkpoint.
//!
//! cargo run --example train_classifier

use noveltask::classifier::{gradient_check, predict_labels, train_with_history, SoftmaxModel};
use noveltask::synth::{generate, GeneratorSpec};
use noveltask::ExperimentConfig;

fn main() -> noveltask::Result<()> {
    let cfg = ExperimentConfig::desk();
    let bundle = generate(&cfg, &GeneratorSpec::desk(cfg.feature_dim, 1))?;

    // K+N logits; the novel ones stay at zero until their classes are seen
    let (model, losses) = train_with_history(&bundle.d_train, cfg.num_classes(), &cfg.train_spec())?;
    for (epoch, loss) in losses.iter().enumerate().step_by(20) {
        println!("epoch {epoch:>3}  loss {loss:.4}");
    }
    println!("trained logits: {:?}", model.trained_labels().iter().map(|l| l.0).collect::<Vec<_>>());

    let known: Vec<_> = bundle.eval_acc.iter().filter(|i| i.true_label.0 as usize <= cfg.k_known).cloned().collect();
    let preds = predict_labels(&model, &known)?;
    let correct = preds.iter().zip(&known).filter(|(p, i)| **p == i.true_label).count();
    println!("known-class accuracy {:.3}", correct as f64 / known.len() as f64);

    let err = gradient_check(&model, &bundle.d_train[..32], cfg.l2_penalty)?;
    println!("gradient check max relative error {err:.2e}");

    let path = std::env::temp_dir().join("noveltask-model.txt");
    model.save(&path)?;
    assert_eq!(SoftmaxModel::load(&path)?, model);
    println!("checkpoint round-trips bit-exactly: {}", path.display());
    Ok(())
}
