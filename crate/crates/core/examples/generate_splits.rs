//! Generate the synthetic benchmark and write its three splits as CSV.
//!
//! cargo run --example generate_splits -- [out_dir]

use std::collections::BTreeMap;

use noveltask::io::write_instances;
use noveltask::synth::{generate, GeneratorSpec};
use noveltask::{validate_config, ExperimentConfig, Instance};

fn label_counts(split: &[Instance]) -> BTreeMap<u32, usize> {
    let mut counts = BTreeMap::new();
    for inst in split {
        *counts.entry(inst.true_label.0).or_insert(0) += 1;
    }
    counts
}

fn main() -> noveltask::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("noveltask-splits"), Into::into);
    let cfg = ExperimentConfig {
        balanced: false,
        ..ExperimentConfig::desk()
    };
    assert!(validate_config(&cfg).is_empty());
    let spec = GeneratorSpec::desk(cfg.feature_dim, cfg.seed);
    let bundle = generate(&cfg, &spec)?;

    for (name, split) in [("d_train", &bundle.d_train), ("eval_det", &bundle.eval_det), ("eval_acc", &bundle.eval_acc)] {
        let path = out.join(format!("{name}.csv"));
        write_instances(&path, split, cfg.feature_dim)?;
        println!("{name:>8}: {:>4} instances -> {}", split.len(), path.display());
    }
    // unbalanced training quotas ramp linearly across the known classes
    println!("training counts per known class: {:?}", label_counts(&bundle.d_train).values().collect::<Vec<_>>());
    println!(
        "detection set: {} known, {} novel",
        bundle.eval_det.iter().filter(|i| i.true_label.0 as usize <= cfg.k_known).count(),
        bundle.eval_det.iter().filter(|i| i.true_label.0 as usize > cfg.k_known).count()
    );
    Ok(())
}
