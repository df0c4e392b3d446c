//! Synthetic Gaussian-prototype benchmark.
//!
//! Every class (known and novel) gets a prototype mean drawn uniformly on the
//! hypersphere of radius `class_separation`; instances are the prototype plus
//! isotropic Gaussian noise.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::types::{Instance, LabelId, SplitBundle};

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub feature_dim: usize,
    pub class_separation: f64,
    pub within_class_stddev: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn desk(feature_dim: usize, seed: u64) -> Self {
        GeneratorSpec {
            feature_dim,
            class_separation: 3.0,
            within_class_stddev: 1.0,
            seed,
        }
    }

    /// A separation of exactly zero is accepted: every class then shares the
    /// origin as prototype, which is the chance-level baseline.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.feature_dim == 0 {
            out.push("feature_dim must be positive".into());
        }
        if !(self.class_separation.is_finite() && self.class_separation >= 0.0) {
            out.push(format!(
                "class_separation must be nonnegative, got {}",
                self.class_separation
            ));
        }
        if !(self.within_class_stddev.is_finite() && self.within_class_stddev > 0.0) {
            out.push(format!(
                "within_class_stddev must be positive, got {}",
                self.within_class_stddev
            ));
        }
        out
    }
}

fn unit_vector(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Generates the three splits for `cfg`. Instance ids are assigned
/// sequentially across `d_train`, `eval_det`, `eval_acc` in that order.
pub fn generate(cfg: &ExperimentConfig, spec: &GeneratorSpec) -> Result<SplitBundle> {
    let mut problems = crate::config::validate_config(cfg);
    problems.extend(spec.validate());
    if spec.feature_dim != cfg.feature_dim {
        problems.push(format!(
            "generator feature_dim {} differs from config feature_dim {}",
            spec.feature_dim, cfg.feature_dim
        ));
    }
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let num_classes = cfg.num_classes();
    let prototypes: Vec<Vec<f64>> = (0..num_classes)
        .map(|_| {
            unit_vector(&mut rng, spec.feature_dim)
                .into_iter()
                .map(|x| x * spec.class_separation)
                .collect()
        })
        .collect();
    let noise = Normal::new(0.0, spec.within_class_stddev)
        .map_err(|e| Error::Config(vec![e.to_string()]))?;

    let mut next_id = 0u64;
    let mut draw = |rng: &mut ChaCha8Rng, class_idx: usize, count: usize, out: &mut Vec<Instance>| {
        for _ in 0..count {
            let features = prototypes[class_idx]
                .iter()
                .map(|m| m + noise.sample(rng))
                .collect();
            out.push(Instance {
                id: next_id,
                features,
                true_label: LabelId::from_index(class_idx),
            });
            next_id += 1;
        }
    };

    let mut d_train = Vec::new();
    for c in 0..cfg.k_known {
        draw(&mut rng, c, cfg.train_quota(c as u32 + 1), &mut d_train);
    }
    let mut eval_det = Vec::with_capacity(num_classes * cfg.det_per_class);
    for c in 0..num_classes {
        draw(&mut rng, c, cfg.det_per_class, &mut eval_det);
    }
    let mut eval_acc = Vec::with_capacity(num_classes * cfg.acc_per_class);
    for c in 0..num_classes {
        draw(&mut rng, c, cfg.acc_per_class, &mut eval_acc);
    }

    Ok(SplitBundle {
        d_train,
        eval_det,
        eval_acc,
    })
}

/// Splits an externally produced instance pool into the three splits using
/// the per-class quotas of `cfg`. Instances keep their ids. The result does
/// not depend on the input order.
pub fn shuffle_split(instances: &[Instance], cfg: &ExperimentConfig, seed: u64) -> Result<SplitBundle> {
    let max_label = cfg.num_classes() as u32;
    let mut by_class: BTreeMap<u32, Vec<&Instance>> = BTreeMap::new();
    for inst in instances {
        inst.check()?;
        if inst.true_label.0 > max_label {
            return Err(Error::LabelOutOfRange {
                label: inst.true_label.0,
                max: max_label,
            });
        }
        by_class.entry(inst.true_label.0).or_default().push(inst);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bundle = SplitBundle {
        d_train: Vec::new(),
        eval_det: Vec::new(),
        eval_acc: Vec::new(),
    };
    for label in 1..=max_label {
        let train = if label as usize <= cfg.k_known {
            cfg.train_quota(label)
        } else {
            0
        };
        let needed = train + cfg.det_per_class + cfg.acc_per_class;
        let mut pool = by_class.remove(&label).unwrap_or_default();
        if pool.len() < needed {
            return Err(Error::InsufficientInstances {
                class: label,
                needed,
                available: pool.len(),
                shortfall: needed - pool.len(),
            });
        }
        pool.sort_by_key(|i| i.id);
        pool.shuffle(&mut rng);
        let mut it = pool.into_iter().cloned();
        bundle.d_train.extend(it.by_ref().take(train));
        bundle.eval_det.extend(it.by_ref().take(cfg.det_per_class));
        bundle.eval_acc.extend(it.take(cfg.acc_per_class));
    }
    Ok(bundle)
}
