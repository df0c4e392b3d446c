//! Label conventions and split containers.
//!
//! Ground-truth labels are `1..=K` for known classes and `K+1..=K+N` for
//! novel classes. Label `0` is reserved for the "reported novel" prediction
//! of the detection stage and never appears as ground truth.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// A class label. `LabelId::NOVEL` (0) is the novel pseudo-class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct LabelId(pub u32);

impl LabelId {
    pub const NOVEL: LabelId = LabelId(0);

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn is_pseudo(self) -> bool {
        self.0 == 0
    }

    /// Zero-based logit index of a concrete label.
    pub fn index(self) -> usize {
        debug_assert!(self.0 > 0);
        (self.0 - 1) as usize
    }

    pub fn from_index(idx: usize) -> Self {
        LabelId(idx as u32 + 1)
    }
}

impl fmt::Display for LabelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Indicator of novelty for a ground-truth label: true iff `label > k_known`.
pub fn is_novel(label: LabelId, k_known: usize) -> Result<bool> {
    if label.is_pseudo() {
        return Err(Error::PseudoClassLabel);
    }
    Ok(label.0 as usize > k_known)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub id: u64,
    pub features: Vec<f64>,
    pub true_label: LabelId,
}

impl Instance {
    pub fn new(id: u64, features: Vec<f64>, true_label: LabelId) -> Result<Self> {
        let inst = Instance {
            id,
            features,
            true_label,
        };
        inst.check()?;
        Ok(inst)
    }

    pub fn check(&self) -> Result<()> {
        if self.true_label.is_pseudo() {
            return Err(Error::PseudoClassLabel);
        }
        if let Some(bad) = self.features.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invariant(format!(
                "instance {} has non-finite feature at position {}",
                self.id, bad
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }
}

/// The three data splits of an experiment: initial training data, the
/// detection-stage evaluation set, and the accommodation-stage evaluation set.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitBundle {
    pub d_train: Vec<Instance>,
    pub eval_det: Vec<Instance>,
    pub eval_acc: Vec<Instance>,
}

impl SplitBundle {
    /// Checks split-level invariants: no novel labels in training data,
    /// labels within `1..=K+N`, unique ids, and disjoint evaluation sets.
    pub fn check(&self, k_known: usize, n_novel: usize) -> Result<()> {
        let max = (k_known + n_novel) as u32;
        for split in [&self.d_train, &self.eval_det, &self.eval_acc] {
            for inst in split {
                inst.check()?;
                if inst.true_label.0 > max {
                    return Err(Error::LabelOutOfRange {
                        label: inst.true_label.0,
                        max,
                    });
                }
            }
        }
        if let Some(inst) = self.d_train.iter().find(|i| i.true_label.0 as usize > k_known) {
            return Err(Error::Invariant(format!(
                "training instance {} carries novel label {}",
                inst.id, inst.true_label
            )));
        }
        let mut seen = HashSet::new();
        for inst in self.d_train.iter().chain(&self.eval_det).chain(&self.eval_acc) {
            if !seen.insert(inst.id) {
                return Err(Error::Invariant(format!("instance id {} appears twice", inst.id)));
            }
        }
        Ok(())
    }
}
