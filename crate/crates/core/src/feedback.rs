//! Feedback set construction: the oracle reveals the true label of every
//! novel instance the detector reported as novel.

use std::collections::{BTreeMap, HashMap};

use crate::detection::DetectionReport;
use crate::error::{Error, Result};
use crate::types::{Instance, LabelId};

#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackSet {
    pub budget: usize,
    /// Correctly flagged novel instances; `true_label` is the revealed label.
    pub instances: Vec<Instance>,
    pub per_class_counts: BTreeMap<LabelId, usize>,
}

impl FeedbackSet {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Largest per-class count, 0 when empty.
    pub fn max_class_count(&self) -> usize {
        self.per_class_counts.values().copied().max().unwrap_or(0)
    }
}

pub fn build_feedback(eval_det: &[Instance], report: &DetectionReport, k_known: usize) -> Result<FeedbackSet> {
    if report.instance_ids.len() != eval_det.len() {
        return Err(Error::IdMismatch(format!(
            "report covers {} instances, detection set has {}",
            report.instance_ids.len(),
            eval_det.len()
        )));
    }
    let assigned: HashMap<u64, LabelId> = report
        .instance_ids
        .iter()
        .copied()
        .zip(report.assignment.iter().copied())
        .collect();
    let mut instances = Vec::new();
    let mut per_class_counts = BTreeMap::new();
    for inst in eval_det {
        let label = *assigned
            .get(&inst.id)
            .ok_or_else(|| Error::IdMismatch(format!("instance {} missing from report", inst.id)))?;
        if label.is_pseudo() && inst.true_label.0 as usize > k_known {
            *per_class_counts.entry(inst.true_label).or_insert(0) += 1;
            instances.push(inst.clone());
        }
    }
    Ok(FeedbackSet {
        budget: report.budget,
        instances,
        per_class_counts,
    })
}

/// Counts aligned to novel labels `K+1..=K+N`, zero for undetected classes.
pub fn feedback_histogram(fs: &FeedbackSet, k_known: usize, n_novel: usize) -> Vec<usize> {
    (1..=n_novel)
        .map(|i| {
            fs.per_class_counts
                .get(&LabelId((k_known + i) as u32))
                .copied()
                .unwrap_or(0)
        })
        .collect()
}
