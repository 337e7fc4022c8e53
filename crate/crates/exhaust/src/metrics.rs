//! Point-wise evaluation of predicted labels against ground truth.
//!
//! Exhaust is the positive class. Road points can optionally be ignored,
//! which scores only the points the detector actually had to decide on.

use crate::scan::SemanticLabel;

/// Point-wise confusion counts with exhaust as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub true_pos: u64,
    pub false_pos: u64,
    pub false_neg: u64,
    pub true_neg: u64,
}

impl ConfusionCounts {
    /// Accumulate another frame's counts into this one.
    pub fn merge(&mut self, other: &ConfusionCounts) {
        self.true_pos += other.true_pos;
        self.false_pos += other.false_pos;
        self.false_neg += other.false_neg;
        self.true_neg += other.true_neg;
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.false_neg + self.true_neg
    }

    /// tp / (tp + fp); defined as 1.0 when nothing was predicted positive.
    pub fn precision(&self) -> f64 {
        ratio(self.true_pos, self.true_pos + self.false_pos)
    }

    /// tp / (tp + fn); defined as 1.0 when no positives exist.
    pub fn recall(&self) -> f64 {
        ratio(self.true_pos, self.true_pos + self.false_neg)
    }

    /// Intersection over union of the exhaust class.
    pub fn iou_gas(&self) -> f64 {
        ratio(
            self.true_pos,
            self.true_pos + self.false_pos + self.false_neg,
        )
    }

    /// Intersection over union of the complement class.
    pub fn iou_other(&self) -> f64 {
        ratio(
            self.true_neg,
            self.true_neg + self.false_pos + self.false_neg,
        )
    }

    /// Mean of the two class IoUs.
    pub fn miou(&self) -> f64 {
        0.5 * (self.iou_gas() + self.iou_other())
    }
}

/// num / den, with the empty-denominator convention of a perfect score.
fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// Count the confusion between predicted and ground-truth labels.
///
/// Both slices must have the same length. With `ignore_road` set, points
/// whose ground truth is road are left out of every count; otherwise they
/// participate as negatives.
pub fn confusion(
    pred: &[SemanticLabel],
    gt: &[SemanticLabel],
    ignore_road: bool,
) -> ConfusionCounts {
    assert_eq!(pred.len(), gt.len(), "label streams must align");
    let mut c = ConfusionCounts::default();
    for (&p, &g) in pred.iter().zip(gt) {
        if ignore_road && g == SemanticLabel::Road {
            continue;
        }
        let pp = p == SemanticLabel::Gas;
        let gp = g == SemanticLabel::Gas;
        match (pp, gp) {
            (true, true) => c.true_pos += 1,
            (true, false) => c.false_pos += 1,
            (false, true) => c.false_neg += 1,
            (false, false) => c.true_neg += 1,
        }
    }
    c
}
