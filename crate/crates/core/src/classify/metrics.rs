use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_FPR_CAP: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub auroc: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub tpr_at_5_fpr: f64,
    pub n_test: usize,
    pub threshold: f64,
}

fn class_counts(scores: &[f64], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidParameter(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    Ok((pos, neg))
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Computed from integer half-pair counts.
pub fn auroc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, neg) = class_counts(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut half_wins: u64 = 0;
    let mut neg_below: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut p, mut q) = (0u64, 0u64);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] == 1 {
                p += 1;
            } else {
                q += 1;
            }
            j += 1;
        }
        half_wins += 2 * p * neg_below + p * q;
        neg_below += q;
        i = j;
    }
    Ok(half_wins as f64 / (2 * pos as u64 * neg as u64) as f64)
}

/// Best true-positive rate over thresholds (distinct scores plus +inf) whose
/// false-positive rate stays within `fpr_cap`; positive iff score >= threshold.
pub fn tpr_at_fpr(scores: &[f64], labels: &[u8], fpr_cap: f64) -> Result<f64> {
    let (pos, neg) = class_counts(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut best = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        if fp as f64 / neg as f64 <= fpr_cap + 1e-12 {
            best = best.max(tp as f64 / pos as f64);
        }
    }
    Ok(best)
}

/// `(f1, accuracy)` with prediction `score >= threshold` and label 1 as the
/// positive class. F1 is 0 when precision and recall are both 0.
pub fn f1_accuracy(scores: &[f64], labels: &[u8], threshold: f64) -> Result<(f64, f64)> {
    if scores.is_empty() || scores.len() != labels.len() {
        return Err(Error::InvalidParameter(
            "f1/accuracy need equal, nonempty inputs".into(),
        ));
    }
    let (mut tp, mut fp, mut fneg, mut tn) = (0usize, 0usize, 0usize, 0usize);
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => tn += 1,
        }
    }
    let accuracy = (tp + tn) as f64 / scores.len() as f64;
    let f1 = if tp == 0 {
        0.0
    } else {
        let precision = tp as f64 / (tp + fp) as f64;
        let recall = tp as f64 / (tp + fneg) as f64;
        2.0 * precision * recall / (precision + recall)
    };
    Ok((f1, accuracy))
}

pub fn evaluate(scores: &[f64], labels: &[u8]) -> Result<EvalReport> {
    let threshold = 0.5;
    let (f1, accuracy) = f1_accuracy(scores, labels, threshold)?;
    Ok(EvalReport {
        auroc: auroc(scores, labels)?,
        accuracy,
        f1,
        tpr_at_5_fpr: tpr_at_fpr(scores, labels, DEFAULT_FPR_CAP)?,
        n_test: scores.len(),
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc(&[0.9, 0.8, 0.2, 0.1], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(auroc(&[0.3; 6], &[1, 0, 1, 0, 0, 1]).unwrap(), 0.5);
        assert_eq!(auroc(&[0.9, 0.4, 0.6, 0.1], &[1, 0, 1, 0]).unwrap(), 1.0);
        assert_eq!(auroc(&[0.9, 0.6, 0.4, 0.1], &[1, 0, 1, 0]).unwrap(), 0.75);
        assert!(matches!(auroc(&[0.1, 0.2], &[1, 1]), Err(Error::SingleClass)));
    }

    #[test]
    fn tpr_examples() {
        assert_eq!(tpr_at_fpr(&[0.9, 0.8, 0.2, 0.1], &[1, 1, 0, 0], 0.05).unwrap(), 1.0);
        assert_eq!(tpr_at_fpr(&[0.5; 4], &[1, 1, 0, 0], 0.05).unwrap(), 0.0);

        let mut scores = vec![0.99];
        let mut labels = vec![0];
        for i in 0..20 {
            scores.push(0.9 - i as f64 * 0.01);
            labels.push(1);
        }
        for i in 0..19 {
            scores.push(0.3 - i as f64 * 0.01);
            labels.push(0);
        }
        assert_eq!(tpr_at_fpr(&scores, &labels, 0.05).unwrap(), 1.0);
        // with a tighter cap the single false positive is not admitted
        assert_eq!(tpr_at_fpr(&scores, &labels, 0.04).unwrap(), 0.0);
    }

    #[test]
    fn f1_examples() {
        assert_eq!(f1_accuracy(&[0.9, 0.1], &[1, 0], 0.5).unwrap(), (1.0, 1.0));
        assert_eq!(f1_accuracy(&[0.1, 0.2, 0.3], &[1, 0, 1], 0.5).unwrap().0, 0.0);
        // TP=3, FP=1, FN=1, TN=5
        let scores = [0.9, 0.9, 0.9, 0.9, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1];
        let labels = [1, 1, 1, 0, 1, 0, 0, 0, 0, 0];
        let (f1, acc) = f1_accuracy(&scores, &labels, 0.5).unwrap();
        assert!((f1 - 0.75).abs() < 1e-12);
        assert!((acc - 0.8).abs() < 1e-12);
    }

    fn scored_labels() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
        prop::collection::vec((0u8..20, 0u8..2), 2..50)
            .prop_filter("both classes", |v| {
                v.iter().any(|p| p.1 == 0) && v.iter().any(|p| p.1 == 1)
            })
            .prop_map(|v| {
                (
                    v.iter().map(|p| p.0 as f64 / 20.0).collect(),
                    v.iter().map(|p| p.1).collect(),
                )
            })
    }

    proptest! {
        #[test]
        fn monotone_transform_invariance((scores, labels) in scored_labels()) {
            let warped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
            prop_assert_eq!(auroc(&scores, &labels).unwrap(), auroc(&warped, &labels).unwrap());
            prop_assert_eq!(
                tpr_at_fpr(&scores, &labels, 0.05).unwrap(),
                tpr_at_fpr(&warped, &labels, 0.05).unwrap()
            );
        }

        #[test]
        fn flipping_labels_complements(labels in prop::collection::vec(0u8..2, 2..40)) {
            prop_assume!(labels.contains(&0) && labels.contains(&1));
            let scores: Vec<f64> = (0..labels.len()).map(|i| i as f64).collect();
            let flipped: Vec<u8> = labels.iter().map(|l| 1 - l).collect();
            let a = auroc(&scores, &labels).unwrap();
            let b = auroc(&scores, &flipped).unwrap();
            prop_assert!((a + b - 1.0).abs() < 1e-12);
        }
    }
}
