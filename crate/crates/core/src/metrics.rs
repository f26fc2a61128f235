//! Ranking metrics for imbalanced binary classification.
//!
//! `roc_auc` integrates the ROC curve with the trapezoid rule over tied-score
//! threshold groups, which makes it exactly the Mann-Whitney statistic (ties
//! counted as half). `pr_auc` is step-wise average precision rather than
//! trapezoidal PR interpolation, since linear interpolation between PR points
//! is known to over-estimate the area.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("AUC undefined: need at least one positive and one negative label (got {positives} positives, {negatives} negatives)")]
    OneClassOnly { positives: usize, negatives: usize },
    #[error("average precision undefined: no positive labels")]
    NoPositives,
    #[error("scores and labels have different lengths ({scores} vs {labels})")]
    LengthMismatch { scores: usize, labels: usize },
}

/// Prediction scores paired with binary labels.
#[derive(Debug, Clone)]
pub struct ScoredLabels {
    scores: Vec<f64>,
    labels: Vec<u8>,
}

impl ScoredLabels {
    /// # Panics
    /// If the lengths differ or any label is not 0/1.
    pub fn new(scores: Vec<f64>, labels: Vec<u8>) -> Self {
        assert_eq!(scores.len(), labels.len());
        assert!(labels.iter().all(|&l| l <= 1), "labels must be 0 or 1");
        ScoredLabels { scores, labels }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn positive_rate(&self) -> f64 {
        self.positives() as f64 / self.len() as f64
    }
}

/// Cumulative (threshold, true positives, false positives) per distinct
/// score, descending. Ties form one threshold group.
fn cumulative_by_threshold(data: &ScoredLabels) -> Vec<(f64, u64, u64)> {
    let mut pairs: Vec<(f64, u8)> = data
        .scores
        .iter()
        .copied()
        .zip(data.labels.iter().copied())
        .collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("scores must not be NaN"));
    let mut out: Vec<(f64, u64, u64)> = Vec::new();
    let (mut tp, mut fp) = (0u64, 0u64);
    for (score, label) in pairs {
        if label == 1 {
            tp += 1;
        } else {
            fp += 1;
        }
        match out.last_mut() {
            Some(last) if last.0 == score => {
                last.1 = tp;
                last.2 = fp;
            }
            _ => out.push((score, tp, fp)),
        }
    }
    out
}

/// One point of the ROC curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub false_positive_rate: f64,
    pub true_positive_rate: f64,
}

/// One point of the precision-recall curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
}

/// ROC curve points: an anchor at (0, 0) followed by one point per distinct
/// threshold, ending at (1, 1).
pub fn roc_curve(data: &ScoredLabels) -> Result<Vec<RocPoint>, MetricError> {
    let (p, n) = count_classes(data)?;
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        false_positive_rate: 0.0,
        true_positive_rate: 0.0,
    }];
    for (threshold, tp, fp) in cumulative_by_threshold(data) {
        points.push(RocPoint {
            threshold,
            false_positive_rate: fp as f64 / n as f64,
            true_positive_rate: tp as f64 / p as f64,
        });
    }
    Ok(points)
}

/// Precision-recall curve points: an anchor at recall 0 (precision 1 by
/// convention) followed by one point per distinct threshold.
pub fn pr_curve(data: &ScoredLabels) -> Result<Vec<PrPoint>, MetricError> {
    let p = data.positives() as u64;
    if p == 0 {
        return Err(MetricError::NoPositives);
    }
    let mut points = vec![PrPoint {
        threshold: f64::INFINITY,
        recall: 0.0,
        precision: 1.0,
    }];
    for (threshold, tp, fp) in cumulative_by_threshold(data) {
        points.push(PrPoint {
            threshold,
            recall: tp as f64 / p as f64,
            precision: tp as f64 / (tp + fp) as f64,
        });
    }
    Ok(points)
}

fn count_classes(data: &ScoredLabels) -> Result<(u64, u64), MetricError> {
    let p = data.positives();
    let n = data.len() - p;
    if p == 0 || n == 0 {
        return Err(MetricError::OneClassOnly {
            positives: p,
            negatives: n,
        });
    }
    Ok((p as u64, n as u64))
}

/// Area under the ROC curve by trapezoidal integration over threshold
/// groups. Equals the Mann-Whitney pair statistic (ties count one half).
pub fn roc_auc(data: &ScoredLabels) -> Result<f64, MetricError> {
    let (p, n) = count_classes(data)?;
    // integer accumulation: sum of delta_fp * (tp_before + tp_after)
    let mut twice_area: u128 = 0;
    let (mut prev_tp, mut prev_fp) = (0u64, 0u64);
    for (_, tp, fp) in cumulative_by_threshold(data) {
        twice_area += u128::from(fp - prev_fp) * u128::from(prev_tp + tp);
        prev_tp = tp;
        prev_fp = fp;
    }
    Ok(twice_area as f64 / (2.0 * p as f64 * n as f64))
}

/// Average precision: sum over threshold groups of the recall increment
/// times the precision at that threshold.
pub fn pr_auc(data: &ScoredLabels) -> Result<f64, MetricError> {
    let p = data.positives() as u64;
    if p == 0 {
        return Err(MetricError::NoPositives);
    }
    let mut ap = 0.0;
    let mut prev_tp = 0u64;
    for (_, tp, fp) in cumulative_by_threshold(data) {
        if tp > prev_tp {
            let recall_inc = (tp - prev_tp) as f64 / p as f64;
            let precision = tp as f64 / (tp + fp) as f64;
            ap += recall_inc * precision;
        }
        prev_tp = tp;
    }
    Ok(ap)
}
