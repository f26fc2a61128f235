//! Bag-of-words logistic-regression baseline.
//!
//! Sequences are compressed into 0/1 presence vectors over the event-type
//! vocabulary (position 0, the OOV row, stays zero) and fed to an
//! L2-regularized logistic regression fit by full-batch gradient descent
//! with a backtracking step size.

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::event_model::{EventSequence, Vocabulary, OOV_INDEX};
use crate::metrics::{pr_auc, roc_auc, ScoredLabels};

use super::cohort::CohortDataset;

/// 0/1 presence indicator per vocabulary event type. Out-of-vocabulary
/// events are ignored, so the OOV position is always zero.
pub fn bow_vectorize(seq: &EventSequence, vocab: &Vocabulary) -> Array1<f64> {
    let mut v = Array1::zeros(vocab.n_types());
    for e in &seq.events {
        if e.type_id != OOV_INDEX && e.type_id < vocab.n_types() {
            v[e.type_id] = 1.0;
        }
    }
    v
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LogisticConfig {
    /// L2 penalty on the weights (the intercept is never penalized).
    pub l2: f64,
    pub fit_intercept: bool,
    pub max_iters: usize,
    /// Convergence threshold on the gradient's L2 norm.
    pub grad_tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            l2: 1.0,
            fit_intercept: true,
            max_iters: 5_000,
            grad_tol: 1e-6,
        }
    }
}

/// A fitted linear model.
#[derive(Debug, Clone, Serialize)]
pub struct LogisticFit {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub converged: bool,
    pub iterations: usize,
    pub final_grad_norm: f64,
}

impl LogisticFit {
    pub fn decision(&self, x: &Array1<f64>) -> f64 {
        let w = Array1::from_vec(self.weights.clone());
        w.dot(x) + self.intercept
    }

    pub fn predict_proba(&self, x: &Array1<f64>) -> f64 {
        sigmoid(self.decision(x))
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn objective(
    x: &Array2<f64>,
    y: &[u8],
    w: &Array1<f64>,
    b: f64,
    l2: f64,
) -> f64 {
    let mut nll = 0.0;
    for (row, &label) in x.rows().into_iter().zip(y) {
        let z = w.dot(&row) + b;
        // -log sigmoid(m) = log(1 + e^{-m}), computed stably on both sides
        let m = if label == 1 { z } else { -z };
        nll += if m >= 0.0 {
            (-m).exp().ln_1p()
        } else {
            -m + m.exp().ln_1p()
        };
    }
    nll + 0.5 * l2 * w.dot(w)
}

/// Fits logistic regression by gradient descent with backtracking halving.
/// Stops when the gradient norm falls under `grad_tol` or iterations run
/// out; non-convergence is reported, not an error.
pub fn fit_logistic(x: &Array2<f64>, y: &[u8], cfg: &LogisticConfig) -> LogisticFit {
    assert_eq!(x.nrows(), y.len());
    let d = x.ncols();
    let mut w: Array1<f64> = Array1::zeros(d);
    let mut b = 0.0f64;
    let mut step = 1.0 / x.nrows() as f64;
    let mut grad_norm = f64::INFINITY;
    let mut iterations = 0;

    let mut current = objective(x, y, &w, b, cfg.l2);
    for iter in 0..cfg.max_iters {
        iterations = iter + 1;
        let mut grad_w: Array1<f64> = &w * cfg.l2;
        let mut grad_b = 0.0;
        for (row, &label) in x.rows().into_iter().zip(y) {
            let p = sigmoid(w.dot(&row) + b);
            let residual = p - f64::from(label);
            grad_w.scaled_add(residual, &row);
            grad_b += residual;
        }
        if !cfg.fit_intercept {
            grad_b = 0.0;
        }
        grad_norm = (grad_w.dot(&grad_w) + grad_b * grad_b).sqrt();
        if grad_norm < cfg.grad_tol {
            break;
        }
        // backtracking: halve until the objective decreases
        let mut accepted = false;
        for _ in 0..60 {
            let w_try = &w - &(&grad_w * step);
            let b_try = b - step * grad_b;
            let next = objective(x, y, &w_try, b_try, cfg.l2);
            if next < current {
                w = w_try;
                b = b_try;
                current = next;
                accepted = true;
                step *= 1.5; // grow back after a success
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break; // no descent direction at float resolution
        }
    }

    LogisticFit {
        weights: w.to_vec(),
        intercept: b,
        converged: grad_norm < cfg.grad_tol,
        iterations,
        final_grad_norm: grad_norm,
    }
}

/// Metrics of the fitted baseline on the cohort splits.
#[derive(Debug, Clone, Serialize)]
pub struct LrBaselineReport {
    pub train_auc: f64,
    pub val_auc: f64,
    pub val_auprc: f64,
    pub test_auc: f64,
    pub test_auprc: f64,
    pub converged: bool,
    pub final_grad_norm: f64,
}

/// Trains the bag-of-words logistic regression on the cohort's training
/// split and scores all three splits.
pub fn train_lr_baseline(
    dataset: &CohortDataset,
    l2: f64,
) -> (LogisticFit, LrBaselineReport) {
    let vectors: Vec<Array1<f64>> = dataset
        .sequences
        .iter()
        .map(|s| bow_vectorize(s, &dataset.vocab))
        .collect();
    let d = dataset.vocab.n_types();
    let stack = |idx: &[usize]| -> (Array2<f64>, Vec<u8>) {
        let mut x = Array2::zeros((idx.len(), d));
        let mut y = Vec::with_capacity(idx.len());
        for (r, &i) in idx.iter().enumerate() {
            x.row_mut(r).assign(&vectors[i]);
            y.push(dataset.sequences[i].label);
        }
        (x, y)
    };

    let (x_train, y_train) = stack(&dataset.train);
    let cfg = LogisticConfig {
        l2,
        ..LogisticConfig::default()
    };
    let fit = fit_logistic(&x_train, &y_train, &cfg);

    let score_split = |idx: &[usize]| -> ScoredLabels {
        let scores = idx
            .iter()
            .map(|&i| fit.predict_proba(&vectors[i]))
            .collect();
        let labels = idx.iter().map(|&i| dataset.sequences[i].label).collect();
        ScoredLabels::new(scores, labels)
    };

    let train_scored = score_split(&dataset.train);
    let val_scored = score_split(&dataset.val);
    let test_scored = score_split(&dataset.test);
    let report = LrBaselineReport {
        train_auc: roc_auc(&train_scored).unwrap_or(f64::NAN),
        val_auc: roc_auc(&val_scored).unwrap_or(f64::NAN),
        val_auprc: pr_auc(&val_scored).unwrap_or(f64::NAN),
        test_auc: roc_auc(&test_scored).unwrap_or(f64::NAN),
        test_auprc: pr_auc(&test_scored).unwrap_or(f64::NAN),
        converged: fit.converged,
        final_grad_norm: fit.final_grad_norm,
    };
    (fit, report)
}
