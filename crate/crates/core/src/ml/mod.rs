//! Shared model fitting and classification metrics.

mod cv;
mod design;
mod logistic;
mod metrics;

pub use cv::{grouped_stratified_kfold, stratified_kfold, FoldPlan};
pub use design::BinaryDesign;
pub use logistic::{
    fit_logistic, gradient, penalized_log_likelihood, predict_proba, LogisticModel,
    LogisticOptions, SEPARATION_BOUND,
};
pub use metrics::{accuracy, auc, average_ranks, f1, pearson, spearman, Confusion};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// L2 strength, either absolute or proportional to the training-set size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum L2Penalty {
    Fixed(f64),
    PerSample(f64),
}

impl L2Penalty {
    pub fn strength(&self, n: usize) -> f64 {
        match *self {
            L2Penalty::Fixed(l) => l,
            L2Penalty::PerSample(c) => c * n as f64,
        }
    }
}

/// Default penalty for the many-predictor discriminative and predictive fits.
pub const DEFAULT_HIGH_DIM_L2: L2Penalty = L2Penalty::PerSample(1e-4);

/// A binary classifier that can be trained and scored in one call.
pub trait Learner: Sync {
    fn name(&self) -> &str;

    /// Trains on `(train, y)` and returns a score for each row of `test`.
    fn fit_predict(&self, train: &BinaryDesign, y: &[bool], test: &BinaryDesign) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticLearner {
    pub l2: L2Penalty,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogisticLearner {
    fn default() -> Self {
        let d = LogisticOptions::default();
        LogisticLearner {
            l2: DEFAULT_HIGH_DIM_L2,
            tol: d.tol,
            max_iter: d.max_iter,
        }
    }
}

impl Learner for LogisticLearner {
    fn name(&self) -> &str {
        "logistic_regression"
    }

    fn fit_predict(&self, train: &BinaryDesign, y: &[bool], test: &BinaryDesign) -> Result<Vec<f64>> {
        let opts = LogisticOptions {
            l2: self.l2.strength(train.n_rows()),
            tol: self.tol,
            max_iter: self.max_iter,
        };
        let model = fit_logistic(train, y, &opts)?;
        if !model.converged {
            log::warn!(
                "logistic fit stopped after {} iterations without converging",
                model.n_iter
            );
        }
        predict_proba(&model, test)
    }
}
