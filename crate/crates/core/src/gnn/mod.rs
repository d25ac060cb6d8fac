//! Minimal GCN classifier and its training loop.

mod loss;
mod model;
mod optim;
mod scheduler;
mod train;

use ndarray::Array2;

use crate::{Error, Result, Scalar};

pub use loss::{cross_entropy_grad, masked_cross_entropy, LOG_CLAMP};
pub use model::{
    backward, gcn_forward, softmax_rows, DropoutMask, Forward, ForwardCache, Gradients, ModelParams,
    Moments,
};
pub use optim::{adam_step, AdamConfig};
pub use scheduler::PlateauScheduler;
pub use train::{
    train, Augmentation, Baseline, EpochRecord, Method, TrainConfig, TrainOutcome,
};

/// Row-stochastic class probabilities and their argmax labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionState<T> {
    probs: Array2<T>,
    preds: Vec<usize>,
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax<T: Scalar>(row: impl IntoIterator<Item = T>) -> usize {
    let mut best = 0;
    let mut best_val = T::neg_infinity();
    for (j, v) in row.into_iter().enumerate() {
        if v > best_val {
            best = j;
            best_val = v;
        }
    }
    best
}

impl<T: Scalar> PredictionState<T> {
    pub fn from_probs(probs: Array2<T>) -> Result<Self> {
        if probs.ncols() == 0 {
            return Err(Error::Shape("probability matrix without classes".into()));
        }
        let preds = probs.rows().into_iter().map(|r| argmax(r.iter().copied())).collect();
        Ok(PredictionState { probs, preds })
    }

    pub fn probs(&self) -> &Array2<T> {
        &self.probs
    }

    pub fn preds(&self) -> &[usize] {
        &self.preds
    }

    pub fn num_nodes(&self) -> usize {
        self.preds.len()
    }

    pub fn num_classes(&self) -> usize {
        self.probs.ncols()
    }

    /// The first `n` rows.
    pub fn truncate(&self, n: usize) -> Self {
        PredictionState {
            probs: self.probs.slice(ndarray::s![..n, ..]).to_owned(),
            preds: self.preds[..n].to_vec(),
        }
    }
}
