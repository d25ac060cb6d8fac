//! Topology-aware balanced augmentation for class-imbalanced semi-supervised
//! node classification.
//!
//! The crate bundles everything needed to run the method end to end:
//!
//! * [`graph`]: undirected attributed graphs, the JSON graph file, synthetic
//!   stochastic-block-model generation, imbalanced split construction and
//!   symmetric GCN normalization.
//! * [`gnn`]: a two-layer GCN with hand-derived backprop, Adam, plateau
//!   scheduling and the augmented training loop.
//! * [`augment`]: node risk estimation, candidate-class similarity and the
//!   per-iteration virtual super-node / edge injection.
//! * [`baselines`]: reweighting, replication oversampling and SMOTE.
//! * [`diagnostics`]: balanced metrics and message-passing bias diagnostics.
//! * [`experiment`]: seed grids, aggregation and result files.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which is what the trainer and experiment
//! harness use.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augment;
pub mod baselines;
pub mod diagnostics;
mod error;
pub mod experiment;
pub mod gnn;
pub mod graph;
pub mod linalg;
pub mod rng;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Graph = graph::Graph<f64>;
pub type Split = graph::Split;
pub type Propagation = graph::Propagation<f64>;
pub type ModelParams = gnn::ModelParams<f64>;
pub type PredictionState = gnn::PredictionState<f64>;
pub type RiskVector = augment::RiskVector<f64>;
pub type SimilarityMatrix = augment::SimilarityMatrix<f64>;
pub type AugmentedGraph<'a> = augment::AugmentedGraph<'a, f64>;

pub type Graph32 = graph::Graph<f32>;
pub type ModelParams32 = gnn::ModelParams<f32>;
pub type PredictionState32 = gnn::PredictionState<f32>;
