use std::fmt;
use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{
    adam_step, backward, cross_entropy_grad, gcn_forward, masked_cross_entropy, AdamConfig,
    DropoutMask, ModelParams, PlateauScheduler, PredictionState,
};
use crate::augment::{augment, AugmentOptions, SimilarityMode};
use crate::baselines::{class_reweight, oversample, smote};
use crate::diagnostics::{evaluate, MetricsReport};
use crate::graph::{normalize_adjacency, Graph, Propagation, Split};
use crate::rng::{epoch_stream, stream, Stream};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    #[default]
    Vanilla,
    Reweight,
    Oversample,
    Smote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Augmentation {
    #[default]
    None,
    TobaP,
    TobaT,
}

impl Augmentation {
    pub fn similarity(self) -> Option<SimilarityMode> {
        match self {
            Augmentation::None => None,
            Augmentation::TobaP => Some(SimilarityMode::Prediction),
            Augmentation::TobaT => Some(SimilarityMode::Topology),
        }
    }
}

/// A baseline optionally combined with dynamic augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Method {
    #[serde(default)]
    pub baseline: Baseline,
    #[serde(default)]
    pub augment: Augmentation,
}

impl Method {
    pub const VANILLA: Method = Method {
        baseline: Baseline::Vanilla,
        augment: Augmentation::None,
    };

    pub fn new(baseline: Baseline, augment: Augmentation) -> Self {
        Method { baseline, augment }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = match self.baseline {
            Baseline::Vanilla => "vanilla",
            Baseline::Reweight => "reweight",
            Baseline::Oversample => "oversample",
            Baseline::Smote => "smote",
        };
        match self.augment {
            Augmentation::None => f.write_str(base),
            Augmentation::TobaP => write!(f, "{base}+toba_p"),
            Augmentation::TobaT => write!(f, "{base}+toba_t"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub hidden: usize,
    pub lr: f64,
    pub epochs: usize,
    pub weight_decay: f64,
    pub dropout_p: f64,
    pub patience: usize,
    pub lr_factor: f64,
    /// Training iterations per augmentation refresh.
    pub granularity: usize,
    /// Set from the experiment's top-level `method`.
    #[serde(skip)]
    pub method: Method,
    pub smote_k: usize,
    /// Train the virtual nodes on their pseudo-labels alongside the
    /// labeled real nodes.
    pub virtual_in_loss: bool,
    /// Force every risk to zero (virtual nodes stay isolated).
    pub zero_risk: bool,
    /// Set per run from the experiment's seed list.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: 64,
            lr: 0.01,
            epochs: 2000,
            weight_decay: 5e-4,
            dropout_p: 0.5,
            patience: 100,
            lr_factor: 0.5,
            granularity: 1,
            method: Method::VANILLA,
            smote_k: 5,
            virtual_in_loss: true,
            zero_risk: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.lr > 0.0) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return bad(format!("dropout_p must be in [0, 1), got {}", self.dropout_p));
        }
        if self.granularity == 0 {
            return bad("granularity must be >= 1".into());
        }
        if !(self.lr_factor > 0.0 && self.lr_factor < 1.0) {
            return bad(format!("lr_factor must be in (0, 1), got {}", self.lr_factor));
        }
        if self.hidden == 0 {
            return bad("hidden must be >= 1".into());
        }
        if !(self.weight_decay >= 0.0) {
            return bad("weight_decay must be >= 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub lr: f64,
    pub virtual_edges: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub params: ModelParams<T>,
    pub history: Vec<EpochRecord>,
    pub report: MetricsReport,
    /// Final predictions for the real nodes of the input graph.
    pub predictions: PredictionState<T>,
    /// Node count of the operator used for the final predictions.
    pub eval_operator_nodes: usize,
    pub augment_invocations: usize,
    pub augment_time_ms: f64,
}

/// Trains on the graph the baseline produced (the input graph, or the input
/// graph plus synthetic nodes). With augmentation enabled, every
/// `granularity` epochs the current predictions on that graph produce a
/// fresh augmented graph that the following block of epochs trains on.
/// Validation losses and the returned predictions always come from the
/// graph without virtual nodes.
pub fn train<T: Scalar>(g: &Graph<T>, split: &Split, cfg: &TrainConfig) -> Result<TrainOutcome<T>> {
    cfg.validate()?;
    let start = Instant::now();
    let n_real = g.num_nodes();
    let m = g.num_classes();

    let mut class_weights: Option<Vec<T>> = None;
    let extended = match cfg.method.baseline {
        Baseline::Vanilla => None,
        Baseline::Reweight => {
            class_weights = Some(class_reweight(split).into_iter().map(T::of).collect());
            None
        }
        Baseline::Oversample => {
            let aug = oversample(g, split, &mut stream(cfg.seed, Stream::Baseline));
            Some(aug.apply(g, split)?)
        }
        Baseline::Smote => {
            let aug = smote(g, split, cfg.smote_k, &mut stream(cfg.seed, Stream::Baseline))?;
            Some(aug.apply(g, split)?)
        }
    };
    let (tg, ts) = match &extended {
        Some((eg, es)) => (eg, es),
        None => (g, split),
    };

    let mut params =
        ModelParams::glorot(g.num_features(), cfg.hidden, m, &mut stream(cfg.seed, Stream::Init))?;
    let adam = AdamConfig::default();
    let mut scheduler = PlateauScheduler::new(cfg.lr, cfg.lr_factor, cfg.patience);
    let weight_decay = T::of(cfg.weight_decay);
    let weights = class_weights.as_deref();

    let base_op = normalize_adjacency(tg, 0, &[])?;
    let eval = |params: &ModelParams<T>| -> Result<PredictionState<T>> {
        Ok(gcn_forward(params, &base_op, tg.features().view(), None)?.prediction)
    };
    let mut current = eval(&params)?;

    // training graph of the current block: operator, features, labels, mask
    struct Block<T> {
        op: Option<Propagation<T>>,
        x: Option<Array2<T>>,
        y: Option<Vec<usize>>,
        mask: Option<Vec<usize>>,
        edges: usize,
    }
    let mut block = Block::<T> {
        op: None,
        x: None,
        y: None,
        mask: None,
        edges: 0,
    };
    let mut invocations = 0;
    let mut augment_time = 0.0;
    let mut edge_ratio_sum = 0.0;
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        if let Some(similarity) = cfg.method.augment.similarity() {
            if epoch % cfg.granularity == 0 {
                let t0 = Instant::now();
                let opts = AugmentOptions {
                    similarity,
                    zero_risk: cfg.zero_risk,
                };
                let mut rng = epoch_stream(cfg.seed, Stream::VirtualEdges, epoch);
                let aug = augment(tg, &current, ts, opts, &mut rng)?;
                let mut mask = ts.train().to_vec();
                if cfg.virtual_in_loss {
                    mask.extend((0..aug.num_virtual()).map(|j| aug.virtual_index(j)));
                }
                block = Block {
                    op: Some(aug.propagation()?),
                    x: Some(aug.features()),
                    y: Some(aug.labels()),
                    mask: Some(mask),
                    edges: aug.virtual_edges.len(),
                };
                augment_time += t0.elapsed().as_secs_f64() * 1e3;
                invocations += 1;
                edge_ratio_sum += block.edges as f64 / g.num_edges().max(1) as f64;
            }
        }
        let op = block.op.as_ref().unwrap_or(&base_op);
        let x: ArrayView2<T> = block.x.as_ref().map_or(tg.features().view(), |x| x.view());
        let y: &[usize] = block.y.as_deref().unwrap_or(tg.labels());
        let mask: &[usize] = block.mask.as_deref().unwrap_or(ts.train());

        let dropout = (cfg.dropout_p > 0.0).then(|| {
            let mut rng = epoch_stream(cfg.seed, Stream::Dropout, epoch);
            DropoutMask::sample(x.nrows(), cfg.hidden, cfg.dropout_p, &mut rng)
        });
        let fwd = gcn_forward(&params, op, x, dropout.as_ref())?;
        let probs = fwd.prediction.probs();
        let train_loss = masked_cross_entropy(probs, y, mask, weights)?;
        let grad = cross_entropy_grad(probs, y, mask, weights)?;
        let grads = backward(&params, op, x, &fwd.cache, grad.view(), weight_decay)?;
        let lr = scheduler.lr();
        adam_step(&mut params, &grads, lr, &adam);

        current = eval(&params)?;
        let val_loss = if ts.val().is_empty() {
            f64::NAN
        } else {
            masked_cross_entropy(current.probs(), tg.labels(), ts.val(), None)?.as_f64()
        };
        scheduler.step(val_loss);
        history.push(EpochRecord {
            epoch,
            train_loss: train_loss.as_f64(),
            val_loss,
            lr,
            virtual_edges: block.edges,
        });
    }

    let predictions = current.truncate(n_real);
    let mut report = evaluate(predictions.preds(), g.labels(), split.test(), m)?;
    report.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    report.virtual_edge_ratio = if invocations > 0 {
        edge_ratio_sum / invocations as f64
    } else {
        0.0
    };
    Ok(TrainOutcome {
        params,
        history,
        report,
        predictions,
        eval_operator_nodes: base_op.num_nodes(),
        augment_invocations: invocations,
        augment_time_ms: augment_time,
    })
}
