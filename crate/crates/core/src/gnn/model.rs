//! Two-layer GCN: `logits = Â · dropout(relu(Â · X · W1)) · W2`.

use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::Uniform;

use super::PredictionState;
use crate::graph::Propagation;
use crate::linalg::{matmul, matmul_nt, matmul_tn};
use crate::{Error, Result, Scalar};

/// First and second Adam moments for one weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments<T> {
    pub first: Array2<T>,
    pub second: Array2<T>,
}

impl<T: Scalar> Moments<T> {
    fn zeros(shape: (usize, usize)) -> Self {
        Moments {
            first: Array2::zeros(shape),
            second: Array2::zeros(shape),
        }
    }
}

/// GCN weights (no biases) together with their optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub w1: Array2<T>,
    pub w2: Array2<T>,
    pub m_w1: Moments<T>,
    pub m_w2: Moments<T>,
    pub step: u64,
}

impl<T: Scalar> ModelParams<T> {
    pub fn from_weights(w1: Array2<T>, w2: Array2<T>) -> Result<Self> {
        if w1.ncols() != w2.nrows() {
            return Err(Error::Shape(format!(
                "hidden width mismatch: W1 {:?}, W2 {:?}",
                w1.dim(),
                w2.dim()
            )));
        }
        Ok(ModelParams {
            m_w1: Moments::zeros(w1.dim()),
            m_w2: Moments::zeros(w2.dim()),
            w1,
            w2,
            step: 0,
        })
    }

    /// Glorot-uniform initialization, bounds `±sqrt(6 / (fan_in + fan_out))`.
    pub fn glorot<R: Rng>(
        in_dim: usize,
        hidden: usize,
        num_classes: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut layer = |rows: usize, cols: usize| -> Result<Array2<T>> {
            let bound = (6.0 / (rows + cols) as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound)
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            Ok(Array2::from_shape_fn((rows, cols), |_| T::of(rng.sample(dist))))
        };
        let w1 = layer(in_dim, hidden)?;
        let w2 = layer(hidden, num_classes)?;
        Self::from_weights(w1, w2)
    }

    pub fn in_dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.w1.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.w2.ncols()
    }

    pub fn squared_norm(&self) -> T {
        self.w1.iter().chain(self.w2.iter()).map(|&w| w * w).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.w1.iter().chain(self.w2.iter()).all(|w| w.is_finite())
    }
}

/// Inverted-dropout mask on the hidden layer: entries are `0` or `1 / keep`.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask<T>(pub Array2<T>);

impl<T: Scalar> DropoutMask<T> {
    /// Draws row-major, so the first `k` rows of a taller mask equal a
    /// `k`-row mask drawn from the same generator state.
    pub fn sample<R: Rng>(rows: usize, cols: usize, p: f64, rng: &mut R) -> Self {
        let scale = T::of(1.0 / (1.0 - p));
        DropoutMask(Array2::from_shape_fn((rows, cols), |_| {
            if rng.random::<f64>() < p {
                T::zero()
            } else {
                scale
            }
        }))
    }
}

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    /// `Â · X · W1` before the ReLU.
    pub pre_activation: Array2<T>,
    /// Hidden representation after ReLU and dropout.
    pub hidden: Array2<T>,
    pub mask: Option<Array2<T>>,
}

#[derive(Debug, Clone)]
pub struct Forward<T> {
    pub logits: Array2<T>,
    pub prediction: PredictionState<T>,
    pub cache: ForwardCache<T>,
}

pub fn gcn_forward<T: Scalar>(
    params: &ModelParams<T>,
    op: &Propagation<T>,
    x: ArrayView2<T>,
    dropout: Option<&DropoutMask<T>>,
) -> Result<Forward<T>> {
    if x.ncols() != params.in_dim() {
        return Err(Error::Shape(format!(
            "features have {} columns, model expects {}",
            x.ncols(),
            params.in_dim()
        )));
    }
    let xw = matmul(x, params.w1.view())?;
    let pre_activation = op.apply(xw.view())?;
    let mut hidden = pre_activation.mapv(|v| if v > T::zero() { v } else { T::zero() });
    if let Some(DropoutMask(mask)) = dropout {
        if mask.dim() != hidden.dim() {
            return Err(Error::Shape(format!(
                "dropout mask {:?} vs hidden {:?}",
                mask.dim(),
                hidden.dim()
            )));
        }
        hidden *= mask;
    }
    let hw = matmul(hidden.view(), params.w2.view())?;
    let logits = op.apply(hw.view())?;
    let prediction = PredictionState::from_probs(softmax_rows(logits.view()))?;
    Ok(Forward {
        logits,
        prediction,
        cache: ForwardCache {
            pre_activation,
            hidden,
            mask: dropout.map(|m| m.0.clone()),
        },
    })
}

pub fn softmax_rows<T: Scalar>(logits: ArrayView2<T>) -> Array2<T> {
    let mut out = logits.to_owned();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        row.mapv_inplace(|v| (v - max).exp());
        let total: T = row.iter().copied().sum();
        row.mapv_inplace(|v| v / total);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub w1: Array2<T>,
    pub w2: Array2<T>,
}

/// Gradients of `loss + weight_decay / 2 · ‖Θ‖²` given `d loss / d logits`.
pub fn backward<T: Scalar>(
    params: &ModelParams<T>,
    op: &Propagation<T>,
    x: ArrayView2<T>,
    cache: &ForwardCache<T>,
    logit_grad: ArrayView2<T>,
    weight_decay: T,
) -> Result<Gradients<T>> {
    // Â is symmetric, so Âᵀ · G = Â · G.
    let d_hw = op.apply(logit_grad)?;
    let mut w2 = matmul_tn(cache.hidden.view(), d_hw.view())?;
    w2.scaled_add(weight_decay, &params.w2);

    let mut d_hidden = matmul_nt(d_hw.view(), params.w2.view())?;
    if let Some(mask) = &cache.mask {
        d_hidden *= mask;
    }
    ndarray::Zip::from(&mut d_hidden)
        .and(&cache.pre_activation)
        .for_each(|g, &z| {
            if z <= T::zero() {
                *g = T::zero();
            }
        });
    let d_xw = op.apply(d_hidden.view())?;
    let mut w1 = matmul_tn(x, d_xw.view())?;
    w1.scaled_add(weight_decay, &params.w1);
    Ok(Gradients { w1, w2 })
}
