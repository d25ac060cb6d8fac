use super::{Gradients, ModelParams, Moments};
use crate::Scalar;
use ndarray::{Array2, Zip};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update. Weight decay, if any, is expected to be
/// folded into `grads` already.
pub fn adam_step<T: Scalar>(
    params: &mut ModelParams<T>,
    grads: &Gradients<T>,
    lr: f64,
    cfg: &AdamConfig,
) {
    params.step += 1;
    let t = params.step as i32;
    let c1 = T::of(1.0 - cfg.beta1.powi(t));
    let c2 = T::of(1.0 - cfg.beta2.powi(t));
    let consts = (T::of(cfg.beta1), T::of(cfg.beta2), T::of(cfg.eps), T::of(lr), c1, c2);
    update(&mut params.w1, &mut params.m_w1, &grads.w1, consts);
    update(&mut params.w2, &mut params.m_w2, &grads.w2, consts);
}

fn update<T: Scalar>(
    w: &mut Array2<T>,
    moments: &mut Moments<T>,
    g: &Array2<T>,
    (b1, b2, eps, lr, c1, c2): (T, T, T, T, T, T),
) {
    let one = T::one();
    Zip::from(w)
        .and(&mut moments.first)
        .and(&mut moments.second)
        .and(g)
        .for_each(|w, m, v, &g| {
            *m = b1 * *m + (one - b1) * g;
            *v = b2 * *v + (one - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *w -= lr * m_hat / (v_hat.sqrt() + eps);
        });
}
