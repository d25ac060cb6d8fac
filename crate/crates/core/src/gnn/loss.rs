use ndarray::Array2;

use crate::{Error, Result, Scalar};

/// Lower clamp applied to probabilities before taking the log.
pub const LOG_CLAMP: f64 = 1e-12;

fn check<T: Scalar>(
    probs: &Array2<T>,
    labels: &[usize],
    mask: &[usize],
    class_weights: Option<&[T]>,
) -> Result<()> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let m = probs.ncols();
    if let Some(w) = class_weights {
        if w.len() != m {
            return Err(Error::Shape(format!("{} class weights for {m} classes", w.len())));
        }
        if w.iter().any(|&v| !(v > T::zero())) {
            return Err(Error::InvalidParameter("class weights must be positive".into()));
        }
    }
    for &i in mask {
        if i >= probs.nrows() || i >= labels.len() {
            return Err(Error::Shape(format!("mask index {i} out of range")));
        }
        if labels[i] >= m {
            return Err(Error::Shape(format!("label {} of node {i} out of range", labels[i])));
        }
    }
    Ok(())
}

/// `(1/|mask|) Σ w[y_i] · -ln(max(p[i, y_i], ε))`.
pub fn masked_cross_entropy<T: Scalar>(
    probs: &Array2<T>,
    labels: &[usize],
    mask: &[usize],
    class_weights: Option<&[T]>,
) -> Result<T> {
    check(probs, labels, mask, class_weights)?;
    let eps = T::of(LOG_CLAMP);
    let total: T = mask
        .iter()
        .map(|&i| {
            let y = labels[i];
            let w = class_weights.map_or(T::one(), |w| w[y]);
            -w * probs[[i, y]].max(eps).ln()
        })
        .sum();
    Ok(total / T::of_usize(mask.len()))
}

/// Gradient of the masked cross-entropy with respect to the logits that
/// produced `probs` through a row softmax: `w[y_i] (p_i - e_{y_i}) / |mask|`.
///
/// This is the exact log-softmax gradient; the clamp only guards the
/// reported loss value.
pub fn cross_entropy_grad<T: Scalar>(
    probs: &Array2<T>,
    labels: &[usize],
    mask: &[usize],
    class_weights: Option<&[T]>,
) -> Result<Array2<T>> {
    check(probs, labels, mask, class_weights)?;
    let scale = T::one() / T::of_usize(mask.len());
    let mut grad = Array2::zeros(probs.dim());
    for &i in mask {
        let y = labels[i];
        let w = class_weights.map_or(T::one(), |w| w[y]) * scale;
        let mut row = grad.row_mut(i);
        for (g, &p) in row.iter_mut().zip(probs.row(i).iter()) {
            *g += w * p;
        }
        row[y] -= w;
    }
    Ok(grad)
}
