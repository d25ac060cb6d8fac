use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::rng::{stream, Stream};
use crate::{Error, Result};

/// Stochastic block model with Gaussian class-conditional features.
///
/// Block `b` holds nodes labelled `b`. Its feature mean is `feature_shift`
/// along axis `b mod d` and zero elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SbmParams {
    pub block_sizes: Vec<usize>,
    pub p_intra: f64,
    pub p_inter: f64,
    pub d: usize,
    pub feature_shift: f64,
    pub noise_sigma: f64,
}

impl SbmParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(format!("sbm: {m}")));
        if self.block_sizes.is_empty() || self.block_sizes.contains(&0) {
            return bad("every block needs at least one node");
        }
        if !(0.0..=1.0).contains(&self.p_intra) || !(0.0..=1.0).contains(&self.p_inter) {
            return bad("probabilities must lie in [0, 1]");
        }
        if self.p_inter > self.p_intra {
            return bad("p_inter must not exceed p_intra");
        }
        if self.d == 0 {
            return bad("feature dimension must be positive");
        }
        if !(self.noise_sigma >= 0.0) || !self.feature_shift.is_finite() {
            return bad("noise_sigma must be non-negative and feature_shift finite");
        }
        Ok(())
    }
}

/// Samples an SBM graph. Deterministic in `seed`.
pub fn generate_sbm(params: &SbmParams, seed: u64) -> Result<Graph<f64>> {
    params.validate()?;
    let mut rng = stream(seed, Stream::Graph);
    let y: Vec<usize> = params
        .block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
        .collect();
    let n = y.len();

    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if y[u] == y[v] {
                params.p_intra
            } else {
                params.p_inter
            };
            if p > 0.0 && rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }

    let noise = Normal::new(0.0, params.noise_sigma)
        .map_err(|e| Error::InvalidParameter(format!("sbm noise: {e}")))?;
    let mut x = Array2::zeros((n, params.d));
    for (i, mut row) in x.rows_mut().into_iter().enumerate() {
        for v in row.iter_mut() {
            *v = noise.sample(&mut rng);
        }
        row[y[i] % params.d] += params.feature_shift;
    }

    Graph::new(params.block_sizes.len(), edges, x, y)
}
