//! Classical class-imbalance baselines.
//!
//! Oversampling and SMOTE synthesize minority training nodes once, before
//! training. Each synthetic node copies the edges of the real node it was
//! derived from (its seed) so that it takes part in message passing.

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::graph::{Graph, Split};
use crate::{Error, Result, Scalar};

/// Inverse class frequency, normalized so that the training-set average
/// weight is one: `w_j = Σ_k n_k / (m · n_j)`.
pub fn class_reweight(split: &Split) -> Vec<f64> {
    let counts = split.train_counts();
    let total: usize = counts.iter().sum();
    let m = counts.len() as f64;
    counts
        .iter()
        .map(|&c| total as f64 / (m * c as f64))
        .collect()
}

/// Synthetic training nodes appended after the `n` real nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineAugmentation<T> {
    pub features: Array2<T>,
    pub labels: Vec<usize>,
    /// Real node each synthetic node was derived from.
    pub seeds: Vec<usize>,
    /// Edges between real nodes and synthetic node indices (`n + k`).
    pub new_edges: Vec<(usize, usize)>,
    /// Training set including the synthetic nodes.
    pub extended_train: Vec<usize>,
}

impl<T: Scalar> BaselineAugmentation<T> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// The real graph with the synthetic nodes and edges appended, and the
    /// split whose training set covers them.
    pub fn apply(&self, g: &Graph<T>, split: &Split) -> Result<(Graph<T>, Split)> {
        let x = ndarray::concatenate![ndarray::Axis(0), g.features().view(), self.features.view()];
        let mut y = g.labels().to_vec();
        y.extend_from_slice(&self.labels);
        let mut edges = g.edges().to_vec();
        edges.extend_from_slice(&self.new_edges);
        let extended = Graph::new(g.num_classes(), edges, x, y)?;
        let split = Split::new(
            extended.labels(),
            g.num_classes(),
            self.extended_train.clone(),
            split.val().to_vec(),
            split.test().to_vec(),
        )?;
        Ok((extended, split))
    }
}

fn training_nodes_by_class<T: Scalar>(g: &Graph<T>, split: &Split) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); g.num_classes()];
    for &i in split.train() {
        groups[g.labels()[i]].push(i);
    }
    groups
}

/// Tops every class up to the largest training count; `make` returns the
/// seed and features of one synthetic node of `class`.
fn synthesize<T: Scalar>(
    g: &Graph<T>,
    split: &Split,
    mut make: impl FnMut(usize, &[usize]) -> (usize, Array1<T>),
) -> BaselineAugmentation<T> {
    let n = g.num_nodes();
    let groups = training_nodes_by_class(g, split);
    let target = split.max_train_count();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut seeds = Vec::new();
    let mut new_edges = Vec::new();
    for (class, members) in groups.iter().enumerate() {
        for _ in members.len()..target {
            let (seed, feat) = make(class, members);
            let idx = n + labels.len();
            new_edges.extend(g.neighbors(seed).iter().map(|&k| (k, idx)));
            rows.push(feat);
            labels.push(class);
            seeds.push(seed);
        }
    }
    let d = g.num_features();
    let mut features = Array2::zeros((rows.len(), d));
    for (mut dst, src) in features.rows_mut().into_iter().zip(&rows) {
        dst.assign(src);
    }
    let mut extended_train = split.train().to_vec();
    extended_train.extend(n..n + labels.len());
    BaselineAugmentation {
        features,
        labels,
        seeds,
        new_edges,
        extended_train,
    }
}

/// Replication oversampling: seeds drawn uniformly with replacement from
/// the class's training nodes.
pub fn oversample<T: Scalar, R: Rng>(
    g: &Graph<T>,
    split: &Split,
    rng: &mut R,
) -> BaselineAugmentation<T> {
    synthesize(g, split, |_, members| {
        let seed = members[rng.random_range(0..members.len())];
        (seed, g.features().row(seed).to_owned())
    })
}

/// `seed + delta · (neighbor - seed)`.
pub fn smote_interpolate<T: Scalar>(seed: &[T], neighbor: &[T], delta: T) -> Array1<T> {
    seed.iter()
        .zip(neighbor)
        .map(|(&s, &nb)| s + delta * (nb - s))
        .collect()
}

/// The `k` same-class training nodes closest to `seed` in feature space
/// (Euclidean, ties by index), excluding the seed itself.
pub fn nearest_same_class<T: Scalar>(
    g: &Graph<T>,
    members: &[usize],
    seed: usize,
    k: usize,
) -> Vec<usize> {
    let x = g.features();
    let mut scored: Vec<(T, usize)> = members
        .iter()
        .copied()
        .filter(|&j| j != seed)
        .map(|j| {
            let dist: T = x
                .row(seed)
                .iter()
                .zip(x.row(j).iter())
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum();
            (dist, j)
        })
        .collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    scored.into_iter().take(k).map(|(_, j)| j).collect()
}

/// SMOTE in input-feature space. Classes with a single training node fall
/// back to replicating it.
pub fn smote<T: Scalar, R: Rng>(
    g: &Graph<T>,
    split: &Split,
    k: usize,
    rng: &mut R,
) -> Result<BaselineAugmentation<T>> {
    if k == 0 {
        return Err(Error::InvalidParameter("smote needs k >= 1".into()));
    }
    Ok(synthesize(g, split, |_, members| {
        let seed = members[rng.random_range(0..members.len())];
        let x = g.features();
        let near = nearest_same_class(g, members, seed, k);
        if near.is_empty() {
            return (seed, x.row(seed).to_owned());
        }
        let nb = near[rng.random_range(0..near.len())];
        let delta = T::of(rng.random::<f64>());
        let seed_x = x.row(seed).to_vec();
        let nb_x = x.row(nb).to_vec();
        (seed, smote_interpolate(&seed_x, &nb_x, delta))
    }))
}
