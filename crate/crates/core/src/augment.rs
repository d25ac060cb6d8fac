//! Dynamic topological augmentation.
//!
//! Each invocation takes the model's current predictions and
//!
//! 1. scores every node's misclassification risk from its prediction
//!    uncertainty, centred per predicted class and scaled down for classes
//!    with few training labels;
//! 2. distributes that risk over the non-predicted (candidate) classes,
//!    either by the predicted probabilities or by the pseudo-label mix of
//!    the node's neighbours;
//! 3. adds one virtual node per class (mean features of the nodes
//!    currently predicted as that class) and samples undirected edges from
//!    risky nodes to candidate-class virtual nodes.
//!
//! Virtual node `j` gets index `n + j`. Nothing is cached between calls.

use std::fmt;

use ndarray::{concatenate, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::gnn::PredictionState;
use crate::graph::{normalize_adjacency, Graph, Propagation, Split};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityMode {
    Prediction,
    Topology,
}

impl fmt::Display for SimilarityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimilarityMode::Prediction => "prediction",
            SimilarityMode::Topology => "topology",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskVector<T> {
    /// Total-variation uncertainty per node.
    pub u: Vec<T>,
    /// Class-centred, imbalance-scaled uncertainty.
    pub u_star: Vec<T>,
    /// `max(u_star, 0)`.
    pub r: Vec<T>,
    /// Mean uncertainty per predicted class (0 for classes nobody predicts).
    pub mu: Vec<T>,
    /// `max_train_count / train_counts[j]`.
    pub omega: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix<T> {
    pub s: Array2<T>,
    pub mode: SimilarityMode,
}

/// `½ Σ_j |p_ij - 1[j = pred_i]|`, which equals `1 - max_j p_ij`.
pub fn compute_uncertainty<T: Scalar>(pred: &PredictionState<T>) -> Vec<T> {
    let half = T::of(0.5);
    pred.probs()
        .rows()
        .into_iter()
        .zip(pred.preds())
        .map(|(row, &top)| {
            half * row
                .iter()
                .enumerate()
                .map(|(j, &p)| if j == top { (p - T::one()).abs() } else { p.abs() })
                .sum::<T>()
        })
        .collect()
}

pub fn calibrate_risk<T: Scalar>(u: &[T], preds: &[usize], split: &Split) -> Result<RiskVector<T>> {
    if u.len() != preds.len() {
        return Err(Error::Shape(format!("{} scores for {} predictions", u.len(), preds.len())));
    }
    let m = split.num_classes();
    let mut sums = vec![T::zero(); m];
    let mut counts = vec![0usize; m];
    for (&ui, &c) in u.iter().zip(preds) {
        if c >= m {
            return Err(Error::Shape(format!("predicted class {c} out of range")));
        }
        sums[c] += ui;
        counts[c] += 1;
    }
    let mu: Vec<T> = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &k)| if k == 0 { T::zero() } else { s / T::of_usize(k) })
        .collect();
    let max = T::of_usize(split.max_train_count());
    let omega: Vec<T> = split
        .train_counts()
        .iter()
        .map(|&k| max / T::of_usize(k))
        .collect();
    let u_star: Vec<T> = u
        .iter()
        .zip(preds)
        .map(|(&ui, &c)| (ui - mu[c]) / omega[c])
        .collect();
    let r = u_star.iter().map(|&v| v.max(T::zero())).collect();
    Ok(RiskVector {
        u: u.to_vec(),
        u_star,
        r,
        mu,
        omega,
    })
}

/// Candidate-class similarity from the predicted probabilities.
///
/// The normaliser is the probability mass outside the predicted class,
/// summed directly rather than as `1 - p_pred`, so rows stay normalised
/// even when that mass is tiny. Rows with no mass left are all zero.
pub fn similarity_prediction<T: Scalar>(pred: &PredictionState<T>) -> SimilarityMatrix<T> {
    let probs = pred.probs();
    let mut s = Array2::zeros(probs.dim());
    for (i, &top) in pred.preds().iter().enumerate() {
        fill_prediction_row(&mut s, probs, i, top);
    }
    SimilarityMatrix {
        s,
        mode: SimilarityMode::Prediction,
    }
}

fn fill_prediction_row<T: Scalar>(s: &mut Array2<T>, probs: &Array2<T>, i: usize, top: usize) {
    let row = probs.row(i);
    let z: T = row
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != top)
        .map(|(_, &p)| p)
        .sum();
    if z > T::zero() {
        for (j, &p) in row.iter().enumerate() {
            s[[i, j]] = if j == top { T::zero() } else { p / z };
        }
    }
}

/// Candidate-class similarity from the neighbours' predicted labels.
/// Nodes with no neighbour outside their own predicted class fall back to
/// the prediction-based row.
pub fn similarity_topology<T: Scalar>(
    g: &Graph<T>,
    pred: &PredictionState<T>,
) -> Result<SimilarityMatrix<T>> {
    let n = g.num_nodes();
    if pred.num_nodes() != n {
        return Err(Error::Shape(format!("{} predictions for {n} nodes", pred.num_nodes())));
    }
    let m = pred.num_classes();
    let preds = pred.preds();
    let mut s = Array2::zeros((n, m));
    let mut counts = vec![0usize; m];
    for i in 0..n {
        counts.iter_mut().for_each(|c| *c = 0);
        for &k in g.neighbors(i) {
            counts[preds[k]] += 1;
        }
        let top = preds[i];
        let z = g.degree(i) - counts[top];
        if z == 0 {
            fill_prediction_row(&mut s, pred.probs(), i, top);
            continue;
        }
        let z = T::of_usize(z);
        for j in 0..m {
            if j != top {
                s[[i, j]] = T::of_usize(counts[j]) / z;
            }
        }
    }
    Ok(SimilarityMatrix {
        s,
        mode: SimilarityMode::Topology,
    })
}

/// Mean features of the nodes predicted as each class. A class nobody
/// predicts takes the mean of its training nodes instead.
#[allow(clippy::needless_range_loop)]
pub fn build_virtual_nodes<T: Scalar>(
    g: &Graph<T>,
    preds: &[usize],
    split: &Split,
) -> Result<Array2<T>> {
    let (n, d, m) = (g.num_nodes(), g.num_features(), g.num_classes());
    if preds.len() != n {
        return Err(Error::Shape(format!("{} predictions for {n} nodes", preds.len())));
    }
    let x = g.features();
    let mut out = Array2::zeros((m, d));
    let mut counts = vec![0usize; m];
    for (i, &c) in preds.iter().enumerate() {
        out.row_mut(c).scaled_add(T::one(), &x.row(i));
        counts[c] += 1;
    }
    for c in 0..m {
        if counts[c] > 0 {
            continue;
        }
        let members: Vec<usize> = split
            .train()
            .iter()
            .copied()
            .filter(|&i| g.labels()[i] == c)
            .collect();
        for &i in &members {
            out.row_mut(c).scaled_add(T::one(), &x.row(i));
        }
        counts[c] = members.len();
    }
    for (c, mut row) in out.rows_mut().into_iter().enumerate() {
        row /= T::of_usize(counts[c].max(1));
    }
    Ok(out)
}

/// `p[i, j] = r_i · s[i, j]`.
pub fn link_probabilities<T: Scalar>(
    risk: &RiskVector<T>,
    sim: &SimilarityMatrix<T>,
) -> Result<Array2<T>> {
    if risk.r.len() != sim.s.nrows() {
        return Err(Error::Shape(format!(
            "{} risks for {} similarity rows",
            risk.r.len(),
            sim.s.nrows()
        )));
    }
    let mut p = sim.s.clone();
    for (mut row, &r) in p.rows_mut().into_iter().zip(&risk.r) {
        row *= r;
    }
    Ok(p)
}

/// Independent Bernoulli draw for every entry, row-major. Returns
/// `(node, class)` pairs.
pub fn sample_virtual_edges<T: Scalar, R: Rng>(
    link_probs: &Array2<T>,
    rng: &mut R,
) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for ((i, j), &p) in link_probs.indexed_iter() {
        let draw: f64 = rng.random();
        if draw < p.as_f64() {
            edges.push((i, j));
        }
    }
    edges
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AugmentOptions {
    pub similarity: SimilarityMode,
    /// Zero every risk before computing link probabilities. Only useful to
    /// isolate the effect of the virtual nodes themselves.
    pub zero_risk: bool,
}

impl AugmentOptions {
    pub fn new(similarity: SimilarityMode) -> Self {
        AugmentOptions {
            similarity,
            zero_risk: false,
        }
    }
}

/// The input graph plus one virtual node per class and sampled virtual
/// edges.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedGraph<'a, T> {
    pub base: &'a Graph<T>,
    pub virtual_x: Array2<T>,
    pub virtual_labels: Vec<usize>,
    /// `(real node, class)` pairs; the class indexes the virtual node.
    pub virtual_edges: Vec<(usize, usize)>,
    pub link_probs: Array2<T>,
    pub risk: RiskVector<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AugmentStats {
    pub virtual_edges: usize,
    pub mean_risk: f64,
    pub high_risk_nodes: usize,
}

impl<'a, T: Scalar> AugmentedGraph<'a, T> {
    pub fn num_real(&self) -> usize {
        self.base.num_nodes()
    }

    pub fn num_virtual(&self) -> usize {
        self.virtual_labels.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.num_real() + self.num_virtual()
    }

    pub fn virtual_index(&self, class: usize) -> usize {
        self.num_real() + class
    }

    /// Virtual edges as node-index pairs.
    pub fn edge_pairs(&self) -> Vec<(usize, usize)> {
        self.virtual_edges
            .iter()
            .map(|&(i, j)| (i, self.virtual_index(j)))
            .collect()
    }

    pub fn propagation(&self) -> Result<Propagation<T>> {
        normalize_adjacency(self.base, self.num_virtual(), &self.edge_pairs())
    }

    /// Real features followed by the virtual rows.
    pub fn features(&self) -> Array2<T> {
        concatenate![Axis(0), self.base.features().view(), self.virtual_x.view()]
    }

    /// Real labels followed by the virtual pseudo-labels.
    pub fn labels(&self) -> Vec<usize> {
        let mut y = self.base.labels().to_vec();
        y.extend_from_slice(&self.virtual_labels);
        y
    }

    pub fn stats(&self) -> AugmentStats {
        let n = self.risk.r.len().max(1);
        AugmentStats {
            virtual_edges: self.virtual_edges.len(),
            mean_risk: self.risk.r.iter().map(|r| r.as_f64()).sum::<f64>() / n as f64,
            high_risk_nodes: self.risk.r.iter().filter(|&&r| r > T::zero()).count(),
        }
    }
}

pub fn augment<'a, T: Scalar, R: Rng>(
    g: &'a Graph<T>,
    pred: &PredictionState<T>,
    split: &Split,
    opts: AugmentOptions,
    rng: &mut R,
) -> Result<AugmentedGraph<'a, T>> {
    if pred.num_nodes() != g.num_nodes() || pred.num_classes() != g.num_classes() {
        return Err(Error::Shape(format!(
            "prediction state {}x{} for a graph with {} nodes and {} classes",
            pred.num_nodes(),
            pred.num_classes(),
            g.num_nodes(),
            g.num_classes()
        )));
    }
    let u = compute_uncertainty(pred);
    let mut risk = calibrate_risk(&u, pred.preds(), split)?;
    if opts.zero_risk {
        risk.r.iter_mut().for_each(|r| *r = T::zero());
    }
    let sim = match opts.similarity {
        SimilarityMode::Prediction => similarity_prediction(pred),
        SimilarityMode::Topology => similarity_topology(g, pred)?,
    };
    let virtual_x = build_virtual_nodes(g, pred.preds(), split)?;
    let link_probs = link_probabilities(&risk, &sim)?;
    let virtual_edges = sample_virtual_edges(&link_probs, rng);
    Ok(AugmentedGraph {
        base: g,
        virtual_x,
        virtual_labels: (0..g.num_classes()).collect(),
        virtual_edges,
        link_probs,
        risk,
    })
}
