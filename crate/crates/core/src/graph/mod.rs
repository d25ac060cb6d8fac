//! Undirected attributed graphs and the imbalanced splits trained on them.

mod io;
mod normalize;
mod sbm;
mod split;

use ndarray::Array2;

use crate::{Error, Result, Scalar};

pub use io::{load_graph, load_graph_with_split, save_graph, GraphFile};
pub use normalize::{normalize_adjacency, Propagation};
pub use sbm::{generate_sbm, SbmParams};
pub use split::{
    make_natural_imbalance_split, make_step_imbalance_split, natural_train_quota,
    step_train_quota, DEFAULT_VAL_PER_CLASS,
};

/// Undirected, unweighted graph with dense node features and one integer
/// label per node.
///
/// Edges are stored once as `(u, v)` with `u < v`, sorted, without
/// duplicates or self-loops. Labels are in `0..num_classes` and every class
/// owns at least one node.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph<T> {
    num_classes: usize,
    edges: Vec<(usize, usize)>,
    x: Array2<T>,
    y: Vec<usize>,
    neighbors: Vec<Vec<usize>>,
}

impl<T: Scalar> Graph<T> {
    /// Builds a graph, normalizing every edge to `(min, max)` order.
    pub fn new(
        num_classes: usize,
        edges: Vec<(usize, usize)>,
        x: Array2<T>,
        y: Vec<usize>,
    ) -> Result<Self> {
        let n = x.nrows();
        if y.len() != n {
            return Err(Error::InvalidGraph(format!(
                "{} labels for {} feature rows",
                y.len(),
                n
            )));
        }
        if num_classes == 0 {
            return Err(Error::InvalidGraph("zero classes".into()));
        }
        let mut seen = vec![false; num_classes];
        for (i, &label) in y.iter().enumerate() {
            if label >= num_classes {
                return Err(Error::InvalidGraph(format!(
                    "y[{i}] = {label} is outside 0..{num_classes}"
                )));
            }
            seen[label] = true;
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidGraph(format!("class {c} has no nodes")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGraph("non-finite feature value".into()));
        }

        let mut edges: Vec<(usize, usize)> = edges
            .into_iter()
            .map(|(u, v)| if u <= v { (u, v) } else { (v, u) })
            .collect();
        edges.sort_unstable();
        for (k, &(u, v)) in edges.iter().enumerate() {
            if v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) endpoint out of range for {n} nodes"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop ({u}, {u})")));
            }
            if k > 0 && edges[k - 1] == (u, v) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({u}, {v})")));
            }
        }

        let neighbors = adjacency_lists(n, &edges);
        Ok(Graph {
            num_classes,
            edges,
            x,
            y,
            neighbors,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.y.len()
    }

    pub fn num_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn features(&self) -> &Array2<T> {
        &self.x
    }

    pub fn labels(&self) -> &[usize] {
        &self.y
    }

    /// Sorted neighbor indices of `node`.
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.neighbors[node].len()
    }

    /// Number of nodes carrying each label.
    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_classes];
        for &c in &self.y {
            sizes[c] += 1;
        }
        sizes
    }

    /// Node indices grouped by label, each group in ascending order.
    pub fn nodes_by_class(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.num_classes];
        for (i, &c) in self.y.iter().enumerate() {
            groups[c].push(i);
        }
        groups
    }

    /// Converts the feature matrix to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Graph<U> {
        Graph {
            num_classes: self.num_classes,
            edges: self.edges.clone(),
            x: self.x.mapv(|v| U::of(v.as_f64())),
            y: self.y.clone(),
            neighbors: self.neighbors.clone(),
        }
    }
}

fn adjacency_lists(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut lists = vec![Vec::new(); n];
    for &(u, v) in edges {
        lists[u].push(v);
        lists[v].push(u);
    }
    for l in &mut lists {
        l.sort_unstable();
    }
    lists
}

/// Disjoint train / validation / test node sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    train: Vec<usize>,
    val: Vec<usize>,
    test: Vec<usize>,
    train_counts: Vec<usize>,
    max_train_count: usize,
}

impl Split {
    /// Validates the index sets against `labels` and tallies per-class
    /// training counts. Every class needs at least one training node.
    pub fn new(
        labels: &[usize],
        num_classes: usize,
        train: Vec<usize>,
        val: Vec<usize>,
        test: Vec<usize>,
    ) -> Result<Self> {
        let n = labels.len();
        let mut owner = vec![0u8; n];
        for (tag, set, name) in [(1u8, &train, "train"), (2, &val, "val"), (3, &test, "test")] {
            for &i in set.iter() {
                if i >= n {
                    return Err(Error::InvalidSplit(format!(
                        "{name} index {i} out of range for {n} nodes"
                    )));
                }
                if owner[i] != 0 {
                    return Err(Error::InvalidSplit(format!(
                        "node {i} appears twice (second time in {name})"
                    )));
                }
                owner[i] = tag;
            }
        }
        let mut train_counts = vec![0; num_classes];
        for &i in &train {
            let c = labels[i];
            if c >= num_classes {
                return Err(Error::InvalidSplit(format!("label {c} of node {i} out of range")));
            }
            train_counts[c] += 1;
        }
        if let Some(c) = train_counts.iter().position(|&k| k == 0) {
            return Err(Error::InvalidSplit(format!("class {c} has no training node")));
        }
        let max_train_count = train_counts.iter().copied().max().unwrap_or(0);
        Ok(Split {
            train,
            val,
            test,
            train_counts,
            max_train_count,
        })
    }

    pub fn train(&self) -> &[usize] {
        &self.train
    }

    pub fn val(&self) -> &[usize] {
        &self.val
    }

    pub fn test(&self) -> &[usize] {
        &self.test
    }

    pub fn train_counts(&self) -> &[usize] {
        &self.train_counts
    }

    pub fn max_train_count(&self) -> usize {
        self.max_train_count
    }

    pub fn num_classes(&self) -> usize {
        self.train_counts.len()
    }

    /// Same validation/test sets with `extra` appended to the training set.
    pub fn with_extra_train(&self, labels: &[usize], extra: &[usize]) -> Result<Split> {
        let mut train = self.train.clone();
        train.extend_from_slice(extra);
        Split::new(
            labels,
            self.num_classes(),
            train,
            self.val.clone(),
            self.test.clone(),
        )
    }
}
