use ndarray::{Array2, ArrayView2};

use super::Graph;
use crate::{Error, Result, Scalar};

/// Symmetric normalized adjacency with self-loops, `D^-1/2 (A + I) D^-1/2`,
/// stored as CSR with ascending column order in each row.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagation<T> {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Scalar> Propagation<T> {
    pub fn num_nodes(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    /// `self · h`. Each output row sums its entries in column order.
    pub fn apply(&self, h: ArrayView2<T>) -> Result<Array2<T>> {
        let n = self.num_nodes();
        if h.nrows() != n {
            return Err(Error::Shape(format!(
                "propagation over {n} nodes applied to {} rows",
                h.nrows()
            )));
        }
        let mut out = Array2::zeros((n, h.ncols()));
        for i in 0..n {
            let mut orow = out.row_mut(i);
            for (j, a) in self.row(i) {
                for (o, &v) in orow.iter_mut().zip(h.row(j).iter()) {
                    *o += a * v;
                }
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> Array2<T> {
        let n = self.num_nodes();
        let mut out = Array2::zeros((n, n));
        for i in 0..n {
            for (j, a) in self.row(i) {
                out[[i, j]] = a;
            }
        }
        out
    }
}

/// Normalizes `g` extended by `extra_nodes` featureless nodes (indices
/// `n..n + extra_nodes`) and the undirected `extra_edges`.
pub fn normalize_adjacency<T: Scalar>(
    g: &Graph<T>,
    extra_nodes: usize,
    extra_edges: &[(usize, usize)],
) -> Result<Propagation<T>> {
    let n = g.num_nodes();
    let total = n + extra_nodes;
    let mut lists: Vec<Vec<usize>> = (0..n).map(|i| g.neighbors(i).to_vec()).collect();
    lists.resize(total, Vec::new());
    for &(u, v) in extra_edges {
        if u >= total || v >= total {
            return Err(Error::InvalidGraph(format!(
                "extra edge ({u}, {v}) out of range for {total} nodes"
            )));
        }
        if u == v {
            return Err(Error::InvalidGraph(format!("extra edge ({u}, {v}) is a self-loop")));
        }
        lists[u].push(v);
        lists[v].push(u);
    }

    // degree includes the self-loop
    let degree: Vec<T> = lists.iter().map(|l| T::of_usize(l.len() + 1)).collect();

    let mut row_ptr = Vec::with_capacity(total + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    for (i, list) in lists.iter_mut().enumerate() {
        list.push(i);
        list.sort_unstable();
        if list.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!("node {i} has a repeated neighbor")));
        }
        for &j in list.iter() {
            cols.push(j);
            vals.push(T::one() / (degree[i] * degree[j]).sqrt());
        }
        row_ptr.push(cols.len());
    }
    Ok(Propagation {
        row_ptr,
        cols,
        vals,
    })
}
