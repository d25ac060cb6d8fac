//! JSON graph file.
//!
//! ```text
//! {
//!   "n": 3, "d": 2, "m": 2,
//!   "edges": [[0,1],[1,2]],
//!   "x": [[0.5,1.0],[0.25,0.0],[1.0,1.0]],
//!   "y": [0,0,1],
//!   "train": [0,2], "val": [1], "test": []
//! }
//! ```
//!
//! `edges` holds each undirected edge once as `[u, v]` with `u < v`.
//! Features are written rounded to 9 significant digits. `train`, `val`
//! and `test` are optional; unknown fields are rejected.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Graph, Split};
use crate::{Error, Result, Scalar};

const SIGNIFICANT_DIGITS: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub edges: Vec<[usize; 2]>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub val: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<Vec<usize>>,
}

pub(crate) fn round_to_storage(v: f64) -> f64 {
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v)
        .parse()
        .expect("formatted float parses")
}

impl GraphFile {
    pub fn from_graph<T: Scalar>(g: &Graph<T>, split: Option<&Split>) -> Self {
        GraphFile {
            n: g.num_nodes(),
            d: g.num_features(),
            m: g.num_classes(),
            edges: g.edges().iter().map(|&(u, v)| [u, v]).collect(),
            x: g
                .features()
                .rows()
                .into_iter()
                .map(|r| r.iter().map(|v| round_to_storage(v.as_f64())).collect())
                .collect(),
            y: g.labels().to_vec(),
            train: split.map(|s| s.train().to_vec()),
            val: split.map(|s| s.val().to_vec()),
            test: split.map(|s| s.test().to_vec()),
        }
    }

    /// Checks every field and builds the graph (and split, when `train` is
    /// present).
    pub fn into_graph(self) -> Result<(Graph<f64>, Option<Split>)> {
        let GraphFile {
            n,
            d,
            m,
            edges,
            x,
            y,
            train,
            val,
            test,
        } = self;
        let bad = |msg: String| Error::InvalidGraph(msg);
        if x.len() != n {
            return Err(bad(format!("x: expected {n} rows, found {}", x.len())));
        }
        if y.len() != n {
            return Err(bad(format!("y: expected {n} labels, found {}", y.len())));
        }
        let mut flat = Vec::with_capacity(n * d);
        for (i, row) in x.iter().enumerate() {
            if row.len() != d {
                return Err(bad(format!("x[{i}]: expected {d} values, found {}", row.len())));
            }
            flat.extend_from_slice(row);
        }
        for (i, &label) in y.iter().enumerate() {
            if label >= m {
                return Err(bad(format!("y[{i}]: label {label} out of range 0..{m}")));
            }
        }
        let mut pairs = Vec::with_capacity(edges.len());
        for (k, &[u, v]) in edges.iter().enumerate() {
            if u == v {
                return Err(bad(format!("edges[{k}]: self-loop [{u},{v}]")));
            }
            if u > v {
                return Err(bad(format!("edges[{k}]: expected u < v, found [{u},{v}]")));
            }
            if v >= n {
                return Err(bad(format!("edges[{k}]: endpoint {v} out of range 0..{n}")));
            }
            pairs.push((u, v));
        }
        let mut sorted = pairs.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(bad(format!("edges: duplicate edge [{},{}]", w[0].0, w[0].1)));
        }

        let x = Array2::from_shape_vec((n, d), flat).map_err(|e| Error::Shape(e.to_string()))?;
        let g = Graph::new(m, pairs, x, y)?;
        let split = match train {
            Some(train) => Some(Split::new(
                g.labels(),
                m,
                train,
                val.unwrap_or_default(),
                test.unwrap_or_default(),
            )?),
            None => {
                if val.is_some() || test.is_some() {
                    return Err(bad("val/test given without train".into()));
                }
                None
            }
        };
        Ok((g, split))
    }

    pub fn to_json(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{{");
        let _ = writeln!(out, "  \"n\": {}, \"d\": {}, \"m\": {},", self.n, self.d, self.m);
        let _ = writeln!(out, "  \"edges\": {},", js(&self.edges));
        let _ = writeln!(out, "  \"x\": [");
        for (i, row) in self.x.iter().enumerate() {
            let sep = if i + 1 < self.x.len() { "," } else { "" };
            let _ = writeln!(out, "    {}{sep}", js(row));
        }
        let _ = write!(out, "  ],\n  \"y\": {}", js(&self.y));
        for (name, field) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            if let Some(ids) = field {
                let _ = write!(out, ",\n  \"{name}\": {}", js(ids));
            }
        }
        out.push_str("\n}\n");
        out
    }
}

fn js<S: Serialize + ?Sized>(v: &S) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<Graph<f64>> {
    load_graph_with_split(path).map(|(g, _)| g)
}

pub fn load_graph_with_split(path: impl AsRef<Path>) -> Result<(Graph<f64>, Option<Split>)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: GraphFile = serde_json::from_str(&text).map_err(|source| Error::Parse {
        context: path.display().to_string(),
        source,
    })?;
    file.into_graph().map_err(|e| match e {
        Error::InvalidGraph(msg) => Error::InvalidGraph(format!("{}: {msg}", path.display())),
        Error::InvalidSplit(msg) => Error::InvalidSplit(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn save_graph<T: Scalar>(
    path: impl AsRef<Path>,
    g: &Graph<T>,
    split: Option<&Split>,
) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, GraphFile::from_graph(g, split).to_json()).map_err(|e| Error::io(path, e))
}
