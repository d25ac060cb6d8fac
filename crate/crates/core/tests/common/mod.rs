#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toba_core::graph::SbmParams;
use toba_core::Graph;

/// Random labelled graph where every class owns at least one node.
pub fn random_graph(n: usize, m: usize, d: usize, p_edge: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p_edge {
                edges.push((u, v));
            }
        }
    }
    let x = Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0));
    let y: Vec<usize> = (0..n)
        .map(|i| if i < m { i } else { rng.random_range(0..m) })
        .collect();
    Graph::new(m, edges, x, y).unwrap()
}

/// Dense `D^-1/2 (A + I) D^-1/2` computed from scratch.
pub fn dense_normalized(n: usize, edges: &[(usize, usize)]) -> Array2<f64> {
    let mut a = Array2::<f64>::eye(n);
    for &(u, v) in edges {
        a[[u, v]] = 1.0;
        a[[v, u]] = 1.0;
    }
    let deg: Vec<f64> = a.rows().into_iter().map(|r| r.sum()).collect();
    Array2::from_shape_fn((n, n), |(i, j)| a[[i, j]] / (deg[i].sqrt() * deg[j].sqrt()))
}

pub fn naive_matmul(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    assert_eq!(a.ncols(), b.nrows());
    Array2::from_shape_fn((a.nrows(), b.ncols()), |(i, j)| {
        (0..a.ncols()).map(|k| a[[i, k]] * b[[k, j]]).sum()
    })
}

pub fn acceptance_sbm() -> SbmParams {
    SbmParams {
        block_sizes: vec![100, 100, 100],
        p_intra: 0.05,
        p_inter: 0.005,
        d: 16,
        feature_shift: 0.7,
        noise_sigma: 1.0,
    }
}
