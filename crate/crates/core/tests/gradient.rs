mod common;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use toba_core::gnn::{
    backward, cross_entropy_grad, gcn_forward, masked_cross_entropy, DropoutMask,
};
use toba_core::graph::normalize_adjacency;
use toba_core::{Graph, ModelParams, Propagation};

const WD: f64 = 5e-4;
const H: f64 = 1e-5;

fn objective(
    p: &ModelParams,
    op: &Propagation,
    g: &Graph,
    mask: &[usize],
    drop: Option<&DropoutMask<f64>>,
    w: &[f64],
) -> f64 {
    let f = gcn_forward(p, op, g.features().view(), drop).unwrap();
    masked_cross_entropy(f.prediction.probs(), g.labels(), mask, Some(w)).unwrap()
        + 0.5 * WD * p.squared_norm()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-7)
}

fn check_graph(seed: u64, with_dropout: bool) -> f64 {
    let g = common::random_graph(6, 3, 4, 0.4, seed);
    let op = normalize_adjacency(&g, 0, &[]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
    let p = ModelParams::glorot(4, 5, 3, &mut rng).unwrap();
    let drop = with_dropout.then(|| DropoutMask::sample(6, 5, 0.3, &mut rng));
    let mask = [0usize, 1, 2, 4];
    let w = [1.0, 2.0, 0.5];

    let f = gcn_forward(&p, &op, g.features().view(), drop.as_ref()).unwrap();
    let dl = cross_entropy_grad(f.prediction.probs(), g.labels(), &mask, Some(&w)).unwrap();
    let grads = backward(&p, &op, g.features().view(), &f.cache, dl.view(), WD).unwrap();

    let mut worst = 0.0f64;
    for layer in 0..2 {
        let analytic: &Array2<f64> = if layer == 0 { &grads.w1 } else { &grads.w2 };
        for idx in ndarray::indices(analytic.dim()) {
            let mut plus = p.clone();
            let mut minus = p.clone();
            if layer == 0 {
                plus.w1[idx] += H;
                minus.w1[idx] -= H;
            } else {
                plus.w2[idx] += H;
                minus.w2[idx] -= H;
            }
            let numeric = (objective(&plus, &op, &g, &mask, drop.as_ref(), &w)
                - objective(&minus, &op, &g, &mask, drop.as_ref(), &w))
                / (2.0 * H);
            worst = worst.max(rel_err(analytic[idx], numeric));
        }
    }
    worst
}

#[test]
fn analytic_gradients_match_central_differences() {
    for seed in [1, 2, 3] {
        for dropout in [false, true] {
            let err = check_graph(seed, dropout);
            assert!(err < 1e-4, "seed {seed} dropout {dropout}: max rel err {err:e}");
        }
    }
}
