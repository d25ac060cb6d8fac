#![allow(clippy::needless_range_loop)]

mod common;

use ndarray::Array2;
use proptest::prelude::*;
use toba_core::augment::{
    calibrate_risk, compute_uncertainty, link_probabilities, similarity_prediction,
    similarity_topology,
};
use toba_core::gnn::softmax_rows;
use toba_core::graph::{
    make_natural_imbalance_split, make_step_imbalance_split, natural_train_quota,
    step_train_quota,
};
use toba_core::{Graph, PredictionState, Split};

fn state_from_logits(n: usize, m: usize, logits: &[f64]) -> PredictionState {
    let l = Array2::from_shape_vec((n, m), logits.to_vec()).unwrap();
    PredictionState::from_probs(softmax_rows(l.view())).unwrap()
}

/// `n` nodes, `m` classes and logits; the first `m` nodes cover every class.
fn case() -> impl Strategy<Value = (usize, usize, Vec<f64>, Vec<usize>, u64)> {
    (2usize..6, 0usize..30).prop_flat_map(|(m, extra)| {
        let n = m + extra;
        (
            Just(n),
            Just(m),
            prop::collection::vec(-6.0f64..6.0, n * m),
            prop::collection::vec(1usize..25, m),
            any::<u64>(),
        )
    })
}

/// Every node is a training node; class sizes follow `counts`.
fn split_with_counts(counts: &[usize]) -> (Vec<usize>, Split) {
    let labels: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(c, &k)| std::iter::repeat_n(c, k))
        .collect();
    let split = Split::new(&labels, counts.len(), (0..labels.len()).collect(), vec![], vec![]).unwrap();
    (labels, split)
}

proptest! {
    #[test]
    fn uncertainty_is_one_minus_max(rows in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 4), 1..50)) {
        let n = rows.len();
        let pred = state_from_logits(n, 4, &rows.concat());
        let u = compute_uncertainty(&pred);
        for (i, row) in pred.probs().rows().into_iter().enumerate() {
            let max = row.iter().copied().fold(f64::MIN, f64::max);
            prop_assert!((u[i] - (1.0 - max)).abs() < 1e-12);
        }
    }

    #[test]
    fn similarity_rows_are_distributions((n, m, logits, _c, seed) in case()) {
        let pred = state_from_logits(n, m, &logits);
        let g = common::random_graph(n, m, 1, 0.3, seed);
        for sim in [similarity_prediction(&pred), similarity_topology(&g, &pred).unwrap()] {
            for (i, row) in sim.s.rows().into_iter().enumerate() {
                prop_assert_eq!(row[pred.preds()[i]], 0.0);
                prop_assert!(row.iter().all(|&v| v >= 0.0));
                let s = row.sum();
                prop_assert!((s - 1.0).abs() < 1e-9 || s == 0.0, "row {} sums to {}", i, s);
            }
        }
    }

    #[test]
    fn link_rows_sum_to_risk((n, m, logits, counts, seed) in case()) {
        let pred = state_from_logits(n, m, &logits);
        let (_, split) = split_with_counts(&counts);
        let risk = calibrate_risk(&compute_uncertainty(&pred), pred.preds(), &split).unwrap();
        let g = common::random_graph(n, m, 1, 0.3, seed);
        for sim in [similarity_prediction(&pred), similarity_topology(&g, &pred).unwrap()] {
            let p = link_probabilities(&risk, &sim).unwrap();
            for (i, row) in p.rows().into_iter().enumerate() {
                if sim.s.row(i).sum() > 0.0 {
                    prop_assert!((row.sum() - risk.r[i]).abs() < 1e-9);
                }
                prop_assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
            }
        }
    }

    #[test]
    fn omega_is_anti_monotone_in_train_counts(counts in prop::collection::vec(1usize..40, 2..8)) {
        let (_, split) = split_with_counts(&counts);
        let u = vec![0.0; counts.len()];
        let risk = calibrate_risk(&u, &vec![0; counts.len()], &split).unwrap();
        for a in 0..counts.len() {
            for b in 0..counts.len() {
                if counts[a] > counts[b] {
                    prop_assert!(risk.omega[a] < risk.omega[b]);
                }
            }
        }
        let largest = counts.iter().position(|&c| c == *counts.iter().max().unwrap()).unwrap();
        prop_assert_eq!(risk.omega[largest], 1.0);
    }

    #[test]
    fn every_predicted_group_has_a_zero_risk_node((n, m, logits, counts, _seed) in case()) {
        let pred = state_from_logits(n, m, &logits);
        let (_, split) = split_with_counts(&counts);
        let risk = calibrate_risk(&compute_uncertainty(&pred), pred.preds(), &split).unwrap();
        for c in 0..m {
            let group: Vec<usize> = (0..n).filter(|&i| pred.preds()[i] == c).collect();
            if !group.is_empty() {
                prop_assert!(group.iter().any(|&i| risk.r[i] == 0.0));
            }
        }
        prop_assert!(risk.r.iter().all(|&r| r >= 0.0));
    }

    #[test]
    fn risk_and_similarity_are_permutation_equivariant(
        (n, m, logits, counts, seed) in case(),
        perm_seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        // node i of the permuted graph is node perm[i] of the original
        let mut inv = vec![0; n];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }

        let g = common::random_graph(n, m, 2, 0.3, seed);
        let pred = state_from_logits(n, m, &logits);
        let (_, split) = split_with_counts(&counts);

        let pl: Vec<f64> = perm.iter().flat_map(|&p| logits[p * m..(p + 1) * m].to_vec()).collect();
        let ppred = state_from_logits(n, m, &pl);
        let pg = Graph::new(
            m,
            g.edges().iter().map(|&(u, v)| (inv[u], inv[v])).collect(),
            g.features().select(ndarray::Axis(0), &perm),
            perm.iter().map(|&p| g.labels()[p]).collect(),
        ).unwrap();

        let r = calibrate_risk(&compute_uncertainty(&pred), pred.preds(), &split).unwrap();
        let pr = calibrate_risk(&compute_uncertainty(&ppred), ppred.preds(), &split).unwrap();
        let st = similarity_topology(&g, &pred).unwrap();
        let pst = similarity_topology(&pg, &ppred).unwrap();
        for i in 0..n {
            prop_assert!((pr.r[i] - r.r[perm[i]]).abs() < 1e-12);
            for j in 0..m {
                prop_assert!((pst.s[[i, j]] - st.s[[perm[i], j]]).abs() < 1e-12);
            }
        }
    }
}

fn blocks(m: usize, per_class: usize) -> Graph {
    let y: Vec<usize> = (0..m * per_class).map(|i| i / per_class).collect();
    Graph::new(m, vec![], Array2::zeros((y.len(), 1)), y).unwrap()
}

#[test]
fn splits_follow_quotas_across_the_sweep() {
    for m in 2..=10 {
        let g = blocks(m, 140);
        for ir in [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0] {
            let step = step_train_quota(m, 20, ir).unwrap();
            let minority = (20.0 / ir).round().max(1.0) as usize;
            for (c, &q) in step.iter().enumerate() {
                let want = if c >= m - m / 2 { minority } else { 20 };
                assert_eq!(q, want, "m={m} ir={ir} class {c}");
            }
            let natural = natural_train_quota(m, ir).unwrap();
            assert_eq!(natural[0], ir as usize);
            assert_eq!(natural[m - 1], 1);
            assert!(natural.windows(2).all(|w| w[0] >= w[1]));

            for (split, quota) in [
                (make_step_imbalance_split(&g, 20, ir, 30, 9).unwrap(), step),
                (make_natural_imbalance_split(&g, ir, 30, 9).unwrap(), natural),
            ] {
                assert_eq!(split.train_counts(), &quota[..]);
                let mut all: Vec<usize> =
                    [split.train(), split.val(), split.test()].concat();
                all.sort_unstable();
                assert_eq!(all, (0..g.num_nodes()).collect::<Vec<_>>());
                for c in 0..m {
                    let val = split.val().iter().filter(|&&i| g.labels()[i] == c).count();
                    assert_eq!(val, 30);
                }
            }
        }
    }
}
