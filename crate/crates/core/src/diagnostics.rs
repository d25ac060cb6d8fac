//! Balanced evaluation metrics and message-passing bias diagnostics.
//!
//! Per-class scores are averaged over the classes that actually occur in
//! the evaluation mask; a class with no true node in the mask is skipped.

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::{Error, Result, Scalar};

/// Hop distance reported for nodes that cannot reach any same-class
/// training node.
pub const UNREACHABLE: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub bacc: f64,
    pub macro_f1: f64,
    pub disparity: f64,
    /// `None` for classes absent from the evaluation mask.
    pub per_class_acc: Vec<Option<f64>>,
    pub runtime_ms: f64,
    /// Mean virtual edges per augmentation call over the original edge count.
    pub virtual_edge_ratio: f64,
}

fn check(preds: &[usize], labels: &[usize], mask: &[usize], m: usize) -> Result<()> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    for &i in mask {
        if i >= preds.len() || i >= labels.len() {
            return Err(Error::Shape(format!("mask index {i} out of range")));
        }
        if preds[i] >= m || labels[i] >= m {
            return Err(Error::Shape(format!("class of node {i} out of range 0..{m}")));
        }
    }
    Ok(())
}

/// Recall of every class over `mask`.
pub fn per_class_accuracy(
    preds: &[usize],
    labels: &[usize],
    mask: &[usize],
    num_classes: usize,
) -> Result<Vec<Option<f64>>> {
    check(preds, labels, mask, num_classes)?;
    let mut hit = vec![0usize; num_classes];
    let mut total = vec![0usize; num_classes];
    for &i in mask {
        total[labels[i]] += 1;
        if preds[i] == labels[i] {
            hit[labels[i]] += 1;
        }
    }
    Ok(hit
        .iter()
        .zip(&total)
        .map(|(&h, &t)| (t > 0).then(|| h as f64 / t as f64))
        .collect())
}

fn present(acc: &[Option<f64>]) -> Vec<f64> {
    acc.iter().flatten().copied().collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn population_std(v: &[f64]) -> f64 {
    let mu = mean(v);
    (v.iter().map(|a| (a - mu) * (a - mu)).sum::<f64>() / v.len() as f64).sqrt()
}

pub fn balanced_accuracy(
    preds: &[usize],
    labels: &[usize],
    mask: &[usize],
    num_classes: usize,
) -> Result<f64> {
    Ok(mean(&present(&per_class_accuracy(preds, labels, mask, num_classes)?)))
}

/// Population standard deviation of the per-class accuracies.
pub fn disparity(
    preds: &[usize],
    labels: &[usize],
    mask: &[usize],
    num_classes: usize,
) -> Result<f64> {
    Ok(population_std(&present(&per_class_accuracy(preds, labels, mask, num_classes)?)))
}

/// Mean one-vs-rest F1. A present class that is never predicted correctly
/// scores 0.
pub fn macro_f1(preds: &[usize], labels: &[usize], mask: &[usize], num_classes: usize) -> Result<f64> {
    check(preds, labels, mask, num_classes)?;
    let mut tp = vec![0usize; num_classes];
    let mut fp = vec![0usize; num_classes];
    let mut fneg = vec![0usize; num_classes];
    for &i in mask {
        let (p, y) = (preds[i], labels[i]);
        if p == y {
            tp[y] += 1;
        } else {
            fp[p] += 1;
            fneg[y] += 1;
        }
    }
    let scores: Vec<f64> = (0..num_classes)
        .filter(|&c| tp[c] + fneg[c] > 0)
        .map(|c| 2.0 * tp[c] as f64 / (2 * tp[c] + fp[c] + fneg[c]) as f64)
        .collect();
    Ok(mean(&scores))
}

/// All balanced metrics over `mask`; the runtime and virtual-edge fields are
/// left at zero for the caller to fill in.
pub fn evaluate(
    preds: &[usize],
    labels: &[usize],
    mask: &[usize],
    num_classes: usize,
) -> Result<MetricsReport> {
    let per_class_acc = per_class_accuracy(preds, labels, mask, num_classes)?;
    let acc = present(&per_class_acc);
    Ok(MetricsReport {
        bacc: mean(&acc),
        macro_f1: macro_f1(preds, labels, mask, num_classes)?,
        disparity: population_std(&acc),
        per_class_acc,
        runtime_ms: 0.0,
        virtual_edge_ratio: 0.0,
    })
}

/// Fraction of each node's neighbours carrying a different label; isolated
/// nodes get 0.
pub fn heterophilic_ratio<T: Scalar>(g: &Graph<T>, labels: &[usize]) -> Vec<f64> {
    (0..g.num_nodes())
        .map(|i| {
            let nb = g.neighbors(i);
            if nb.is_empty() {
                0.0
            } else {
                nb.iter().filter(|&&k| labels[k] != labels[i]).count() as f64 / nb.len() as f64
            }
        })
        .collect()
}

/// Hop distance from every node to the nearest training node of its own
/// label ([`UNREACHABLE`] if none is connected). One multi-source BFS per
/// class.
pub fn distance_to_same_class_supervision<T: Scalar>(
    g: &Graph<T>,
    labels: &[usize],
    train: &[usize],
) -> Vec<usize> {
    let n = g.num_nodes();
    let m = labels.iter().copied().max().map_or(0, |c| c + 1);
    let mut out = vec![UNREACHABLE; n];
    let mut dist = vec![UNREACHABLE; n];
    let mut queue = VecDeque::new();
    for class in 0..m {
        dist.iter_mut().for_each(|d| *d = UNREACHABLE);
        for &s in train.iter().filter(|&&s| labels[s] == class) {
            if dist[s] != 0 {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            for &v in g.neighbors(u) {
                if dist[v] == UNREACHABLE {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        for i in 0..n {
            if labels[i] == class {
                out[i] = dist[i];
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    /// Mean score of the nodes in the bin.
    pub center: f64,
    pub accuracy: f64,
    /// Population standard deviation of the 0/1 correctness.
    pub std: f64,
    pub count: usize,
}

/// Sorts nodes by score (stable) and cuts them into `windows` bins of equal
/// count; bin `b` takes sorted positions `b·n/w .. (b+1)·n/w`.
pub fn binned_accuracy(scores: &[f64], correct: &[bool], windows: usize) -> Result<Vec<Bin>> {
    if scores.len() != correct.len() {
        return Err(Error::Shape(format!(
            "{} scores for {} correctness flags",
            scores.len(),
            correct.len()
        )));
    }
    if windows == 0 || scores.len() < windows {
        return Err(Error::InvalidParameter(format!(
            "cannot cut {} nodes into {windows} bins",
            scores.len()
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let n = order.len();
    Ok((0..windows)
        .map(|b| {
            let members = &order[b * n / windows..(b + 1) * n / windows];
            let hits: Vec<f64> = members.iter().map(|&i| f64::from(u8::from(correct[i]))).collect();
            let s: Vec<f64> = members.iter().map(|&i| scores[i]).collect();
            Bin {
                center: mean(&s),
                accuracy: mean(&hits),
                std: population_std(&hits),
                count: members.len(),
            }
        })
        .collect())
}

/// Accuracy grouped by exact hop distance, in ascending distance order with
/// unreachable nodes last.
pub fn accuracy_by_distance(distances: &[usize], correct: &[bool]) -> Vec<(usize, Bin)> {
    let mut keys: Vec<usize> = distances.to_vec();
    keys.sort_unstable();
    keys.dedup();
    keys.into_iter()
        .map(|d| {
            let hits: Vec<f64> = distances
                .iter()
                .zip(correct)
                .filter(|(&x, _)| x == d)
                .map(|(_, &c)| f64::from(u8::from(c)))
                .collect();
            let bin = Bin {
                center: if d == UNREACHABLE { f64::INFINITY } else { d as f64 },
                accuracy: mean(&hits),
                std: population_std(&hits),
                count: hits.len(),
            };
            (d, bin)
        })
        .collect()
}

pub fn write_bins_csv<W: Write>(out: W, bins: &[Bin]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for b in bins {
        w.serialize(b)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn balanced_accuracy_examples() {
        // class 0: 9/10 right, class 1: 1/2 right
        let labels: Vec<usize> = [vec![0; 10], vec![1; 2]].concat();
        let mut preds = labels.clone();
        preds[0] = 1;
        preds[10] = 0;
        let mask: Vec<usize> = (0..12).collect();
        assert!((balanced_accuracy(&preds, &labels, &mask, 2).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(balanced_accuracy(&labels, &labels, &mask, 2).unwrap(), 1.0);
        assert_eq!(macro_f1(&labels, &labels, &mask, 2).unwrap(), 1.0);
    }

    #[test]
    fn macro_f1_all_one_class() {
        let labels = [0, 0, 1, 1];
        let preds = [0, 0, 0, 0];
        let f1 = macro_f1(&preds, &labels, &[0, 1, 2, 3], 2).unwrap();
        assert!((f1 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn disparity_examples() {
        let labels = [0, 0, 1, 1, 2, 2, 2, 2];
        let mask: Vec<usize> = (0..8).collect();
        // accuracies [1.0, 0.5, 0.75]
        let preds = [0, 0, 1, 0, 2, 2, 2, 0];
        let d = disparity(&preds, &labels, &mask, 3).unwrap();
        assert!((d - (0.125f64 / 3.0).sqrt()).abs() < 1e-15);
        let d = disparity(&preds[..4], &labels[..4], &mask[..4], 3).unwrap();
        assert!((d - 0.25).abs() < 1e-15);
        assert_eq!(disparity(&labels, &labels, &mask, 3).unwrap(), 0.0);
    }

    #[test]
    fn absent_classes_are_skipped() {
        let labels = [0, 0, 2];
        let preds = [0, 1, 2];
        let acc = per_class_accuracy(&preds, &labels, &[0, 1, 2], 3).unwrap();
        assert_eq!(acc, vec![Some(0.5), None, Some(1.0)]);
        assert!((balanced_accuracy(&preds, &labels, &[0, 1, 2], 3).unwrap() - 0.75).abs() < 1e-15);
        assert!(matches!(balanced_accuracy(&preds, &labels, &[], 3), Err(Error::EmptyMask)));
    }

    fn star() -> Graph<f64> {
        // 0 - {1, 2, 3}, 4 isolated, 5 - 6
        Graph::new(2, vec![(0, 1), (0, 2), (0, 3), (5, 6)], Array2::zeros((7, 1)), vec![0, 0, 0, 1, 1, 0, 1])
            .unwrap()
    }

    #[test]
    fn heterophily_examples() {
        let g = star();
        let r = heterophilic_ratio(&g, g.labels());
        assert!((r[0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(r[1], 0.0);
        assert_eq!(r[3], 1.0);
        assert_eq!(r[4], 0.0);
    }

    #[test]
    fn distance_examples() {
        let g = star();
        let d = distance_to_same_class_supervision(&g, g.labels(), &[1, 3]);
        assert_eq!(d[1], 0);
        assert_eq!(d[0], 1);
        assert_eq!(d[2], 2);
        assert_eq!(d[3], 0);
        assert_eq!(d[4], UNREACHABLE);
        assert_eq!(d[6], UNREACHABLE);
    }

    #[test]
    fn binning_examples() {
        let scores = [0.3, 0.1, 0.2, 0.9];
        let correct = [true, false, true, true];
        let one = binned_accuracy(&scores, &correct, 1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].accuracy, 0.75);
        let two = binned_accuracy(&scores, &correct, 2).unwrap();
        assert_eq!(two[0].accuracy, 0.5);
        assert!((two[0].center - 0.15).abs() < 1e-15);
        assert_eq!(two[1].accuracy, 1.0);
        assert_eq!(two[1].std, 0.0);
        let constant = binned_accuracy(&scores, &[true; 4], 4).unwrap();
        assert!(constant.iter().all(|b| b.accuracy == 1.0));
        assert!(binned_accuracy(&scores, &correct, 5).is_err());
        assert!(binned_accuracy(&scores, &correct, 0).is_err());
    }

    #[test]
    fn distance_groups() {
        let groups = accuracy_by_distance(&[0, 1, 1, UNREACHABLE], &[true, true, false, false]);
        assert_eq!(groups.len(), 3);
        assert_eq!(groups[1].1.accuracy, 0.5);
        assert_eq!(groups[2].0, UNREACHABLE);
    }

    #[test]
    fn bins_to_csv() {
        let mut buf = Vec::new();
        let bins = binned_accuracy(&[0.0, 1.0], &[true, false], 2).unwrap();
        write_bins_csv(&mut buf, &bins).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("center,accuracy,std,count\n"));
        assert_eq!(text.lines().count(), 3);
    }
}
