//! Imbalanced training splits.
//!
//! Training nodes are drawn per class, then `val_per_class` validation nodes
//! per class are drawn from what remains; every other node is a test node.

use rand::seq::SliceRandom;

use super::{Graph, Split};
use crate::rng::{stream, Stream};
use crate::{Error, Result, Scalar};

pub const DEFAULT_VAL_PER_CLASS: usize = 30;

fn check_ir(ir: f64) -> Result<()> {
    if ir.is_finite() && ir >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("imbalance ratio must be >= 1, got {ir}")))
    }
}

/// Per-class training quota for step imbalance: the upper `floor(m/2)`
/// classes get `max(round(base / ir), 1)`, the rest get `base`.
pub fn step_train_quota(num_classes: usize, base_per_class: usize, ir: f64) -> Result<Vec<usize>> {
    check_ir(ir)?;
    if base_per_class == 0 {
        return Err(Error::InvalidParameter("base_per_class must be positive".into()));
    }
    let first_minority = num_classes.div_ceil(2);
    let minority = ((base_per_class as f64 / ir).round() as usize).max(1);
    Ok((0..num_classes)
        .map(|c| if c >= first_minority { minority } else { base_per_class })
        .collect())
}

/// Power-law quotas by size rank: rank `k` (1-based) gets
/// `floor(ir^((m - k) / (m - 1)))`.
pub fn natural_train_quota(num_classes: usize, ir: f64) -> Result<Vec<usize>> {
    check_ir(ir)?;
    if num_classes < 2 {
        return Err(Error::InvalidParameter("natural imbalance needs m >= 2".into()));
    }
    let m = num_classes as f64;
    Ok((1..=num_classes)
        .map(|k| {
            let lambda = (m - k as f64) / (m - 1.0);
            // guard against powf landing just below an integer
            (ir.powf(lambda) + 1e-9).floor().max(1.0) as usize
        })
        .collect())
}

fn draw_split<T: Scalar>(
    g: &Graph<T>,
    quota: &[usize],
    val_per_class: usize,
    seed: u64,
) -> Result<Split> {
    let mut rng = stream(seed, Stream::Split);
    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for (class, mut nodes) in g.nodes_by_class().into_iter().enumerate() {
        let required = quota[class] + val_per_class + 1;
        if nodes.len() < required {
            return Err(Error::InsufficientNodes {
                class,
                available: nodes.len(),
                required,
            });
        }
        nodes.shuffle(&mut rng);
        let (tr, rest) = nodes.split_at(quota[class]);
        let (va, te) = rest.split_at(val_per_class);
        train.extend_from_slice(tr);
        val.extend_from_slice(va);
        test.extend_from_slice(te);
    }
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Split::new(g.labels(), g.num_classes(), train, val, test)
}

pub fn make_step_imbalance_split<T: Scalar>(
    g: &Graph<T>,
    base_per_class: usize,
    ir: f64,
    val_per_class: usize,
    seed: u64,
) -> Result<Split> {
    let quota = step_train_quota(g.num_classes(), base_per_class, ir)?;
    draw_split(g, &quota, val_per_class, seed)
}

/// Power-law split. Classes are ranked by descending node count (ties go to
/// the lower class index) and the k-th ranked class gets the k-th quota.
pub fn make_natural_imbalance_split<T: Scalar>(
    g: &Graph<T>,
    ir: f64,
    val_per_class: usize,
    seed: u64,
) -> Result<Split> {
    let by_rank = natural_train_quota(g.num_classes(), ir)?;
    let sizes = g.class_sizes();
    let mut order: Vec<usize> = (0..g.num_classes()).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    let mut quota = vec![0; g.num_classes()];
    for (rank, &class) in order.iter().enumerate() {
        quota[class] = by_rank[rank];
    }
    draw_split(g, &quota, val_per_class, seed)
}
