//! Martingale families used as test inputs and search seeds.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tree::{AdaptedProcess, BuildOptions, OutcomeTree, DEFAULT_MAX_LEAVES, PROB_TOL};

pub const DEFAULT_MAX_WALK_DEPTH: usize = 20;
const MIN_BRANCH_PROB: f64 = 1e-6;

/// Simple symmetric random walk: binary tree, probabilities 1/2, steps +1
/// (first child) and -1 (second child).
pub fn gen_symmetric_walk(depth: usize) -> Result<AdaptedProcess> {
    gen_symmetric_walk_capped(depth, DEFAULT_MAX_WALK_DEPTH)
}

pub fn gen_symmetric_walk_capped(depth: usize, max_depth: usize) -> Result<AdaptedProcess> {
    if depth == 0 {
        return Err(Error::Domain("walk depth must be at least 1".into()));
    }
    if depth > max_depth {
        return Err(Error::EnumerationCap { leaves: 1u128 << depth.min(127), cap: 1usize << max_depth.min(63) });
    }
    let tree = Arc::new(OutcomeTree::uniform(depth, 2, 1usize << max_depth)?);
    let mut values = vec![0.0; tree.node_count()];
    for v in tree.internal_nodes() {
        let kids = tree.children(v);
        values[kids.start] = values[v] + 1.0;
        values[kids.start + 1] = values[v] - 1.0;
    }
    AdaptedProcess::new(tree, values)
}

/// Random martingale on a tree where every internal node has `branching`
/// children. Branch probabilities are uniform draws, normalised, redrawn while
/// any falls below 1e-6. Free increments are uniform on
/// `[-value_scale, value_scale]`; the last sibling's increment is solved from
/// the conditional mean-zero constraint. Deterministic in `seed`.
pub fn gen_random_martingale(depth: usize, branching: usize, seed: u64, value_scale: f64) -> Result<AdaptedProcess> {
    if depth == 0 || branching < 2 {
        return Err(Error::Domain(format!("need depth >= 1 and branching >= 2, got {depth}, {branching}")));
    }
    if !(value_scale > 0.0 && value_scale.is_finite()) {
        return Err(Error::Domain(format!("value_scale must be positive, got {value_scale}")));
    }
    let leaves = (branching as u128).checked_pow(depth as u32).unwrap_or(u128::MAX);
    if leaves > DEFAULT_MAX_LEAVES as u128 {
        return Err(Error::EnumerationCap { leaves, cap: DEFAULT_MAX_LEAVES });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tree = OutcomeTree::grow(depth, BuildOptions { prob_tol: PROB_TOL, max_leaves: DEFAULT_MAX_LEAVES }, |_, _| {
        random_probs(&mut rng, branching)
    })?;
    let tree = Arc::new(tree);
    let mut values = vec![0.0; tree.node_count()];
    for v in tree.internal_nodes() {
        let kids = tree.children(v);
        let last = kids.end - 1;
        let mut weighted = 0.0;
        for c in kids.start..last {
            let d = rng.gen_range(-value_scale..=value_scale);
            values[c] = values[v] + d;
            weighted += tree.branch_prob(c) * d;
        }
        values[last] = values[v] - weighted / tree.branch_prob(last);
    }
    AdaptedProcess::new(tree, values)
}

fn random_probs(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
        let total: f64 = w.iter().sum();
        let probs: Vec<f64> = w.iter().map(|x| x / total).collect();
        if probs.iter().all(|&q| q >= MIN_BRANCH_PROB) {
            // put the rounding residue on the last sibling
            let head: f64 = probs[..k - 1].iter().sum();
            let mut probs = probs;
            probs[k - 1] = 1.0 - head;
            if probs[k - 1] >= MIN_BRANCH_PROB {
                return probs;
            }
        }
    }
}

/// Martingale transform `Delta Y_j = m_(j-1) Delta X_j`, accumulated from
/// `Y_0 = 0`.
///
/// `multipliers` holds one entry per node: the factor applied to the increment
/// on the edge into that node. Entries of siblings must agree (predictability)
/// and lie in `[-bound, bound]`; the root entry is ignored.
pub fn gen_transform(base: &AdaptedProcess, multipliers: &[f64], bound: f64) -> Result<AdaptedProcess> {
    let tree = base.tree();
    if multipliers.len() != tree.node_count() {
        return Err(Error::DimensionMismatch { expected: tree.node_count(), got: multipliers.len() });
    }
    let mut values = vec![0.0; tree.node_count()];
    for v in tree.internal_nodes() {
        let kids = tree.children(v);
        let m = multipliers[kids.start];
        if kids.clone().any(|c| multipliers[c] != m) {
            return Err(Error::NotPredictable(v));
        }
        if !(m.abs() <= bound) {
            return Err(Error::Domain(format!("multiplier {m} under node {v} exceeds bound {bound}")));
        }
        let start = if v == 0 { 0.0 } else { values[v] };
        for c in kids {
            values[c] = start + m * base.increment(c);
        }
    }
    // the root slot carries E[Y_1]
    values[0] = tree.children(0).map(|c| tree.branch_prob(c) * values[c]).sum();
    AdaptedProcess::new(Arc::clone(tree), values)
}

/// Predictable multipliers drawn uniformly from `[-bound, bound]`, one per
/// internal node, laid out per child as [`gen_transform`] expects.
pub fn random_predictable_multipliers(tree: &OutcomeTree, seed: u64, bound: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = vec![0.0; tree.node_count()];
    for v in tree.internal_nodes() {
        let x = rng.gen_range(-bound..=bound);
        for c in tree.children(v) {
            m[c] = x;
        }
    }
    m
}

/// Predictable `+-1` multipliers: `(-1)^depth` of the parent.
pub fn alternating_multipliers(tree: &OutcomeTree) -> Vec<f64> {
    (0..tree.node_count())
        .map(|v| match tree.parent(v) {
            Some(u) if tree.node_depth(u) % 2 == 1 => -1.0,
            _ => 1.0,
        })
        .collect()
}
