//! Finite filtered probability spaces as rooted trees.
//!
//! Depth `j` nodes are the atoms of `F_j`; the root is time 0. Nodes are stored
//! in breadth-first order, so each level and each sibling group is a
//! contiguous index range and a parent always precedes its children.

use std::ops::Range;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::report::CheckReport;

pub const DEFAULT_MAX_LEAVES: usize = 1 << 20;
pub const PROB_TOL: f64 = 1e-12;
pub const MARTINGALE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
struct Node {
    parent: Option<usize>,
    depth: usize,
    branch_prob: f64,
    first_child: usize,
    child_count: usize,
}

/// Nested description of a tree, as read from or written to a file.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub branch_prob: f64,
    pub children: Vec<NodeSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    /// Allowed deviation of each sibling group's probability sum from 1.
    pub prob_tol: f64,
    pub max_leaves: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { prob_tol: PROB_TOL, max_leaves: DEFAULT_MAX_LEAVES }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeTree {
    nodes: Vec<Node>,
    depth: usize,
    level_starts: Vec<usize>,
    path_prob: Vec<f64>,
}

impl OutcomeTree {
    /// Grows a tree breadth first. `child_probs(node, depth)` returns the branch
    /// probabilities of the children of `node` (which sits at `depth`); it is
    /// only called for `depth < tree_depth`.
    pub fn grow<F>(tree_depth: usize, opts: BuildOptions, mut child_probs: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Vec<f64>,
    {
        if tree_depth == 0 {
            return Err(Error::Structure("tree depth must be at least 1".into()));
        }
        let mut nodes = vec![Node { parent: None, depth: 0, branch_prob: 1.0, first_child: 0, child_count: 0 }];
        let mut level_starts = vec![0];
        let mut start = 0;
        for d in 0..tree_depth {
            let end = nodes.len();
            level_starts.push(end);
            for v in start..end {
                let probs = child_probs(v, d);
                if probs.is_empty() {
                    return Err(Error::Structure(format!("node {v} at depth {d} has no children")));
                }
                check_sibling_probs(v, &probs, opts.prob_tol)?;
                nodes[v].first_child = nodes.len();
                nodes[v].child_count = probs.len();
                for bp in probs {
                    nodes.push(Node { parent: Some(v), depth: d + 1, branch_prob: bp, first_child: 0, child_count: 0 });
                }
                let leaves_so_far = nodes.len() - end;
                if d + 1 == tree_depth && leaves_so_far > opts.max_leaves {
                    return Err(Error::EnumerationCap { leaves: leaves_so_far as u128, cap: opts.max_leaves });
                }
            }
            if nodes.len() - end > opts.max_leaves {
                return Err(Error::EnumerationCap { leaves: (nodes.len() - end) as u128, cap: opts.max_leaves });
            }
            start = end;
        }
        level_starts.push(nodes.len());
        Ok(Self::finish(nodes, tree_depth, level_starts))
    }

    /// Every internal node gets `branching` children of probability `1 / branching`.
    pub fn uniform(depth: usize, branching: usize, max_leaves: usize) -> Result<Self> {
        if branching < 1 {
            return Err(Error::Structure("branching must be positive".into()));
        }
        let leaves = (branching as u128).checked_pow(depth as u32).unwrap_or(u128::MAX);
        if leaves > max_leaves as u128 {
            return Err(Error::EnumerationCap { leaves, cap: max_leaves });
        }
        let prob = 1.0 / branching as f64;
        Self::grow(depth, BuildOptions { prob_tol: PROB_TOL, max_leaves }, |_, _| vec![prob; branching])
    }

    /// Flattens a nested description, rejecting ragged or unnormalised trees.
    pub fn from_spec(root: &NodeSpec, opts: BuildOptions) -> Result<Self> {
        if root.branch_prob != 1.0 {
            return Err(Error::Structure(format!("root branch_prob must be 1, got {}", root.branch_prob)));
        }
        let mut nodes = vec![Node { parent: None, depth: 0, branch_prob: 1.0, first_child: 0, child_count: 0 }];
        let mut specs: Vec<&NodeSpec> = vec![root];
        let mut level_starts = vec![0];
        let mut depth = 0;
        let mut start = 0;
        loop {
            let end = nodes.len();
            let any_children = specs[start..end].iter().any(|s| !s.children.is_empty());
            if !any_children {
                break;
            }
            level_starts.push(end);
            for v in start..end {
                let spec = specs[v];
                if spec.children.is_empty() {
                    return Err(Error::Structure(format!(
                        "ragged tree: node {v} is a leaf at depth {depth} while other nodes go deeper"
                    )));
                }
                let probs: Vec<f64> = spec.children.iter().map(|c| c.branch_prob).collect();
                check_sibling_probs(v, &probs, opts.prob_tol)?;
                nodes[v].first_child = nodes.len();
                nodes[v].child_count = probs.len();
                for c in &spec.children {
                    nodes.push(Node {
                        parent: Some(v),
                        depth: depth + 1,
                        branch_prob: c.branch_prob,
                        first_child: 0,
                        child_count: 0,
                    });
                    specs.push(c);
                }
            }
            if nodes.len() - end > opts.max_leaves {
                return Err(Error::EnumerationCap { leaves: (nodes.len() - end) as u128, cap: opts.max_leaves });
            }
            depth += 1;
            start = end;
        }
        if depth == 0 {
            return Err(Error::Structure("tree has no edges".into()));
        }
        level_starts.push(nodes.len());
        Ok(Self::finish(nodes, depth, level_starts))
    }

    fn finish(nodes: Vec<Node>, depth: usize, level_starts: Vec<usize>) -> Self {
        let mut path_prob = vec![1.0; nodes.len()];
        for i in 1..nodes.len() {
            let parent = nodes[i].parent.expect("non-root node has a parent");
            path_prob[i] = path_prob[parent] * nodes[i].branch_prob;
        }
        Self { nodes, depth, level_starts, path_prob }
    }

    /// Nested description of the tree (values are not part of the tree).
    pub fn to_spec(&self) -> NodeSpec {
        fn build(t: &OutcomeTree, v: usize) -> NodeSpec {
            NodeSpec { branch_prob: t.branch_prob(v), children: t.children(v).map(|c| build(t, c)).collect() }
        }
        build(self, 0)
    }

    /// Height `n` of the tree.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.len() - self.level_starts[self.depth]
    }

    /// Node indices of the leaves, in order.
    pub fn leaves(&self) -> Range<usize> {
        self.level(self.depth)
    }

    /// Node indices at `depth`; panics above the tree height.
    pub fn level(&self, depth: usize) -> Range<usize> {
        self.level_starts[depth]..self.level_starts[depth + 1]
    }

    pub fn children(&self, v: usize) -> Range<usize> {
        let n = &self.nodes[v];
        n.first_child..n.first_child + n.child_count
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.nodes[v].child_count == 0
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.nodes[v].parent
    }

    pub fn node_depth(&self, v: usize) -> usize {
        self.nodes[v].depth
    }

    pub fn branch_prob(&self, v: usize) -> f64 {
        self.nodes[v].branch_prob
    }

    /// Probability of reaching `v` from the root.
    pub fn path_prob(&self, v: usize) -> f64 {
        self.path_prob[v]
    }

    pub fn leaf_probs(&self) -> &[f64] {
        &self.path_prob[self.leaves()]
    }

    /// Internal nodes in index order.
    pub fn internal_nodes(&self) -> Range<usize> {
        0..self.level_starts[self.depth]
    }

    /// Nodes on the path root -> `leaf`, root first.
    pub fn path_to(&self, leaf: usize) -> Vec<usize> {
        let mut path = Vec::with_capacity(self.depth + 1);
        let mut v = Some(leaf);
        while let Some(i) = v {
            path.push(i);
            v = self.nodes[i].parent;
        }
        path.reverse();
        path
    }

    /// Short hash of the shape and branch probabilities.
    pub fn shape_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.depth as u64).to_le_bytes());
        for n in &self.nodes {
            h.update((n.child_count as u64).to_le_bytes());
            h.update(n.branch_prob.to_bits().to_le_bytes());
        }
        hex16(&h.finalize())
    }
}

pub(crate) fn hex16(bytes: &[u8]) -> String {
    bytes.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn check_sibling_probs(v: usize, probs: &[f64], tol: f64) -> Result<()> {
    if let Some(bad) = probs.iter().find(|&&q| !(q > 0.0 && q <= 1.0)) {
        return Err(Error::Structure(format!("child of node {v} has branch_prob {bad} outside (0, 1]")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > tol {
        return Err(Error::Structure(format!("children of node {v} have probabilities summing to {total}")));
    }
    Ok(())
}

/// Real values on every node of a tree.
///
/// The value at a depth-`j` node is `X_j` on that atom. Path functionals use
/// the convention `X_0 = 0`, so the first increment is `X_1` itself; the root
/// slot stores the time-0 conditional mean `E[X_1]`, which is 0 for every
/// generated process and equals `E[Y]` for the closure of a terminal `Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedProcess {
    tree: Arc<OutcomeTree>,
    values: Vec<f64>,
}

impl AdaptedProcess {
    pub fn new(tree: Arc<OutcomeTree>, values: Vec<f64>) -> Result<Self> {
        if values.len() != tree.node_count() {
            return Err(Error::Structure(format!(
                "{} values for a tree with {} nodes",
                values.len(),
                tree.node_count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Structure(format!("value at node {i} is not finite")));
        }
        Ok(Self { tree, values })
    }

    pub fn zero(tree: Arc<OutcomeTree>) -> Self {
        let n = tree.node_count();
        Self { tree, values: vec![0.0; n] }
    }

    pub fn tree(&self) -> &Arc<OutcomeTree> {
        &self.tree
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, v: usize) -> f64 {
        self.values[v]
    }

    /// Terminal values `X_n`, one per leaf.
    pub fn leaf_values(&self) -> &[f64] {
        &self.values[self.tree.leaves()]
    }

    /// `Delta X_j` on the edge into `v` (with `X_0 = 0`); 0 at the root.
    pub fn increment(&self, v: usize) -> f64 {
        match self.tree.parent(v) {
            None => 0.0,
            Some(0) => self.values[v],
            Some(u) => self.values[v] - self.values[u],
        }
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self { tree: Arc::clone(&self.tree), values: self.values.iter().map(|v| v * lambda).collect() }
    }

    pub fn same_tree(&self, other: &AdaptedProcess) -> bool {
        Arc::ptr_eq(&self.tree, &other.tree) || self.tree == other.tree
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn values_hash(&self) -> String {
        let mut h = Sha256::new();
        for v in &self.values {
            h.update(v.to_bits().to_le_bytes());
        }
        hex16(&h.finalize())
    }

    /// Largest conditional-mean defect `|sum_c p_c X_c - X_v| / (1 + |X_v|)`
    /// over internal nodes.
    pub fn martingale_defect(&self) -> f64 {
        self.tree
            .internal_nodes()
            .map(|v| {
                let mean: f64 = self.tree.children(v).map(|c| self.tree.branch_prob(c) * self.values[c]).sum();
                (mean - self.values[v]).abs() / (1.0 + self.values[v].abs())
            })
            .fold(0.0, f64::max)
    }

    pub fn is_martingale(&self, tol: f64) -> bool {
        self.martingale_defect() <= tol
    }
}

/// Checks `E[X_j | F_(j-1)] = X_(j-1)` at every internal node, with tolerance
/// `tol * (1 + |X_v|)` per node. The reported `lhs` is the largest scaled defect.
pub fn validate_martingale(proc: &AdaptedProcess, tol: f64) -> CheckReport {
    let defect = proc.martingale_defect();
    CheckReport::identity_abs(
        "martingale.valid",
        "E[X_j | F_(j-1)] = X_(j-1) at every internal node",
        defect,
        0.0,
        tol,
    )
    .with_note("lhs is max |sum p_c X_c - X_v| / (1 + |X_v|)")
}

fn check_leaf_len(tree: &OutcomeTree, leaf_values: &[f64]) -> Result<()> {
    if leaf_values.len() != tree.leaf_count() {
        return Err(Error::DimensionMismatch { expected: tree.leaf_count(), got: leaf_values.len() });
    }
    Ok(())
}

/// `E[Y | F_j]` on every node, by backward aggregation from the leaves.
fn aggregate(tree: &OutcomeTree, leaf_values: &[f64]) -> Vec<f64> {
    let mut vals = vec![0.0; tree.node_count()];
    let leaves = tree.leaves();
    vals[leaves.clone()].copy_from_slice(leaf_values);
    for v in tree.internal_nodes().rev() {
        let mut acc = CompensatedSum::new();
        for c in tree.children(v) {
            acc.add(tree.branch_prob(c) * vals[c]);
        }
        vals[v] = acc.value();
    }
    vals
}

/// `E[Y | F_level]` as one value per node at depth `level`, in index order.
pub fn conditional_expectation(tree: &OutcomeTree, leaf_values: &[f64], level: usize) -> Result<Vec<f64>> {
    check_leaf_len(tree, leaf_values)?;
    if level > tree.depth() {
        return Err(Error::LevelOutOfRange { level, depth: tree.depth() });
    }
    if level == tree.depth() {
        return Ok(leaf_values.to_vec());
    }
    let all = aggregate(tree, leaf_values);
    Ok(all[tree.level(level)].to_vec())
}

/// Martingale `Z_j = E[Y | F_j]` generated by a terminal variable; `Z_n = Y`
/// exactly at the leaves.
pub fn close_martingale(tree: &Arc<OutcomeTree>, terminal: &[f64]) -> Result<AdaptedProcess> {
    check_leaf_len(tree, terminal)?;
    if let Some(i) = terminal.iter().position(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("terminal value at leaf {i} is not finite")));
    }
    AdaptedProcess::new(Arc::clone(tree), aggregate(tree, terminal))
}

/// `E[Y] = sum_leaves P(leaf) Y(leaf)`, compensated and in leaf order.
pub fn expectation(tree: &OutcomeTree, leaf_values: &[f64]) -> Result<f64> {
    check_leaf_len(tree, leaf_values)?;
    Ok(expectation_unchecked(tree, leaf_values))
}

pub(crate) fn expectation_unchecked(tree: &OutcomeTree, leaf_values: &[f64]) -> f64 {
    tree.leaf_probs().iter().zip(leaf_values).map(|(p, v)| p * v).collect::<CompensatedSum>().value()
}
