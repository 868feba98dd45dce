//! Pathwise functionals: square function, maximal function, moments and the
//! Burkholder ratio `E S_n^p / E (X_n^*)^p`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::dec;
use crate::tree::{expectation_unchecked, AdaptedProcess, OutcomeTree};

/// `S_j^2` at every node, where `j` is the node's depth (`S_0 = 0` at the root).
pub fn node_square_sum(proc: &AdaptedProcess) -> Vec<f64> {
    let tree = proc.tree();
    let mut s2 = vec![0.0; tree.node_count()];
    for v in 1..tree.node_count() {
        let u = tree.parent(v).expect("non-root");
        let d = proc.increment(v);
        s2[v] = s2[u] + d * d;
    }
    s2
}

/// `S_j` at every node.
pub fn node_square_function(proc: &AdaptedProcess) -> Vec<f64> {
    node_square_sum(proc).into_iter().map(f64::sqrt).collect()
}

/// `X_j^* = max_{1 <= i <= j} |X_i|` at every node; the root (j = 0) gets 0.
pub fn node_maximal_function(proc: &AdaptedProcess) -> Vec<f64> {
    let tree = proc.tree();
    let mut m = vec![0.0f64; tree.node_count()];
    for v in 1..tree.node_count() {
        let u = tree.parent(v).expect("non-root");
        let prev = if u == 0 { 0.0 } else { m[u] };
        m[v] = prev.max(proc.value(v).abs());
    }
    m
}

/// `S_n` on each leaf path.
pub fn square_function(proc: &AdaptedProcess) -> Vec<f64> {
    node_square_function(proc)[proc.tree().leaves()].to_vec()
}

/// `X_n^*` on each leaf path.
pub fn maximal_function(proc: &AdaptedProcess) -> Vec<f64> {
    node_maximal_function(proc)[proc.tree().leaves()].to_vec()
}

/// `E |Y|^p` for leaf values `Y`, `p > 0`.
pub fn p_moment(tree: &OutcomeTree, leaf_values: &[f64], p: f64) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Domain(format!("moment order must be positive, got {p}")));
    }
    if leaf_values.len() != tree.leaf_count() {
        return Err(Error::DimensionMismatch { expected: tree.leaf_count(), got: leaf_values.len() });
    }
    Ok(moment_unchecked(tree, leaf_values, p))
}

pub(crate) fn moment_unchecked(tree: &OutcomeTree, leaf_values: &[f64], p: f64) -> f64 {
    let powered: Vec<f64> = leaf_values.iter().map(|x| x.abs().powf(p)).collect();
    expectation_unchecked(tree, &powered)
}

/// Per-leaf functionals of one process.
#[derive(Debug, Clone, PartialEq)]
pub struct PathFunctionals {
    pub s_n: Vec<f64>,
    /// `S_n^2`, kept so that `E S_n^p` is `E (S_n^2)^(p/2)` without a square-root round trip.
    pub s_n_sq: Vec<f64>,
    pub x_star: Vec<f64>,
    pub terminal: Vec<f64>,
}

/// `E S_n^p`, `E (X_n^*)^p` and `E |X_n|^p` for one exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    #[serde(with = "dec")]
    pub p: f64,
    #[serde(with = "dec")]
    pub e_sp: f64,
    #[serde(with = "dec")]
    pub e_xstar_p: f64,
    #[serde(with = "dec")]
    pub e_abs_p: f64,
}

impl PathFunctionals {
    pub fn of(proc: &AdaptedProcess) -> Self {
        let s_n_sq = node_square_sum(proc)[proc.tree().leaves()].to_vec();
        Self {
            s_n: s_n_sq.iter().map(|x| x.sqrt()).collect(),
            s_n_sq,
            x_star: maximal_function(proc),
            terminal: proc.leaf_values().to_vec(),
        }
    }

    pub fn moments(&self, tree: &OutcomeTree, p: f64) -> Moments {
        Moments {
            p,
            e_sp: moment_unchecked(tree, &self.s_n_sq, p / 2.0),
            e_xstar_p: moment_unchecked(tree, &self.x_star, p),
            e_abs_p: moment_unchecked(tree, &self.terminal, p),
        }
    }
}

/// `E S_n^p / E (X_n^*)^p`.
///
/// An identically zero process (`E (X_n^*)^p = 0`) has no ratio; it is
/// reported as [`Error::Degenerate`] since both sides of the inequality vanish.
pub fn bdg_ratio(proc: &AdaptedProcess, p: f64) -> Result<f64> {
    crate::scalar::check_exponent(p)?;
    let m = PathFunctionals::of(proc).moments(proc.tree(), p);
    if m.e_xstar_p > 0.0 {
        Ok(m.e_sp / m.e_xstar_p)
    } else {
        Err(Error::Degenerate("E (X_n^*)^p = 0".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_random_martingale, gen_symmetric_walk};
    use crate::tree::{OutcomeTree, DEFAULT_MAX_LEAVES};
    use std::sync::Arc;

    fn chain(values: &[f64]) -> AdaptedProcess {
        // single-path tree 0 -> 1 -> ... with probability 1 on every edge
        let depth = values.len() - 1;
        let tree = Arc::new(OutcomeTree::uniform(depth, 1, DEFAULT_MAX_LEAVES).unwrap());
        AdaptedProcess::new(tree, values.to_vec()).unwrap()
    }

    #[test]
    fn square_function_examples() {
        for n in 1..6 {
            let w = gen_symmetric_walk(n).unwrap();
            assert!(square_function(&w).iter().all(|&s| (s - (n as f64).sqrt()).abs() < 1e-15));
        }
        assert_eq!(square_function(&chain(&[0.0, 0.0, 0.0])), vec![0.0]);
        assert_eq!(square_function(&chain(&[0.0, 1.0, 3.0])), vec![5f64.sqrt()]);
    }

    #[test]
    fn maximal_function_examples() {
        let w = gen_symmetric_walk(2).unwrap();
        // paths (+1,+2), (+1,0), (-1,0), (-1,-2)
        assert_eq!(maximal_function(&w), vec![2.0, 1.0, 1.0, 2.0]);
        assert_eq!(maximal_function(&chain(&[0.0, 1.0, 2.0, 4.0])), vec![4.0]);
        assert_eq!(maximal_function(&chain(&[0.0, 3.0, 1.0])), vec![3.0]);
    }

    #[test]
    fn moment_examples() {
        let w = gen_symmetric_walk(2).unwrap();
        let t = w.tree();
        assert_eq!(p_moment(t, w.leaf_values(), 3.0).unwrap(), 4.0);
        assert_eq!(p_moment(t, &maximal_function(&w), 2.0).unwrap(), 2.5);
        assert_eq!(p_moment(t, &[0.0; 4], 1.7).unwrap(), 0.0);
        assert!(p_moment(t, &[0.0; 4], 0.0).is_err());
    }

    #[test]
    fn ratio_examples() {
        let w = gen_symmetric_walk(2).unwrap();
        assert!((bdg_ratio(&w, 2.0).unwrap() - 0.8).abs() < 1e-15);
        let one = gen_symmetric_walk(1).unwrap();
        for &p in &[1.1, 1.5, 2.0, 3.0, 6.0] {
            assert_eq!(bdg_ratio(&one, p).unwrap(), 1.0);
        }
        let m = gen_random_martingale(4, 3, 2, 1.0).unwrap();
        let r = bdg_ratio(&m, 2.7).unwrap();
        for &lambda in &[-2.0, 0.5, 3.0] {
            let rs = bdg_ratio(&m.scaled(lambda), 2.7).unwrap();
            assert!((r - rs).abs() <= 1e-12 * r);
        }
        let zero = AdaptedProcess::zero(Arc::clone(w.tree()));
        assert!(matches!(bdg_ratio(&zero, 2.0), Err(Error::Degenerate(_))));
        assert!(matches!(bdg_ratio(&w, 1.0), Err(Error::InvalidExponent(_))));
    }

    #[test]
    fn running_functionals_are_monotone_along_paths() {
        let m = gen_random_martingale(5, 3, 8, 1.0).unwrap();
        let s = node_square_function(&m);
        let x = node_maximal_function(&m);
        let t = m.tree();
        for v in 1..t.node_count() {
            let u = t.parent(v).unwrap();
            assert!(s[v] >= s[u]);
            assert!(x[v] >= x[u]);
        }
        for (xs, xn) in maximal_function(&m).iter().zip(m.leaf_values()) {
            assert!(*xs >= xn.abs());
        }
    }
}
