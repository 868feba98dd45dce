//! Derivative-free search over martingales on a fixed tree for extreme values
//! of `E S_n^p / E (X_n^*)^p`.
//!
//! A candidate is the vector of free child increments: for a node with `k`
//! children the first `k - 1` increments are free and the last one is solved
//! from `sum_c p_c d_c = 0`, so every decoded candidate is a martingale.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::format::{dec, MartingaleFile};
use crate::functionals::{bdg_ratio, PathFunctionals};
use crate::scalar::{check_exponent, PExponent};
use crate::tree::{AdaptedProcess, OutcomeTree};

/// Scores below this `E (X_n^*)^p` count as degenerate.
pub const DEGENERATE_FLOOR: f64 = 1e-300;
const START_STEP: f64 = 1.0;
const SHRINK: f64 = 0.5;
const STEP_FLOOR: f64 = 1e-6;
/// Relative slack when testing candidates against the envelope.
const ENVELOPE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Minimize,
    Maximize,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Maximize => 1.0,
            Direction::Minimize => -1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchSpace {
    tree: Arc<OutcomeTree>,
    /// Start of each internal node's free block in the parameter vector.
    offsets: Vec<usize>,
    dim: usize,
}

impl SearchSpace {
    pub fn new(tree: Arc<OutcomeTree>) -> Self {
        let mut offsets = Vec::with_capacity(tree.internal_nodes().len());
        let mut dim = 0;
        for v in tree.internal_nodes() {
            offsets.push(dim);
            dim += tree.children(v).len() - 1;
        }
        Self { tree, offsets, dim }
    }

    pub fn tree(&self) -> &Arc<OutcomeTree> {
        &self.tree
    }

    /// `sum over internal nodes of (children - 1)`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check_dim(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: params.len() });
        }
        Ok(())
    }

    fn decode_into(&self, params: &[f64], values: &mut [f64]) {
        let t = &self.tree;
        values[0] = 0.0;
        for (v, &off) in t.internal_nodes().zip(&self.offsets) {
            let kids = t.children(v);
            let last = kids.end - 1;
            let mut weighted = 0.0;
            for (i, c) in (kids.start..last).enumerate() {
                let d = params[off + i];
                values[c] = values[v] + d;
                weighted += t.branch_prob(c) * d;
            }
            values[last] = values[v] - weighted / t.branch_prob(last);
        }
    }

    /// Martingale with `X_0 = 0` and the given free increments.
    pub fn decode(&self, params: &[f64]) -> Result<AdaptedProcess> {
        self.check_dim(params)?;
        if let Some(i) = params.iter().position(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("parameter {i} is not finite")));
        }
        let mut values = vec![0.0; self.tree.node_count()];
        self.decode_into(params, &mut values);
        AdaptedProcess::new(Arc::clone(&self.tree), values)
    }

    /// Free increments of a process on this tree (the inverse of `decode` on
    /// martingales that start at 0).
    pub fn encode(&self, proc: &AdaptedProcess) -> Result<Vec<f64>> {
        if proc.tree().as_ref() != self.tree.as_ref() {
            return Err(Error::TreeMismatch);
        }
        let mut params = vec![0.0; self.dim];
        for (v, &off) in self.tree.internal_nodes().zip(&self.offsets) {
            let kids = self.tree.children(v);
            for (i, c) in (kids.start..kids.end - 1).enumerate() {
                params[off + i] = proc.increment(c);
            }
        }
        Ok(params)
    }

    /// All free increments 1: the simple random walk on a symmetric binary tree.
    pub fn walk_start(&self) -> Vec<f64> {
        vec![1.0; self.dim]
    }

    /// Free increments `(-1)^depth(parent)`: a `+-1` transform of the walk.
    pub fn alternating_start(&self) -> Vec<f64> {
        let mut params = vec![0.0; self.dim];
        for (v, &off) in self.tree.internal_nodes().zip(&self.offsets) {
            let s = if self.tree.node_depth(v).is_multiple_of(2) { 1.0 } else { -1.0 };
            for i in 0..self.tree.children(v).len() - 1 {
                params[off + i] = s;
            }
        }
        params
    }
}

/// Count of candidates checked against `c_p^p <= ratio <= C_p^p`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnvelopeTally {
    pub evaluated: u64,
    pub degenerate: u64,
    pub below_lower: u64,
    pub above_upper: u64,
    #[serde(with = "dec")]
    pub min_ratio: f64,
    #[serde(with = "dec")]
    pub max_ratio: f64,
}

impl EnvelopeTally {
    /// Empty tally with `min_ratio = +inf`, `max_ratio = -inf`.
    pub fn new() -> Self {
        Self { min_ratio: f64::INFINITY, max_ratio: f64::NEG_INFINITY, ..Default::default() }
    }

    pub fn violations(&self) -> u64 {
        self.below_lower + self.above_upper
    }

    fn record(&mut self, ratio: Option<f64>, lower: f64, upper: f64) {
        self.evaluated += 1;
        match ratio {
            None => self.degenerate += 1,
            Some(r) => {
                self.min_ratio = self.min_ratio.min(r);
                self.max_ratio = self.max_ratio.max(r);
                if r < lower * (1.0 - ENVELOPE_SLACK) {
                    self.below_lower += 1;
                }
                if r > upper * (1.0 + ENVELOPE_SLACK) {
                    self.above_upper += 1;
                }
            }
        }
    }

    pub fn merge(&mut self, other: &EnvelopeTally) {
        self.evaluated += other.evaluated;
        self.degenerate += other.degenerate;
        self.below_lower += other.below_lower;
        self.above_upper += other.above_upper;
        self.min_ratio = self.min_ratio.min(other.min_ratio);
        self.max_ratio = self.max_ratio.max(other.max_ratio);
    }
}

/// Reusable buffers for fast ratio evaluation inside the search loop.
struct Evaluator<'a> {
    space: &'a SearchSpace,
    p: f64,
    direction: Direction,
    lower: f64,
    upper: f64,
    values: Vec<f64>,
    s2: Vec<f64>,
    xs: Vec<f64>,
    tally: EnvelopeTally,
}

impl<'a> Evaluator<'a> {
    fn new(space: &'a SearchSpace, p: f64, direction: Direction) -> Result<Self> {
        let e = PExponent::new(p)?;
        let n = space.tree.node_count();
        Ok(Self {
            space,
            p,
            direction,
            lower: e.bdg_lower.powf(p),
            upper: e.bdg_upper.powf(p),
            values: vec![0.0; n],
            s2: vec![0.0; n],
            xs: vec![0.0; n],
            tally: EnvelopeTally::new(),
        })
    }

    fn ratio(&mut self, params: &[f64]) -> Option<f64> {
        let t = &self.space.tree;
        self.space.decode_into(params, &mut self.values);
        for v in 1..t.node_count() {
            let u = t.parent(v).expect("non-root");
            let prev = if u == 0 { 0.0 } else { self.values[u] };
            let d = self.values[v] - prev;
            self.s2[v] = self.s2[u] + d * d;
            let xprev = if u == 0 { 0.0 } else { self.xs[u] };
            self.xs[v] = xprev.max(self.values[v].abs());
        }
        let (mut es, mut ex) = (0.0, 0.0);
        let half_p = 0.5 * self.p;
        for leaf in t.leaves() {
            let w = t.path_prob(leaf);
            es += w * self.s2[leaf].powf(half_p);
            ex += w * self.xs[leaf].powf(self.p);
        }
        let r = if ex > DEGENERATE_FLOOR && es.is_finite() && ex.is_finite() { Some(es / ex) } else { None };
        self.tally.record(r, self.lower, self.upper);
        r
    }

    fn score(&mut self, params: &[f64]) -> f64 {
        match self.ratio(params) {
            Some(r) => self.direction.sign() * r,
            None => f64::NEG_INFINITY,
        }
    }
}

/// Ratio of the decoded martingale, negated for minimisation so that larger is
/// always better. Degenerate candidates score `-inf`.
pub fn objective(space: &SearchSpace, params: &[f64], p: f64, direction: Direction) -> Result<f64> {
    space.check_dim(params)?;
    check_exponent(p)?;
    let proc = space.decode(params)?;
    let m = PathFunctionals::of(&proc).moments(proc.tree(), p);
    if m.e_xstar_p > DEGENERATE_FLOOR {
        Ok(direction.sign() * m.e_sp / m.e_xstar_p)
    } else {
        Ok(f64::NEG_INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub evaluations: u64,
    pub sweeps: u64,
    pub restarts: usize,
    /// Best ratio after each accepted move of the winning local search.
    #[serde(with = "dec::vec")]
    pub history: Vec<f64>,
    /// Best ratio of each restart, by restart index.
    #[serde(with = "dec::vec")]
    pub restart_best: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub direction: Direction,
    #[serde(with = "dec")]
    pub p: f64,
    #[serde(with = "dec")]
    pub best_ratio: f64,
    #[serde(with = "dec::vec")]
    pub best_params: Vec<f64>,
    #[serde(with = "dec")]
    pub envelope_lower: f64,
    #[serde(with = "dec")]
    pub envelope_upper: f64,
    /// Whether `best_ratio` lies inside the envelope.
    pub within_envelope: bool,
    pub envelope: EnvelopeTally,
    pub trace: SearchTrace,
    #[serde(serialize_with = "certificate_as_file")]
    pub certificate: AdaptedProcess,
}

fn certificate_as_file<S: Serializer>(proc: &AdaptedProcess, s: S) -> std::result::Result<S::Ok, S::Error> {
    MartingaleFile::from_process(proc).serialize(s)
}

impl SearchResult {
    /// `true` when no evaluated candidate left the envelope.
    pub fn feasible(&self) -> bool {
        self.envelope.violations() == 0 && self.within_envelope
    }
}

fn emit(
    space: &SearchSpace,
    params: Vec<f64>,
    p: f64,
    direction: Direction,
    envelope: EnvelopeTally,
    trace: SearchTrace,
) -> Result<SearchResult> {
    let certificate = space.decode(&params)?;
    let best_ratio = bdg_ratio(&certificate, p)?;
    let e = PExponent::new(p)?;
    let (lo, hi) = (e.bdg_lower.powf(p), e.bdg_upper.powf(p));
    let within = best_ratio >= lo * (1.0 - ENVELOPE_SLACK) && best_ratio <= hi * (1.0 + ENVELOPE_SLACK);
    Ok(SearchResult {
        direction,
        p,
        best_ratio,
        best_params: params,
        envelope_lower: lo,
        envelope_upper: hi,
        within_envelope: within,
        envelope,
        trace,
        certificate,
    })
}

struct LocalOutcome {
    params: Vec<f64>,
    score: f64,
    evaluations: u64,
    sweeps: u64,
    history: Vec<f64>,
    tally: EnvelopeTally,
}

fn local_search_raw(space: &SearchSpace, start: &[f64], p: f64, direction: Direction, budget: u64) -> Result<LocalOutcome> {
    let mut eval = Evaluator::new(space, p, direction)?;
    let mut x = start.to_vec();
    let mut fx = eval.score(&x);
    let mut evaluations = 1;
    let mut sweeps = 0;
    let mut history = vec![direction.sign() * fx];
    let mut step = START_STEP;
    let mut trial = x.clone();
    while evaluations < budget && step >= STEP_FLOOR {
        let mut improved = false;
        'coords: for i in 0..x.len() {
            for delta in [step, -step] {
                if evaluations >= budget {
                    break 'coords;
                }
                trial.copy_from_slice(&x);
                trial[i] += delta;
                let ft = eval.score(&trial);
                evaluations += 1;
                if ft > fx {
                    x.copy_from_slice(&trial);
                    fx = ft;
                    improved = true;
                    history.push(direction.sign() * fx);
                    break;
                }
            }
        }
        sweeps += 1;
        if !improved {
            step *= SHRINK;
        }
        if x.is_empty() {
            break;
        }
    }
    Ok(LocalOutcome { params: x, score: fx, evaluations, sweeps, history, tally: eval.tally })
}

/// Coordinate-wise perturbation search: try `x_i +- step` for each coordinate,
/// keep strict improvements, halve the step after a sweep without one
/// (start 1, floor 1e-6). Stops at the step floor or after `budget` objective
/// evaluations. Deterministic in its inputs.
pub fn local_search(space: &SearchSpace, start: &[f64], p: f64, direction: Direction, budget: u64) -> Result<SearchResult> {
    space.check_dim(start)?;
    if budget == 0 {
        return Err(Error::Domain("search budget must be at least 1".into()));
    }
    let out = local_search_raw(space, start, p, direction, budget)?;
    if out.score == f64::NEG_INFINITY {
        return Err(Error::Degenerate("every visited candidate is identically zero".into()));
    }
    let best = direction.sign() * out.score;
    let trace = SearchTrace {
        evaluations: out.evaluations,
        sweeps: out.sweeps,
        restarts: 1,
        history: out.history,
        restart_best: vec![best],
    };
    emit(space, out.params, p, direction, out.tally, trace)
}

/// Start vector of restart `index`: 0 is the walk, 1 the alternating `+-1`
/// transform, the rest are uniform on `[-1, 1]` from stream `index` of `seed`.
pub fn restart_start(space: &SearchSpace, seed: u64, index: usize) -> Vec<f64> {
    match index {
        0 => space.walk_start(),
        1 => space.alternating_start(),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            (0..space.dim()).map(|_| rng.gen_range(-1.0..=1.0)).collect()
        }
    }
}

/// Best of `restarts` local searches. Restarts run in parallel; results are
/// merged by restart index (ties keep the lower index), so the outcome does not
/// depend on scheduling.
pub fn multi_restart_search(
    space: &SearchSpace,
    p: f64,
    direction: Direction,
    restarts: usize,
    seed: u64,
    budget: u64,
) -> Result<SearchResult> {
    check_exponent(p)?;
    if restarts == 0 {
        return Err(Error::Domain("need at least one restart".into()));
    }
    if budget == 0 {
        return Err(Error::Domain("search budget must be at least 1".into()));
    }
    let mut outcomes: Vec<LocalOutcome> = (0..restarts)
        .into_par_iter()
        .map(|i| local_search_raw(space, &restart_start(space, seed, i), p, direction, budget))
        .collect::<Result<_>>()?;

    let mut tally = EnvelopeTally::new();
    let mut best = 0;
    for (i, o) in outcomes.iter().enumerate() {
        tally.merge(&o.tally);
        if o.score > outcomes[best].score {
            best = i;
        }
    }
    if outcomes[best].score == f64::NEG_INFINITY {
        return Err(Error::Degenerate("every visited candidate is identically zero".into()));
    }
    let trace = SearchTrace {
        evaluations: outcomes.iter().map(|o| o.evaluations).sum(),
        sweeps: outcomes.iter().map(|o| o.sweeps).sum(),
        restarts,
        history: outcomes[best].history.clone(),
        restart_best: outcomes.iter().map(|o| direction.sign() * o.score).collect(),
    };
    let params = outcomes.swap_remove(best).params;
    emit(space, params, p, direction, tally, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::gen_symmetric_walk;
    use crate::tree::{validate_martingale, BuildOptions, DEFAULT_MAX_LEAVES, MARTINGALE_TOL};

    fn binary(depth: usize) -> SearchSpace {
        SearchSpace::new(Arc::new(OutcomeTree::uniform(depth, 2, DEFAULT_MAX_LEAVES).unwrap()))
    }

    #[test]
    fn dimension_counts_free_increments() {
        assert_eq!(binary(4).dim(), 15);
        let t = OutcomeTree::uniform(2, 3, DEFAULT_MAX_LEAVES).unwrap();
        assert_eq!(SearchSpace::new(Arc::new(t)).dim(), 2 * 4);
    }

    #[test]
    fn decode_examples() {
        let s = binary(3);
        let z = s.decode(&[0.0; 7]).unwrap();
        assert!(z.is_zero());
        let w = s.decode(&s.walk_start()).unwrap();
        assert_eq!(w, gen_symmetric_walk(3).unwrap());
        let t = OutcomeTree::grow(1, BuildOptions::default(), |_, _| vec![1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let s = SearchSpace::new(Arc::new(t));
        let m = s.decode(&[2.0]).unwrap();
        assert_eq!(m.values()[1], 2.0);
        assert!((m.values()[2] + 1.0).abs() < 1e-15);
        assert!(matches!(s.decode(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn decode_always_martingale_and_encode_inverts() {
        let t = OutcomeTree::grow(3, BuildOptions::default(), |v, _| {
            if v % 2 == 0 { vec![0.2, 0.5, 0.3] } else { vec![0.9, 0.1] }
        })
        .unwrap();
        let s = SearchSpace::new(Arc::new(t));
        let params = restart_start(&s, 5, 7);
        let m = s.decode(&params).unwrap();
        assert!(validate_martingale(&m, MARTINGALE_TOL).pass);
        for (a, b) in s.encode(&m).unwrap().iter().zip(&params) {
            assert!((a - b).abs() <= 1e-14 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn objective_examples() {
        let s = binary(2);
        let walk = s.walk_start();
        assert!((objective(&s, &walk, 2.0, Direction::Maximize).unwrap() - 0.8).abs() < 1e-15);
        assert!((objective(&s, &walk, 2.0, Direction::Minimize).unwrap() + 0.8).abs() < 1e-15);
        let params = restart_start(&s, 3, 4);
        let base = objective(&s, &params, 3.0, Direction::Maximize).unwrap();
        let scaled: Vec<f64> = params.iter().map(|x| -2.5 * x).collect();
        assert!((objective(&s, &scaled, 3.0, Direction::Maximize).unwrap() - base).abs() < 1e-10);
        assert_eq!(objective(&s, &[0.0; 3], 3.0, Direction::Maximize).unwrap(), f64::NEG_INFINITY);
        let one = binary(1);
        assert_eq!(objective(&one, &[0.37], 4.0, Direction::Maximize).unwrap(), 1.0);
    }

    #[test]
    fn one_step_tree_is_flat() {
        let one = binary(1);
        let r = local_search(&one, &[0.5], 3.0, Direction::Maximize, 100).unwrap();
        assert_eq!(r.best_ratio, 1.0);
    }

    #[test]
    fn local_search_history_is_monotone() {
        let s = binary(3);
        for dir in [Direction::Minimize, Direction::Maximize] {
            let r = local_search(&s, &restart_start(&s, 1, 3), 3.0, dir, 2000).unwrap();
            for w in r.trace.history.windows(2) {
                match dir {
                    Direction::Maximize => assert!(w[1] > w[0]),
                    Direction::Minimize => assert!(w[1] < w[0]),
                }
            }
            assert!(r.trace.evaluations <= 2000);
            assert!(r.feasible());
        }
    }

    #[test]
    fn local_search_p2_stays_in_doob_envelope() {
        let s = binary(3);
        for dir in [Direction::Minimize, Direction::Maximize] {
            let r = local_search(&s, &restart_start(&s, 9, 2), 2.0, dir, 3000).unwrap();
            assert!(r.best_ratio >= 0.25 && r.best_ratio <= 1.0 + 1e-12, "{}", r.best_ratio);
            assert!(r.feasible());
        }
    }

    #[test]
    fn multi_restart_is_deterministic_and_no_worse_than_walk() {
        let s = binary(3);
        let walk_ratio = bdg_ratio(&s.decode(&s.walk_start()).unwrap(), 3.0).unwrap();
        let a = multi_restart_search(&s, 3.0, Direction::Minimize, 6, 42, 500).unwrap();
        let b = multi_restart_search(&s, 3.0, Direction::Minimize, 6, 42, 500).unwrap();
        assert_eq!(a, b);
        assert!(a.best_ratio <= walk_ratio);
        let single = multi_restart_search(&s, 3.0, Direction::Maximize, 1, 0, 300).unwrap();
        assert!(single.best_ratio >= walk_ratio);
        assert_eq!(single.trace.restarts, 1);
    }

    #[test]
    fn rejects_bad_budget_and_restarts() {
        let s = binary(2);
        assert!(local_search(&s, &[1.0; 3], 3.0, Direction::Maximize, 0).is_err());
        assert!(multi_restart_search(&s, 3.0, Direction::Maximize, 0, 1, 10).is_err());
        assert!(local_search(&s, &[1.0; 2], 3.0, Direction::Maximize, 10).is_err());
    }
}
