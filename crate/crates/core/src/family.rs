//! Inline generator specs such as `walk:depth=5` or
//! `random:depth=5,branch=3,seed=7`.

use std::fmt;

use crate::error::{Error, Result};
use crate::generators::{gen_random_martingale, gen_symmetric_walk, gen_transform, random_predictable_multipliers};
use crate::tree::AdaptedProcess;

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyKind {
    /// Simple symmetric random walk.
    Walk,
    /// `count` random martingales with seeds `seed, seed + 1, ...`.
    Random { branching: usize, seed: u64, scale: f64, count: usize },
    /// The walk transformed by random predictable multipliers in `[-bound, bound]`.
    Transform { seed: u64, bound: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub depth: usize,
}

/// Values used for keys a spec leaves out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyDefaults {
    pub depth: usize,
    pub branching: usize,
    pub seed: u64,
}

impl Default for FamilyDefaults {
    fn default() -> Self {
        Self { depth: 4, branching: 2, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct Member {
    pub process: AdaptedProcess,
    pub seed: Option<u64>,
}

fn bad(spec: &str, msg: impl Into<String>) -> Error {
    Error::Parse { at: format!("family spec {spec:?}"), msg: msg.into() }
}

impl FamilySpec {
    pub fn parse(spec: &str, defaults: FamilyDefaults) -> Result<Self> {
        let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let mut depth = defaults.depth;
        let mut branching = defaults.branching;
        let mut seed = defaults.seed;
        let mut scale = 1.0;
        let mut count = 1usize;
        let mut bound = 1.0;
        for pair in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = pair.split_once('=').ok_or_else(|| bad(spec, format!("expected key=value, got {pair:?}")))?;
            let num = |what: &str| bad(spec, format!("{what} must be a number, got {v:?}"));
            match k.trim() {
                "depth" => depth = v.parse().map_err(|_| num("depth"))?,
                "branch" | "branching" => branching = v.parse().map_err(|_| num("branch"))?,
                "seed" => seed = v.parse().map_err(|_| num("seed"))?,
                "scale" => scale = v.parse().map_err(|_| num("scale"))?,
                "count" => count = v.parse().map_err(|_| num("count"))?,
                "bound" => bound = v.parse().map_err(|_| num("bound"))?,
                other => return Err(bad(spec, format!("unknown key {other:?}"))),
            }
        }
        if depth == 0 {
            return Err(bad(spec, "depth must be at least 1"));
        }
        let kind = match name.trim() {
            "walk" => FamilyKind::Walk,
            "random" => {
                if count == 0 {
                    return Err(bad(spec, "count must be at least 1"));
                }
                FamilyKind::Random { branching, seed, scale, count }
            }
            "transform" => FamilyKind::Transform { seed, bound },
            other => return Err(bad(spec, format!("unknown family {other:?}; expected walk, random or transform"))),
        };
        Ok(Self { kind, depth })
    }

    pub fn generate(&self) -> Result<Vec<Member>> {
        match &self.kind {
            FamilyKind::Walk => Ok(vec![Member { process: gen_symmetric_walk(self.depth)?, seed: None }]),
            FamilyKind::Random { branching, seed, scale, count } => (0..*count as u64)
                .map(|i| {
                    let s = seed.wrapping_add(i);
                    Ok(Member { process: gen_random_martingale(self.depth, *branching, s, *scale)?, seed: Some(s) })
                })
                .collect(),
            FamilyKind::Transform { seed, bound } => {
                let base = gen_symmetric_walk(self.depth)?;
                let m = random_predictable_multipliers(base.tree(), *seed, *bound);
                Ok(vec![Member { process: gen_transform(&base, &m, *bound)?, seed: Some(*seed) }])
            }
        }
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FamilyKind::Walk => write!(f, "walk:depth={}", self.depth),
            FamilyKind::Random { branching, seed, scale, count } => write!(
                f,
                "random:depth={},branch={branching},seed={seed},scale={scale},count={count}",
                self.depth
            ),
            FamilyKind::Transform { seed, bound } => write!(f, "transform:depth={},seed={seed},bound={bound}", self.depth),
        }
    }
}
