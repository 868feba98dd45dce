//! Structured results of identity and inequality checks.

use serde::{Deserialize, Serialize};

use crate::format::dec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Identity,
    Inequality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    /// Both sides vanish because the process is identically zero.
    DegeneratePass,
    Fail,
    /// The check does not cover this exponent.
    Skipped,
    /// A precondition (usually the martingale property) does not hold.
    Inapplicable,
}

/// One verified identity or inequality.
///
/// For identities `margin = |lhs - rhs|` and the check passes iff
/// `margin <= tolerance`. For inequalities (`lhs <= rhs`) `margin = rhs - lhs`
/// and the check passes iff `lhs <= rhs + tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_id: String,
    pub kind: CheckKind,
    #[serde(with = "dec")]
    pub lhs: f64,
    #[serde(with = "dec")]
    pub rhs: f64,
    #[serde(with = "dec")]
    pub margin: f64,
    #[serde(with = "dec")]
    pub tolerance: f64,
    pub outcome: Outcome,
    pub pass: bool,
    pub anchor: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn scale(lhs: f64, rhs: f64) -> f64 {
    lhs.abs().max(rhs.abs()).max(1.0)
}

impl CheckReport {
    /// Identity check with tolerance `rel * max(|lhs|, |rhs|, 1)`.
    pub fn identity(id: &str, anchor: &str, lhs: f64, rhs: f64, rel: f64) -> Self {
        Self::identity_abs(id, anchor, lhs, rhs, rel * scale(lhs, rhs))
    }

    pub fn identity_abs(id: &str, anchor: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let margin = (lhs - rhs).abs();
        let ok = margin <= tolerance;
        Self {
            check_id: id.to_string(),
            kind: CheckKind::Identity,
            lhs,
            rhs,
            margin,
            tolerance,
            outcome: if ok { Outcome::Pass } else { Outcome::Fail },
            pass: ok,
            anchor: anchor.to_string(),
            note: None,
        }
    }

    /// Inequality `lhs <= rhs` with additive slack `rel * max(|lhs|, |rhs|, 1)`.
    pub fn inequality(id: &str, anchor: &str, lhs: f64, rhs: f64, rel: f64) -> Self {
        let tolerance = rel * scale(lhs, rhs);
        let ok = lhs <= rhs + tolerance;
        Self {
            check_id: id.to_string(),
            kind: CheckKind::Inequality,
            lhs,
            rhs,
            margin: rhs - lhs,
            tolerance,
            outcome: if ok { Outcome::Pass } else { Outcome::Fail },
            pass: ok,
            anchor: anchor.to_string(),
            note: None,
        }
    }

    fn without_values(id: &str, anchor: &str, kind: CheckKind, outcome: Outcome, note: String) -> Self {
        Self {
            check_id: id.to_string(),
            kind,
            lhs: 0.0,
            rhs: 0.0,
            margin: 0.0,
            tolerance: 0.0,
            outcome,
            pass: outcome != Outcome::Fail,
            anchor: anchor.to_string(),
            note: Some(note),
        }
    }

    pub fn skipped(id: &str, anchor: &str, kind: CheckKind, reason: impl Into<String>) -> Self {
        Self::without_values(id, anchor, kind, Outcome::Skipped, reason.into())
    }

    pub fn inapplicable(id: &str, anchor: &str, kind: CheckKind, reason: impl Into<String>) -> Self {
        Self::without_values(id, anchor, kind, Outcome::Inapplicable, reason.into())
    }

    pub fn failed(id: &str, anchor: &str, kind: CheckKind, reason: impl Into<String>) -> Self {
        Self::without_values(id, anchor, kind, Outcome::Fail, reason.into())
    }

    /// Turns a passing check on a zero process into a tagged degenerate pass.
    pub fn degenerate(mut self) -> Self {
        if self.pass {
            self.outcome = Outcome::DegeneratePass;
        }
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Hash of the tree shape and probabilities plus the generator seed, when known.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub tree: String,
    pub values: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub fingerprint: Fingerprint,
    #[serde(with = "dec")]
    pub p: f64,
    pub checks: Vec<CheckReport>,
    pub overall_pass: bool,
}

impl SuiteReport {
    pub fn new(fingerprint: Fingerprint, p: f64, checks: Vec<CheckReport>) -> Self {
        let overall_pass = checks.iter().all(|c| c.pass);
        Self { fingerprint, p, checks, overall_pass }
    }

    pub fn get(&self, id: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.check_id == id)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckReport> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inequality_pass_iff_within_slack() {
        let ok = CheckReport::inequality("x", "a", 1.0 + 5e-13, 1.0, 1e-12);
        assert!(ok.pass);
        assert!(ok.margin < 0.0);
        let bad = CheckReport::inequality("x", "a", 1.0 + 5e-12, 1.0, 1e-12);
        assert!(!bad.pass);
        assert_eq!(bad.outcome, Outcome::Fail);
    }

    #[test]
    fn identity_tolerance_is_recorded() {
        let r = CheckReport::identity("x", "a", 1000.0, 1000.0 + 1e-7, 1e-9);
        assert!(r.pass);
        assert!((r.tolerance / 1e-6 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn suite_passes_only_if_all_members_pass() {
        let fp = Fingerprint { tree: "t".into(), values: "v".into(), seed: None };
        let checks = vec![
            CheckReport::identity("a", "", 1.0, 1.0, 1e-9),
            CheckReport::skipped("b", "", CheckKind::Inequality, "range"),
        ];
        assert!(SuiteReport::new(fp.clone(), 2.0, checks.clone()).overall_pass);
        let mut more = checks;
        more.push(CheckReport::inequality("c", "", 2.0, 1.0, 1e-12));
        let s = SuiteReport::new(fp, 2.0, more);
        assert!(!s.overall_pass);
        assert_eq!(s.failures().count(), 1);
    }
}
