//! Machine checks of the identities and inequalities that lead from the
//! Bregman divergence of `|x|^p` to the Burkholder inequality, on one
//! martingale and one exponent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::dec;
use crate::functionals::{moment_unchecked, Moments, PathFunctionals};
use crate::numeric::CompensatedSum;
use crate::report::{CheckKind, CheckReport, Fingerprint, SuiteReport};
use crate::scalar::{bregman_raw, check_exponent, signed_power, PExponent};
use crate::tree::{close_martingale, expectation_unchecked, validate_martingale, AdaptedProcess};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Identities pass within `identity_rel * max(|lhs|, |rhs|, 1)`.
    #[serde(with = "dec")]
    pub identity_rel: f64,
    /// Inequalities get additive slack `inequality_rel * max(|lhs|, |rhs|, 1)`.
    #[serde(with = "dec")]
    pub inequality_rel: f64,
    /// Per-node conditional-mean defect, scaled by `1 + |X_v|`.
    #[serde(with = "dec")]
    pub martingale: f64,
    /// Cross terms `E[dX_j dZ_l]`, scaled by `max(1, sqrt(E S_n^2(X) E S_n^2(Z)))`.
    #[serde(with = "dec")]
    pub orthogonality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { identity_rel: 1e-9, inequality_rel: 1e-12, martingale: 1e-10, orthogonality: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub tolerances: Tolerances,
    /// Generator seed recorded in the fingerprint, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

mod anchor {
    pub const MOMENT: &str = "E|X_n|^p = E sum_j F_p(X_(j-1), X_j)";
    pub const SQUARE: &str = "p = 2: F_2(a, b) = (b - a)^2 so E X_n^2 = E S_n^2";
    pub const ORTHO: &str = "E[dX_j dZ_l] = 0 for j != l (martingale property)";
    pub const PAIRING: &str = "|E X_n Z_n| <= (E S_n^p(X))^(1/p) (E S_n^q(Z))^(1/q)";
    pub const DOOB: &str = "Doob: E|X_n|^p <= E(X_n^*)^p <= (p/(p-1))^p E|X_n|^p";
    pub const BDG: &str = "c_p^p E(X_n^*)^p <= E S_n^p <= C_p^p E(X_n^*)^p";
    pub const GARSIA: &str = "p > 2: E S_n^p <= (2p)^(p/2) E(X_n^*)^p";
    pub const PBIG: &str = "p > 2: D_p^(-p/2) (p/(p-1))^(-p^2/2) E(X_n^*)^p <= E S_n^p";
    pub const PSMALL: &str = "1 < p < 2: E S_n^p <= d_p^(p/2) E(X_n^*)^p (as displayed)";
    pub const PSMALL_FIXED: &str = "1 < p < 2: E S_n^p <= d_p^(-p/2) E(X_n^*)^p";
    pub const DUAL: &str = "|X_n^<p-1>|^q = |X_n|^p so E|Z_n|^q = E|X_n|^p";
}

fn moments(proc: &AdaptedProcess, p: f64) -> Moments {
    PathFunctionals::of(proc).moments(proc.tree(), p)
}

/// Both sides of `E|X_n|^p = E sum_j F_p(X_(j-1), X_j)`. The right side is
/// summed edge by edge, each edge weighted by the probability of its lower
/// node, which equals the probability-weighted sum of the per-path sums.
pub fn moment_identity_sides(proc: &AdaptedProcess, p: f64) -> (f64, f64) {
    let tree = proc.tree();
    let lhs = moment_unchecked(tree, proc.leaf_values(), p);
    let mut rhs = CompensatedSum::new();
    for v in 1..tree.node_count() {
        let u = tree.parent(v).expect("non-root");
        let prev = if u == 0 { 0.0 } else { proc.value(u) };
        rhs.add(tree.path_prob(v) * bregman_raw(p, prev, proc.value(v)));
    }
    (lhs, rhs.value())
}

pub fn check_moment_identity(proc: &AdaptedProcess, p: f64, tol: &Tolerances) -> Result<CheckReport> {
    check_exponent(p)?;
    if !proc.is_martingale(tol.martingale) {
        return Ok(CheckReport::inapplicable(
            "moment.identity",
            anchor::MOMENT,
            CheckKind::Identity,
            "input is not a martingale; the identity does not hold in general",
        ));
    }
    let (lhs, rhs) = moment_identity_sides(proc, p);
    Ok(CheckReport::identity("moment.identity", anchor::MOMENT, lhs, rhs, tol.identity_rel))
}

/// `E S_n^2 = E X_n^2`.
pub fn check_square_identity(proc: &AdaptedProcess, tol: &Tolerances) -> CheckReport {
    let m = moments(proc, 2.0);
    CheckReport::identity("square.identity", anchor::SQUARE, m.e_sp, m.e_abs_p, tol.identity_rel)
}

/// `max_{j != l} |E[dX_j dZ_l]|`, both processes read with `X_0 = Z_0 = 0`.
pub fn check_orthogonality(x: &AdaptedProcess, z: &AdaptedProcess, tol: &Tolerances) -> Result<CheckReport> {
    if !x.same_tree(z) {
        return Err(Error::TreeMismatch);
    }
    let tree = x.tree();
    let n = tree.depth();
    let mut cross = vec![CompensatedSum::new(); n * n];
    let mut dx = vec![0.0; n];
    let mut dz = vec![0.0; n];
    for leaf in tree.leaves() {
        let w = tree.path_prob(leaf);
        for (j, v) in tree.path_to(leaf).into_iter().skip(1).enumerate() {
            dx[j] = x.increment(v);
            dz[j] = z.increment(v);
        }
        for j in 0..n {
            for l in 0..n {
                if j != l {
                    cross[j * n + l].add(w * dx[j] * dz[l]);
                }
            }
        }
    }
    let worst = cross.iter().map(|c| c.value().abs()).fold(0.0, f64::max);
    let sx = moments(x, 2.0).e_sp;
    let sz = moments(z, 2.0).e_sp;
    let scale = (sx * sz).sqrt().max(1.0);
    Ok(CheckReport::identity_abs("dual.orthogonality", anchor::ORTHO, worst, 0.0, tol.orthogonality * scale)
        .with_note("lhs is max over j != l of |E dX_j dZ_l|"))
}

pub fn check_pairing(x: &AdaptedProcess, z: &AdaptedProcess, p: f64, tol: &Tolerances) -> Result<CheckReport> {
    check_exponent(p)?;
    if !x.same_tree(z) {
        return Err(Error::TreeMismatch);
    }
    let q = p / (p - 1.0);
    let tree = x.tree();
    let prod: Vec<f64> = x.leaf_values().iter().zip(z.leaf_values()).map(|(a, b)| a * b).collect();
    let lhs = expectation_unchecked(tree, &prod).abs();
    let rhs = moments(x, p).e_sp.powf(1.0 / p) * moments(z, q).e_sp.powf(1.0 / q);
    let r = CheckReport::inequality("dual.pairing", anchor::PAIRING, lhs, rhs, tol.inequality_rel);
    Ok(if lhs == 0.0 && rhs == 0.0 { r.degenerate() } else { r })
}

/// Two reports: `doob.lower` (`E|X_n|^p <= E(X_n^*)^p`) and `doob.upper`.
pub fn check_doob(proc: &AdaptedProcess, p: f64, tol: &Tolerances) -> Result<[CheckReport; 2]> {
    let e = PExponent::new(p)?;
    let m = moments(proc, p);
    Ok([
        CheckReport::inequality("doob.lower", anchor::DOOB, m.e_abs_p, m.e_xstar_p, tol.inequality_rel),
        CheckReport::inequality("doob.upper", anchor::DOOB, m.e_xstar_p, e.doob * m.e_abs_p, tol.inequality_rel),
    ])
}

/// Two reports for the two-sided inequality with the tabulated constants:
/// `bdg.lower` and `bdg.upper`. A zero process passes both, tagged degenerate.
pub fn check_bdg(proc: &AdaptedProcess, p: f64, tol: &Tolerances) -> Result<[CheckReport; 2]> {
    let e = PExponent::new(p)?;
    let m = moments(proc, p);
    let lower = CheckReport::inequality(
        "bdg.lower",
        anchor::BDG,
        e.bdg_lower.powf(p) * m.e_xstar_p,
        m.e_sp,
        tol.inequality_rel,
    );
    let upper = CheckReport::inequality(
        "bdg.upper",
        anchor::BDG,
        m.e_sp,
        e.bdg_upper.powf(p) * m.e_xstar_p,
        tol.inequality_rel,
    );
    if m.e_xstar_p == 0.0 {
        Ok([lower.degenerate(), upper.degenerate()])
    } else {
        Ok([lower, upper])
    }
}

fn require_range(p: f64, ok: bool, what: &str, range: &str) -> Result<()> {
    check_exponent(p)?;
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} is only established for {range}, got p = {p}")))
    }
}

/// `E S_n^p <= (2p)^(p/2) E(X_n^*)^p`, for `p > 2`.
pub fn check_garsia_bound(proc: &AdaptedProcess, p: f64, tol: &Tolerances) -> Result<CheckReport> {
    require_range(p, p > 2.0, "the (2p)^(p/2) bound", "p > 2")?;
    let m = moments(proc, p);
    let r = CheckReport::inequality(
        "garsia.upper",
        anchor::GARSIA,
        m.e_sp,
        (2.0 * p).powf(p / 2.0) * m.e_xstar_p,
        tol.inequality_rel,
    );
    Ok(if proc.is_zero() { r.degenerate() } else { r })
}

/// `D_p^(-p/2) (p/(p-1))^(-p^2/2) E(X_n^*)^p <= E S_n^p` with `D_p = p(p-1)/2`, for `p > 2`.
pub fn check_lower_pbig(proc: &AdaptedProcess, p: f64, tol: &Tolerances) -> Result<CheckReport> {
    require_range(p, p > 2.0, "the large-p lower bound", "p > 2")?;
    let m = moments(proc, p);
    let big_d = p * (p - 1.0) / 2.0;
    let factor = big_d.powf(-p / 2.0) * (p / (p - 1.0)).powf(-p * p / 2.0);
    let r = CheckReport::inequality("pbig.lower", anchor::PBIG, factor * m.e_xstar_p, m.e_sp, tol.inequality_rel);
    Ok(if proc.is_zero() { r.degenerate() } else { r })
}

/// The displayed small-`p` bound `E S_n^p <= d_p^(p/2) E(X_n^*)^p` with
/// `d_p = p(p-1)/2`, for `1 < p < 2`. Checked as displayed; it fails already on
/// one-step martingales because `d_p < 1`. [`check_upper_psmall_corrected`]
/// checks the bound the argument actually yields.
pub fn check_lower_psmall(proc: &AdaptedProcess, p: f64, tol: &Tolerances) -> Result<CheckReport> {
    require_range(p, p < 2.0, "the small-p upper bound", "1 < p < 2")?;
    let m = moments(proc, p);
    let d = p * (p - 1.0) / 2.0;
    let r = CheckReport::inequality("psmall.upper", anchor::PSMALL, m.e_sp, d.powf(p / 2.0) * m.e_xstar_p, tol.inequality_rel);
    Ok(if proc.is_zero() { r.degenerate() } else { r })
}

/// `E S_n^p <= d_p^(-p/2) E(X_n^*)^p` for `1 < p < 2`.
pub fn check_upper_psmall_corrected(proc: &AdaptedProcess, p: f64, tol: &Tolerances) -> Result<CheckReport> {
    require_range(p, p < 2.0, "the small-p upper bound", "1 < p < 2")?;
    let m = moments(proc, p);
    let d = p * (p - 1.0) / 2.0;
    let r = CheckReport::inequality(
        "psmall.upper_corrected",
        anchor::PSMALL_FIXED,
        m.e_sp,
        d.powf(-p / 2.0) * m.e_xstar_p,
        tol.inequality_rel,
    );
    Ok(if proc.is_zero() { r.degenerate() } else { r })
}

/// The dual martingale `Z_j = E[X_n^<p-1> | F_j]`.
pub fn dual_closure(proc: &AdaptedProcess, p: f64) -> Result<AdaptedProcess> {
    check_exponent(p)?;
    let y: Vec<f64> = proc.leaf_values().iter().map(|&x| signed_power(x, p - 1.0)).collect();
    close_martingale(proc.tree(), &y)
}

/// `E|Z_n|^q = E|X_n|^p` for the dual closure.
pub fn check_dual_moment(proc: &AdaptedProcess, z: &AdaptedProcess, p: f64, tol: &Tolerances) -> CheckReport {
    let q = p / (p - 1.0);
    let lhs = moment_unchecked(z.tree(), z.leaf_values(), q);
    let rhs = moment_unchecked(proc.tree(), proc.leaf_values(), p);
    CheckReport::identity("dual.moment", anchor::DUAL, lhs, rhs, tol.identity_rel)
}

fn fingerprint(proc: &AdaptedProcess, seed: Option<u64>) -> Fingerprint {
    Fingerprint { tree: proc.tree().shape_hash(), values: proc.values_hash(), seed }
}

/// Every applicable check, in a fixed order:
/// `martingale.valid`, `square.identity`, `moment.identity`, `doob.*`, `bdg.*`,
/// `garsia.upper` and `pbig.lower` (p > 2), `psmall.upper` and
/// `psmall.upper_corrected` (1 < p < 2), `dual.moment`, `dual.orthogonality`,
/// `dual.pairing`. Checks outside their exponent range are reported as
/// skipped; on a non-martingale everything after the validity check is
/// reported as inapplicable.
pub fn run_suite(proc: &AdaptedProcess, p: f64, config: &SuiteConfig) -> Result<SuiteReport> {
    check_exponent(p)?;
    let tol = &config.tolerances;
    let mut checks = vec![validate_martingale(proc, tol.martingale)];

    let big = p > 2.0;
    let small = p < 2.0;
    let planned: [(&str, &str, CheckKind, bool); 13] = [
        ("square.identity", anchor::SQUARE, CheckKind::Identity, true),
        ("moment.identity", anchor::MOMENT, CheckKind::Identity, true),
        ("doob.lower", anchor::DOOB, CheckKind::Inequality, true),
        ("doob.upper", anchor::DOOB, CheckKind::Inequality, true),
        ("bdg.lower", anchor::BDG, CheckKind::Inequality, true),
        ("bdg.upper", anchor::BDG, CheckKind::Inequality, true),
        ("garsia.upper", anchor::GARSIA, CheckKind::Inequality, big),
        ("pbig.lower", anchor::PBIG, CheckKind::Inequality, big),
        ("psmall.upper", anchor::PSMALL, CheckKind::Inequality, small),
        ("psmall.upper_corrected", anchor::PSMALL_FIXED, CheckKind::Inequality, small),
        ("dual.moment", anchor::DUAL, CheckKind::Identity, true),
        ("dual.orthogonality", anchor::ORTHO, CheckKind::Identity, true),
        ("dual.pairing", anchor::PAIRING, CheckKind::Inequality, true),
    ];

    if !checks[0].pass {
        for (id, anc, kind, _) in planned {
            checks.push(CheckReport::inapplicable(id, anc, kind, "input failed martingale validation"));
        }
        return Ok(SuiteReport::new(fingerprint(proc, config.seed), p, checks));
    }

    let z = dual_closure(proc, p)?;
    for (id, anc, kind, in_range) in planned {
        if !in_range {
            let why = if id.starts_with("psmall") { "requires 1 < p < 2" } else { "requires p > 2" };
            checks.push(CheckReport::skipped(id, anc, kind, why));
            continue;
        }
        let report = match id {
            "square.identity" => check_square_identity(proc, tol),
            "moment.identity" => check_moment_identity(proc, p, tol)?,
            "doob.lower" => check_doob(proc, p, tol)?[0].clone(),
            "doob.upper" => check_doob(proc, p, tol)?[1].clone(),
            "bdg.lower" => check_bdg(proc, p, tol)?[0].clone(),
            "bdg.upper" => check_bdg(proc, p, tol)?[1].clone(),
            "garsia.upper" => check_garsia_bound(proc, p, tol)?,
            "pbig.lower" => check_lower_pbig(proc, p, tol)?,
            "psmall.upper" => check_lower_psmall(proc, p, tol)?,
            "psmall.upper_corrected" => check_upper_psmall_corrected(proc, p, tol)?,
            "dual.moment" => check_dual_moment(proc, &z, p, tol),
            "dual.orthogonality" => check_orthogonality(proc, &z, tol)?,
            "dual.pairing" => check_pairing(proc, &z, p, tol)?,
            other => unreachable!("unplanned check {other}"),
        };
        checks.push(report);
    }
    Ok(SuiteReport::new(fingerprint(proc, config.seed), p, checks))
}
