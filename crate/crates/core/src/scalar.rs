//! Scalar kernels: signed powers, the Bregman divergence of `|x|^p`, its
//! comparison weight, and the closed-form constants of the Burkholder
//! inequality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::golden_section_max;
use crate::quadrature;
use crate::report::CheckReport;

/// `|b - a| <= NEAR_DIAGONAL * |a|` switches the divergence to its series form.
/// The closed form loses about `eps / h^2` relative accuracy at `h = b/a - 1`,
/// which is still ~1e-11 at the switch for `p` close to 1; the series needs at
/// most ~20 terms here.
const NEAR_DIAGONAL: f64 = 0.1;

/// `x^<k> = |x|^k sign(x)`, with `0^<k> = 0` for every `k`.
pub fn signed_power(x: f64, k: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs().powf(k).copysign(x)
    }
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidExponent(p))
    }
}

/// `F_p(1, 1 + h) = sum_{k >= 2} binom(p, k) h^k`, the Taylor expansion of
/// `p(p-1) h^2 int_0^1 (1 + h s)^(p-2) (1 - s) ds`.
fn bregman_series(p: f64, h: f64) -> f64 {
    let mut coeff = p * (p - 1.0) / 2.0;
    let mut power = h * h;
    let mut sum = coeff * power;
    for k in 3..64 {
        coeff *= (p - (k as f64) + 1.0) / k as f64;
        power *= h;
        let term = coeff * power;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// Divergence without the exponent check; `p > 1` is the caller's job.
pub(crate) fn bregman_raw(p: f64, a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return b.abs().powf(p);
    }
    if (b - a).abs() <= NEAR_DIAGONAL * a.abs() {
        let h = b / a - 1.0;
        return a.abs().powf(p) * bregman_series(p, h);
    }
    let v = b.abs().powf(p) - a.abs().powf(p) - p * (b - a) * signed_power(a, p - 1.0);
    v.max(0.0)
}

/// Bregman divergence of `x -> |x|^p`:
/// `F_p(a, b) = |b|^p - |a|^p - p (b - a) a^<p-1>`.
///
/// Close to the diagonal the closed form cancels catastrophically, so there
/// the value is taken from the convergent binomial series of `F_p(1, b/a)`
/// scaled by `|a|^p`.
pub fn bregman_divergence(p: f64, a: f64, b: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(bregman_raw(p, a, b))
}

pub(crate) fn g_weight_raw(p: f64, a: f64, b: f64) -> f64 {
    let gap = b - a;
    if gap == 0.0 {
        return 0.0;
    }
    gap * gap * a.abs().max(b.abs()).powf(p - 2.0)
}

/// `G_p(a, b) = (b - a)^2 max(|a|, |b|)^(p - 2)`.
///
/// `G_p(0, 0)` is 0 for every `p`, including `p < 2` where the formula reads
/// `0 * 0^(negative)`; `F_p(0, 0)` vanishes too, so comparisons stay exact.
pub fn g_weight(p: f64, a: f64, b: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(g_weight_raw(p, a, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Lower,
    Upper,
}

/// Closed-form comparability constant `p(p-1)/2`: the lower one
/// (`F_p >= c G_p`) on `1 < p < 2`, the upper one (`F_p <= C G_p`) on `p >= 2`.
pub fn comparability_bound(p: f64, side: Side) -> Result<f64> {
    check_exponent(p)?;
    match side {
        Side::Upper if p >= 2.0 => Ok(p * (p - 1.0) / 2.0),
        Side::Lower if p < 2.0 => Ok(p * (p - 1.0) / 2.0),
        Side::Upper => Err(Error::Domain(format!(
            "no closed-form upper comparability constant for p = {p} < 2"
        ))),
        Side::Lower => Err(Error::Domain(format!(
            "no closed-form lower comparability constant for p = {p} >= 2"
        ))),
    }
}

/// Grid for [`estimate_comparability`]: `points` equispaced values of `b` in
/// `[-bound, bound]`, skipping `|b - 1| < exclusion` where the ratio is
/// replaced by its limit `p(p-1)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub bound: f64,
    pub points: usize,
    pub exclusion: f64,
}

impl Default for ScanGrid {
    fn default() -> Self {
        Self { bound: 100.0, points: 10_000, exclusion: 1e-6 }
    }
}

fn ratio_at(p: f64, b: f64) -> f64 {
    bregman_raw(p, 1.0, b) / g_weight_raw(p, 1.0, b)
}

/// Numerical inf (`Lower`) or sup (`Upper`) of `F_p(1, b) / G_p(1, b)` over the
/// grid, refined by golden-section search between the neighbours of the best
/// grid point. By homogeneity this bounds `F_p(a, b) / G_p(a, b)` for `a != 0`.
pub fn estimate_comparability(p: f64, side: Side, grid: &ScanGrid) -> Result<f64> {
    check_exponent(p)?;
    if grid.points < 3 || !(grid.bound > 1.0) || !(grid.exclusion >= 0.0) || grid.exclusion >= grid.bound {
        return Err(Error::Domain(format!("degenerate comparability grid {grid:?}")));
    }
    // maximize sign * ratio
    let sign = match side {
        Side::Upper => 1.0,
        Side::Lower => -1.0,
    };
    let limit = p * (p - 1.0) / 2.0;
    let step = 2.0 * grid.bound / (grid.points - 1) as f64;
    let allowed = |b: f64| (b - 1.0).abs() >= grid.exclusion;

    let mut best = sign * limit;
    let mut best_b = None;
    for i in 0..grid.points {
        let b = -grid.bound + step * i as f64;
        if !allowed(b) {
            continue;
        }
        let v = sign * ratio_at(p, b);
        if v > best {
            best = v;
            best_b = Some(b);
        }
    }

    if let Some(b0) = best_b {
        let mut lo = (b0 - step).max(-grid.bound);
        let mut hi = (b0 + step).min(grid.bound);
        // keep the bracket on the side of the excluded zone that holds b0
        if lo < 1.0 && hi > 1.0 {
            if b0 < 1.0 {
                hi = 1.0 - grid.exclusion;
            } else {
                lo = 1.0 + grid.exclusion;
            }
        }
        if hi > lo {
            let (_, v) = golden_section_max(|b| sign * ratio_at(p, b), lo, hi, 200);
            if v > best {
                best = v;
            }
        }
    }
    Ok(sign * best)
}

/// Constants of the two-sided inequality
/// `lower^p E (X_n^*)^p <= E S_n^p <= upper^p E (X_n^*)^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurkholderConstants {
    pub lower: f64,
    pub upper: f64,
}

/// The piecewise table of constants, branch by branch (no smoothing at `p = 2`):
///
/// | range     | lower                                   | upper              |
/// |-----------|-----------------------------------------|--------------------|
/// | 1 < p < 2 | `(1/(p sqrt 2)) ((p-1)/p)^(p + 1/2)`     | `sqrt(p(p-1)/2)`   |
/// | p = 2     | `1/2`                                   | `1`                |
/// | p > 2     | `(1/(2p)) ((p-1)/p)^((p-1)/2)`           | `sqrt(2p)`         |
///
/// The upper value on `1 < p < 2` is below 1 and therefore fails on every
/// one-step martingale, where `S_1 = X_1^*`; see [`corrected_upper_small_p`].
pub fn burkholder_constants(p: f64) -> Result<BurkholderConstants> {
    check_exponent(p)?;
    let r = (p - 1.0) / p;
    let c = if p < 2.0 {
        BurkholderConstants {
            lower: r.powf(p + 0.5) / (p * std::f64::consts::SQRT_2),
            upper: (p * (p - 1.0) / 2.0).sqrt(),
        }
    } else if p == 2.0 {
        BurkholderConstants { lower: 0.5, upper: 1.0 }
    } else {
        BurkholderConstants { lower: r.powf((p - 1.0) / 2.0) / (2.0 * p), upper: (2.0 * p).sqrt() }
    };
    Ok(c)
}

/// Upper constant on `1 < p < 2` obtained by completing the Hölder step with
/// `E|X_n|^p <= E (X_n^*)^p`: `E S_n^p <= d_p^(-p/2) E (X_n^*)^p`, i.e.
/// `C_p = (p(p-1)/2)^(-1/2)`. Reported next to the table value; never
/// substituted for it.
pub fn corrected_upper_small_p(p: f64) -> Result<f64> {
    check_exponent(p)?;
    if p >= 2.0 {
        return Err(Error::Domain(format!("p = {p} is not in (1, 2)")));
    }
    Ok((p * (p - 1.0) / 2.0).powf(-0.5))
}

/// `b^alpha - 1 <= alpha max(1, b^(alpha-1)) (b - 1)` for `alpha, b >= 1`.
pub fn power_gap_bound_check(alpha: f64, b: f64) -> Result<CheckReport> {
    if !(alpha >= 1.0) || !(b >= 1.0) || !alpha.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!("need alpha >= 1 and b >= 1, got alpha = {alpha}, b = {b}")));
    }
    let lhs = b.powf(alpha) - 1.0;
    let rhs = alpha * b.powf(alpha - 1.0).max(1.0) * (b - 1.0);
    Ok(CheckReport::inequality(
        "scalar.power_gap",
        "b^a - 1 = a int_1^b t^(a-1) dt <= a max(1, b^(a-1)) (b - 1)",
        lhs,
        rhs,
        1e-12,
    ))
}

/// `int_0^len u^(p-2) g(u) du`, removing the endpoint singularity for `p < 2`
/// with `u = len * t^k`, `k = 1/(p-1)`, which makes the weight constant.
fn weighted_from_zero<G: Fn(f64) -> f64>(p: f64, len: f64, g: G) -> Result<f64> {
    if p < 2.0 {
        let k = 1.0 / (p - 1.0);
        let inner = quadrature::integrate(|t: f64| g(len * t.powf(k)), 0.0, 1.0, 1e-13, 1e-300, 4000)?;
        Ok(len.powf(p - 1.0) * k * inner)
    } else {
        quadrature::integrate(|u: f64| u.powf(p - 2.0) * g(u), 0.0, len, 1e-13, 1e-300, 4000)
    }
}

/// Independent route to `F_p(1, b)`: adaptive quadrature of
/// `p(p-1) int_1^b |y|^(p-2) (b - y) dy`, split at `y = 0` when `b < 0`.
pub fn bregman_quadrature_oracle(p: f64, b: f64) -> Result<f64> {
    check_exponent(p)?;
    if !b.is_finite() {
        return Err(Error::Domain(format!("b = {b} is not finite")));
    }
    let integral = if b >= 0.0 {
        quadrature::integrate(|y: f64| y.abs().powf(p - 2.0) * (b - y), 1.0, b, 1e-13, 1e-300, 4000)?
    } else {
        // int_1^0 + int_0^b, both rewritten over [0, len] with u = |y|
        let to_zero = -weighted_from_zero(p, 1.0, |u| b - u)?;
        let past_zero = -weighted_from_zero(p, -b, |u| b + u)?;
        to_zero + past_zero
    };
    Ok(p * (p - 1.0) * integral)
}

/// An exponent `p > 1` together with every constant derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PExponent {
    pub p: f64,
    /// Conjugate exponent `p / (p - 1)`.
    pub q: f64,
    pub bdg_lower: f64,
    pub bdg_upper: f64,
    /// `d_p`, closed form only on `1 < p < 2`.
    pub cmp_lower: Option<f64>,
    /// `D_p`, closed form only on `p >= 2`.
    pub cmp_upper: Option<f64>,
    /// Doob factor `(p / (p - 1))^p`.
    pub doob: f64,
}

impl PExponent {
    pub fn new(p: f64) -> Result<Self> {
        let BurkholderConstants { lower, upper } = burkholder_constants(p)?;
        Ok(Self {
            p,
            q: p / (p - 1.0),
            bdg_lower: lower,
            bdg_upper: upper,
            cmp_lower: comparability_bound(p, Side::Lower).ok(),
            cmp_upper: comparability_bound(p, Side::Upper).ok(),
            doob: (p / (p - 1.0)).powf(p),
        })
    }
}
