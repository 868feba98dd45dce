//! The divergence `F_p(a, b)` of `|x|^p`, its weight `G_p`, and the
//! comparability `F_p ~ p(p-1)/2 G_p` checked three ways: closed form,
//! grid estimate and adaptive quadrature.
//!
//! cargo run --example bregman_divergence

use bdg_lab::scalar::{bregman_quadrature_oracle, estimate_comparability, ScanGrid, Side};
use bdg_lab::{bregman_divergence, g_weight};

fn main() -> bdg_lab::Result<()> {
    let p = 3.0;
    for (a, b) in [(1.0, 2.0), (1.0, -1.0), (0.0, 2.0), (-2.0, 3.0)] {
        let f = bregman_divergence(p, a, b)?;
        let g = g_weight(p, a, b)?;
        println!("p = {p}: F({a}, {b}) = {f:<8} G = {g:<8} F/G = {:.6}", f / g);
    }

    // the ratio F/G tends to p(p-1)/2 on the diagonal
    for p in [1.5, 2.0, 3.0, 4.0] {
        let near = bregman_divergence(p, 1.0, 1.0 + 1e-4)? / g_weight(p, 1.0, 1.0 + 1e-4)?;
        println!("p = {p}: F/G at b = 1 + 1e-4 is {near:.6}, limit {}", p * (p - 1.0) / 2.0);
    }

    let grid = ScanGrid::default();
    for p in [1.5, 3.0] {
        let lo = estimate_comparability(p, Side::Lower, &grid)?;
        let hi = estimate_comparability(p, Side::Upper, &grid)?;
        println!("p = {p}: inf F/G ~ {lo:.6}, sup F/G ~ {hi:.6}");
    }

    for b in [-3.0, 0.5, 4.0] {
        let closed = bregman_divergence(1.2, 1.0, b)?;
        let quad = bregman_quadrature_oracle(1.2, b)?;
        println!("p = 1.2, b = {b}: closed {closed:.15} quadrature {quad:.15}");
    }
    Ok(())
}
