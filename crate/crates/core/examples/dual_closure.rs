//! The dual martingale `Z_j = E[X_n^<p-1> | F_j]`: orthogonal increments
//! across times, the pairing bound and `E|Z_n|^q = E|X_n|^p`.
//!
//! cargo run --example dual_closure

use bdg_lab::generators::gen_random_martingale;
use bdg_lab::verify::{check_dual_moment, check_orthogonality, check_pairing, dual_closure};
use bdg_lab::Tolerances;

fn main() -> bdg_lab::Result<()> {
    let tol = Tolerances::default();
    let x = gen_random_martingale(4, 3, 42, 1.0)?;
    for p in [1.2, 1.5, 1.8, 3.0] {
        let z = dual_closure(&x, p)?;
        let ortho = check_orthogonality(&x, &z, &tol)?;
        let pair = check_pairing(&x, &z, p, &tol)?;
        let moment = check_dual_moment(&x, &z, p, &tol);
        println!(
            "p = {p}: max cross term {:.2e}, |E X Z| = {:.6} <= {:.6}, E|Z|^q = {:.12} vs E|X|^p = {:.12}",
            ortho.lhs, pair.lhs, pair.rhs, moment.lhs, moment.rhs
        );
    }
    Ok(())
}
