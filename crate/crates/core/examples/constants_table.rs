//! Constants of the two-sided inequality across exponents, with the
//! comparability constants of `F_p` against `G_p` on both sides.
//!
//! cargo run --example constants_table

use bdg_lab::cli::constants_row;

fn main() -> bdg_lab::Result<()> {
    println!("{:>5} {:>9} {:>9} {:>9} {:>9} {:>10} {:>9}   note", "p", "q", "c_p", "C_p", "d_p", "D_p", "doob");
    for p in [1.1, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0, 4.0, 6.0] {
        let r = constants_row(p)?;
        let note = match r.corrected_upper {
            // C_p < 1 cannot hold: on a one-step martingale S_1 = X_1^* and the ratio is 1
            Some(fixed) => format!("C_p < 1; (p(p-1)/2)^(-1/2) = {fixed:.6}"),
            None => String::new(),
        };
        println!(
            "{:>5} {:>9.6} {:>9.6} {:>9.6} {:>9.6} {:>10.6} {:>9.4}   {note}",
            p, r.q, r.c, r.upper, r.d, r.cmp_upper, r.doob
        );
    }
    println!("\nd_p is closed-form for p <= 2 and estimated above; D_p the other way round.");
    Ok(())
}
