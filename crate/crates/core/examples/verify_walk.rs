//! Run the full verification suite on the simple random walk and on a
//! predictable transform of it.
//!
//! cargo run --example verify_walk [p]

use bdg_lab::generators::{gen_symmetric_walk, gen_transform, random_predictable_multipliers};
use bdg_lab::{run_suite, SuiteConfig, SuiteReport};

fn show(name: &str, report: &SuiteReport) {
    println!("{name}, p = {}: {}", report.p, if report.overall_pass { "all pass" } else { "FAIL" });
    for c in &report.checks {
        println!("  {:<24} {:<16} lhs {:>12.6} rhs {:>12.6}", c.check_id, format!("{:?}", c.outcome), c.lhs, c.rhs);
    }
}

fn main() -> bdg_lab::Result<()> {
    let p: f64 = std::env::args().nth(1).map(|s| s.parse().expect("p must be a number")).unwrap_or(3.0);
    let walk = gen_symmetric_walk(4)?;
    show("walk, depth 4", &run_suite(&walk, p, &SuiteConfig::default())?);

    let m = random_predictable_multipliers(walk.tree(), 7, 2.0);
    let t = gen_transform(&walk, &m, 2.0)?;
    show("transform, seed 7", &run_suite(&t, p, &SuiteConfig { seed: Some(7), ..Default::default() })?);
    Ok(())
}
