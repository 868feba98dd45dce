//! Build a martingale by hand, save it in the nested file format, read it
//! back and verify it. A broken sibling mean shows up as a failed validity
//! check rather than an error.
//!
//! cargo run --example martingale_file

use std::sync::Arc;

use bdg_lab::format::{parse_martingale, write_martingale};
use bdg_lab::tree::{close_martingale, BuildOptions, NodeSpec};
use bdg_lab::{run_suite, OutcomeTree, SuiteConfig};

fn main() -> bdg_lab::Result<()> {
    let leaf = |p: f64| NodeSpec { branch_prob: p, children: vec![] };
    let root = NodeSpec {
        branch_prob: 1.0,
        children: vec![
            NodeSpec { branch_prob: 0.5, children: vec![leaf(0.5), leaf(0.5)] },
            NodeSpec { branch_prob: 0.5, children: vec![leaf(0.2), leaf(0.3), leaf(0.5)] },
        ],
    };
    let tree = Arc::new(OutcomeTree::from_spec(&root, BuildOptions::default())?);
    // close a mean-zero terminal variable; the file format wants X_0 = 0
    let terminal = [3.0, -1.0, -3.0, 2.0, -2.0];
    let x = close_martingale(&tree, &terminal)?;
    let text = write_martingale(&x);
    println!("{text}");

    let back = parse_martingale(&text)?;
    assert_eq!(back.values(), x.values());
    let report = run_suite(&back, 2.5, &SuiteConfig::default())?;
    println!("suite at p = 2.5: {}", if report.overall_pass { "all pass" } else { "FAIL" });

    let mut values = x.values().to_vec();
    values[3] += 0.5;
    let broken = parse_martingale(&write_martingale(&bdg_lab::AdaptedProcess::new(Arc::clone(&tree), values)?))?;
    let report = run_suite(&broken, 2.5, &SuiteConfig::default())?;
    let v = report.get("martingale.valid").unwrap();
    println!("perturbed node: martingale.valid pass = {}, defect {:.3e}", v.pass, v.lhs);
    Ok(())
}
