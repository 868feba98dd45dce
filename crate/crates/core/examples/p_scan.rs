//! Sweep the exponent and print the envelope table as CSV. Rows with p < 2
//! fail: the tabulated upper constant there is below 1.
//!
//! cargo run --release --example p_scan

use bdg_lab::family::{FamilyDefaults, FamilySpec};
use bdg_lab::scan::{p_scan, ScanConfig, CSV_HEADER};

fn main() -> bdg_lab::Result<()> {
    let members = FamilySpec::parse("random:depth=4,branch=2,seed=1,count=3", FamilyDefaults::default())?.generate()?;
    let grid: Vec<f64> = (0..12).map(|i| 1.25 + 0.25 * i as f64).collect();
    let rows = p_scan(&members, &grid, &ScanConfig { restarts: 6, budget: 800, ..Default::default() });
    println!("{CSV_HEADER}");
    for r in &rows {
        println!("{}", r.csv_line());
    }
    Ok(())
}
