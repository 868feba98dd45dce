//! Reports carry the canonical command line that produced them; re-running
//! it gives a byte-identical payload.
//!
//! cargo run --release --example reproducible_report

use bdg_lab::cli::execute_args;

fn main() -> bdg_lab::Result<()> {
    let first = execute_args([
        "bdglab", "search", "--p", "2.5", "--direction", "max", "--depth", "3", "--restarts", "16", "--budget", "1000",
        "--seed", "3",
    ])?;
    println!("command: {}", first.report.command.join(" "));
    println!("payload sha256: {}", first.report.metadata.payload_sha256);
    let again = execute_args(&first.report.command)?;
    println!("re-run sha256:  {}", again.report.metadata.payload_sha256);
    assert_eq!(first.report.payload_bytes(), again.report.payload_bytes());
    for line in &first.summary {
        println!("{line}");
    }
    Ok(())
}
