use std::path::Path;
use std::process::Command;

use bdg_lab::cli::{execute_args, parse_p_grid, ReportFile, EXIT_FAIL, EXIT_INPUT, EXIT_PASS};
use bdg_lab::format::{parse_martingale, write_martingale};
use bdg_lab::generators::gen_symmetric_walk;

fn bdglab(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_bdglab")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn read_report(path: &Path) -> ReportFile {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn constants_rows_at_two_and_four() {
    let (code, stdout, _) = bdglab(&["constants", "--p", "2", "--p", "4"]);
    assert_eq!(code, EXIT_PASS);
    let r: ReportFile = serde_json::from_str(&stdout).unwrap();
    let rows = r.payload["rows"].as_array().unwrap();
    let num = |row: &serde_json::Value, k: &str| row[k].as_str().unwrap().parse::<f64>().unwrap();
    let two = &rows[0];
    assert_eq!(
        ["c", "C", "d", "D", "doob", "q"].map(|k| num(two, k)),
        [0.5, 1.0, 1.0, 1.0, 4.0, 2.0]
    );
    let four = &rows[1];
    assert!((num(four, "c") - 0.08119).abs() < 1e-5);
    assert!((num(four, "C") - 2.82843).abs() < 1e-5);
    assert_eq!(four["D_source"], "closed");
    assert_eq!(four["d_source"], "estimated");
}

#[test]
fn constants_grid_has_three_rows_and_rejects_p_one() {
    let out = execute_args(["bdglab", "constants", "--p-grid", "1.5:3.5:1.0"]).unwrap();
    assert_eq!(out.report.payload["rows"].as_array().unwrap().len(), 3);
    let (code, _, stderr) = bdglab(&["constants", "--p", "1"]);
    assert_eq!(code, EXIT_INPUT);
    assert!(stderr.contains("p = 1"), "{stderr}");
}

#[test]
fn verify_walk_depth_four_at_p_three_passes() {
    let (code, stdout, stderr) = bdglab(&["verify", "--p", "3", "--family", "walk:depth=4"]);
    assert_eq!(code, EXIT_PASS, "{stderr}");
    let r: ReportFile = serde_json::from_str(&stdout).unwrap();
    assert_eq!(r.payload["overall_pass"], true);
    assert_eq!(r.command[..4], ["bdglab", "verify", "--p", "3"]);
}

#[test]
fn verify_p_one_is_an_input_error() {
    let (code, stdout, _) = bdglab(&["verify", "--p", "1", "--family", "walk:depth=2"]);
    assert_eq!(code, EXIT_INPUT);
    assert!(stdout.is_empty());
}

#[test]
fn perturbed_file_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("walk.json");
    let text = write_martingale(&gen_symmetric_walk(2).unwrap());
    // first depth-2 node: +2 becomes +2.5, breaking the mean of its siblings
    let perturbed = text.replacen("\"2.0000000000000000e0\"", "\"2.5000000000000000e0\"", 1);
    assert_ne!(perturbed, text);
    std::fs::write(&path, perturbed).unwrap();
    let out = dir.path().join("report.json");
    let (code, _, _) = bdglab(&["verify", "--p", "2", "--input", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_FAIL);
    let r = read_report(&out);
    let checks = r.payload["reports"][0]["suite"]["checks"].as_array().unwrap();
    assert_eq!(checks[0]["check_id"], "martingale.valid");
    assert_eq!(checks[0]["pass"], false);
    assert!(checks[1..].iter().all(|c| c["outcome"] == "inapplicable"));
}

#[test]
fn malformed_file_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"version\": 1,\n  \"tree\": [\n").unwrap();
    let (code, _, stderr) = bdglab(&["verify", "--p", "2", "--input", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_INPUT);
    assert!(stderr.contains("line") && stderr.contains("column"), "{stderr}");

    std::fs::write(&path, r#"{"version": 1, "tree": {"branch_prob": "1", "value": "0", "children": [{"branch_prob": "0.5", "value": "x"}, {"branch_prob": "0.5", "value": "0"}]}}"#).unwrap();
    let (code, _, stderr) = bdglab(&["verify", "--p", "2", "--input", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_INPUT);
    assert!(stderr.contains("tree.children[0].value"), "{stderr}");
}

#[test]
fn scan_writes_csv_and_reversed_grid_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("scan.csv");
    let (code, _, stderr) = bdglab(&[
        "scan", "--p-grid", "2:3:0.5", "--family", "walk:depth=3", "--restarts", "2", "--budget", "200",
        "--csv", csv.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_PASS, "{stderr}");
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "p,c_p^p,observed_min,observed_max,C_p^p,pass");
    assert_eq!(lines.len(), 4);
    assert!(lines[1..].iter().all(|l| l.ends_with(",true")));

    let (code, _, _) = bdglab(&["scan", "--p-grid", "3:2:0.5"]);
    assert_eq!(code, EXIT_INPUT);
    let (code, _, _) = bdglab(&["scan", "--p-grid", "2:3:0"]);
    assert_eq!(code, EXIT_INPUT);
    assert_eq!(parse_p_grid("2.5:2.5:0.1").unwrap(), vec![2.5]);
}

#[test]
fn scan_below_two_exits_with_failure() {
    let (code, _, stderr) = bdglab(&["scan", "--p", "1.5", "--family", "walk:depth=2", "--restarts", "2", "--budget", "100"]);
    assert_eq!(code, EXIT_FAIL, "{stderr}");
}

#[test]
fn search_is_deterministic_and_certificate_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, cert) = (dir.path().join("a.json"), dir.path().join("b.json"), dir.path().join("cert.json"));
    let base = ["search", "--p", "3", "--direction", "min", "--depth", "4", "--branching", "2", "--restarts", "20", "--budget", "1000", "--seed", "1"];
    for (out, with_cert) in [(&a, true), (&b, false)] {
        let mut args = base.to_vec();
        args.extend(["--out", out.to_str().unwrap()]);
        if with_cert {
            args.extend(["--certificate", cert.to_str().unwrap()]);
        }
        let (code, _, stderr) = bdglab(&args);
        assert_eq!(code, EXIT_PASS, "{stderr}");
    }
    let (ra, rb) = (read_report(&a), read_report(&b));
    assert_eq!(ra.payload, rb.payload);
    assert_eq!(ra.metadata.payload_sha256, rb.metadata.payload_sha256);

    for input in [&cert, &a] {
        let (code, _, stderr) = bdglab(&["verify", "--p", "3", "--input", input.to_str().unwrap()]);
        assert_eq!(code, EXIT_PASS, "{stderr}");
    }
    // the standalone certificate is value-identical after a parse/write round trip
    let text = std::fs::read_to_string(&cert).unwrap();
    assert_eq!(write_martingale(&parse_martingale(&text).unwrap()), text);
}

#[test]
fn search_on_one_step_tree_gives_ratio_one() {
    let out = execute_args(["bdglab", "search", "--p", "3", "--direction", "max", "--depth", "1", "--branching", "3", "--restarts", "4", "--budget", "200"]).unwrap();
    let best: f64 = out.report.payload["best_ratio"].as_str().unwrap().parse().unwrap();
    assert!((best - 1.0).abs() < 1e-12, "{best}");
}

#[test]
fn search_beyond_enumeration_cap_is_rejected() {
    let (code, _, stderr) = bdglab(&["search", "--p", "3", "--depth", "21", "--branching", "2"]);
    assert_eq!(code, EXIT_INPUT);
    assert!(!stderr.is_empty());
}

#[test]
fn usage_errors_exit_two_and_help_exits_zero() {
    assert_eq!(bdglab(&["frobnicate"]).0, EXIT_INPUT);
    assert_eq!(bdglab(&["verify", "--p", "two"]).0, EXIT_INPUT);
    assert_eq!(bdglab(&["verify", "--p", "2", "--family", "walk:depth=2", "--input", "x.json"]).0, EXIT_INPUT);
    assert_eq!(bdglab(&["--help"]).0, EXIT_PASS);
}
