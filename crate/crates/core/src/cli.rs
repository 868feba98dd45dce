//! The `bdglab` front end. Each subcommand is also a library function
//! returning a [`CommandOutput`], so reports can be produced without a process.
//!
//! Exit status: 0 when every check passes, 1 when any check fails, 2 on an
//! input or configuration error.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::family::{FamilyDefaults, FamilySpec, Member};
use crate::format::{dec, fmt17, MartingaleFile};
use crate::scalar::{corrected_upper_small_p, estimate_comparability, PExponent, ScanGrid, Side};
use crate::scan::{p_scan, ScanConfig, ScanRow, CSV_HEADER};
use crate::search::{multi_restart_search, Direction, SearchSpace};
use crate::tree::{AdaptedProcess, OutcomeTree, DEFAULT_MAX_LEAVES};
use crate::verify::{run_suite, SuiteConfig, Tolerances};
use crate::SuiteReport;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

pub const REPORT_FORMAT: &str = "bdglab-report";
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "bdglab", version, about = "Burkholder square-function inequality laboratory on finite martingale trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Tabulate the constants for each exponent.
    Constants(ConstantsArgs),
    /// Run the verification suite on a martingale file or generated family.
    Verify(VerifyArgs),
    /// Sweep a grid of exponents: suites plus extremal searches.
    Scan(ScanArgs),
    /// Search for the extremal ratio E S_n^p / E (X_n^*)^p on a fixed tree.
    Search(SearchArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ExponentArgs {
    /// Exponent p > 1; may be repeated.
    #[arg(long = "p", allow_negative_numbers = true)]
    pub p: Vec<f64>,
    /// Inclusive grid `lo:hi:step`.
    #[arg(long = "p-grid")]
    pub p_grid: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// Martingale file, or a search report carrying a certificate.
    #[arg(long, conflicts_with = "family")]
    pub input: Option<PathBuf>,
    /// Generator spec such as `walk:depth=5` or `random:depth=5,branch=3,seed=7`.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, default_value_t = 4)]
    pub depth: usize,
    #[arg(long, default_value_t = 2)]
    pub branching: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ToleranceArgs {
    #[arg(long = "tol-identity", default_value_t = 1e-9)]
    pub tol_identity: f64,
    #[arg(long = "tol-ineq", default_value_t = 1e-12)]
    pub tol_ineq: f64,
}

impl ToleranceArgs {
    fn tolerances(&self) -> Result<Tolerances> {
        for (name, t) in [("--tol-identity", self.tol_identity), ("--tol-ineq", self.tol_ineq)] {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::Domain(format!("{name} must be a finite nonnegative number, got {t}")));
            }
        }
        Ok(Tolerances { identity_rel: self.tol_identity, inequality_rel: self.tol_ineq, ..Tolerances::default() })
    }

    fn argv(&self) -> Vec<String> {
        vec!["--tol-identity".into(), self.tol_identity.to_string(), "--tol-ineq".into(), self.tol_ineq.to_string()]
    }
}

#[derive(Debug, Clone, Args)]
pub struct ConstantsArgs {
    #[command(flatten)]
    pub exponents: ExponentArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub exponents: ExponentArgs,
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub tolerances: ToleranceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub exponents: ExponentArgs,
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub tolerances: ToleranceArgs,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long, default_value_t = 1000)]
    pub budget: u64,
    /// Also write the flat table `p,c_p^p,observed_min,observed_max,C_p^p,pass`.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Min,
    Max,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Min => Direction::Minimize,
            DirectionArg::Max => Direction::Maximize,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    #[arg(long = "p", allow_negative_numbers = true)]
    pub p: f64,
    #[arg(long, value_enum, default_value_t = DirectionArg::Min)]
    pub direction: DirectionArg,
    /// Search on the tree of this martingale file instead of a uniform tree.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub depth: usize,
    #[arg(long, default_value_t = 2)]
    pub branching: usize,
    #[arg(long, default_value_t = 100)]
    pub restarts: usize,
    #[arg(long, default_value_t = 5000)]
    pub budget: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the best martingale as a standalone martingale file.
    #[arg(long)]
    pub certificate: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(with = "dec::vec")]
    pub p: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_grid: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    /// SHA-256 of the compact JSON encoding of `payload`.
    pub payload_sha256: String,
}

/// Self-describing report: `command` re-run with the same build reproduces
/// `payload` byte for byte. No wall-clock data is recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub format: String,
    pub version: u32,
    pub tool_version: String,
    pub command: Vec<String>,
    pub metadata: Metadata,
    pub payload: serde_json::Value,
}

pub fn payload_hash(payload: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(payload).expect("json value serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl ReportFile {
    fn new<T: Serialize>(
        command: Vec<String>,
        seed: Option<u64>,
        p: Vec<f64>,
        p_grid: Option<String>,
        tolerances: Option<Tolerances>,
        payload: &T,
    ) -> Self {
        let payload = serde_json::to_value(payload).expect("payload serializes");
        Self {
            format: REPORT_FORMAT.into(),
            version: REPORT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command,
            metadata: Metadata { seed, p, p_grid, tolerances, payload_sha256: payload_hash(&payload) },
            payload,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Payload bytes as hashed.
    pub fn payload_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&self.payload).expect("json value serializes")
    }
}

#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub report: ReportFile,
    pub status: i32,
    /// One-line human summary per row or check group.
    pub summary: Vec<String>,
    pub csv: Option<String>,
    pub certificate: Option<String>,
}

/// `lo:hi:step`, inclusive of `hi` up to rounding. Points are rounded to 12
/// decimals so `1.1:4.0:0.1` yields exactly `1.1, 1.2, ..., 4.0`.
pub fn parse_p_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |msg: String| Error::Parse { at: format!("--p-grid {spec:?}"), msg };
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad("expected lo:hi:step".into()));
    }
    let nums = parts
        .iter()
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad(format!("{s:?} is not a number"))))
        .collect::<Result<Vec<_>>>()?;
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) {
        return Err(bad("bounds and step must be finite".into()));
    }
    if step <= 0.0 {
        return Err(bad(format!("step must be positive, got {step}")));
    }
    if hi < lo {
        return Err(bad(format!("reversed bounds: {lo} > {hi}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    if n >= 1_000_000 {
        return Err(bad("grid has more than a million points".into()));
    }
    Ok((0..=n).map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12).collect())
}

impl ExponentArgs {
    fn resolve(&self) -> Result<Vec<f64>> {
        let mut ps = self.p.clone();
        if let Some(g) = &self.p_grid {
            ps.extend(parse_p_grid(g)?);
        }
        if ps.is_empty() {
            return Err(Error::Domain("give at least one exponent with --p or --p-grid".into()));
        }
        for &p in &ps {
            crate::scalar::check_exponent(p)?;
        }
        Ok(ps)
    }

    fn argv(&self) -> Vec<String> {
        let mut v = Vec::new();
        for p in &self.p {
            v.extend(["--p".to_string(), p.to_string()]);
        }
        if let Some(g) = &self.p_grid {
            v.extend(["--p-grid".to_string(), g.clone()]);
        }
        v
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse { at: path.display().to_string(), msg: e.to_string() })
}

/// Reads a martingale file, or the certificate embedded in a search report.
pub fn load_martingale(path: &Path) -> Result<AdaptedProcess> {
    let text = read_text(path)?;
    let annotate = |e: Error| match e {
        Error::Parse { at, msg } => Error::Parse { at: format!("{}: {at}", path.display()), msg },
        other => other,
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
        at: format!("{}: line {} column {}", path.display(), e.line(), e.column()),
        msg: e.to_string(),
    })?;
    let file = match value.pointer("/payload/certificate") {
        Some(cert) => serde_json::from_value::<MartingaleFile>(cert.clone()).map_err(|e| Error::Parse {
            at: format!("{}: payload.certificate", path.display()),
            msg: e.to_string(),
        })?,
        None => MartingaleFile::from_json(&text).map_err(annotate)?,
    };
    file.to_process().map_err(annotate)
}

impl SourceArgs {
    fn defaults(&self) -> FamilyDefaults {
        FamilyDefaults { depth: self.depth, branching: self.branching, seed: self.seed }
    }

    /// Members plus a label describing where they came from.
    fn members(&self) -> Result<(Vec<Member>, String)> {
        match (&self.input, &self.family) {
            (Some(path), _) => {
                let proc = load_martingale(path)?;
                Ok((vec![Member { process: proc, seed: None }], format!("file:{}", path.display())))
            }
            (None, family) => {
                let spec = FamilySpec::parse(family.as_deref().unwrap_or("walk"), self.defaults())?;
                Ok((spec.generate()?, spec.to_string()))
            }
        }
    }

    fn argv(&self) -> Result<Vec<String>> {
        Ok(match (&self.input, &self.family) {
            (Some(path), _) => vec!["--input".into(), path.display().to_string()],
            (None, family) => {
                let spec = FamilySpec::parse(family.as_deref().unwrap_or("walk"), self.defaults())?;
                vec!["--family".into(), spec.to_string()]
            }
        })
    }
}

fn argv(sub: &str, rest: Vec<String>) -> Vec<String> {
    let mut v = vec!["bdglab".to_string(), sub.to_string()];
    v.extend(rest);
    v
}

fn out_argv(o: &OutputArgs) -> Vec<String> {
    o.out.iter().flat_map(|p| ["--out".to_string(), p.display().to_string()]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsRow {
    #[serde(with = "dec")]
    pub p: f64,
    #[serde(with = "dec")]
    pub q: f64,
    #[serde(with = "dec")]
    pub c: f64,
    #[serde(rename = "C", with = "dec")]
    pub upper: f64,
    #[serde(with = "dec")]
    pub c_pow_p: f64,
    #[serde(rename = "C_pow_p", with = "dec")]
    pub upper_pow_p: f64,
    /// Best `d` with `F_p >= d G_p`.
    #[serde(with = "dec")]
    pub d: f64,
    pub d_source: &'static str,
    /// Best `D` with `F_p <= D G_p`.
    #[serde(rename = "D", with = "dec")]
    pub cmp_upper: f64,
    #[serde(rename = "D_source")]
    pub cmp_upper_source: &'static str,
    #[serde(with = "dec")]
    pub doob: f64,
    /// `(p(p-1)/2)^(-1/2)` on `1 < p < 2`, where the tabulated upper value is below 1.
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "opt_dec")]
    pub corrected_upper: Option<f64>,
}

fn opt_dec<S: serde::Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_str(&fmt17(*v)),
        None => s.serialize_none(),
    }
}

pub fn constants_row(p: f64) -> Result<ConstantsRow> {
    let e = PExponent::new(p)?;
    let closed = p * (p - 1.0) / 2.0;
    let grid = ScanGrid::default();
    let (d, d_source) = if p <= 2.0 { (closed, "closed") } else { (estimate_comparability(p, Side::Lower, &grid)?, "estimated") };
    let (big_d, big_d_source) =
        if p >= 2.0 { (closed, "closed") } else { (estimate_comparability(p, Side::Upper, &grid)?, "estimated") };
    Ok(ConstantsRow {
        p,
        q: e.q,
        c: e.bdg_lower,
        upper: e.bdg_upper,
        c_pow_p: e.bdg_lower.powf(p),
        upper_pow_p: e.bdg_upper.powf(p),
        d,
        d_source,
        cmp_upper: big_d,
        cmp_upper_source: big_d_source,
        doob: e.doob,
        corrected_upper: corrected_upper_small_p(p).ok(),
    })
}

pub fn cmd_constants(args: &ConstantsArgs) -> Result<CommandOutput> {
    let ps = args.exponents.resolve()?;
    let rows = ps.iter().map(|&p| constants_row(p)).collect::<Result<Vec<_>>>()?;
    let summary = rows
        .iter()
        .map(|r| {
            format!(
                "p={} q={:.6} c={:.6} C={:.6} d={:.6} ({}) D={:.6} ({}) doob={:.6}",
                r.p, r.q, r.c, r.upper, r.d, r.d_source, r.cmp_upper, r.cmp_upper_source, r.doob
            )
        })
        .collect();
    let mut rest = args.exponents.argv();
    rest.extend(out_argv(&args.output));
    let report = ReportFile::new(
        argv("constants", rest),
        None,
        ps,
        args.exponents.p_grid.clone(),
        None,
        &serde_json::json!({ "rows": rows }),
    );
    Ok(CommandOutput { report, status: EXIT_PASS, summary, csv: None, certificate: None })
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyEntry {
    pub source: String,
    pub suite: SuiteReport,
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<CommandOutput> {
    let ps = args.exponents.resolve()?;
    let tolerances = args.tolerances.tolerances()?;
    let (members, label) = args.source.members()?;
    let mut entries = Vec::new();
    let mut summary = Vec::new();
    for &p in &ps {
        for m in &members {
            let suite = run_suite(&m.process, p, &SuiteConfig { tolerances, seed: m.seed })?;
            let failed: Vec<&str> = suite.failures().map(|c| c.check_id.as_str()).collect();
            summary.push(format!(
                "p={p} {label}{} {}",
                m.seed.map(|s| format!(" seed={s}")).unwrap_or_default(),
                if failed.is_empty() { "PASS".to_string() } else { format!("FAIL [{}]", failed.join(", ")) }
            ));
            entries.push(VerifyEntry { source: label.clone(), suite });
        }
    }
    let overall_pass = entries.iter().all(|e| e.suite.overall_pass);
    let mut rest = args.exponents.argv();
    rest.extend(args.source.argv()?);
    rest.extend(args.tolerances.argv());
    rest.extend(out_argv(&args.output));
    let seed = members.first().and_then(|m| m.seed);
    let report = ReportFile::new(
        argv("verify", rest),
        seed,
        ps,
        args.exponents.p_grid.clone(),
        Some(tolerances),
        &serde_json::json!({ "reports": entries, "overall_pass": overall_pass }),
    );
    let status = if overall_pass { EXIT_PASS } else { EXIT_FAIL };
    Ok(CommandOutput { report, status, summary, csv: None, certificate: None })
}

pub fn cmd_scan(args: &ScanArgs) -> Result<CommandOutput> {
    let ps = args.exponents.resolve()?;
    let tolerances = args.tolerances.tolerances()?;
    let (members, label) = args.source.members()?;
    if args.restarts == 0 || args.budget == 0 {
        return Err(Error::Domain("--restarts and --budget must be at least 1".into()));
    }
    let config = ScanConfig { restarts: args.restarts, budget: args.budget, seed: args.source.seed, tolerances };
    let rows: Vec<ScanRow> = p_scan(&members, &ps, &config);
    let overall_pass = rows.iter().all(|r| r.pass);
    let summary = rows
        .iter()
        .map(|r| match &r.error {
            Some(e) => format!("p={} ERROR {e}", r.p),
            None => format!(
                "p={} [{:.6}, {:.6}] observed [{:.6}, {:.6}] {}",
                r.p,
                r.lower,
                r.upper,
                r.observed_min,
                r.observed_max,
                if r.pass { "PASS" } else { "FAIL" }
            ),
        })
        .collect();
    let csv = args.csv.as_ref().map(|_| {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &rows {
            s.push_str(&r.csv_line());
            s.push('\n');
        }
        s
    });
    let mut rest = args.exponents.argv();
    rest.extend(args.source.argv()?);
    rest.extend(args.tolerances.argv());
    rest.extend([
        "--restarts".into(),
        args.restarts.to_string(),
        "--budget".into(),
        args.budget.to_string(),
        "--seed".into(),
        args.source.seed.to_string(),
    ]);
    if let Some(c) = &args.csv {
        rest.extend(["--csv".into(), c.display().to_string()]);
    }
    rest.extend(out_argv(&args.output));
    let report = ReportFile::new(
        argv("scan", rest),
        Some(args.source.seed),
        ps,
        args.exponents.p_grid.clone(),
        Some(tolerances),
        &serde_json::json!({ "source": label, "rows": rows, "overall_pass": overall_pass }),
    );
    let status = if overall_pass { EXIT_PASS } else { EXIT_FAIL };
    Ok(CommandOutput { report, status, summary, csv, certificate: None })
}

pub fn cmd_search(args: &SearchArgs) -> Result<CommandOutput> {
    crate::scalar::check_exponent(args.p)?;
    let tree = match &args.input {
        Some(path) => Arc::clone(load_martingale(path)?.tree()),
        None => {
            if args.depth == 0 || args.branching < 2 {
                return Err(Error::Domain("need --depth >= 1 and --branching >= 2".into()));
            }
            Arc::new(OutcomeTree::uniform(args.depth, args.branching, DEFAULT_MAX_LEAVES)?)
        }
    };
    let space = SearchSpace::new(tree);
    if space.dim() == 0 {
        return Err(Error::Domain("the tree has no free increments to search over".into()));
    }
    let direction: Direction = args.direction.into();
    let result = multi_restart_search(&space, args.p, direction, args.restarts, args.seed, args.budget)?;
    let certificate = MartingaleFile::from_process(&result.certificate).to_json();
    let summary = vec![format!(
        "p={} {:?} best ratio {} envelope [{}, {}] evaluated {} violations {} {}",
        args.p,
        direction,
        fmt17(result.best_ratio),
        fmt17(result.envelope_lower),
        fmt17(result.envelope_upper),
        result.envelope.evaluated,
        result.envelope.violations(),
        if result.feasible() { "PASS" } else { "FAIL" }
    )];
    let mut rest = vec![
        "--p".to_string(),
        args.p.to_string(),
        "--direction".into(),
        match args.direction {
            DirectionArg::Min => "min".into(),
            DirectionArg::Max => "max".into(),
        },
    ];
    match &args.input {
        Some(path) => rest.extend(["--input".into(), path.display().to_string()]),
        None => rest.extend(["--depth".into(), args.depth.to_string(), "--branching".into(), args.branching.to_string()]),
    }
    rest.extend([
        "--restarts".into(),
        args.restarts.to_string(),
        "--budget".into(),
        args.budget.to_string(),
        "--seed".into(),
        args.seed.to_string(),
    ]);
    if let Some(c) = &args.certificate {
        rest.extend(["--certificate".into(), c.display().to_string()]);
    }
    rest.extend(out_argv(&args.output));
    let status = if result.feasible() { EXIT_PASS } else { EXIT_FAIL };
    let report = ReportFile::new(argv("search", rest), Some(args.seed), vec![args.p], None, None, &result);
    Ok(CommandOutput { report, status, summary, csv: None, certificate: Some(certificate) })
}

fn output_of(cmd: &Command) -> (&OutputArgs, Option<&PathBuf>, Option<&PathBuf>) {
    match cmd {
        Command::Constants(a) => (&a.output, None, None),
        Command::Verify(a) => (&a.output, None, None),
        Command::Scan(a) => (&a.output, a.csv.as_ref(), None),
        Command::Search(a) => (&a.output, None, a.certificate.as_ref()),
    }
}

pub fn execute(cmd: &Command) -> Result<CommandOutput> {
    match cmd {
        Command::Constants(a) => cmd_constants(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Search(a) => cmd_search(a),
    }
}

/// Parses a full argument list (program name first) and runs it in-process,
/// without writing any files.
pub fn execute_args<I, T>(args: I) -> Result<CommandOutput>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Parse { at: "command line".into(), msg: e.to_string() })?;
    execute(&cli.command)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Parse { at: path.display().to_string(), msg: e.to_string() })
}

/// Parses `args` (program name first), runs the command, writes its outputs
/// and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_INPUT,
            };
        }
    };
    let out = match execute(&cli.command) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let (output, csv_path, cert_path) = output_of(&cli.command);
    let written = (|| -> Result<()> {
        match &output.out {
            Some(path) => write_file(path, &out.report.to_json())?,
            None => println!("{}", out.report.to_json()),
        }
        if let (Some(path), Some(csv)) = (csv_path, &out.csv) {
            write_file(path, csv)?;
        }
        if let (Some(path), Some(cert)) = (cert_path, &out.certificate) {
            write_file(path, cert)?;
        }
        Ok(())
    })();
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_INPUT;
    }
    for line in &out.summary {
        eprintln!("{line}");
    }
    out.status
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Command {
        Cli::try_parse_from(args).unwrap().command
    }

    #[test]
    fn grid_mechanics() {
        let g = parse_p_grid("1.1:4.0:0.1").unwrap();
        assert_eq!(g.len(), 30);
        assert_eq!((g[0], g[29]), (1.1, 4.0));
        assert_eq!(parse_p_grid("1.5:3.5:1.0").unwrap(), vec![1.5, 2.5, 3.5]);
        assert_eq!(parse_p_grid("2:2:0.5").unwrap(), vec![2.0]);
        for bad in ["3:2:0.1", "1.5:2:0", "1.5:2:-1", "1.5:2", "a:2:1"] {
            assert!(parse_p_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn constants_at_two_and_four() {
        let r = constants_row(2.0).unwrap();
        assert_eq!((r.c, r.upper, r.d, r.cmp_upper, r.doob, r.q), (0.5, 1.0, 1.0, 1.0, 4.0, 2.0));
        let r = constants_row(4.0).unwrap();
        assert!((r.c - 0.08119).abs() < 1e-5 && (r.upper - 2.82843).abs() < 1e-5);
        assert!(r.corrected_upper.is_none());
    }

    #[test]
    fn verify_walk_passes_and_p_one_is_rejected() {
        let Command::Verify(a) = parse(&["bdglab", "verify", "--p", "3", "--family", "walk:depth=4"]) else { panic!() };
        assert_eq!(cmd_verify(&a).unwrap().status, EXIT_PASS);
        let Command::Verify(a) = parse(&["bdglab", "verify", "--p", "1"]) else { panic!() };
        assert!(cmd_verify(&a).is_err());
    }

    #[test]
    fn command_line_is_canonical() {
        let Command::Verify(a) = parse(&["bdglab", "verify", "--family", "random:seed=3", "--p", "2.5", "--depth", "3"])
        else {
            panic!()
        };
        let out = cmd_verify(&a).unwrap();
        let again = Cli::try_parse_from(&out.report.command).unwrap().command;
        let Command::Verify(b) = again else { panic!() };
        assert_eq!(cmd_verify(&b).unwrap().report.payload, out.report.payload);
    }
}
