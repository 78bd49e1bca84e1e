//! Subcommand drivers and the exit-code contract.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use tesh_conic::SolverSettings;
use tesh_core::format::{read_state, write_state};
use tesh_core::magic::{find_pauli_stabilizers, haar_magic_stats, stabilizer_renyi, MAX_HAAR_MAGIC_QUBITS, MAX_MAGIC_QUBITS};
use tesh_core::purity_bound::RelaxationLimits;
use tesh_core::search::{search_te, GradientMode, SearchParams};
use tesh_core::separability::verify_te;
use tesh_core::TeshError;

use crate::bounds::build_table;
use crate::nrange::NRange;

/// Environment variable overriding the worker-thread count.
pub const THREADS_ENV: &str = "TESH_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success,
    /// The command ran but the answer is no.
    Negative,
    Usage,
    Data,
    Internal,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::Negative => 2,
            ExitStatus::Usage => 64,
            ExitStatus::Data => 65,
            ExitStatus::Internal => 1,
        }
    }
}

#[derive(Debug)]
struct Failure {
    status: ExitStatus,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            status: ExitStatus::Usage,
            message: message.into(),
        }
    }

    fn data(e: impl std::fmt::Display) -> Self {
        Self {
            status: ExitStatus::Data,
            message: e.to_string(),
        }
    }
}

impl From<TeshError> for Failure {
    fn from(e: TeshError) -> Self {
        let status = match e {
            TeshError::Argument(_) => ExitStatus::Usage,
            TeshError::Format(_) | TeshError::InvalidSize(_) | TeshError::Refused(_) => ExitStatus::Data,
            _ => ExitStatus::Internal,
        };
        Self {
            status,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self {
            status: ExitStatus::Internal,
            message: e.to_string(),
        }
    }
}

type CmdResult = std::result::Result<ExitStatus, Failure>;

#[derive(Debug, Parser)]
#[command(name = "tesh", version, about = "Threshold-entangled qubit states: search, verification, purity bounds and magic")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Gradient search for threshold-entangled states from random seeds.
    Search(SearchArgs),
    /// Check a state file for threshold entanglement.
    Verify(VerifyArgs),
    /// Lower and upper purity bounds with the existence verdict per qubit count.
    Table(TableArgs),
    /// Stabilizer Rényi entropy of a state file, or Haar-random statistics.
    Magic(MagicArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum GradientArg {
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Args, Serialize)]
struct SearchArgs {
    /// Number of qubits (4 to 9).
    #[arg(long)]
    n: usize,
    /// Number of random starting states.
    #[arg(long, default_value_t = 20)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    master_seed: u64,
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
    /// Smoothing inside the square root of θ.
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,
    /// Cost at which a run counts as converged.
    #[arg(long, default_value_t = 1e-14)]
    threshold: f64,
    #[arg(long, default_value_t = 1.0)]
    step: f64,
    #[arg(long, default_value_t = 0.5)]
    backtrack: f64,
    #[arg(long, value_enum, default_value_t = GradientArg::Analytic)]
    gradient: GradientArg,
    /// Directory for found states and `summary.json`.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct VerifyArgs {
    /// A `tesh-state-v1` file.
    file: PathBuf,
    #[arg(long, default_value_t = tesh_core::separability::DEFAULT_AS_TOL)]
    tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum TableFormat {
    Csv,
    Markdown,
    Json,
}

#[derive(Debug, Args, Serialize)]
struct TableArgs {
    /// Qubit counts, e.g. `4..9` (inclusive) or `8`.
    #[arg(long, default_value = "4..9")]
    n: String,
    /// Relaxation level for the upper bounds (1 to 3).
    #[arg(long, default_value_t = 2)]
    sdp_level: usize,
    #[arg(long, value_enum, default_value_t = TableFormat::Markdown)]
    format: TableFormat,
    /// Also write the JSON report here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["file", "haar"])))]
struct MagicArgs {
    /// A `tesh-state-v1` file.
    file: Option<PathBuf>,
    /// Haar statistics: qubit count and sample count.
    #[arg(long, num_args = 2, value_names = ["N", "SAMPLES"])]
    haar: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
}

fn print_json(body: Value, flags: &impl Serialize) {
    let mut body = body;
    if let Value::Object(map) = &mut body {
        map.insert("flags".into(), serde_json::to_value(flags).expect("flags serialize"));
    }
    println!("{}", serde_json::to_string_pretty(&body).expect("json output"));
}

fn configure_threads() -> std::result::Result<(), Failure> {
    let Some(raw) = std::env::var_os(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .to_str()
        .and_then(|s| s.trim().parse().ok())
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::usage(format!("{THREADS_ENV} must be a positive integer")))?;
    // A second configuration in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

fn read_input(path: &Path) -> std::result::Result<tesh_core::state::StateVector, Failure> {
    read_state(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn cmd_search(args: &SearchArgs) -> CmdResult {
    if !(4..=9).contains(&args.n) {
        return Err(Failure::usage(format!("--n must be in 4..=9, got {}", args.n)));
    }
    if args.seeds == 0 {
        return Err(Failure::usage("--seeds must be at least 1"));
    }
    let params = SearchParams {
        max_iterations: args.max_iters,
        initial_step: args.step,
        backtrack: args.backtrack,
        threshold: args.threshold,
        gradient: match args.gradient {
            GradientArg::Analytic => GradientMode::Analytic,
            GradientArg::FiniteDifference => GradientMode::FiniteDifference,
        },
        eps: args.eps,
    };
    params.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let summary = search_te(args.n, args.seeds, args.master_seed, &params)?;
    if let Some(dir) = &args.output_dir {
        fs::create_dir_all(dir)?;
    }
    let mut results = Vec::new();
    for (i, r) in summary.results.iter().enumerate() {
        let mut entry = serde_json::to_value(r).expect("result serializes");
        if let (Some(dir), Some(state), true) = (&args.output_dir, &r.state, r.is_success()) {
            let path = dir.join(format!("state_{i:03}.json"));
            write_state(&path, state)?;
            entry["state_file"] = json!(path);
        }
        results.push(entry);
    }
    let body = json!({
        "command": "search",
        "n": summary.n,
        "master_seed": summary.master_seed,
        "params": params,
        "successes": summary.successes,
        "results": results,
    });
    if let Some(dir) = &args.output_dir {
        let mut with_flags = body.clone();
        with_flags["flags"] = serde_json::to_value(args).expect("flags serialize");
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&with_flags).expect("json") + "\n")?;
    }
    print_json(body, args);
    Ok(if summary.successes > 0 {
        ExitStatus::Success
    } else {
        ExitStatus::Negative
    })
}

fn cmd_verify(args: &VerifyArgs) -> CmdResult {
    if !(args.tol >= 0.0) {
        return Err(Failure::usage(format!("--tol must be ≥ 0, got {}", args.tol)));
    }
    let psi = read_input(&args.file)?;
    let report = verify_te(&psi, args.tol)?;
    print_json(serde_json::to_value(&report).expect("report serializes"), args);
    Ok(if report.verdict {
        ExitStatus::Success
    } else {
        ExitStatus::Negative
    })
}

fn cmd_table(args: &TableArgs) -> CmdResult {
    let range: NRange = args.n.parse().map_err(|e: crate::nrange::NRangeError| Failure::usage(e.to_string()))?;
    if !range.within(4, 9) {
        return Err(Failure::usage(format!("--n must lie within 4..9, got {range}")));
    }
    if !(1..=3).contains(&args.sdp_level) {
        return Err(Failure::usage(format!("--sdp-level must be 1, 2 or 3, got {}", args.sdp_level)));
    }
    let report = build_table(range, args.sdp_level, &RelaxationLimits::default(), &SolverSettings::default())?;
    let mut json_body = serde_json::to_value(&report).expect("report serializes");
    json_body["flags"] = serde_json::to_value(args).expect("flags serialize");
    let json_text = serde_json::to_string_pretty(&json_body).expect("json");
    if let Some(path) = &args.json {
        fs::write(path, json_text.clone() + "\n")?;
    }
    match args.format {
        TableFormat::Csv => print!("{}", report.to_csv()),
        TableFormat::Markdown => print!("{}", report.to_markdown()),
        TableFormat::Json => println!("{json_text}"),
    }
    for row in report.rows.iter().filter(|r| !r.solved() || !r.sandwich_holds) {
        eprintln!("n = {}: lp {:?}, sdp {}", row.n, row.lp_status, row.sdp_status);
    }
    Ok(if report.all_solved() {
        ExitStatus::Success
    } else {
        ExitStatus::Internal
    })
}

fn cmd_magic(args: &MagicArgs) -> CmdResult {
    if let Some(haar) = &args.haar {
        let (n, samples) = (haar[0], haar[1]);
        if !(1..=MAX_HAAR_MAGIC_QUBITS).contains(&n) || samples == 0 {
            return Err(Failure::usage(format!(
                "--haar needs 1 ≤ N ≤ {MAX_HAAR_MAGIC_QUBITS} and SAMPLES ≥ 1"
            )));
        }
        if args.alpha != 2.0 {
            return Err(Failure::usage("Haar statistics are computed for α = 2 only"));
        }
        let stats = haar_magic_stats(n, samples, args.seed)?;
        print_json(serde_json::to_value(&stats).expect("stats serialize"), args);
        return Ok(ExitStatus::Success);
    }
    let path = args.file.as_ref().expect("clap enforces a source");
    let psi = read_input(path)?;
    if psi.num_qubits() > MAX_MAGIC_QUBITS {
        return Err(Failure::data(format!(
            "{} qubits exceeds the {MAX_MAGIC_QUBITS}-qubit enumeration limit",
            psi.num_qubits()
        )));
    }
    let report = stabilizer_renyi(&psi, args.alpha)?;
    let stabilizers: Vec<(String, i8)> = find_pauli_stabilizers(&psi, 1e-9)?
        .into_iter()
        .map(|(p, s)| (p.to_string(), s))
        .collect();
    let mut body = serde_json::to_value(&report).expect("report serializes");
    body["stabilizers"] = json!(stabilizers);
    print_json(body, args);
    Ok(ExitStatus::Success)
}

/// Parses `args` (including the program name) and runs one subcommand.
pub fn run<I, T>(args: I) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitStatus::Usage
            } else {
                ExitStatus::Success
            };
        }
    };
    let outcome = configure_threads().and_then(|()| match &cli.command {
        Command::Search(a) => cmd_search(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Table(a) => cmd_table(a),
        Command::Magic(a) => cmd_magic(a),
    });
    match outcome {
        Ok(status) => status,
        Err(f) => {
            eprintln!("tesh: {}", f.message);
            f.status
        }
    }
}
