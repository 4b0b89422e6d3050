use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use dcpgray::io::{read_raw, read_code, write_code, Format};
use dcpgray::simulator::records_to_csv;
use dcpgray::{
    bba, build_maximal, exhaustive_best_balance, exhaustive_max, length_bound, partition_items,
    rcbba, simulate_sweep, validate_addresses, Address, BbaConfig, Decoder, GrayCode, Outcome,
    RcbbaConfig, SimConfig,
};

const EXIT_INVALID: u8 = 1;
const EXIT_CONSTRUCT: u8 = 2;
const EXIT_USAGE: u8 = 3;

#[derive(Parser)]
#[command(name = "dcpgray", version, about = "Balanced constant-weight Gray codes for pooling designs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a code and write it as CSV or JSON.
    Construct(ConstructArgs),
    /// Check a code file; exit status 1 when a constraint is violated.
    Validate {
        file: PathBuf,
    },
    /// Print the length bound min{C(m,r), C(m,r+1)+1}.
    Bound {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        r: usize,
    },
    /// Decode a set of positive pools against a code.
    Decode {
        #[arg(long)]
        code: PathBuf,
        /// Comma-separated 1-based pool indices; may be empty.
        #[arg(long, allow_hyphen_values = true, default_value = "")]
        positives: String,
        /// Do not report single-positive explanations.
        #[arg(long)]
        no_single: bool,
    },
    /// Error-injection study; writes a CSV sweep.
    Simulate(SimulateArgs),
    /// Exhaustive ground truth for small parameters.
    Oracle {
        #[command(subcommand)]
        query: OracleQuery,
    },
    /// Split n ordered items into groups for d consecutive positives.
    Partition {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Algorithm {
    Bba,
    Rcbba,
    Maximal,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scoring {
    WithUnionBits,
    PathOnly,
}

impl From<Scoring> for dcpgray::UnionScoring {
    fn from(s: Scoring) -> Self {
        match s {
            Scoring::WithUnionBits => dcpgray::UnionScoring::WithUnionBits,
            Scoring::PathOnly => dcpgray::UnionScoring::PathOnly,
        }
    }
}

#[derive(Args)]
struct ConstructArgs {
    #[arg(long, value_enum)]
    alg: Algorithm,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    r: usize,
    /// Code length; ignored by `maximal`.
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated 1-based pools of the first address (bba only).
    #[arg(long)]
    first_address: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Node-visit budget.
    #[arg(long, default_value_t = dcpgray::bba::DEFAULT_BUDGET)]
    budget: u64,
    /// Wall-clock limit in seconds, on top of the budget.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long, value_enum, default_value = "with-union-bits")]
    union_scoring: Scoring,
    /// Output file; `.csv` selects CSV, anything else JSON. Defaults to JSON
    /// on standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exhaustive,
    Sampled,
    Auto,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    FalseNegative,
    FalsePositive,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    code: PathBuf,
    #[arg(long, default_value_t = 1)]
    max_errors: usize,
    #[arg(long, value_enum, default_value = "auto")]
    mode: Mode,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "false-negative")]
    kind: Kind,
    #[arg(long)]
    no_single: bool,
    /// CSV output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum OracleQuery {
    /// Longest valid code.
    Max {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 100_000_000)]
        node_limit: u64,
    },
    /// Smallest achievable deviation at length n.
    Balance {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100_000_000)]
        node_limit: u64,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }

    fn construct(message: impl ToString) -> Self {
        Failure {
            code: EXIT_CONSTRUCT,
            message: message.to_string(),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> CmdResult {
    match command {
        Command::Construct(args) => construct(args),
        Command::Validate { file } => validate_file(&file),
        Command::Bound { m, r } => {
            emit(&format!("{}\n", length_bound(m, r).map_err(Failure::usage)?));
            Ok(0)
        }
        Command::Decode {
            code,
            positives,
            no_single,
        } => decode_outcome(&code, &positives, !no_single),
        Command::Simulate(args) => simulate(args),
        Command::Oracle { query } => oracle(query),
        Command::Partition { n, d } => {
            let groups: Vec<[usize; 2]> = partition_items(n, d)
                .map_err(Failure::usage)?
                .into_iter()
                .map(|g| [*g.start(), *g.end()])
                .collect();
            print_json(&json!({ "n": n, "d": d, "groups": groups }));
            Ok(0)
        }
    }
}

/// Writes to standard output, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print_json(v: &Value) {
    emit(&(serde_json::to_string_pretty(v).expect("json values serialize") + "\n"));
}

fn parse_indices(text: &str) -> Result<Vec<usize>, Failure> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| Failure::usage(format!("bad pool index {s:?}")))
        })
        .collect()
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_code(path: &Path) -> Result<GrayCode, Failure> {
    read_code(&read_text(path)?, Format::from_path(path))
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// Writes `<out>.manifest.json` next to an artifact.
fn write_manifest(out: &Path, subcommand: &str, params: Value, started: Instant, body: &str) -> Result<(), Failure> {
    let manifest = json!({
        "subcommand": subcommand,
        "params": params,
        "seed": params.get("seed"),
        "budget": params.get("budget"),
        "version": env!("CARGO_PKG_VERSION"),
        "duration_ms": started.elapsed().as_millis() as u64,
        "output": out.display().to_string(),
        "sha256": hex::encode(Sha256::digest(body.as_bytes())),
    });
    let mut path = out.as_os_str().to_owned();
    path.push(".manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("json values serialize") + "\n";
    write_text(Path::new(&path), &text)
}

fn construct(args: ConstructArgs) -> CmdResult {
    let started = Instant::now();
    let time_limit = match args.time_limit {
        Some(s) if s.is_finite() && s > 0.0 => Some(Duration::from_secs_f64(s)),
        Some(s) => return Err(Failure::usage(format!("time limit {s} must be positive"))),
        None => None,
    };
    let scoring = args.union_scoring.into();
    let need_n = || args.n.ok_or_else(|| Failure::usage("--n is required for this algorithm"));
    let mut params = json!({
        "m": args.m,
        "r": args.r,
        "seed": args.seed,
        "budget": args.budget,
        "union_scoring": scoring,
    });

    let (code, metadata) = match args.alg {
        Algorithm::Bba => {
            let n = need_n()?;
            let first = match &args.first_address {
                Some(text) => Some(
                    Address::from_indices(args.m, &parse_indices(text)?).map_err(Failure::usage)?,
                ),
                None => None,
            };
            let cfg = BbaConfig {
                seed: args.seed,
                budget: args.budget,
                union_scoring: scoring,
                time_limit,
            };
            let out = bba(args.m, args.r, n, first.as_ref(), None, &cfg).map_err(Failure::construct)?;
            params["alg"] = json!("bba");
            params["n"] = json!(n);
            params["first_address"] = json!(first.as_ref().map(Address::indices));
            let meta = json!({
                "algorithm": "bba",
                "seed": args.seed,
                "budget": args.budget,
                "desired_balance": out.desired,
                "nodes_visited": out.nodes_visited,
            });
            (out.code, meta)
        }
        Algorithm::Rcbba => {
            let n = need_n()?;
            let cfg = RcbbaConfig {
                seed: args.seed,
                budget: args.budget,
                union_scoring: scoring,
                time_limit,
                ..RcbbaConfig::default()
            };
            let out = rcbba(args.m, args.r, n, &cfg).map_err(Failure::construct)?;
            params["alg"] = json!("rcbba");
            params["n"] = json!(n);
            let meta = json!({
                "algorithm": "rcbba",
                "seed": args.seed,
                "budget": args.budget,
                "provenance": out.provenance,
            });
            (out.code, meta)
        }
        Algorithm::Maximal => {
            let cfg = BbaConfig {
                seed: args.seed,
                budget: args.budget,
                union_scoring: scoring,
                time_limit,
            };
            let out = build_maximal(args.m, args.r, &cfg).map_err(Failure::construct)?;
            params["alg"] = json!("maximal");
            let meta = json!({
                "algorithm": "maximal",
                "seed": args.seed,
                "budget": args.budget,
                "closing_union": out.closing_union.as_ref().map(Address::indices),
            });
            (out.code, meta)
        }
    };

    match &args.out {
        Some(path) => {
            let body = write_code(&code, Format::from_path(path), Some(metadata));
            write_text(path, &body)?;
            write_manifest(path, "construct", params, started, &body)?;
            let b = code.balance();
            eprintln!(
                "wrote ({}, {}, {}) code to {}, deviation {}",
                code.m(),
                code.r(),
                code.len(),
                path.display(),
                b.deviation
            );
        }
        None => emit(&write_code(&code, Format::Json, Some(metadata))),
    }
    Ok(0)
}

fn validate_file(path: &Path) -> CmdResult {
    let (m, r, addresses) = read_raw(&read_text(path)?, Format::from_path(path))
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let report = validate_addresses(m, r, &addresses);
    print_json(&serde_json::to_value(&report).expect("reports serialize"));
    if report.is_valid {
        Ok(0)
    } else {
        eprintln!("{} violation(s)", report.violations.len());
        Ok(EXIT_INVALID)
    }
}

fn decode_outcome(path: &Path, positives: &str, allow_single: bool) -> CmdResult {
    let code = load_code(path)?;
    let outcome = Outcome::new(code.m(), &parse_indices(positives)?).map_err(Failure::usage)?;
    let result = Decoder::new(&code)
        .decode(&outcome, allow_single)
        .map_err(Failure::usage)?;
    print_json(&serde_json::to_value(&result).expect("results serialize"));
    Ok(0)
}

fn simulate(args: SimulateArgs) -> CmdResult {
    let started = Instant::now();
    let code = load_code(&args.code)?;
    let config = SimConfig {
        max_errors: args.max_errors,
        mode: match args.mode {
            Mode::Exhaustive => dcpgray::SimMode::Exhaustive,
            Mode::Sampled => dcpgray::SimMode::Sampled,
            Mode::Auto => dcpgray::SimMode::Auto,
        },
        samples: args.samples,
        seed: args.seed,
        kind: match args.kind {
            Kind::FalseNegative => dcpgray::ErrorKind::FalseNegative,
            Kind::FalsePositive => dcpgray::ErrorKind::FalsePositive,
        },
        allow_single: !args.no_single,
    };
    let records = simulate_sweep(&code, &config).map_err(Failure::usage)?;
    let csv = records_to_csv(&records);
    match &args.out {
        Some(path) => {
            write_text(path, &csv)?;
            let params = json!({
                "code": args.code.display().to_string(),
                "max_errors": config.max_errors,
                "mode": config.mode,
                "samples": config.samples,
                "seed": config.seed,
                "kind": config.kind,
                "allow_single": config.allow_single,
            });
            write_manifest(path, "simulate", params, started, &csv)?;
        }
        None => emit(&csv),
    }
    Ok(0)
}

fn oracle(query: OracleQuery) -> CmdResult {
    match query {
        OracleQuery::Max { m, r, node_limit } => {
            let res = exhaustive_max(m, r, node_limit).map_err(Failure::construct)?;
            print_json(&json!({
                "m": m,
                "r": r,
                "max_length": res.max_length,
                "bound": length_bound(m, r).ok(),
                "exact": res.exact,
                "search_nodes": res.search_nodes,
                "witness": res.witness.index_sets(),
            }));
        }
        OracleQuery::Balance { m, r, n, node_limit } => {
            let res = exhaustive_best_balance(m, r, n, node_limit).map_err(Failure::construct)?;
            print_json(&json!({
                "m": m,
                "r": r,
                "n": n,
                "deviation": res.deviation,
                "search_nodes": res.search_nodes,
                "witness": res.witness.index_sets(),
            }));
        }
    }
    Ok(0)
}
