//! The `fmplex` command-line tool.
//!
//! Five subcommands: `solve` decides a script, `eliminate` projects variables
//! out and prints the resulting formula, `check` validates a model or core
//! witness, `gen` writes random scripts, and `bench` runs a directory of
//! scripts under every requested configuration and prints CSV statistics.
//!
//! Exit codes: 0 for a decision (or a valid witness), 1 for an invalid
//! witness, 2 for parse or usage errors, 3 for an exhausted budget.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Error;
use crate::fm::fm_qe;
use crate::fmplex::{fmplex_qe, Side};
use crate::generate::{random_problem, GenConfig};
use crate::outcome::{Budgets, Stats};
use crate::pipeline::{normalized_system, solve_problem, BackendKind, HeuristicKind};
use crate::simplex::simplex_solve;
use crate::smtlib::{self, Problem};
use crate::system::evaluate_all;

const EXIT_OK: i32 = 0;
const EXIT_INVALID: i32 = 1;
const EXIT_USAGE: i32 = 2;
const EXIT_BUDGET: i32 = 3;

const CSV_HEADER: &str =
    "file,backend,heuristic,seed,result,time_ms,rows_generated,nodes_visited,pivots,max_depth";

fn backend_from_arg(s: &str) -> Result<BackendKind, String> {
    BackendKind::from_name(s).ok_or_else(|| {
        format!(
            "expected fm|fmplex-a|fmplex-b|fmplex-c|simplex, got `{}`",
            s
        )
    })
}

fn heuristic_from_arg(s: &str) -> Result<HeuristicKind, String> {
    HeuristicKind::from_name(s).ok_or_else(|| format!("expected mfo|mcl|rand, got `{}`", s))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Method {
    Fm,
    Fmplex,
}

fn method_from_arg(s: &str) -> Result<Method, String> {
    match s {
        "fm" => Ok(Method::Fm),
        "fmplex" => Ok(Method::Fmplex),
        other => Err(format!("expected fm|fmplex, got `{}`", other)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Sign {
    Minus,
    Plus,
}

fn sign_from_arg(s: &str) -> Result<Sign, String> {
    match s {
        "minus" => Ok(Sign::Minus),
        "plus" => Ok(Sign::Plus),
        other => Err(format!("expected minus|plus, got `{}`", other)),
    }
}

/// Seed used when neither `--seed` nor `FMPLEX_SEED` provides one.
fn default_seed() -> u64 {
    std::env::var("FMPLEX_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0)
}

fn budgets_of(max_nodes: Option<u64>, max_rows: Option<u64>) -> Budgets {
    let mut budgets = Budgets::default();
    if let Some(n) = max_nodes {
        budgets.max_nodes = n;
    }
    if let Some(r) = max_rows {
        budgets.max_rows = r;
    }
    budgets
}

#[derive(Parser)]
#[command(
    name = "fmplex",
    about = "Exact decision procedures and variable elimination for conjunctions of linear real constraints"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide satisfiability of an SMT-LIB script.
    Solve(SolveArgs),
    /// Eliminate variables and print the projected formula.
    Eliminate(EliminateArgs),
    /// Validate a model or unsat-core witness against a script.
    Check(CheckArgs),
    /// Write random scripts for testing and benchmarking.
    Gen(GenArgs),
    /// Solve every script in a directory under every configuration; print CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Input script.
    file: PathBuf,
    /// Decision procedure: fm | fmplex-a | fmplex-b | fmplex-c | simplex.
    #[arg(long, value_parser = backend_from_arg, default_value = "fmplex-c")]
    backend: BackendKind,
    /// Branching heuristic for the fmplex backends: mfo | mcl | rand.
    #[arg(long, value_parser = heuristic_from_arg, default_value = "mfo")]
    heuristic: HeuristicKind,
    /// Seed for the rand heuristic. Defaults to $FMPLEX_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Abort after visiting this many search nodes.
    #[arg(long)]
    max_nodes: Option<u64>,
    /// Abort after generating this many rows.
    #[arg(long)]
    max_rows: Option<u64>,
    /// Append a `; nodes=… rows=… pivots=… depth=… time_ms=…` comment line.
    #[arg(long)]
    stats: bool,
    /// Print a model when satisfiable.
    #[arg(long)]
    model: bool,
    /// Print an unsat core when unsatisfiable.
    #[arg(long)]
    core: bool,
}

#[derive(Args)]
struct EliminateArgs {
    /// Input script.
    file: PathBuf,
    /// Variables to eliminate, in order (comma-separated or repeated).
    #[arg(long, value_delimiter = ',')]
    vars: Vec<String>,
    /// Projection engine: fmplex | fm.
    #[arg(long, value_parser = method_from_arg, default_value = "fmplex")]
    method: Method,
    /// Bound family the eliminated variables designate (fmplex only):
    /// minus (lower bounds) | plus (upper bounds).
    #[arg(long, value_parser = sign_from_arg, default_value = "minus")]
    sign: Sign,
    /// Abort after generating this many rows.
    #[arg(long)]
    max_rows: Option<u64>,
}

#[derive(Args)]
#[command(group = ArgGroup::new("witness").required(true).args(["model", "core"]))]
struct CheckArgs {
    /// Input script.
    file: PathBuf,
    /// Model witness: inline `x=3,y=-1/2`, an emitted `(model …)` block,
    /// or a path to a file containing either.
    #[arg(long)]
    model: Option<String>,
    /// Core witness: inline labels or indices, an emitted `(core …)` line,
    /// or a path to a file containing either.
    #[arg(long)]
    core: Option<String>,
}

#[derive(Args)]
struct GenArgs {
    /// Directory the scripts are written into (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// How many scripts to write.
    #[arg(long, default_value_t = 10)]
    count: usize,
    /// Variables per script.
    #[arg(long, default_value_t = 2)]
    vars: usize,
    /// Atoms per script.
    #[arg(long, default_value_t = 4)]
    rows: usize,
    /// Coefficients and bounds are uniform in -N..=N.
    #[arg(long, value_name = "N", default_value_t = 3)]
    coeff_range: i64,
    /// RNG seed. Defaults to $FMPLEX_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Fraction of scripts with a planted satisfying point.
    #[arg(long, default_value_t = 0.5)]
    sat_bias: f64,
    /// Probability that an atom is strict.
    #[arg(long, default_value_t = 0.0)]
    strict_prob: f64,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory of .smt2 scripts.
    dir: PathBuf,
    /// Backends to run (comma-separated).
    #[arg(
        long,
        value_parser = backend_from_arg,
        value_delimiter = ',',
        default_value = "fm,fmplex-a,fmplex-b,fmplex-c,simplex"
    )]
    backend: Vec<BackendKind>,
    /// Heuristics for the fmplex backends (comma-separated).
    #[arg(long, value_parser = heuristic_from_arg, value_delimiter = ',', default_value = "mfo")]
    heuristic: Vec<HeuristicKind>,
    /// Seeds for the rand heuristic (comma-separated). Defaults to $FMPLEX_SEED, then 0.
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
    /// Abort each run after visiting this many search nodes.
    #[arg(long)]
    max_nodes: Option<u64>,
    /// Abort each run after generating this many rows.
    #[arg(long)]
    max_rows: Option<u64>,
}

/// Parses argv and runs the tool. Returns the process exit code.
pub fn run() -> i32 {
    match Cli::parse().command {
        Command::Solve(args) => cmd_solve(&args),
        Command::Eliminate(args) => cmd_eliminate(&args),
        Command::Check(args) => cmd_check(&args),
        Command::Gen(args) => cmd_gen(&args),
        Command::Bench(args) => cmd_bench(&args),
    }
}

/// Reads and parses a script, reporting failures on stderr.
fn load(path: &Path) -> Result<Problem, i32> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("{}: {}", path.display(), e);
        EXIT_USAGE
    })?;
    smtlib::parse(&text).map_err(|e| {
        eprintln!("{}:{}", path.display(), e);
        EXIT_USAGE
    })
}

fn stats_line(stats: &Stats, time_ms: u128) -> String {
    format!(
        "; nodes={} rows={} pivots={} depth={} time_ms={}",
        stats.nodes_visited, stats.rows_generated, stats.pivots, stats.max_depth, time_ms
    )
}

fn cmd_solve(args: &SolveArgs) -> i32 {
    let problem = match load(&args.file) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let budgets = budgets_of(args.max_nodes, args.max_rows);
    let seed = args.seed.unwrap_or_else(default_seed);
    let started = Instant::now();
    let output = solve_problem(&problem, args.backend, args.heuristic, seed, &budgets);
    let time_ms = started.elapsed().as_millis();
    let code = match &output.outcome {
        Ok(outcome) => {
            print!(
                "{}",
                smtlib::print_result(
                    &problem,
                    outcome,
                    args.model || problem.get_model,
                    args.core || problem.get_unsat_core,
                )
            );
            EXIT_OK
        }
        Err(Error::Budget { .. }) => {
            println!("unknown");
            EXIT_BUDGET
        }
        Err(e) => {
            eprintln!("{}", e);
            return EXIT_USAGE;
        }
    };
    if args.stats {
        println!("{}", stats_line(&output.stats, time_ms));
    }
    code
}

fn cmd_eliminate(args: &EliminateArgs) -> i32 {
    let problem = match load(&args.file) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let mut order = Vec::with_capacity(args.vars.len());
    for name in &args.vars {
        match problem.var_index(name) {
            Some(j) => order.push(j),
            None => {
                eprintln!("unknown variable `{}`", name);
                return EXIT_USAGE;
            }
        }
    }
    let system = normalized_system(&problem);
    match args.method {
        Method::Fm => {
            let (result, _) = fm_qe(&system, &order);
            println!(
                "{}",
                smtlib::print_qe(std::slice::from_ref(&result), &problem.variables)
            );
            EXIT_OK
        }
        Method::Fmplex => {
            let side = match args.sign {
                Sign::Minus => Side::Lower,
                Sign::Plus => Side::Upper,
            };
            let order: Vec<(usize, Side)> = order.into_iter().map(|j| (j, side)).collect();
            let budgets = budgets_of(None, args.max_rows);
            match fmplex_qe(&system, &order, &budgets) {
                Ok(result) => {
                    println!(
                        "{}",
                        smtlib::print_qe(&result.disjuncts, &problem.variables)
                    );
                    EXIT_OK
                }
                Err(Error::Budget { .. }) => {
                    println!("unknown");
                    EXIT_BUDGET
                }
                Err(e) => {
                    eprintln!("{}", e);
                    EXIT_USAGE
                }
            }
        }
    }
}

/// Witness arguments name a file or carry the witness inline.
fn witness_text(arg: &str) -> Result<String, i32> {
    let path = Path::new(arg);
    if path.is_file() {
        fs::read_to_string(path).map_err(|e| {
            eprintln!("{}: {}", path.display(), e);
            EXIT_USAGE
        })
    } else {
        Ok(arg.to_string())
    }
}

fn cmd_check(args: &CheckArgs) -> i32 {
    let problem = match load(&args.file) {
        Ok(p) => p,
        Err(code) => return code,
    };
    if let Some(model_arg) = &args.model {
        let text = match witness_text(model_arg) {
            Ok(t) => t,
            Err(code) => return code,
        };
        let model = match smtlib::parse_model(&text, &problem) {
            Ok(m) => m,
            Err(msg) => {
                eprintln!("invalid model: {}", msg);
                return EXIT_INVALID;
            }
        };
        match evaluate_all(&model, &normalized_system(&problem)) {
            Ok(true) => {
                println!("valid model");
                EXIT_OK
            }
            Ok(false) => {
                println!("invalid model");
                EXIT_INVALID
            }
            Err(e) => {
                eprintln!("invalid model: {}", e);
                EXIT_INVALID
            }
        }
    } else {
        let core_arg = args
            .core
            .as_deref()
            .expect("clap enforces the witness group");
        let text = match witness_text(core_arg) {
            Ok(t) => t,
            Err(code) => return code,
        };
        let core = match smtlib::parse_core(&text, &problem) {
            Ok(c) => c,
            Err(msg) => {
                eprintln!("invalid core: {}", msg);
                return EXIT_INVALID;
            }
        };
        let cited = Problem {
            variables: problem.variables.clone(),
            atoms: core.iter().map(|&i| problem.atoms[i].clone()).collect(),
            ..Problem::default()
        };
        let (outcome, _) = simplex_solve(&normalized_system(&cited));
        if outcome.is_unsat() {
            println!("valid core");
            EXIT_OK
        } else {
            println!("invalid core");
            EXIT_INVALID
        }
    }
}

fn cmd_gen(args: &GenArgs) -> i32 {
    if let Err(e) = fs::create_dir_all(&args.out) {
        eprintln!("{}: {}", args.out.display(), e);
        return EXIT_USAGE;
    }
    let seed = args.seed.unwrap_or_else(default_seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = GenConfig {
        nvars: args.vars,
        nrows: args.rows,
        coeff_range: args.coeff_range,
        sat_bias: args.sat_bias,
        strict_prob: args.strict_prob,
    };
    for k in 0..args.count {
        let problem = random_problem(&mut rng, &config);
        let path = args.out.join(format!("inst_{:03}.smt2", k));
        if let Err(e) = fs::write(&path, smtlib::print_problem(&problem)) {
            eprintln!("{}: {}", path.display(), e);
            return EXIT_USAGE;
        }
        println!("{}", path.display());
    }
    EXIT_OK
}

/// One column combination of the benchmark matrix. Inapplicable dimensions
/// are `None` and print as empty CSV cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct BenchConfig {
    backend: BackendKind,
    heuristic: Option<HeuristicKind>,
    seed: Option<u64>,
}

/// Expands the requested dimension lists into concrete configurations,
/// skipping dimensions a backend ignores so no duplicate rows arise.
fn expand_configs(
    backends: &[BackendKind],
    heuristics: &[HeuristicKind],
    seeds: &[u64],
) -> Vec<BenchConfig> {
    let mut out = Vec::new();
    for &backend in backends {
        if !backend.uses_heuristic() {
            out.push(BenchConfig {
                backend,
                heuristic: None,
                seed: None,
            });
            continue;
        }
        for &heuristic in heuristics {
            if heuristic.uses_seed() {
                for &seed in seeds {
                    out.push(BenchConfig {
                        backend,
                        heuristic: Some(heuristic),
                        seed: Some(seed),
                    });
                }
            } else {
                out.push(BenchConfig {
                    backend,
                    heuristic: Some(heuristic),
                    seed: None,
                });
            }
        }
    }
    out
}

fn bench_row(path: &Path, config: &BenchConfig, budgets: &Budgets) -> String {
    let name = match path.file_name() {
        Some(n) => n.to_string_lossy().into_owned(),
        None => path.display().to_string(),
    };
    let heuristic_cell = config
        .heuristic
        .map(|h| h.name().to_string())
        .unwrap_or_default();
    let seed_cell = config.seed.map(|s| s.to_string()).unwrap_or_default();
    let prefix = format!(
        "{},{},{},{}",
        name,
        config.backend.name(),
        heuristic_cell,
        seed_cell
    );
    let problem = match fs::read_to_string(path) {
        Ok(text) => match smtlib::parse(&text) {
            Ok(p) => p,
            Err(_) => return format!("{},error,,,,,", prefix),
        },
        Err(_) => return format!("{},error,,,,,", prefix),
    };
    let started = Instant::now();
    let output = solve_problem(
        &problem,
        config.backend,
        config.heuristic.unwrap_or(HeuristicKind::MinFanout),
        config.seed.unwrap_or(0),
        budgets,
    );
    let time_ms = started.elapsed().as_millis();
    let result = match &output.outcome {
        Ok(o) if o.is_sat() => "sat",
        Ok(_) => "unsat",
        Err(Error::Budget { .. }) => "budget",
        Err(_) => "error",
    };
    if result == "error" {
        return format!("{},error,{},,,,", prefix, time_ms);
    }
    let stats = &output.stats;
    // Only the counters a backend actually maintains are reported.
    let (rows, nodes, pivots, depth) = match config.backend {
        BackendKind::Fm => (
            stats.rows_generated.to_string(),
            String::new(),
            String::new(),
            String::new(),
        ),
        BackendKind::Simplex => (
            String::new(),
            String::new(),
            stats.pivots.to_string(),
            String::new(),
        ),
        _ => (
            stats.rows_generated.to_string(),
            stats.nodes_visited.to_string(),
            String::new(),
            stats.max_depth.to_string(),
        ),
    };
    format!(
        "{},{},{},{},{},{},{}",
        prefix, result, time_ms, rows, nodes, pivots, depth
    )
}

fn cmd_bench(args: &BenchArgs) -> i32 {
    let entries = match fs::read_dir(&args.dir) {
        Ok(entries) => entries,
        Err(e) => {
            eprintln!("{}: {}", args.dir.display(), e);
            return EXIT_USAGE;
        }
    };
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|ext| ext == "smt2"))
        .collect();
    files.sort();
    let seeds = if args.seed.is_empty() {
        vec![default_seed()]
    } else {
        args.seed.clone()
    };
    let configs = expand_configs(&args.backend, &args.heuristic, &seeds);
    let budgets = budgets_of(args.max_nodes, args.max_rows);
    let jobs: Vec<(usize, usize)> = (0..files.len())
        .flat_map(|f| (0..configs.len()).map(move |c| (f, c)))
        .collect();
    let mut rows: Vec<((usize, usize), String)> = jobs
        .par_iter()
        .map(|&(f, c)| ((f, c), bench_row(&files[f], &configs[c], &budgets)))
        .collect();
    rows.sort_by_key(|(key, _)| *key);
    println!("{}", CSV_HEADER);
    for (_, row) in rows {
        println!("{}", row);
    }
    EXIT_OK
}
