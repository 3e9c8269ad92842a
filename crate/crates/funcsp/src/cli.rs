//! The `funcsp` command line: generate, reduce, solve, verify, and sweep.
//!
//! Exit codes: 0 for success / satisfiable, 1 for unsatisfiable (or a failed
//! verification), 2 for usage and integrity errors, 3 when a node limit cut
//! the search short.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{self, SweepConfig};
use crate::csp::Csp;
use crate::elimination::{is_canonical, linear_elimination, variable_elimination, CanonicalForm};
use crate::error::{Error, Result};
use crate::format::{
    parse_instance, parse_sidecar, serialize_instance, serialize_sidecar, Instance,
    ReductionSidecar,
};
use crate::generator::{generate, ProblemSpec};
use crate::relation::Value;
use crate::solver::{brute_force_with_budget, solve, SearchConfig, SolveOutcome};

#[derive(Parser)]
#[command(name = "funcsp", about = "Binary CSP toolkit with functional-constraint elimination", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance.
    Gen(GenArgs),
    /// Rewrite an instance into canonical functional form.
    Reduce(ReduceArgs),
    /// Solve an instance, optionally reducing it first.
    Solve(SolveArgs),
    /// Run a paired eliminated-vs-direct sweep and write CSV results.
    Bench(BenchArgs),
    /// Check reduction equivalence and canonicity by brute force.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Number of variables.
    #[arg(short = 'n', long = "vars")]
    n: usize,
    /// Domain size.
    #[arg(short = 'd', long = "domain")]
    d: usize,
    /// Number of constraints.
    #[arg(short = 'e', long = "cons")]
    e: usize,
    /// Number of functional constraints.
    #[arg(long)]
    nf: usize,
    /// Tightness: fraction of allowed tuples per non-functional constraint.
    #[arg(short = 't', long = "tightness")]
    t: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use identity maps for the functional constraints.
    #[arg(long)]
    identity: bool,
    /// Output file; stdout when omitted.
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Algo {
    /// Greedy rescan reducer with domain revision at each elimination.
    Fig2,
    /// Ordering-driven reducer, at most two rewrites per constraint.
    Fig3,
}

impl Algo {
    fn reduce(self, csp: Csp) -> CanonicalForm {
        match self {
            Algo::Fig2 => variable_elimination(csp),
            Algo::Fig3 => linear_elimination(csp),
        }
    }
}

#[derive(Args)]
struct ReduceArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Algo::Fig3)]
    algo: Algo,
    /// Reduced instance path; `<input>.reduced` when omitted.
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
    /// Star-edge sidecar path; `<input>.map` when omitted.
    #[arg(long = "map")]
    map: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    input: PathBuf,
    /// Reduce before searching and extend the solution afterwards.
    #[arg(long)]
    prereduce: bool,
    /// Count every solution instead of stopping at the first.
    #[arg(long)]
    count_all: bool,
    /// Abort after this many search nodes.
    #[arg(long)]
    node_limit: Option<u64>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(short = 'n', long = "vars")]
    n: usize,
    #[arg(short = 'd', long = "domain")]
    d: usize,
    /// Constraint counts to sweep.
    #[arg(long = "e", num_args(1..), required = true)]
    e_values: Vec<usize>,
    /// Functional constraint counts to sweep.
    #[arg(long = "nf", num_args(1..), required = true)]
    nf_values: Vec<usize>,
    /// Tightness values to sweep.
    #[arg(long = "t", num_args(1..), required = true)]
    t_values: Vec<f64>,
    /// Instances per parameter point.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    #[arg(long)]
    identity: bool,
    /// Per-instance CSV rows.
    #[arg(long)]
    out: PathBuf,
    /// Aggregate CSV per parameter point.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Backtracks-with vs backtracks-without CSV.
    #[arg(long)]
    scatter: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    input: PathBuf,
    /// A previously reduced instance to verify against the input.
    #[arg(long, requires = "map")]
    reduced: Option<PathBuf>,
    /// The sidecar written alongside the reduced instance.
    #[arg(long, requires = "reduced")]
    map: Option<PathBuf>,
    /// Enumeration budget for the brute-force check.
    #[arg(long, default_value_t = crate::solver::DEFAULT_ENUMERATION_BUDGET)]
    budget: u128,
}

/// Parses the process arguments and runs the selected command, returning
/// the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Reduce(args) => cmd_reduce(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    }
}

fn load_binary(path: &Path) -> Result<Csp> {
    parse_instance(&std::fs::read_to_string(path)?)?.binary_only()
}

fn cmd_gen(args: GenArgs) -> Result<i32> {
    let spec = ProblemSpec {
        n: args.n,
        d: args.d,
        e: args.e,
        nf: args.nf,
        t: args.t,
        seed: args.seed,
        identity: args.identity,
    };
    let csp = generate(&spec)?;
    let text = serialize_instance(&Instance::binary(csp));
    match args.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{}.{suffix}", path.display()))
}

fn cmd_reduce(args: ReduceArgs) -> Result<i32> {
    let csp = load_binary(&args.input)?;
    let total = csp.num_variables();
    let form = args.algo.reduce(csp);
    let out = args.out.unwrap_or_else(|| suffixed(&args.input, "reduced"));
    let map = args.map.unwrap_or_else(|| suffixed(&args.input, "map"));

    let reduced_text = if form.consistent {
        serialize_instance(&Instance::binary(form.reduced.clone()))
    } else {
        String::new()
    };
    std::fs::write(&out, reduced_text)?;
    std::fs::write(&map, serialize_sidecar(&ReductionSidecar::of(&form)))?;

    println!("eliminated {} of {} variables", form.eliminated.len(), total);
    println!("canonical {}", is_canonical(&form.problem));
    if form.consistent {
        println!("verdict CONSISTENT");
        Ok(0)
    } else {
        println!("verdict UNSAT");
        Ok(1)
    }
}

fn outcome_line(outcome: &SolveOutcome) -> String {
    match outcome {
        SolveOutcome::Satisfiable(solution) => {
            let mut line = String::from("SAT");
            for value in solution {
                let _ = write!(line, " {value}");
            }
            line
        }
        SolveOutcome::Unsatisfiable => "UNSAT".into(),
        SolveOutcome::Count(count) => format!("COUNT {count}"),
        SolveOutcome::LimitReached => "LIMIT".into(),
    }
}

fn outcome_code(outcome: &SolveOutcome) -> i32 {
    match outcome.is_satisfiable() {
        Some(true) => 0,
        Some(false) => 1,
        None => 3,
    }
}

fn cmd_solve(args: SolveArgs) -> Result<i32> {
    let csp = load_binary(&args.input)?;
    let cfg = SearchConfig {
        count_all: args.count_all,
        node_limit: args.node_limit,
        ..SearchConfig::default()
    };
    let (outcome, stats) = if args.prereduce {
        let (outcome, stats, form, reduce_time) = bench::solve_eliminated(&csp, &cfg);
        println!(
            "reduced eliminated={} consistent={} reduce_ms={}",
            form.eliminated.len(),
            form.consistent,
            reduce_time.as_millis()
        );
        (outcome, stats)
    } else {
        solve(&csp, &cfg)
    };
    println!("{}", outcome_line(&outcome));
    println!(
        "stats nodes={} backtracks={} ac_revisions={} solve_ms={}",
        stats.nodes,
        stats.backtracks,
        stats.ac_revisions,
        stats.wall_time.as_millis()
    );
    Ok(outcome_code(&outcome))
}

fn cmd_bench(args: BenchArgs) -> Result<i32> {
    let config = SweepConfig {
        n: args.n,
        d: args.d,
        e_values: args.e_values,
        nf_values: args.nf_values,
        t_values: args.t_values,
        seeds: args.seeds,
        seed_base: args.seed_base,
        identity: args.identity,
    };
    let rows = bench::run_sweep(&config);
    bench::write_rows(&args.out, &rows)?;
    println!("wrote {} rows to {}", rows.len(), args.out.display());
    if let Some(path) = args.summary {
        let summary = bench::summarize(&rows);
        bench::write_summary(&path, &summary)?;
        println!("wrote {} summary rows to {}", summary.len(), path.display());
    }
    if let Some(path) = args.scatter {
        let pairs = bench::scatter(&rows);
        bench::write_scatter(&path, &pairs)?;
        println!("wrote {} scatter points to {}", pairs.len(), path.display());
    }
    Ok(0)
}

fn sorted(mut solutions: Vec<Vec<Value>>) -> Vec<Vec<Value>> {
    solutions.sort();
    solutions
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let original = load_binary(&args.input)?;
    let reference = sorted(brute_force_with_budget(&original, args.budget)?);
    let mut all_equivalent = true;

    if let (Some(reduced_path), Some(map_path)) = (&args.reduced, &args.map) {
        let sidecar = parse_sidecar(&std::fs::read_to_string(map_path)?, original.domain_size())?;
        if sidecar.total_variables != original.num_variables() {
            return Err(Error::Integrity(format!(
                "sidecar covers {} variables, instance has {}",
                sidecar.total_variables,
                original.num_variables()
            )));
        }
        let (equivalent, canonical) = if sidecar.consistent {
            let reduced = load_binary(reduced_path)?;
            if reduced.num_variables() != sidecar.free.len() {
                return Err(Error::Integrity(format!(
                    "reduced instance has {} variables, sidecar lists {} free",
                    reduced.num_variables(),
                    sidecar.free.len()
                )));
            }
            let mut extended = Vec::new();
            for solution in brute_force_with_budget(&reduced, args.budget)? {
                extended.push(sidecar.extend(&solution)?);
            }
            let structure = rebuild_full_problem(&original, &reduced, &sidecar)?;
            (sorted(extended) == reference, is_canonical(&structure))
        } else {
            (reference.is_empty(), true)
        };
        all_equivalent &= equivalent;
        report("sidecar", equivalent, canonical);
    } else {
        for (name, algo) in [("fig2", Algo::Fig2), ("fig3", Algo::Fig3)] {
            let form = algo.reduce(original.clone());
            let mut extended = Vec::new();
            for solution in brute_force_with_budget(&form.reduced, args.budget)? {
                extended.push(form.extend_solution(&solution)?);
            }
            let equivalent = sorted(extended) == reference;
            all_equivalent &= equivalent;
            report(name, equivalent, is_canonical(&form.problem));
        }
    }
    Ok(if all_equivalent { 0 } else { 1 })
}

fn report(name: &str, equivalent: bool, canonical: bool) {
    println!(
        "{name} {} {}",
        if equivalent { "EQUIVALENT" } else { "NOT-EQUIVALENT" },
        if canonical { "CANONICAL" } else { "NOT-CANONICAL" }
    );
}

/// Reassembles the full reduced problem from its files: the reduced
/// constraints mapped back to original variable ids plus the star edges.
fn rebuild_full_problem(original: &Csp, reduced: &Csp, sidecar: &ReductionSidecar) -> Result<Csp> {
    let mut full = Csp::new(original.num_variables(), original.domain_size());
    for (i, j, _, rel) in reduced.constraints() {
        full.add_constraint(sidecar.free[i.0], sidecar.free[j.0], rel.clone())?;
    }
    for &(j, center, ref rel) in &sidecar.stars {
        full.add_constraint(center, j, rel.clone())?;
    }
    Ok(full)
}
