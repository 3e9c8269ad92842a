//! Paired benchmark harness: every generated instance is solved directly
//! and again after elimination, producing one CSV row per (instance, mode).
//!
//! Rows are computed on a worker pool (each worker owns its own problem
//! clone) and then sorted before writing, so the CSV layout is stable for a
//! fixed seed range. Timing columns are wall-clock and inherently vary run
//! to run; every other column is deterministic.

use std::fmt;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::csp::Csp;
use crate::elimination::{linear_elimination, CanonicalForm};
use crate::error::Result;
use crate::generator::{generate, ProblemSpec};
use crate::solver::{solve, SearchConfig, SolveOutcome, SolveStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Mode {
    Eliminated,
    Direct,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Eliminated => write!(f, "eliminated"),
            Mode::Direct => write!(f, "direct"),
        }
    }
}

/// One solve of one instance. Paired rows share `(e, nf, t, seed)`.
#[derive(Debug, Clone)]
pub struct ExperimentRow {
    pub e: usize,
    pub nf: usize,
    pub t: f64,
    pub seed: u64,
    pub mode: Mode,
    pub cpu_time: Duration,
    pub backtracks: u64,
    pub satisfiable: bool,
}

pub const CSV_HEADER: &str = "e,nf,t,seed,mode,cpu_time_ms,backtracks,satisfiable";

impl ExperimentRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{:.4},{},{},{},{},{}",
            self.e,
            self.nf,
            self.t,
            self.seed,
            self.mode,
            self.cpu_time.as_millis(),
            self.backtracks,
            self.satisfiable
        )
    }
}

/// One parameter point of a sweep, aggregated over its seeds: total cpu
/// time, mean backtracks.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub e: usize,
    pub nf: usize,
    pub t: f64,
    pub instances: usize,
    pub eliminated_cpu: Duration,
    pub eliminated_backtracks_mean: f64,
    pub direct_cpu: Duration,
    pub direct_backtracks_mean: f64,
}

pub const SUMMARY_HEADER: &str =
    "e,nf,t,instances,eliminated_cpu_ms,eliminated_backtracks_mean,direct_cpu_ms,direct_backtracks_mean";

impl SummaryRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{:.4},{},{},{:.3},{},{:.3}",
            self.e,
            self.nf,
            self.t,
            self.instances,
            self.eliminated_cpu.as_millis(),
            self.eliminated_backtracks_mean,
            self.direct_cpu.as_millis(),
            self.direct_backtracks_mean
        )
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub n: usize,
    pub d: usize,
    pub e_values: Vec<usize>,
    pub nf_values: Vec<usize>,
    pub t_values: Vec<f64>,
    pub seeds: u64,
    pub seed_base: u64,
    pub identity: bool,
}

/// A direct solve plus its wall time.
pub fn solve_direct(csp: &Csp, cfg: &SearchConfig) -> (SolveOutcome, SolveStats) {
    solve(csp, cfg)
}

/// Reduce, solve the reduced problem, extend any solution back to the full
/// variable set. Returns the outcome over original variables, the search
/// stats, the reduction itself, and the reduction time.
pub fn solve_eliminated(csp: &Csp, cfg: &SearchConfig) -> (SolveOutcome, SolveStats, CanonicalForm, Duration) {
    let started = Instant::now();
    let form = linear_elimination(csp.clone());
    let reduce_time = started.elapsed();
    if !form.consistent {
        let outcome = if cfg.count_all { SolveOutcome::Count(0) } else { SolveOutcome::Unsatisfiable };
        return (outcome, SolveStats::default(), form, reduce_time);
    }
    let (outcome, stats) = solve(&form.reduced, cfg);
    let outcome = match outcome {
        SolveOutcome::Satisfiable(reduced_solution) => SolveOutcome::Satisfiable(
            form.extend_solution(&reduced_solution)
                .expect("reduction must leave star supports for every free value"),
        ),
        other => other,
    };
    (outcome, stats, form, reduce_time)
}

/// Runs both modes on the instance of one `(spec, seed)` cell.
pub fn run_pair(spec: &ProblemSpec) -> Result<(ExperimentRow, ExperimentRow)> {
    let csp = generate(spec)?;
    let cfg = SearchConfig::default();

    let started = Instant::now();
    let (elim_outcome, elim_stats, _, _) = solve_eliminated(&csp, &cfg);
    let eliminated = ExperimentRow {
        e: spec.e,
        nf: spec.nf,
        t: spec.t,
        seed: spec.seed,
        mode: Mode::Eliminated,
        // Reduction and search together.
        cpu_time: started.elapsed(),
        backtracks: elim_stats.backtracks,
        satisfiable: elim_outcome.is_satisfiable().unwrap_or(false),
    };

    let (direct_outcome, direct_stats) = solve_direct(&csp, &cfg);
    let direct = ExperimentRow {
        e: spec.e,
        nf: spec.nf,
        t: spec.t,
        seed: spec.seed,
        mode: Mode::Direct,
        cpu_time: direct_stats.wall_time,
        backtracks: direct_stats.backtracks,
        satisfiable: direct_outcome.is_satisfiable().unwrap_or(false),
    };
    Ok((eliminated, direct))
}

/// Runs the whole sweep on a worker pool. Per-instance failures are
/// reported on stderr and skipped; the sweep continues. Rows come back
/// sorted by `(e, nf, t, seed, mode)`.
pub fn run_sweep(config: &SweepConfig) -> Vec<ExperimentRow> {
    let mut cells = Vec::new();
    for &e in &config.e_values {
        for &nf in &config.nf_values {
            for &t in &config.t_values {
                for offset in 0..config.seeds {
                    cells.push(ProblemSpec {
                        n: config.n,
                        d: config.d,
                        e,
                        nf,
                        t,
                        seed: config.seed_base + offset,
                        identity: config.identity,
                    });
                }
            }
        }
    }
    let mut rows: Vec<ExperimentRow> = cells
        .par_iter()
        .filter_map(|spec| match run_pair(spec) {
            Ok((eliminated, direct)) => Some(vec![eliminated, direct]),
            Err(err) => {
                eprintln!(
                    "skipping e={} nf={} t={} seed={}: {err}",
                    spec.e, spec.nf, spec.t, spec.seed
                );
                None
            }
        })
        .flatten()
        .collect();
    rows.sort_by(|a, b| {
        (a.e, a.nf)
            .cmp(&(b.e, b.nf))
            .then(a.t.total_cmp(&b.t))
            .then(a.seed.cmp(&b.seed))
            .then(a.mode.cmp(&b.mode))
    });
    rows
}

/// Aggregates rows per parameter point.
pub fn summarize(rows: &[ExperimentRow]) -> Vec<SummaryRow> {
    use std::collections::BTreeMap;
    let mut points: BTreeMap<(usize, usize, u64), Vec<&ExperimentRow>> = BTreeMap::new();
    for row in rows {
        points.entry((row.e, row.nf, row.t.to_bits())).or_default().push(row);
    }
    points
        .into_iter()
        .map(|((e, nf, t_bits), rows)| {
            let mut summary = SummaryRow {
                e,
                nf,
                t: f64::from_bits(t_bits),
                instances: 0,
                eliminated_cpu: Duration::ZERO,
                eliminated_backtracks_mean: 0.0,
                direct_cpu: Duration::ZERO,
                direct_backtracks_mean: 0.0,
            };
            let mut eliminated = (0u64, 0usize);
            let mut direct = (0u64, 0usize);
            for row in rows {
                match row.mode {
                    Mode::Eliminated => {
                        summary.eliminated_cpu += row.cpu_time;
                        eliminated.0 += row.backtracks;
                        eliminated.1 += 1;
                    }
                    Mode::Direct => {
                        summary.direct_cpu += row.cpu_time;
                        direct.0 += row.backtracks;
                        direct.1 += 1;
                    }
                }
            }
            summary.instances = direct.1;
            summary.eliminated_backtracks_mean = eliminated.0 as f64 / eliminated.1.max(1) as f64;
            summary.direct_backtracks_mean = direct.0 as f64 / direct.1.max(1) as f64;
            summary
        })
        .collect()
}

/// Per-seed `(eliminated, direct)` backtrack pairs, scatter-plot ready.
pub fn scatter(rows: &[ExperimentRow]) -> Vec<(u64, u64)> {
    use std::collections::BTreeMap;
    type Cell = (Option<u64>, Option<u64>);
    let mut pairs: BTreeMap<(usize, usize, u64, u64), Cell> = BTreeMap::new();
    for row in rows {
        let key = (row.e, row.nf, row.t.to_bits(), row.seed);
        let slot = pairs.entry(key).or_default();
        match row.mode {
            Mode::Eliminated => slot.0 = Some(row.backtracks),
            Mode::Direct => slot.1 = Some(row.backtracks),
        }
    }
    pairs
        .into_values()
        .filter_map(|(eliminated, direct)| Some((eliminated?, direct?)))
        .collect()
}

pub fn write_rows(path: &Path, rows: &[ExperimentRow]) -> Result<()> {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_scatter(path: &Path, pairs: &[(u64, u64)]) -> Result<()> {
    let mut out = String::from("backtracks_eliminated,backtracks_direct");
    out.push('\n');
    for (eliminated, direct) in pairs {
        out.push_str(&format!("{eliminated},{direct}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_sweep() -> SweepConfig {
        SweepConfig {
            n: 8,
            d: 4,
            e_values: vec![12],
            nf_values: vec![2],
            t_values: vec![0.5],
            seeds: 4,
            seed_base: 100,
            identity: false,
        }
    }

    #[test]
    fn sweep_produces_paired_rows() {
        let rows = run_sweep(&small_sweep());
        assert_eq!(rows.len(), 8);
        for pair in rows.chunks(2) {
            assert_eq!(pair[0].seed, pair[1].seed);
            assert_eq!(pair[0].mode, Mode::Eliminated);
            assert_eq!(pair[1].mode, Mode::Direct);
            // Paired verdicts always agree.
            assert_eq!(pair[0].satisfiable, pair[1].satisfiable);
        }
        let summaries = summarize(&rows);
        assert_eq!(summaries.len(), 1);
        assert_eq!(summaries[0].instances, 4);
        assert_eq!(scatter(&rows).len(), 4);
    }

    #[test]
    fn single_seed_sweep_gives_exactly_two_rows() {
        let mut config = small_sweep();
        config.seeds = 1;
        let rows = run_sweep(&config);
        assert_eq!(rows.len(), 2);
    }

    #[test]
    fn eliminated_mode_extends_to_solutions_of_the_original() {
        for seed in 0..20 {
            let spec = ProblemSpec { n: 7, d: 3, e: 10, nf: 3, t: 0.7, seed, identity: false };
            let csp = generate(&spec).unwrap();
            let (outcome, _, _, _) = solve_eliminated(&csp, &SearchConfig::default());
            if let SolveOutcome::Satisfiable(solution) = outcome {
                assert!(csp.satisfies(&solution), "seed {seed}");
            }
        }
    }
}
