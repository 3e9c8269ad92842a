//! Arc consistency and backtracking search.
//!
//! [`ac_enforce`] prunes domains to the arc-consistent fixpoint with a
//! queue-based algorithm that remembers the last support found per
//! (variable, value, neighbor) arc and resumes scanning from there, so each
//! enforcement costs at most one full pass over every constraint matrix.
//! [`solve`] runs MAC: assign, re-enforce arc consistency around the
//! assignment, backtrack on wipeout. Variables are picked by smallest
//! live-domain over dynamic degree, values in ascending order, ties by
//! variable id, so runs are reproducible. [`brute_force`] enumerates the
//! whole assignment space and is the oracle everything else is checked
//! against.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::time::{Duration, Instant};

use crate::csp::{Csp, VariableId};
use crate::error::{Error, Result};
use crate::relation::Value;

/// Counters from one solve.
#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    /// Value assignments attempted.
    pub nodes: u64,
    /// Assigned variables retracted after their values ran out.
    pub backtracks: u64,
    /// Arc revisions performed across all propagations.
    pub ac_revisions: u64,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariableHeuristic {
    /// Smallest live domain divided by degree towards unassigned variables.
    DomDeg,
    /// Smallest variable id first.
    Lexicographic,
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub heuristic: VariableHeuristic,
    /// Count every solution instead of stopping at the first.
    pub count_all: bool,
    /// Abort once this many nodes have been expanded.
    pub node_limit: Option<u64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { heuristic: VariableHeuristic::DomDeg, count_all: false, node_limit: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveOutcome {
    Satisfiable(Vec<Value>),
    Unsatisfiable,
    /// Total number of solutions, when counting all.
    Count(u64),
    /// The node limit was reached before the search could decide.
    LimitReached,
}

impl SolveOutcome {
    pub fn is_satisfiable(&self) -> Option<bool> {
        match self {
            SolveOutcome::Satisfiable(_) => Some(true),
            SolveOutcome::Unsatisfiable => Some(false),
            SolveOutcome::Count(n) => Some(*n > 0),
            SolveOutcome::LimitReached => None,
        }
    }
}

/// Last support found per oriented arc, per value of the revised side.
/// Within one enforcement domains only shrink, so scans resume right after
/// the support that died.
struct SupportMemo {
    last: HashMap<(usize, usize), Vec<Option<Value>>>,
}

impl SupportMemo {
    fn new() -> Self {
        SupportMemo { last: HashMap::new() }
    }

    fn entry(&mut self, x: usize, y: usize, d: usize) -> &mut Vec<Option<Value>> {
        self.last.entry((x, y)).or_insert_with(|| vec![None; d])
    }
}

/// Revises `x` against `y`: removes values of `x` without a live support
/// under the relation between them. Returns the removed values.
fn revise(csp: &mut Csp, x: VariableId, y: VariableId, memo: &mut SupportMemo) -> Vec<Value> {
    let Some(rel) = csp.relation(x, y) else {
        return Vec::new();
    };
    let rel = rel.clone();
    let d = csp.domain_size();
    let last = memo.entry(x.0, y.0, d);
    let mut removed = Vec::new();
    for a in csp.domain(x).values() {
        if let Some(b) = last[a] {
            if csp.domain(y).contains(b) {
                continue;
            }
        }
        let mut scan = match last[a] {
            Some(b) => b + 1,
            None => 0,
        };
        let mut support = None;
        while let Some(b) = rel.next_support(a, scan) {
            if csp.domain(y).contains(b) {
                support = Some(b);
                break;
            }
            scan = b + 1;
        }
        match support {
            Some(b) => last[a] = Some(b),
            None => {
                csp.domain_mut(x).remove(a);
                removed.push(a);
            }
        }
    }
    removed
}

/// Runs the revision queue to its fixpoint. Returns false if a domain
/// emptied. With `stop_on_wipeout` the first empty domain aborts the run
/// (enough for search); without it propagation continues to the closure,
/// draining every domain the emptiness forces.
fn propagate(
    csp: &mut Csp,
    mut queue: VecDeque<(VariableId, VariableId)>,
    memo: &mut SupportMemo,
    revisions: &mut u64,
    mut removals: Option<&mut Vec<Vec<Value>>>,
    stop_on_wipeout: bool,
) -> bool {
    let mut wiped = false;
    let mut queued: BTreeSet<(usize, usize)> = queue.iter().map(|&(x, y)| (x.0, y.0)).collect();
    while let Some((x, y)) = queue.pop_front() {
        queued.remove(&(x.0, y.0));
        *revisions += 1;
        let removed = revise(csp, x, y, memo);
        if removed.is_empty() {
            continue;
        }
        if let Some(sink) = removals.as_deref_mut() {
            sink[x.0].extend_from_slice(&removed);
        }
        if csp.domain(x).is_empty() {
            wiped = true;
            if stop_on_wipeout {
                return false;
            }
        }
        let watchers: Vec<VariableId> = csp.neighbors(x).filter(|&z| z != y).collect();
        for z in watchers {
            if queued.insert((z.0, x.0)) {
                queue.push_back((z, x));
            }
        }
    }
    !wiped
}

fn all_arcs(csp: &Csp) -> VecDeque<(VariableId, VariableId)> {
    let mut queue = VecDeque::new();
    for (i, j) in csp.constraint_pairs() {
        queue.push_back((i, j));
        queue.push_back((j, i));
    }
    queue
}

/// Prunes every domain to the arc-consistent fixpoint. Returns whether the
/// problem survived (no empty domain) and the values removed per variable.
pub fn ac_enforce(csp: &mut Csp) -> (bool, Vec<Vec<Value>>) {
    let mut revisions = 0;
    ac_enforce_counted(csp, &mut revisions)
}

pub(crate) fn ac_enforce_counted(csp: &mut Csp, revisions: &mut u64) -> (bool, Vec<Vec<Value>>) {
    let mut removals = vec![Vec::new(); csp.num_variables()];
    let mut memo = SupportMemo::new();
    let queue = all_arcs(csp);
    let ok = propagate(csp, queue, &mut memo, revisions, Some(&mut removals), false);
    (ok, removals)
}

struct Search<'a> {
    cfg: &'a SearchConfig,
    stats: SolveStats,
    solutions: u64,
    first: Option<Vec<Value>>,
    limit_hit: bool,
}

enum Walk {
    /// Stop unwinding: a solution was found (first-solution mode) or the
    /// node limit tripped.
    Stop,
    Exhausted,
}

fn pick_variable(csp: &Csp, assigned: &[bool], heuristic: VariableHeuristic) -> Option<VariableId> {
    match heuristic {
        VariableHeuristic::Lexicographic => {
            assigned.iter().position(|&a| !a).map(VariableId)
        }
        VariableHeuristic::DomDeg => {
            let mut best: Option<(u64, u64, usize)> = None;
            for v in csp.variables() {
                if assigned[v.0] {
                    continue;
                }
                let dom = csp.domain(v).len() as u64;
                let deg = csp.neighbors(v).filter(|u| !assigned[u.0]).count() as u64;
                let better = match best {
                    None => true,
                    // dom/deg comparison by cross multiplication; a zero
                    // degree counts as an infinite ratio.
                    Some((bdom, bdeg, _)) => dom * bdeg < bdom * deg,
                };
                if better {
                    best = Some((dom, deg, v.0));
                }
            }
            best.map(|(_, _, v)| VariableId(v))
        }
    }
}

fn dfs(csp: &mut Csp, assigned: &mut [bool], search: &mut Search) -> Walk {
    let Some(var) = pick_variable(csp, assigned, search.cfg.heuristic) else {
        let solution: Vec<Value> = csp
            .variables()
            .map(|v| csp.domain(v).first().expect("leaf with empty domain"))
            .collect();
        search.solutions += 1;
        if !search.cfg.count_all {
            search.first = Some(solution);
            return Walk::Stop;
        }
        return Walk::Exhausted;
    };

    assigned[var.0] = true;
    for value in csp.domain(var).values() {
        if let Some(limit) = search.cfg.node_limit {
            if search.stats.nodes >= limit {
                search.limit_hit = true;
                assigned[var.0] = false;
                return Walk::Stop;
            }
        }
        search.stats.nodes += 1;
        let snapshot = csp.snapshot_domains();
        csp.domain_mut(var).fix(value);
        let seed: VecDeque<(VariableId, VariableId)> =
            csp.neighbors(var).map(|z| (z, var)).collect();
        let mut memo = SupportMemo::new();
        let consistent =
            propagate(csp, seed, &mut memo, &mut search.stats.ac_revisions, None, true);
        if consistent {
            if let Walk::Stop = dfs(csp, assigned, search) {
                csp.restore_domains(snapshot);
                assigned[var.0] = false;
                return Walk::Stop;
            }
        }
        csp.restore_domains(snapshot);
    }
    assigned[var.0] = false;
    search.stats.backtracks += 1;
    Walk::Exhausted
}

/// MAC search over a clone of the problem. Arc consistency is enforced once
/// at the root and after every assignment.
pub fn solve(csp: &Csp, cfg: &SearchConfig) -> (SolveOutcome, SolveStats) {
    let started = Instant::now();
    let mut work = csp.clone();
    let mut search = Search {
        cfg,
        stats: SolveStats::default(),
        solutions: 0,
        first: None,
        limit_hit: false,
    };

    let (root_ok, _) = ac_enforce_counted(&mut work, &mut search.stats.ac_revisions);
    if root_ok {
        let mut assigned = vec![false; work.num_variables()];
        dfs(&mut work, &mut assigned, &mut search);
    }

    let outcome = if search.limit_hit {
        SolveOutcome::LimitReached
    } else if cfg.count_all {
        SolveOutcome::Count(search.solutions)
    } else if let Some(solution) = search.first {
        SolveOutcome::Satisfiable(solution)
    } else {
        SolveOutcome::Unsatisfiable
    };
    search.stats.wall_time = started.elapsed();
    (outcome, search.stats)
}

/// Default ceiling on the assignment space [`brute_force`] will enumerate.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 10_000_000;

/// Every solution, by exhaustive enumeration in lexicographic order.
pub fn brute_force(csp: &Csp) -> Result<Vec<Vec<Value>>> {
    brute_force_with_budget(csp, DEFAULT_ENUMERATION_BUDGET)
}

pub fn brute_force_with_budget(csp: &Csp, budget: u128) -> Result<Vec<Vec<Value>>> {
    let assignments = csp.live_assignment_count();
    if assignments > budget {
        return Err(Error::BudgetExceeded { assignments, budget });
    }
    let values: Vec<Vec<Value>> = csp.variables().map(|v| csp.domain(v).values()).collect();
    let mut solutions = Vec::new();
    if values.iter().any(|vs| vs.is_empty()) {
        return Ok(solutions);
    }
    let n = values.len();
    if n == 0 {
        return Ok(vec![Vec::new()]);
    }
    let mut cursor = vec![0usize; n];
    let mut assignment: Vec<Value> = cursor.iter().zip(&values).map(|(&c, vs)| vs[c]).collect();
    loop {
        if csp.satisfies(&assignment) {
            solutions.push(assignment.clone());
        }
        let mut level = n;
        loop {
            if level == 0 {
                return Ok(solutions);
            }
            level -= 1;
            cursor[level] += 1;
            if cursor[level] < values[level].len() {
                assignment[level] = values[level][cursor[level]];
                break;
            }
            cursor[level] = 0;
            assignment[level] = values[level][0];
        }
    }
}
