//! Variable substitution and elimination for functional constraints.
//!
//! When a constraint between `i` and `j` is functional on `j`, any other
//! constraint on `j` can be rewritten onto `i` by composing through the
//! functional constraint and intersecting with whatever already sits on the
//! target pair. The rewritten problem has the same solution space. Driving
//! this to a fixpoint leaves each functionally determined variable attached
//! to the rest of the problem by exactly one functional constraint: the
//! functional part of the problem becomes disjoint stars, solvable by a
//! single lookup per eliminated variable once the free variables are
//! assigned.
//!
//! Two reducers are provided. [`variable_elimination`] repeatedly scans for
//! an eligible constraint and eliminates its determined endpoint, revising
//! the pivot's domain as it goes. [`linear_elimination`] first orders the
//! variables so that a pivot is processed before everything it can reach
//! through originally-functional constraints; each constraint is then
//! rewritten at most twice over the whole run, keeping the total work
//! proportional to the number of constraints.

mod graph;

pub use graph::{
    build_functional_graph, functional_elimination_ordering, EliminationOrdering, FunctionalGraph,
    Reachability,
};

use std::collections::{BTreeMap, BTreeSet};

use crate::csp::{ConstraintId, Csp, VariableId};
use crate::error::{Error, Result};
use crate::relation::{BinaryRelation, Value};

/// What one substitution did.
#[derive(Debug, Clone)]
pub struct SubstitutionOutcome {
    /// Id that now lives on the rewritten pair.
    pub id: ConstraintId,
    /// The pair the rewritten constraint was installed on.
    pub pair: (VariableId, VariableId),
    /// The installed relation allows no pairs at all, so the problem is
    /// unsatisfiable.
    pub produced_empty: bool,
    /// Matrix cells touched by the composition.
    pub cells_touched: u64,
}

/// Rewrites the constraint between `j` and `k` onto `(i, k)`, using the
/// constraint between `i` and `j` (which must be functional on `j`).
/// The new relation is the composition intersected with any existing
/// constraint on `(i, k)` and inherits the rewritten constraint's id.
pub fn substitute(csp: &mut Csp, i: VariableId, j: VariableId, k: VariableId) -> Result<SubstitutionOutcome> {
    if i == k {
        return Err(Error::InvalidParameter(format!(
            "substituting {j} by {i} in the constraint on ({j}, {k}) would form a self-loop"
        )));
    }
    let through = csp
        .relation(i, j)
        .ok_or(Error::MissingConstraint { i: i.0, j: j.0 })?;
    if !through.is_functional_on_right() {
        return Err(Error::NotFunctional);
    }
    let through = through.clone();
    let target = csp
        .relation(j, k)
        .ok_or(Error::MissingConstraint { i: j.0, j: k.0 })?
        .clone();

    let mut cells = 0;
    let composed = through.compose_counted(&target, &mut cells)?;
    let (id, _) = csp.remove_constraint(j, k).expect("target constraint vanished");
    let rewritten = match csp.relation(i, k) {
        Some(existing) => composed.intersect(existing)?,
        None => composed,
    };
    let produced_empty = rewritten.is_empty();
    csp.install_constraint(i, k, rewritten, id);
    Ok(SubstitutionOutcome { id, pair: (i, k), produced_empty, cells_touched: cells })
}

/// Substitutes `j` by `i` in every constraint on `j` other than the
/// functional constraint between `i` and `j` itself, leaving `j` with
/// exactly that one constraint.
pub fn eliminate_variable(csp: &mut Csp, i: VariableId, j: VariableId) -> Result<Vec<SubstitutionOutcome>> {
    match csp.relation(i, j) {
        Some(rel) if rel.is_functional_on_right() => {}
        Some(_) => return Err(Error::NotFunctional),
        None => return Err(Error::MissingConstraint { i: i.0, j: j.0 }),
    }
    let others: Vec<VariableId> = csp.neighbors(j).filter(|&k| k != i).collect();
    let mut outcomes = Vec::with_capacity(others.len());
    for k in others {
        outcomes.push(substitute(csp, i, j, k)?);
    }
    Ok(outcomes)
}

/// Whether every functional constraint is the sole constraint on its
/// determined variable. For a bifunctional constraint it is enough that
/// either endpoint is otherwise unconstrained.
pub fn is_canonical(csp: &Csp) -> bool {
    for (i, j, _, fwd) in csp.constraints() {
        let fwd_functional = fwd.is_functional_on_right();
        let rev_functional = fwd.transpose().is_functional_on_right();
        let ok = match (fwd_functional, rev_functional) {
            (true, true) => csp.degree(i) == 1 || csp.degree(j) == 1,
            (true, false) => csp.degree(j) == 1,
            (false, true) => csp.degree(i) == 1,
            (false, false) => true,
        };
        if !ok {
            return false;
        }
    }
    true
}

/// Which oriented pairs were functional before reduction started, plus
/// reachability through those orientations. Retained so that functionality
/// of rewritten constraints can be traced back to the input.
#[derive(Debug, Clone)]
pub struct FunctionalSnapshot {
    functional: BTreeSet<(usize, usize)>,
    reach: Reachability,
}

impl FunctionalSnapshot {
    pub fn of(csp: &Csp) -> Self {
        let graph = build_functional_graph(csp);
        let functional = graph.edges().map(|(i, j)| (i.0, j.0)).collect();
        let reach = graph.reachability();
        FunctionalSnapshot { functional, reach }
    }

    /// The original constraint on `(i, j)` existed and was functional on `j`.
    pub fn pair_functional(&self, i: VariableId, j: VariableId) -> bool {
        self.functional.contains(&(i.0, j.0))
    }

    /// Functionality of an `i -> j` orientation is inherited when the
    /// original pair was functional or a chain of originally-functional
    /// constraints leads from `i` to `j`.
    pub fn inherited(&self, i: VariableId, j: VariableId) -> bool {
        self.pair_functional(i, j) || self.reach.reaches(i, j)
    }
}

/// Whether the current constraint `c` is functional and every functional
/// orientation of it is inherited from the snapshot. Accidentally functional
/// constraints (say, a thin intersection of non-functional inputs) fail this.
pub fn is_trivially_functional(csp: &Csp, snapshot: &FunctionalSnapshot, c: ConstraintId) -> bool {
    let Some((i, j)) = csp.pair_of(c) else {
        return false;
    };
    let fwd = csp.relation(i, j).expect("indexed constraint must exist");
    let fwd_functional = fwd.is_functional_on_right();
    let rev_functional = fwd.transpose().is_functional_on_right();
    if !fwd_functional && !rev_functional {
        return false;
    }
    (!fwd_functional || snapshot.inherited(i, j)) && (!rev_functional || snapshot.inherited(j, i))
}

/// Counters recorded while a reducer runs.
#[derive(Debug, Clone, Default)]
pub struct ReductionStats {
    pub substitutions: u64,
    /// Matrix cells touched by compositions, for scaling checks.
    pub compose_cells: u64,
    /// Largest number of rewrites any single constraint id underwent.
    pub max_substitutions_per_constraint: u32,
    pub eliminated: usize,
    /// True while every functional constraint produced by substitution had
    /// its functionality inherited from the input problem.
    pub all_new_functional_trivial: bool,
}

/// A functional constraint hanging an eliminated variable off its free
/// center.
#[derive(Debug, Clone)]
pub struct StarEdge {
    pub center: VariableId,
    /// Oriented center -> eliminated; functional on the eliminated side.
    pub relation: BinaryRelation,
}

/// Result of a reduction: the rewritten problem, the free/eliminated split,
/// the star constraints needed to re-extend solutions, and a consistency
/// verdict (`false` means a wipeout proved the problem unsatisfiable).
#[derive(Debug, Clone)]
pub struct CanonicalForm {
    /// The full rewritten problem; eliminated variables remain as degree-one
    /// vertices.
    pub problem: Csp,
    /// The problem restricted to free variables, densely renumbered.
    pub reduced: Csp,
    /// Reduced index -> original variable.
    pub free_map: Vec<VariableId>,
    pub star_edges: BTreeMap<VariableId, StarEdge>,
    pub eliminated: BTreeSet<VariableId>,
    pub consistent: bool,
    pub stats: ReductionStats,
}

impl CanonicalForm {
    pub fn num_free(&self) -> usize {
        self.free_map.len()
    }

    /// Maps an original variable to its reduced index.
    pub fn reduced_index(&self, v: VariableId) -> Option<usize> {
        self.free_map.binary_search(&v).ok()
    }

    /// Extends an assignment of the reduced problem (indexed by reduced
    /// variable) to a full assignment of the original problem, giving each
    /// eliminated variable the image of its center's value.
    pub fn extend_solution(&self, reduced_solution: &[Value]) -> Result<Vec<Value>> {
        if reduced_solution.len() != self.free_map.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} free values, got {}",
                self.free_map.len(),
                reduced_solution.len()
            )));
        }
        let d = self.problem.domain_size();
        let mut full = vec![usize::MAX; self.problem.num_variables()];
        for (r, &orig) in self.free_map.iter().enumerate() {
            let v = reduced_solution[r];
            if v >= d {
                return Err(Error::ValueOutOfRange { value: v, size: d });
            }
            full[orig.0] = v;
        }
        for (&j, star) in &self.star_edges {
            let a = full[star.center.0];
            if a == usize::MAX {
                return Err(Error::Integrity(format!("star center {} is not free", star.center)));
            }
            let b = star
                .relation
                .image(a)
                .ok_or_else(|| Error::Integrity(format!("value {a} of {} has no star support in {j}", star.center)))?;
            if !self.problem.domain(j).contains(b) {
                return Err(Error::Integrity(format!("star support {b} of {j} is not live")));
            }
            full[j.0] = b;
        }
        Ok(full)
    }
}

/// Free-function form of [`CanonicalForm::extend_solution`].
pub fn extend_solution(form: &CanonicalForm, reduced_solution: &[Value]) -> Result<Vec<Value>> {
    form.extend_solution(reduced_solution)
}

struct Run {
    snapshot: FunctionalSnapshot,
    stats: ReductionStats,
    per_id: BTreeMap<ConstraintId, u32>,
    consistent: bool,
}

impl Run {
    fn new(csp: &Csp) -> Self {
        Run {
            snapshot: FunctionalSnapshot::of(csp),
            stats: ReductionStats { all_new_functional_trivial: true, ..ReductionStats::default() },
            per_id: BTreeMap::new(),
            consistent: true,
        }
    }

    fn note(&mut self, csp: &Csp, outcome: &SubstitutionOutcome) {
        self.stats.substitutions += 1;
        self.stats.compose_cells += outcome.cells_touched;
        let count = self.per_id.entry(outcome.id).or_insert(0);
        *count += 1;
        self.stats.max_substitutions_per_constraint = self.stats.max_substitutions_per_constraint.max(*count);

        let (i, k) = outcome.pair;
        let rel = csp.relation(i, k).expect("rewritten constraint must exist");
        let fwd_functional = rel.is_functional_on_right();
        let rev_functional = rel.transpose().is_functional_on_right();
        if (fwd_functional && !self.snapshot.inherited(i, k))
            || (rev_functional && !self.snapshot.inherited(k, i))
        {
            self.stats.all_new_functional_trivial = false;
        }
        if outcome.produced_empty {
            self.consistent = false;
        }
    }

    /// Extracts stars, revises each center against its star edges so every
    /// remaining center value has a support to extend with, and builds the
    /// dense free-variable view.
    fn finish(mut self, mut csp: Csp, eliminated: Vec<bool>) -> CanonicalForm {
        let mut star_edges = BTreeMap::new();
        for j in 0..eliminated.len() {
            if !eliminated[j] {
                continue;
            }
            let j = VariableId(j);
            let neighbors: Vec<VariableId> = csp.neighbors(j).collect();
            assert_eq!(neighbors.len(), 1, "eliminated variable {j} must keep exactly its star constraint");
            let center = neighbors[0];
            assert!(!eliminated[center.0], "star center {center} was itself eliminated");
            let relation = csp.relation(center, j).expect("star relation must exist").clone();
            assert!(relation.is_functional_on_right(), "star relation on {j} is not functional");
            csp.revise_domain(center, j);
            if csp.domain(center).is_empty() {
                self.consistent = false;
            }
            star_edges.insert(j, StarEdge { center, relation });
        }

        let free_map: Vec<VariableId> = csp.variables().filter(|v| !eliminated[v.0]).collect();
        let mut reduced = Csp::new(free_map.len(), csp.domain_size());
        let mut reduced_index = BTreeMap::new();
        for (r, &orig) in free_map.iter().enumerate() {
            reduced_index.insert(orig, r);
            reduced.set_domain(VariableId(r), csp.domain(orig).clone());
        }
        let kept: Vec<(VariableId, VariableId, BinaryRelation)> = csp
            .constraints()
            .filter(|(i, j, _, _)| !eliminated[i.0] && !eliminated[j.0])
            .map(|(i, j, _, rel)| (i, j, rel.clone()))
            .collect();
        for (i, j, rel) in kept {
            reduced
                .add_constraint(VariableId(reduced_index[&i]), VariableId(reduced_index[&j]), rel)
                .expect("reduced constraint must fit");
        }

        self.stats.eliminated = star_edges.len();
        CanonicalForm {
            problem: csp,
            reduced,
            free_map,
            eliminated: star_edges.keys().copied().collect(),
            star_edges,
            consistent: self.consistent,
            stats: self.stats,
        }
    }
}

/// Reduces a problem by repeatedly picking a constraint functional on a
/// not-yet-eliminated variable (lowest oriented pair first), eliminating
/// that variable, and revising the pivot's domain against all neighbors.
/// Stops early with `consistent = false` on a domain wipeout. The output
/// always satisfies [`is_canonical`].
pub fn variable_elimination(mut csp: Csp) -> CanonicalForm {
    let n = csp.num_variables();
    let mut run = Run::new(&csp);
    let mut eliminated = vec![false; n];

    loop {
        let mut pick: Option<(VariableId, VariableId)> = None;
        for (lo, hi, _, fwd) in csp.constraints() {
            if eliminated[lo.0] || eliminated[hi.0] {
                continue;
            }
            if fwd.is_functional_on_right() {
                pick = match pick {
                    Some(best) if best <= (lo, hi) => Some(best),
                    _ => Some((lo, hi)),
                };
            }
            if fwd.transpose().is_functional_on_right() {
                pick = match pick {
                    Some(best) if best <= (hi, lo) => Some(best),
                    _ => Some((hi, lo)),
                };
            }
        }
        let Some((i, j)) = pick else { break };

        let others: Vec<VariableId> = csp.neighbors(j).filter(|&k| k != i).collect();
        for k in others {
            let outcome = substitute(&mut csp, i, j, k).expect("pivot constraint must stay functional");
            run.note(&csp, &outcome);
        }
        eliminated[j.0] = true;

        let around: Vec<VariableId> = csp.neighbors(i).collect();
        let mut wiped = false;
        for k in around {
            csp.revise_domain(i, k);
            if csp.domain(i).is_empty() {
                wiped = true;
                break;
            }
        }
        if wiped {
            run.consistent = false;
            break;
        }
    }
    run.finish(csp, eliminated)
}

/// Reduces a problem following a functional elimination ordering: each
/// pivot, in order, substitutes for everything it can reach through
/// constraints that were functional in the input and still exist. Every
/// constraint id is rewritten at most twice, so the whole run costs on the
/// order of one composition per constraint. A produced empty relation stops
/// the run with `consistent = false`.
pub fn linear_elimination(mut csp: Csp) -> CanonicalForm {
    let n = csp.num_variables();
    let mut run = Run::new(&csp);
    let mut eliminated = vec![false; n];
    let order = functional_elimination_ordering(&build_functional_graph(&csp));

    'pivots: for i in order.iter() {
        if eliminated[i.0] {
            continue;
        }
        let mut pending: BTreeSet<VariableId> = csp
            .neighbors(i)
            .filter(|&j| !eliminated[j.0] && run.snapshot.pair_functional(i, j))
            .collect();
        while let Some(j) = pending.pop_first() {
            if eliminated[j.0] {
                continue;
            }
            debug_assert!(
                csp.relation(i, j).is_some_and(|r| r.is_functional_on_right()),
                "pivot constraint ({i}, {j}) lost functionality"
            );
            let others: Vec<VariableId> = csp.neighbors(j).filter(|&k| k != i).collect();
            for k in others {
                let qualified = run.snapshot.pair_functional(j, k);
                let outcome = substitute(&mut csp, i, j, k).expect("pivot constraint must stay functional");
                run.note(&csp, &outcome);
                if qualified && !eliminated[k.0] {
                    pending.insert(k);
                }
            }
            eliminated[j.0] = true;
            if !run.consistent {
                break 'pivots;
            }
        }
    }
    run.finish(csp, eliminated)
}
