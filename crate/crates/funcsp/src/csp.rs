//! The problem model: variables, prunable domains, and an oriented
//! constraint store.
//!
//! Constraints are stored once per unordered variable pair, with both
//! orientations of the relation kept in sync so lookups never transpose.
//! A missing pair means the universal relation. Relations are always sized
//! to the full `d x d` value grid; search-time pruning lives only in the
//! domains, so relation algebra is independent of it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::relation::{BinaryRelation, Value};

/// Index of a variable, stable for the life of a problem. Variables keep
/// their id after being eliminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariableId(pub usize);

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// Identifies a constraint across substitutions: when a constraint is
/// rewritten onto a new variable pair, the id moves with it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConstraintId(pub usize);

/// The live values of one variable. Removal is reversible by snapshotting
/// (search) or permanent (reduction); the full value range never changes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    live: Vec<bool>,
    len: usize,
}

impl Domain {
    pub fn full(capacity: usize) -> Self {
        Domain { live: vec![true; capacity], len: capacity }
    }

    pub fn from_values(capacity: usize, values: &[Value]) -> Result<Self> {
        let mut dom = Domain { live: vec![false; capacity], len: 0 };
        for &v in values {
            if v >= capacity {
                return Err(Error::ValueOutOfRange { value: v, size: capacity });
            }
            if !dom.live[v] {
                dom.live[v] = true;
                dom.len += 1;
            }
        }
        Ok(dom)
    }

    pub fn capacity(&self) -> usize {
        self.live.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_full(&self) -> bool {
        self.len == self.live.len()
    }

    pub fn contains(&self, v: Value) -> bool {
        v < self.live.len() && self.live[v]
    }

    /// Removes `v`; returns whether it was live.
    pub fn remove(&mut self, v: Value) -> bool {
        if self.contains(v) {
            self.live[v] = false;
            self.len -= 1;
            true
        } else {
            false
        }
    }

    /// Restricts the domain to the single value `v`, which must be live.
    pub fn fix(&mut self, v: Value) {
        assert!(self.contains(v), "cannot fix domain to dead value {v}");
        self.live.fill(false);
        self.live[v] = true;
        self.len = 1;
    }

    pub fn iter(&self) -> impl Iterator<Item = Value> + '_ {
        self.live.iter().enumerate().filter(|(_, &l)| l).map(|(v, _)| v)
    }

    pub fn values(&self) -> Vec<Value> {
        self.iter().collect()
    }

    pub fn first(&self) -> Option<Value> {
        self.iter().next()
    }
}

#[derive(Debug, Clone)]
struct Stored {
    id: ConstraintId,
    /// Oriented low -> high.
    fwd: BinaryRelation,
    /// Oriented high -> low; always `fwd.transpose()`.
    rev: BinaryRelation,
}

/// A binary constraint satisfaction problem.
#[derive(Debug, Clone)]
pub struct Csp {
    domain_size: usize,
    domains: Vec<Domain>,
    store: BTreeMap<(usize, usize), Stored>,
    adjacency: Vec<BTreeSet<usize>>,
    by_id: BTreeMap<ConstraintId, (usize, usize)>,
    next_id: usize,
}

impl Csp {
    /// A problem with `n` variables, each ranging over `0..d`, and no
    /// constraints.
    pub fn new(n: usize, d: usize) -> Self {
        Csp {
            domain_size: d,
            domains: vec![Domain::full(d); n],
            store: BTreeMap::new(),
            adjacency: vec![BTreeSet::new(); n],
            by_id: BTreeMap::new(),
            next_id: 0,
        }
    }

    pub fn num_variables(&self) -> usize {
        self.domains.len()
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn variables(&self) -> impl Iterator<Item = VariableId> {
        (0..self.num_variables()).map(VariableId)
    }

    pub fn domain(&self, v: VariableId) -> &Domain {
        &self.domains[v.0]
    }

    pub fn domain_mut(&mut self, v: VariableId) -> &mut Domain {
        &mut self.domains[v.0]
    }

    pub fn set_domain(&mut self, v: VariableId, domain: Domain) {
        assert_eq!(domain.capacity(), self.domain_size);
        self.domains[v.0] = domain;
    }

    pub(crate) fn snapshot_domains(&self) -> Vec<Domain> {
        self.domains.clone()
    }

    pub(crate) fn restore_domains(&mut self, snapshot: Vec<Domain>) {
        self.domains = snapshot;
    }

    fn key(i: VariableId, j: VariableId) -> (usize, usize) {
        (i.0.min(j.0), i.0.max(j.0))
    }

    /// Adds a constraint between `i` and `j`, given oriented `i -> j`.
    /// A second constraint on the same pair is folded in by intersection and
    /// keeps the pair's original id.
    pub fn add_constraint(&mut self, i: VariableId, j: VariableId, relation: BinaryRelation) -> Result<ConstraintId> {
        if i == j {
            return Err(Error::InvalidParameter(format!("self-loop constraint on {i}")));
        }
        if i.0 >= self.num_variables() || j.0 >= self.num_variables() {
            return Err(Error::InvalidParameter(format!("variable pair ({i}, {j}) out of range")));
        }
        if relation.left_size() != self.domain_size || relation.right_size() != self.domain_size {
            return Err(Error::DimensionMismatch {
                left: relation.left_size(),
                right: relation.right_size(),
                other_left: self.domain_size,
                other_right: self.domain_size,
            });
        }
        let key = Self::key(i, j);
        let fwd = if i.0 < j.0 { relation } else { relation.transpose() };
        match self.store.get_mut(&key) {
            Some(entry) => {
                entry.fwd = entry.fwd.intersect(&fwd)?;
                entry.rev = entry.fwd.transpose();
                Ok(entry.id)
            }
            None => {
                let id = ConstraintId(self.next_id);
                self.next_id += 1;
                let rev = fwd.transpose();
                self.store.insert(key, Stored { id, fwd, rev });
                self.adjacency[key.0].insert(key.1);
                self.adjacency[key.1].insert(key.0);
                self.by_id.insert(id, key);
                Ok(id)
            }
        }
    }

    /// The stored relation oriented `i -> j`, if the pair is constrained.
    pub fn relation(&self, i: VariableId, j: VariableId) -> Option<&BinaryRelation> {
        let entry = self.store.get(&Self::key(i, j))?;
        Some(if i.0 < j.0 { &entry.fwd } else { &entry.rev })
    }

    pub fn constraint_id(&self, i: VariableId, j: VariableId) -> Option<ConstraintId> {
        self.store.get(&Self::key(i, j)).map(|e| e.id)
    }

    /// The pair currently carrying `id`.
    pub fn pair_of(&self, id: ConstraintId) -> Option<(VariableId, VariableId)> {
        self.by_id.get(&id).map(|&(lo, hi)| (VariableId(lo), VariableId(hi)))
    }

    /// Removes the constraint between `i` and `j`, returning its id and the
    /// relation oriented `i -> j`.
    pub fn remove_constraint(&mut self, i: VariableId, j: VariableId) -> Option<(ConstraintId, BinaryRelation)> {
        let key = Self::key(i, j);
        let entry = self.store.remove(&key)?;
        self.adjacency[key.0].remove(&key.1);
        self.adjacency[key.1].remove(&key.0);
        self.by_id.remove(&entry.id);
        let rel = if i.0 < j.0 { entry.fwd } else { entry.rev };
        Some((entry.id, rel))
    }

    /// Installs `relation` (oriented `i -> j`) on the pair under a caller
    /// supplied id, replacing and retiring any constraint already there.
    pub(crate) fn install_constraint(
        &mut self,
        i: VariableId,
        j: VariableId,
        relation: BinaryRelation,
        id: ConstraintId,
    ) {
        assert_ne!(i, j, "self-loop install");
        let key = Self::key(i, j);
        let fwd = if i.0 < j.0 { relation } else { relation.transpose() };
        let rev = fwd.transpose();
        if let Some(old) = self.store.insert(key, Stored { id, fwd, rev }) {
            self.by_id.remove(&old.id);
        }
        self.adjacency[key.0].insert(key.1);
        self.adjacency[key.1].insert(key.0);
        self.by_id.insert(id, key);
    }

    pub fn num_constraints(&self) -> usize {
        self.store.len()
    }

    /// Constrained pairs `(i, j)` with `i < j`, in ascending order.
    pub fn constraint_pairs(&self) -> impl Iterator<Item = (VariableId, VariableId)> + '_ {
        self.store.keys().map(|&(lo, hi)| (VariableId(lo), VariableId(hi)))
    }

    /// All constraints as `(i, j, id, relation)` with the relation oriented
    /// `i -> j` and `i < j`, in ascending pair order.
    pub fn constraints(&self) -> impl Iterator<Item = (VariableId, VariableId, ConstraintId, &BinaryRelation)> + '_ {
        self.store
            .iter()
            .map(|(&(lo, hi), entry)| (VariableId(lo), VariableId(hi), entry.id, &entry.fwd))
    }

    /// Neighbors of `v` in the constraint graph, ascending.
    pub fn neighbors(&self, v: VariableId) -> impl Iterator<Item = VariableId> + '_ {
        self.adjacency[v.0].iter().map(|&u| VariableId(u))
    }

    pub fn degree(&self, v: VariableId) -> usize {
        self.adjacency[v.0].len()
    }

    /// Whether a full assignment (one value per variable) is a solution:
    /// every value live, every constraint satisfied.
    pub fn satisfies(&self, assignment: &[Value]) -> bool {
        if assignment.len() != self.num_variables() {
            return false;
        }
        for (v, &a) in assignment.iter().enumerate() {
            if !self.domains[v].contains(a) {
                return false;
            }
        }
        self.store
            .iter()
            .all(|(&(lo, hi), entry)| entry.fwd.allows(assignment[lo], assignment[hi]))
    }

    /// Removes every value of `i` without a live support in `k` under the
    /// relation between them (universal if the pair is unconstrained).
    /// Returns the removed values.
    pub fn revise_domain(&mut self, i: VariableId, k: VariableId) -> Vec<Value> {
        let mut removed = Vec::new();
        match self.relation(i, k) {
            Some(rel) => {
                let rel = rel.clone();
                for a in self.domains[i.0].values() {
                    let supported = rel.row_values(a).any(|b| self.domains[k.0].contains(b));
                    if !supported {
                        self.domains[i.0].remove(a);
                        removed.push(a);
                    }
                }
            }
            None => {
                if self.domains[k.0].is_empty() {
                    removed = self.domains[i.0].values();
                    for a in &removed {
                        self.domains[i.0].remove(*a);
                    }
                }
            }
        }
        removed
    }

    /// Product of live domain sizes, i.e. the assignment-space size.
    pub fn live_assignment_count(&self) -> u128 {
        self.domains.iter().map(|d| d.len() as u128).product()
    }
}

/// Problem equality ignores constraint ids: same domains, same constrained
/// pairs, bit-identical relations.
impl PartialEq for Csp {
    fn eq(&self, other: &Self) -> bool {
        self.domain_size == other.domain_size
            && self.domains == other.domains
            && self.store.len() == other.store.len()
            && self
                .store
                .iter()
                .zip(&other.store)
                .all(|((ka, ea), (kb, eb))| ka == kb && ea.fwd == eb.fwd)
    }
}

impl Eq for Csp {}
