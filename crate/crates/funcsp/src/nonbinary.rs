//! Extensional n-ary relations and variable substitution over them.
//!
//! A relation carries an ordered scope of variables and a set of tuples.
//! Functionality on a scope variable means each instantiation of the other
//! scope variables admits at most one value for it. Composition joins two
//! relations on their shared variables and projects the pivot variable out;
//! substitution rewrites a target constraint through a functional one
//! exactly as in the binary case. The join can grow scopes, so only the
//! primitive operations are offered here; no elimination ordering exists
//! for the n-ary case.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::csp::{Domain, VariableId};
use crate::error::{Error, Result};
use crate::relation::Value;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaryRelation {
    scope: Vec<VariableId>,
    tuples: BTreeSet<Vec<Value>>,
}

impl NaryRelation {
    pub fn new(scope: Vec<VariableId>, tuples: impl IntoIterator<Item = Vec<Value>>) -> Result<Self> {
        let distinct: BTreeSet<VariableId> = scope.iter().copied().collect();
        if distinct.len() != scope.len() {
            return Err(Error::InvalidParameter("duplicate variable in relation scope".into()));
        }
        let mut set = BTreeSet::new();
        for tuple in tuples {
            if tuple.len() != scope.len() {
                return Err(Error::InvalidParameter(format!(
                    "tuple arity {} does not match scope arity {}",
                    tuple.len(),
                    scope.len()
                )));
            }
            set.insert(tuple);
        }
        Ok(NaryRelation { scope, tuples: set })
    }

    pub fn scope(&self) -> &[VariableId] {
        &self.scope
    }

    pub fn arity(&self) -> usize {
        self.scope.len()
    }

    pub fn tuples(&self) -> impl Iterator<Item = &Vec<Value>> {
        self.tuples.iter()
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn position_of(&self, v: VariableId) -> Option<usize> {
        self.scope.iter().position(|&s| s == v)
    }

    pub fn contains(&self, tuple: &[Value]) -> bool {
        self.tuples.contains(tuple)
    }

    /// Whether each instantiation of the other scope variables admits at
    /// most one value of `j`.
    pub fn is_functional_on(&self, j: VariableId) -> Result<bool> {
        let at = self
            .position_of(j)
            .ok_or_else(|| Error::InvalidParameter(format!("{j} is not in the relation scope")))?;
        let mut seen: HashMap<Vec<Value>, Value> = HashMap::new();
        for tuple in &self.tuples {
            let mut rest = tuple.clone();
            let value = rest.remove(at);
            match seen.insert(rest, value) {
                Some(previous) if previous != value => return Ok(false),
                _ => {}
            }
        }
        Ok(true)
    }

    /// Scope-set equality, regardless of order.
    pub fn same_scope_set(&self, other: &Self) -> bool {
        self.arity() == other.arity()
            && self.scope.iter().collect::<BTreeSet<_>>() == other.scope.iter().collect::<BTreeSet<_>>()
    }

    /// Intersection of relations over the same scope set; the result uses
    /// `self`'s scope order.
    pub fn intersect(&self, other: &Self) -> Result<Self> {
        if !self.same_scope_set(other) {
            return Err(Error::InvalidParameter("intersection needs identical scope sets".into()));
        }
        // Column of `other` feeding each column of `self`.
        let from: Vec<usize> = self
            .scope
            .iter()
            .map(|&v| other.position_of(v).expect("scope sets match"))
            .collect();
        let tuples = other
            .tuples
            .iter()
            .map(|t| from.iter().map(|&c| t[c]).collect::<Vec<Value>>())
            .filter(|t| self.tuples.contains(t));
        NaryRelation::new(self.scope.clone(), tuples)
    }
}

/// Joins `left` and `right` on their shared variables and projects `pivot`
/// out. The result scope is `left`'s scope followed by `right`'s remaining
/// variables, minus the pivot. `pivot` must occur in both scopes.
pub fn nary_compose(left: &NaryRelation, right: &NaryRelation, pivot: VariableId) -> Result<NaryRelation> {
    if left.position_of(pivot).is_none() || right.position_of(pivot).is_none() {
        return Err(Error::InvalidParameter(format!("{pivot} must occur in both scopes")));
    }
    let shared: Vec<VariableId> = left
        .scope
        .iter()
        .copied()
        .filter(|&v| right.position_of(v).is_some())
        .collect();
    let mut out_scope: Vec<VariableId> = left.scope.iter().copied().filter(|&v| v != pivot).collect();
    out_scope.extend(right.scope.iter().copied().filter(|&v| v != pivot && left.position_of(v).is_none()));

    // Hash the smaller side on the shared columns, stream the larger.
    let (build, probe, build_is_left) = if left.len() <= right.len() {
        (left, right, true)
    } else {
        (right, left, false)
    };
    let key_of = |rel: &NaryRelation, tuple: &[Value]| -> Vec<Value> {
        shared.iter().map(|&v| tuple[rel.position_of(v).unwrap()]).collect()
    };
    let mut buckets: HashMap<Vec<Value>, Vec<&Vec<Value>>> = HashMap::new();
    for tuple in &build.tuples {
        buckets.entry(key_of(build, tuple)).or_default().push(tuple);
    }

    let mut tuples = BTreeSet::new();
    for probe_tuple in &probe.tuples {
        let Some(matches) = buckets.get(&key_of(probe, probe_tuple)) else {
            continue;
        };
        for build_tuple in matches {
            let (lt, rt): (&[Value], &[Value]) = if build_is_left {
                (build_tuple, probe_tuple)
            } else {
                (probe_tuple, build_tuple)
            };
            let merged: Vec<Value> = out_scope
                .iter()
                .map(|&v| match left.position_of(v) {
                    Some(at) => lt[at],
                    None => rt[right.position_of(v).unwrap()],
                })
                .collect();
            tuples.insert(merged);
        }
    }
    Ok(NaryRelation { scope: out_scope, tuples })
}

/// A problem over n-ary extensional constraints. Constraints on the same
/// scope set fold by intersection at insertion, mirroring the binary store.
#[derive(Debug, Clone)]
pub struct NaryCsp {
    domain_size: usize,
    domains: Vec<Domain>,
    constraints: BTreeMap<usize, NaryRelation>,
    next_id: usize,
}

impl NaryCsp {
    pub fn new(n: usize, d: usize) -> Self {
        NaryCsp {
            domain_size: d,
            domains: vec![Domain::full(d); n],
            constraints: BTreeMap::new(),
            next_id: 0,
        }
    }

    pub fn num_variables(&self) -> usize {
        self.domains.len()
    }

    pub fn domain(&self, v: VariableId) -> &Domain {
        &self.domains[v.0]
    }

    pub fn domain_mut(&mut self, v: VariableId) -> &mut Domain {
        &mut self.domains[v.0]
    }

    pub fn add_constraint(&mut self, relation: NaryRelation) -> Result<usize> {
        for &v in relation.scope() {
            if v.0 >= self.num_variables() {
                return Err(Error::InvalidParameter(format!("{v} out of range")));
            }
        }
        for tuple in relation.tuples() {
            for &value in tuple {
                if value >= self.domain_size {
                    return Err(Error::ValueOutOfRange { value, size: self.domain_size });
                }
            }
        }
        if let Some((&id, matching)) = self
            .constraints
            .iter()
            .find(|(_, existing)| existing.same_scope_set(&relation))
        {
            let folded = matching.intersect(&relation)?;
            self.constraints.insert(id, folded);
            return Ok(id);
        }
        let id = self.next_id;
        self.next_id += 1;
        self.constraints.insert(id, relation);
        Ok(id)
    }

    pub fn relation(&self, id: usize) -> Option<&NaryRelation> {
        self.constraints.get(&id)
    }

    pub fn constraints(&self) -> impl Iterator<Item = (usize, &NaryRelation)> {
        self.constraints.iter().map(|(&id, rel)| (id, rel))
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Substitutes `j` in the target constraint through the source one,
    /// which must be functional on `j`. The target is replaced by the
    /// composition intersected with any constraint already on the result
    /// scope; the result keeps the target's id. The solution space is
    /// preserved.
    pub fn substitute(&mut self, source: usize, target: usize, j: VariableId) -> Result<usize> {
        if source == target {
            return Err(Error::InvalidParameter("cannot substitute a constraint into itself".into()));
        }
        let source_rel = self
            .constraints
            .get(&source)
            .ok_or(Error::InvalidParameter(format!("no constraint {source}")))?;
        let target_rel = self
            .constraints
            .get(&target)
            .ok_or(Error::InvalidParameter(format!("no constraint {target}")))?;
        if !source_rel.is_functional_on(j)? {
            return Err(Error::NotFunctional);
        }
        if target_rel.position_of(j).is_none() {
            return Err(Error::InvalidParameter(format!("{j} is not in the target scope")));
        }
        let composed = nary_compose(source_rel, target_rel, j)?;
        let absorbed: Option<usize> = self
            .constraints
            .iter()
            .find(|(&id, rel)| id != source && id != target && rel.same_scope_set(&composed))
            .map(|(&id, _)| id);
        let folded = match absorbed {
            Some(id) => {
                let existing = self.constraints.remove(&id).expect("indexed constraint");
                composed.intersect(&existing)?
            }
            None => composed,
        };
        self.constraints.remove(&target);
        self.constraints.insert(target, folded);
        Ok(target)
    }

    pub fn satisfies(&self, assignment: &[Value]) -> bool {
        if assignment.len() != self.num_variables() {
            return false;
        }
        if assignment.iter().enumerate().any(|(v, &a)| !self.domains[v].contains(a)) {
            return false;
        }
        self.constraints.values().all(|rel| {
            let projected: Vec<Value> = rel.scope().iter().map(|&v| assignment[v.0]).collect();
            rel.contains(&projected)
        })
    }

    /// Every solution by exhaustive enumeration.
    pub fn solutions(&self, budget: u128) -> Result<Vec<Vec<Value>>> {
        let count: u128 = self.domains.iter().map(|d| d.len() as u128).product();
        if count > budget {
            return Err(Error::BudgetExceeded { assignments: count, budget });
        }
        let values: Vec<Vec<Value>> = self.domains.iter().map(|d| d.values()).collect();
        let mut out = Vec::new();
        if values.iter().any(|vs| vs.is_empty()) {
            return Ok(out);
        }
        let n = values.len();
        let mut cursor = vec![0usize; n];
        loop {
            let assignment: Vec<Value> = cursor.iter().zip(&values).map(|(&c, vs)| vs[c]).collect();
            if self.satisfies(&assignment) {
                out.push(assignment);
            }
            let mut level = n;
            loop {
                if level == 0 {
                    return Ok(out);
                }
                level -= 1;
                cursor[level] += 1;
                if cursor[level] < values[level].len() {
                    break;
                }
                cursor[level] = 0;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::BinaryRelation;

    fn v(i: usize) -> VariableId {
        VariableId(i)
    }

    /// Triples over 1..=3 (encoded 0..=2) summing to 8: the classic
    /// {(2,3,3), (3,2,3), (3,3,2)}, shifted down by one.
    fn sum_to_eight() -> NaryRelation {
        NaryRelation::new(
            vec![v(0), v(1), v(2)],
            [vec![1, 2, 2], vec![2, 1, 2], vec![2, 2, 1]],
        )
        .unwrap()
    }

    #[test]
    fn sum_constraint_is_functional_on_every_variable() {
        let rel = sum_to_eight();
        for var in [v(0), v(1), v(2)] {
            assert!(rel.is_functional_on(var).unwrap());
        }
        assert!(rel.is_functional_on(v(3)).is_err());
    }

    #[test]
    fn squares_break_functionality_asymmetrically() {
        // x^2 + y^2 + z = 8 over -3..=3, encoded as 0..=6 with value k - 3.
        let mut tuples = Vec::new();
        for x in -3i32..=3 {
            for y in -3i32..=3 {
                let z = 8 - x * x - y * y;
                if (-3..=3).contains(&z) {
                    tuples.push(vec![(x + 3) as usize, (y + 3) as usize, (z + 3) as usize]);
                }
            }
        }
        let rel = NaryRelation::new(vec![v(0), v(1), v(2)], tuples).unwrap();
        assert!(rel.is_functional_on(v(2)).unwrap());
        assert!(!rel.is_functional_on(v(0)).unwrap());
        assert!(!rel.is_functional_on(v(1)).unwrap());
    }

    #[test]
    fn empty_relation_is_functional_everywhere() {
        let rel = NaryRelation::new(vec![v(0), v(1)], []).unwrap();
        assert!(rel.is_functional_on(v(0)).unwrap());
        assert!(rel.is_functional_on(v(1)).unwrap());
    }

    #[test]
    fn compose_projects_the_pivot_out() {
        // Join x+y+z = 8 with z+w = 4 over 1..=3 (encoded 0..=2) on z.
        let zw = NaryRelation::new(vec![v(2), v(3)], [vec![0, 2], vec![1, 1], vec![2, 0]]).unwrap();
        let joined = nary_compose(&sum_to_eight(), &zw, v(2)).unwrap();
        assert_eq!(joined.scope(), &[v(0), v(1), v(3)]);
        let expected: BTreeSet<Vec<Value>> =
            [vec![1, 2, 0], vec![2, 1, 0], vec![2, 2, 1]].into_iter().collect();
        assert_eq!(joined.tuples().cloned().collect::<BTreeSet<_>>(), expected);
    }

    #[test]
    fn compose_with_a_universal_superscope_projects() {
        let mut universe = Vec::new();
        for a in 0..2 {
            for b in 0..2 {
                universe.push(vec![a, b]);
            }
        }
        let free = NaryRelation::new(vec![v(0), v(1)], universe).unwrap();
        let narrow = NaryRelation::new(vec![v(0), v(1)], [vec![0, 1], vec![1, 1]]).unwrap();
        let composed = nary_compose(&narrow, &free, v(0)).unwrap();
        assert_eq!(composed.scope(), &[v(1)]);
        assert_eq!(composed.tuples().cloned().collect::<Vec<_>>(), vec![vec![1]]);
    }

    #[test]
    fn compose_requires_a_shared_pivot() {
        let a = NaryRelation::new(vec![v(0), v(1)], [vec![0, 0]]).unwrap();
        let b = NaryRelation::new(vec![v(2), v(3)], [vec![0, 0]]).unwrap();
        assert!(nary_compose(&a, &b, v(1)).is_err());
    }

    fn binary_to_nary(i: usize, j: usize, rel: &BinaryRelation) -> NaryRelation {
        NaryRelation::new(
            vec![v(i), v(j)],
            rel.pairs().into_iter().map(|(a, b)| vec![a, b]),
        )
        .unwrap()
    }

    #[test]
    fn binary_composition_reduces_to_the_binary_product() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let d = rng.gen_range(1..=4);
            let random = |rng: &mut rand_chacha::ChaCha8Rng| {
                let mut pairs = Vec::new();
                for a in 0..d {
                    for b in 0..d {
                        if rng.gen_bool(0.4) {
                            pairs.push((a, b));
                        }
                    }
                }
                BinaryRelation::from_pairs(d, d, &pairs).unwrap()
            };
            let r1 = random(&mut rng);
            let r2 = random(&mut rng);
            let expected: BTreeSet<Vec<Value>> = r1
                .general_compose(&r2)
                .unwrap()
                .pairs()
                .into_iter()
                .map(|(a, c)| vec![a, c])
                .collect();
            let joined = nary_compose(&binary_to_nary(0, 1, &r1), &binary_to_nary(1, 2, &r2), v(1)).unwrap();
            assert_eq!(joined.scope(), &[v(0), v(2)]);
            assert_eq!(joined.tuples().cloned().collect::<BTreeSet<_>>(), expected);
        }
    }

    #[test]
    fn substitution_preserves_nary_solutions() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        let mut exercised = 0;
        for _ in 0..400 {
            let n = 4;
            let d = rng.gen_range(2..=3usize);
            let mut csp = NaryCsp::new(n, d);

            // One constraint made functional on a chosen variable by
            // construction: at most one pivot value per context.
            let arity = rng.gen_range(2..=3usize);
            let mut scope: Vec<usize> = (0..n).collect();
            for at in 0..arity {
                let swap = rng.gen_range(at..n);
                scope.swap(at, swap);
            }
            let scope: Vec<VariableId> = scope[..arity].iter().map(|&x| v(x)).collect();
            let pivot = scope[rng.gen_range(0..arity)];
            let pivot_at = scope.iter().position(|&s| s == pivot).unwrap();
            let mut tuples = Vec::new();
            let contexts = d.pow((arity - 1) as u32);
            for ctx in 0..contexts {
                if rng.gen_bool(0.8) {
                    let mut rest = ctx;
                    let mut tuple = Vec::with_capacity(arity);
                    for at in 0..arity {
                        if at == pivot_at {
                            tuple.push(rng.gen_range(0..d));
                        } else {
                            tuple.push(rest % d);
                            rest /= d;
                        }
                    }
                    tuples.push(tuple);
                }
            }
            let source = csp.add_constraint(NaryRelation::new(scope, tuples).unwrap()).unwrap();

            // A random target containing the pivot variable.
            let target_arity = rng.gen_range(2..=3usize);
            let mut others: Vec<usize> = (0..n).filter(|&x| v(x) != pivot).collect();
            for at in 0..target_arity - 1 {
                let swap = rng.gen_range(at..others.len());
                others.swap(at, swap);
            }
            let mut target_scope = vec![pivot];
            target_scope.extend(others[..target_arity - 1].iter().map(|&x| v(x)));
            let mut target_tuples = Vec::new();
            for code in 0..d.pow(target_arity as u32) {
                if rng.gen_bool(0.5) {
                    let mut rest = code;
                    let mut tuple = Vec::with_capacity(target_arity);
                    for _ in 0..target_arity {
                        tuple.push(rest % d);
                        rest /= d;
                    }
                    target_tuples.push(tuple);
                }
            }
            let target = csp
                .add_constraint(NaryRelation::new(target_scope, target_tuples).unwrap())
                .unwrap();
            if source == target {
                continue;
            }

            let before = csp.solutions(100_000).unwrap();
            let source_functional = csp.relation(source).unwrap().is_functional_on(pivot).unwrap();
            assert!(source_functional);
            csp.substitute(source, target, pivot).unwrap();
            assert_eq!(csp.solutions(100_000).unwrap(), before);
            exercised += 1;
        }
        assert!(exercised >= 200, "only {exercised} substitutions exercised");
    }

    #[test]
    fn substituting_a_constraint_into_itself_is_rejected() {
        let mut csp = NaryCsp::new(3, 3);
        let id = csp.add_constraint(sum_to_eight()).unwrap();
        assert!(matches!(csp.substitute(id, id, v(2)), Err(Error::InvalidParameter(_))));
    }
}
