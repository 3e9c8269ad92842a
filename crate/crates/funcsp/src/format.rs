//! The line-oriented instance text format and the reduction sidecar.
//!
//! Instance files:
//!
//! ```text
//! # comment (also allowed at end of line)
//! csp <n> <d>
//! dom <var> <v...>                       # optional domain restriction
//! con <i> <j> <k> <a1> <b1> ... <ak> <bk>
//! ncon <arity> <vars...> <k> <tuples...>
//! ```
//!
//! `csp` must come first. Missing `dom` lines mean the full range `0..d`.
//! `con` lists the `k` allowed pairs of a binary constraint oriented
//! `i -> j`; `ncon` lists `k` allowed tuples over an ordered scope.
//! Serialization is canonical: restricted domains in variable order, binary
//! constraints in ascending pair order with pairs row-major, n-ary tuples
//! sorted, so equal problems produce identical bytes.
//!
//! The sidecar written next to a reduced instance records the free-variable
//! mapping and the star constraints needed to extend solutions:
//!
//! ```text
//! reduced <free-count> of <n>
//! free <orig...>
//! star <eliminated> <center> <k> <a1> <b1> ...
//! consistent <true|false>
//! ```

use std::collections::BTreeSet;

use crate::csp::{Csp, Domain, VariableId};
use crate::elimination::CanonicalForm;
use crate::error::{Error, Result};
use crate::nonbinary::NaryRelation;
use crate::relation::BinaryRelation;

/// A parsed instance file: the binary problem plus any n-ary constraints
/// that accompanied it.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub csp: Csp,
    pub nary: Vec<NaryRelation>,
}

impl Instance {
    pub fn binary(csp: Csp) -> Self {
        Instance { csp, nary: Vec::new() }
    }

    /// The binary problem, rejecting files that carried n-ary constraints.
    pub fn binary_only(self) -> Result<Csp> {
        if !self.nary.is_empty() {
            return Err(Error::InvalidParameter(
                "this command handles binary constraints only, but the instance has n-ary ones".into(),
            ));
        }
        Ok(self.csp)
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

struct Tokens<'a> {
    line: usize,
    parts: std::str::SplitWhitespace<'a>,
}

impl<'a> Tokens<'a> {
    fn next_usize(&mut self, what: &str) -> Result<usize> {
        let token = self
            .parts
            .next()
            .ok_or_else(|| parse_error(self.line, format!("missing {what}")))?;
        token
            .parse()
            .map_err(|_| parse_error(self.line, format!("bad {what} `{token}`")))
    }

    fn finish(mut self) -> Result<()> {
        match self.parts.next() {
            Some(extra) => Err(parse_error(self.line, format!("unexpected trailing `{extra}`"))),
            None => Ok(()),
        }
    }
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut instance: Option<Instance> = None;
    for (at, raw) in text.lines().enumerate() {
        let line_no = at + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let keyword = parts.next().expect("nonempty line");
        let mut tokens = Tokens { line: line_no, parts };
        if keyword == "csp" {
            if instance.is_some() {
                return Err(parse_error(line_no, "duplicate csp header"));
            }
            let n = tokens.next_usize("variable count")?;
            let d = tokens.next_usize("domain size")?;
            tokens.finish()?;
            instance = Some(Instance::binary(Csp::new(n, d)));
            continue;
        }
        let Some(instance) = instance.as_mut() else {
            return Err(parse_error(line_no, "expected the csp header first"));
        };
        match keyword {
            "dom" => {
                let d = instance.csp.domain_size();
                let var = tokens.next_usize("variable")?;
                if var >= instance.csp.num_variables() {
                    return Err(parse_error(line_no, format!("variable {var} out of range")));
                }
                let values: Vec<usize> = tokens.parts.by_ref().map(|t| t.parse::<usize>()).collect::<std::result::Result<_, _>>()
                    .map_err(|_| parse_error(line_no, "bad domain value"))?;
                let domain = Domain::from_values(d, &values)
                    .map_err(|e| parse_error(line_no, e.to_string()))?;
                instance.csp.set_domain(VariableId(var), domain);
            }
            "con" => {
                let d = instance.csp.domain_size();
                let i = tokens.next_usize("left variable")?;
                let j = tokens.next_usize("right variable")?;
                let count = tokens.next_usize("pair count")?;
                let mut pairs = Vec::with_capacity(count);
                for _ in 0..count {
                    let a = tokens.next_usize("pair left value")?;
                    let b = tokens.next_usize("pair right value")?;
                    pairs.push((a, b));
                }
                tokens.finish()?;
                let relation = BinaryRelation::from_pairs(d, d, &pairs)
                    .map_err(|e| parse_error(line_no, e.to_string()))?;
                instance
                    .csp
                    .add_constraint(VariableId(i), VariableId(j), relation)
                    .map_err(|e| parse_error(line_no, e.to_string()))?;
            }
            "ncon" => {
                let arity = tokens.next_usize("arity")?;
                let mut scope = Vec::with_capacity(arity);
                for _ in 0..arity {
                    let var = tokens.next_usize("scope variable")?;
                    if var >= instance.csp.num_variables() {
                        return Err(parse_error(line_no, format!("variable {var} out of range")));
                    }
                    scope.push(VariableId(var));
                }
                let count = tokens.next_usize("tuple count")?;
                let mut tuples = Vec::with_capacity(count);
                for _ in 0..count {
                    let mut tuple = Vec::with_capacity(arity);
                    for _ in 0..arity {
                        let value = tokens.next_usize("tuple value")?;
                        if value >= instance.csp.domain_size() {
                            return Err(parse_error(line_no, format!("value {value} out of range")));
                        }
                        tuple.push(value);
                    }
                    tuples.push(tuple);
                }
                tokens.finish()?;
                let relation = NaryRelation::new(scope, tuples)
                    .map_err(|e| parse_error(line_no, e.to_string()))?;
                instance.nary.push(relation);
            }
            other => {
                return Err(parse_error(line_no, format!("unknown directive `{other}`")));
            }
        }
    }
    instance.ok_or_else(|| parse_error(0, "empty instance: no csp header"))
}

pub fn serialize_instance(instance: &Instance) -> String {
    let csp = &instance.csp;
    let mut out = String::new();
    out.push_str(&format!("csp {} {}\n", csp.num_variables(), csp.domain_size()));
    for v in csp.variables() {
        let domain = csp.domain(v);
        if !domain.is_full() {
            out.push_str(&format!("dom {}", v.0));
            for value in domain.iter() {
                out.push_str(&format!(" {value}"));
            }
            out.push('\n');
        }
    }
    for (i, j, _, rel) in csp.constraints() {
        let pairs = rel.pairs();
        out.push_str(&format!("con {} {} {}", i.0, j.0, pairs.len()));
        for (a, b) in pairs {
            out.push_str(&format!(" {a} {b}"));
        }
        out.push('\n');
    }
    for rel in &instance.nary {
        out.push_str(&format!("ncon {}", rel.arity()));
        for v in rel.scope() {
            out.push_str(&format!(" {}", v.0));
        }
        out.push_str(&format!(" {}", rel.len()));
        for tuple in rel.tuples() {
            for value in tuple {
                out.push_str(&format!(" {value}"));
            }
        }
        out.push('\n');
    }
    out
}

/// Sidecar contents: which original variables stayed free, and the star
/// constraint hanging each eliminated variable off its center.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionSidecar {
    pub total_variables: usize,
    pub free: Vec<VariableId>,
    /// `(eliminated, center, relation oriented center -> eliminated)`.
    pub stars: Vec<(VariableId, VariableId, BinaryRelation)>,
    pub consistent: bool,
}

impl ReductionSidecar {
    pub fn of(form: &CanonicalForm) -> Self {
        ReductionSidecar {
            total_variables: form.problem.num_variables(),
            free: form.free_map.clone(),
            stars: form
                .star_edges
                .iter()
                .map(|(&j, star)| (j, star.center, star.relation.clone()))
                .collect(),
            consistent: form.consistent,
        }
    }

    /// Structural checks: disjoint free/eliminated sets covering all
    /// variables, centers free, and star relations functional on the
    /// eliminated side.
    pub fn check_integrity(&self) -> Result<()> {
        let free: BTreeSet<VariableId> = self.free.iter().copied().collect();
        let eliminated: BTreeSet<VariableId> = self.stars.iter().map(|&(j, _, _)| j).collect();
        if free.len() != self.free.len() || eliminated.len() != self.stars.len() {
            return Err(Error::Integrity("duplicate variable in sidecar".into()));
        }
        if free.intersection(&eliminated).next().is_some() {
            return Err(Error::Integrity("variable both free and eliminated".into()));
        }
        if free.len() + eliminated.len() != self.total_variables {
            return Err(Error::Integrity("sidecar does not cover every variable".into()));
        }
        for &(j, center, ref rel) in &self.stars {
            if j.0 >= self.total_variables || center.0 >= self.total_variables {
                return Err(Error::Integrity(format!("sidecar variable {j}/{center} out of range")));
            }
            if !free.contains(&center) {
                return Err(Error::Integrity(format!("star center {center} is not free")));
            }
            if !rel.is_functional_on_right() {
                return Err(Error::Integrity(format!("star relation on {j} is not functional")));
            }
        }
        Ok(())
    }

    /// Extends a solution of the reduced instance (indexed by reduced
    /// variable) to the full variable set.
    pub fn extend(&self, reduced_solution: &[usize]) -> Result<Vec<usize>> {
        if reduced_solution.len() != self.free.len() {
            return Err(Error::Integrity(format!(
                "expected {} reduced values, got {}",
                self.free.len(),
                reduced_solution.len()
            )));
        }
        let mut full = vec![usize::MAX; self.total_variables];
        for (r, &orig) in self.free.iter().enumerate() {
            full[orig.0] = reduced_solution[r];
        }
        for &(j, center, ref rel) in &self.stars {
            let a = full[center.0];
            let b = rel
                .image(a)
                .ok_or_else(|| Error::Integrity(format!("value {a} of {center} has no star support in {j}")))?;
            full[j.0] = b;
        }
        Ok(full)
    }
}

pub fn serialize_sidecar(sidecar: &ReductionSidecar) -> String {
    let mut out = String::new();
    out.push_str(&format!("reduced {} of {}\n", sidecar.free.len(), sidecar.total_variables));
    out.push_str("free");
    for v in &sidecar.free {
        out.push_str(&format!(" {}", v.0));
    }
    out.push('\n');
    for &(j, center, ref rel) in &sidecar.stars {
        let pairs = rel.pairs();
        out.push_str(&format!("star {} {} {}", j.0, center.0, pairs.len()));
        for (a, b) in pairs {
            out.push_str(&format!(" {a} {b}"));
        }
        out.push('\n');
    }
    out.push_str(&format!("consistent {}\n", sidecar.consistent));
    out
}

/// Parses a sidecar. `domain_size` sizes the star relations; it comes from
/// the original instance the sidecar belongs to.
pub fn parse_sidecar(text: &str, domain_size: usize) -> Result<ReductionSidecar> {
    let mut header: Option<(usize, usize)> = None;
    let mut free = Vec::new();
    let mut stars = Vec::new();
    let mut consistent = None;
    for (at, raw) in text.lines().enumerate() {
        let line_no = at + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let keyword = parts.next().expect("nonempty line");
        let mut tokens = Tokens { line: line_no, parts };
        match keyword {
            "reduced" => {
                let free_count = tokens.next_usize("free count")?;
                match tokens.parts.next() {
                    Some("of") => {}
                    _ => return Err(parse_error(line_no, "expected `of`")),
                }
                let total = tokens.next_usize("variable count")?;
                tokens.finish()?;
                header = Some((free_count, total));
            }
            "free" => {
                for token in tokens.parts.by_ref() {
                    let var: usize = token
                        .parse()
                        .map_err(|_| parse_error(line_no, format!("bad variable `{token}`")))?;
                    free.push(VariableId(var));
                }
            }
            "star" => {
                let j = tokens.next_usize("eliminated variable")?;
                let center = tokens.next_usize("center variable")?;
                let count = tokens.next_usize("pair count")?;
                let mut pairs = Vec::with_capacity(count);
                for _ in 0..count {
                    let a = tokens.next_usize("pair left value")?;
                    let b = tokens.next_usize("pair right value")?;
                    pairs.push((a, b));
                }
                tokens.finish()?;
                let rel = BinaryRelation::from_pairs(domain_size, domain_size, &pairs)
                    .map_err(|e| parse_error(line_no, e.to_string()))?;
                stars.push((VariableId(j), VariableId(center), rel));
            }
            "consistent" => {
                let token = tokens
                    .parts
                    .next()
                    .ok_or_else(|| parse_error(line_no, "missing consistency flag"))?;
                consistent = Some(token.parse::<bool>().map_err(|_| {
                    parse_error(line_no, format!("bad consistency flag `{token}`"))
                })?);
                tokens.finish()?;
            }
            other => return Err(parse_error(line_no, format!("unknown directive `{other}`"))),
        }
    }
    let (free_count, total) = header.ok_or_else(|| parse_error(0, "missing reduced header"))?;
    if free.len() != free_count {
        return Err(parse_error(0, format!("expected {} free variables, found {}", free_count, free.len())));
    }
    let sidecar = ReductionSidecar {
        total_variables: total,
        free,
        stars,
        consistent: consistent.ok_or_else(|| parse_error(0, "missing consistent line"))?,
    };
    sidecar.check_integrity()?;
    Ok(sidecar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elimination::variable_elimination;
    use crate::generator::{generate, ProblemSpec};
    use crate::relation::Value;

    fn v(i: usize) -> VariableId {
        VariableId(i)
    }

    #[test]
    fn parse_a_commented_instance() {
        let text = "# three variables\ncsp 3 3  # header\ndom 0 1 2\ncon 0 1 2 0 0 1 1\nncon 3 0 1 2 1 0 1 2\n";
        let instance = parse_instance(text).unwrap();
        assert_eq!(instance.csp.num_variables(), 3);
        assert_eq!(instance.csp.domain(v(0)).values(), vec![1, 2]);
        assert_eq!(instance.csp.relation(v(0), v(1)).unwrap().pairs(), vec![(0, 0), (1, 1)]);
        assert_eq!(instance.nary.len(), 1);
        assert!(instance.nary[0].contains(&[0, 1, 2]));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let missing_header = parse_instance("con 0 1 1 0 0\n");
        assert!(matches!(missing_header, Err(Error::Parse { line: 1, .. })));
        let bad_token = parse_instance("csp 3 3\ncon 0 one 1 0 0\n");
        assert!(matches!(bad_token, Err(Error::Parse { line: 2, .. })));
        let truncated = parse_instance("csp 3 3\ncon 0 1 2 0 0\n");
        assert!(matches!(truncated, Err(Error::Parse { line: 2, .. })));
        let trailing = parse_instance("csp 3 3\ncon 0 1 1 0 0 9\n");
        assert!(matches!(trailing, Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn round_trip_is_exact() {
        for seed in 0..30 {
            let spec = ProblemSpec { n: 9, d: 4, e: 14, nf: 3, t: 0.55, seed, identity: false };
            let csp = generate(&spec).unwrap();
            let instance = Instance::binary(csp);
            let text = serialize_instance(&instance);
            let reparsed = parse_instance(&text).unwrap();
            assert_eq!(reparsed, instance);
            assert_eq!(serialize_instance(&reparsed), text);
        }
    }

    #[test]
    fn round_trip_keeps_nary_constraints() {
        let mut csp = Csp::new(4, 3);
        csp.domain_mut(v(3)).remove(0);
        let nary = vec![
            NaryRelation::new(vec![v(2), v(0), v(3)], [vec![0, 1, 2], vec![1, 1, 1]]).unwrap(),
        ];
        let instance = Instance { csp, nary };
        let text = serialize_instance(&instance);
        assert_eq!(parse_instance(&text).unwrap(), instance);
    }

    #[test]
    fn sidecar_round_trip_and_extension() {
        let mut csp = Csp::new(3, 3);
        csp.add_constraint(v(0), v(1), BinaryRelation::identity(3)).unwrap();
        csp.add_constraint(v(0), v(2), BinaryRelation::from_pairs(3, 3, &[(1, 0), (2, 1)]).unwrap())
            .unwrap();
        let form = variable_elimination(csp);
        let sidecar = ReductionSidecar::of(&form);
        let text = serialize_sidecar(&sidecar);
        let reparsed = parse_sidecar(&text, 3).unwrap();
        assert_eq!(reparsed, sidecar);
        let full: Vec<Value> = reparsed.extend(&[1]).unwrap();
        assert_eq!(full, vec![1, 1, 0]);
    }

    #[test]
    fn corrupted_sidecars_are_rejected() {
        // A star relation that is not functional on the eliminated side.
        let bad = "reduced 1 of 2\nfree 0\nstar 1 0 3 0 0 0 1 1 0\nconsistent true\n";
        assert!(matches!(parse_sidecar(bad, 2), Err(Error::Integrity(_))));
        // Free and eliminated sets overlapping.
        let overlap = "reduced 1 of 2\nfree 1\nstar 1 1 1 0 0\nconsistent true\n";
        assert!(matches!(parse_sidecar(overlap, 2), Err(Error::Integrity(_))));
        // Not covering every variable.
        let short = "reduced 1 of 3\nfree 0\nstar 1 0 1 0 0\nconsistent true\n";
        assert!(matches!(parse_sidecar(short, 2), Err(Error::Integrity(_))));
    }
}
