//! Seeded random problem generation.
//!
//! A problem is described by variable count `n`, domain size `d`, constraint
//! count `e`, functional constraint count `nf`, and the tightness `t` of the
//! remaining constraints, given as the fraction of allowed tuples out of
//! `d * d`. Functional constraints are total maps with exactly `d` allowed
//! tuples, oriented from the lower-numbered variable; in identity mode they
//! are the identity map instead of a random one. Generation is a pure
//! function of the parameters and the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::csp::{Csp, VariableId};
use crate::error::{Error, Result};
use crate::relation::BinaryRelation;

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub n: usize,
    pub d: usize,
    pub e: usize,
    pub nf: usize,
    /// Fraction of allowed tuples per non-functional constraint, in `0..=1`.
    pub t: f64,
    pub seed: u64,
    /// Use the identity map for every functional constraint.
    pub identity: bool,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        let max_pairs = self.n * self.n.saturating_sub(1) / 2;
        if self.n == 0 || self.d == 0 {
            return Err(Error::InvalidParameter("need at least one variable and one value".into()));
        }
        if self.e > max_pairs {
            return Err(Error::InvalidParameter(format!(
                "{} constraints exceed the {} distinct pairs of {} variables",
                self.e, max_pairs, self.n
            )));
        }
        if self.nf > self.e {
            return Err(Error::InvalidParameter(format!(
                "{} functional constraints exceed the {} total",
                self.nf, self.e
            )));
        }
        if !(0.0..=1.0).contains(&self.t) {
            return Err(Error::InvalidParameter(format!("tightness {} outside 0..=1", self.t)));
        }
        Ok(())
    }

    /// Allowed tuples per non-functional constraint. Floored, with a small
    /// guard so that exact multiples survive the float product.
    pub fn tuples_per_loose_constraint(&self) -> usize {
        ((self.t * (self.d * self.d) as f64) + 1e-9).floor() as usize
    }
}

/// Draws `take` distinct elements of `0..size` by partial shuffle.
fn sample_distinct(rng: &mut ChaCha8Rng, size: usize, take: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..size).collect();
    for at in 0..take {
        let swap = rng.gen_range(at..size);
        all.swap(at, swap);
    }
    all.truncate(take);
    all
}

pub fn generate(spec: &ProblemSpec) -> Result<Csp> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.d;

    let mut pairs = Vec::with_capacity(spec.n * (spec.n - 1) / 2);
    for i in 0..spec.n {
        for j in i + 1..spec.n {
            pairs.push((i, j));
        }
    }
    let chosen = sample_distinct(&mut rng, pairs.len(), spec.e);

    let mut csp = Csp::new(spec.n, d);
    let loose_tuples = spec.tuples_per_loose_constraint();
    for (rank, &pick) in chosen.iter().enumerate() {
        let (i, j) = pairs[pick];
        let relation = if rank < spec.nf {
            let tuples: Vec<(usize, usize)> = (0..d)
                .map(|a| (a, if spec.identity { a } else { rng.gen_range(0..d) }))
                .collect();
            BinaryRelation::from_pairs(d, d, &tuples)?
        } else {
            let cells = sample_distinct(&mut rng, d * d, loose_tuples);
            let tuples: Vec<(usize, usize)> = cells.iter().map(|&c| (c / d, c % d)).collect();
            BinaryRelation::from_pairs(d, d, &tuples)?
        };
        csp.add_constraint(VariableId(i), VariableId(j), relation)?;
    }
    Ok(csp)
}

/// Structural check that a problem could have been produced from `spec`:
/// the right number of constraints, enough of them total functional maps
/// (identity maps in identity mode) or sized to the loose tuple count, and
/// a feasible split between the two kinds.
pub fn verify_spec(csp: &Csp, spec: &ProblemSpec) -> bool {
    if spec.validate().is_err() {
        return false;
    }
    if csp.num_variables() != spec.n || csp.domain_size() != spec.d {
        return false;
    }
    if csp.num_constraints() != spec.e {
        return false;
    }
    let d = spec.d;
    let loose_tuples = spec.tuples_per_loose_constraint();
    let identity = BinaryRelation::identity(d);
    let mut functional_kind = 0;
    let mut loose_kind = 0;
    for (_, _, _, rel) in csp.constraints() {
        let is_functional_kind = if spec.identity {
            *rel == identity
        } else {
            rel.pair_count() == d && rel.is_functional_on_right()
        };
        let is_loose_kind = rel.pair_count() == loose_tuples;
        if !is_functional_kind && !is_loose_kind {
            return false;
        }
        if is_functional_kind {
            functional_kind += 1;
        }
        if is_loose_kind {
            loose_kind += 1;
        }
    }
    functional_kind >= spec.nf && loose_kind >= spec.e - spec.nf
}
