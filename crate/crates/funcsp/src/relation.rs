//! Binary relations over dense integer domains, stored as bit matrices.
//!
//! A relation holds the set of allowed `(a, b)` pairs between a left and a
//! right variable. Rows are indexed by left values and packed into `u64`
//! words, which makes intersection a word-wise AND and composition a row
//! copy. Whenever every left value has at most one right partner, a
//! value-to-value index is kept alongside the bits so that the partner of a
//! value can be looked up in constant time.

use std::fmt;

use crate::error::{Error, Result};

/// A domain value. Values are dense integers `0..d`.
pub type Value = usize;

#[derive(Clone, PartialEq, Eq)]
pub struct BinaryRelation {
    left_size: usize,
    right_size: usize,
    /// `u64` words per row.
    words: usize,
    /// `left_size * words` words, row-major.
    bits: Vec<u64>,
    /// Right partner per left value. Present iff every row has at most one
    /// set bit, i.e. the relation is functional on its right variable.
    image: Option<Vec<Option<Value>>>,
}

impl BinaryRelation {
    pub fn empty(left_size: usize, right_size: usize) -> Self {
        let words = right_size.div_ceil(64).max(1);
        BinaryRelation {
            left_size,
            right_size,
            words,
            bits: vec![0; left_size * words],
            image: Some(vec![None; left_size]),
        }
    }

    pub fn universal(left_size: usize, right_size: usize) -> Self {
        let mut rel = Self::empty(left_size, right_size);
        for a in 0..left_size {
            for b in 0..right_size {
                rel.set(a, b);
            }
        }
        rel.recompute_image();
        rel
    }

    pub fn identity(size: usize) -> Self {
        let mut rel = Self::empty(size, size);
        for a in 0..size {
            rel.set(a, a);
        }
        rel.recompute_image();
        rel
    }

    pub fn from_pairs(left_size: usize, right_size: usize, pairs: &[(Value, Value)]) -> Result<Self> {
        let mut rel = Self::empty(left_size, right_size);
        for &(a, b) in pairs {
            if a >= left_size {
                return Err(Error::ValueOutOfRange { value: a, size: left_size });
            }
            if b >= right_size {
                return Err(Error::ValueOutOfRange { value: b, size: right_size });
            }
            rel.set(a, b);
        }
        rel.recompute_image();
        Ok(rel)
    }

    pub fn left_size(&self) -> usize {
        self.left_size
    }

    pub fn right_size(&self) -> usize {
        self.right_size
    }

    fn row(&self, a: Value) -> &[u64] {
        &self.bits[a * self.words..(a + 1) * self.words]
    }

    fn set(&mut self, a: Value, b: Value) {
        self.bits[a * self.words + b / 64] |= 1u64 << (b % 64);
    }

    /// Membership test for a pair. Panics if either value is out of range.
    pub fn allows(&self, a: Value, b: Value) -> bool {
        assert!(a < self.left_size, "left value {a} out of range 0..{}", self.left_size);
        assert!(b < self.right_size, "right value {b} out of range 0..{}", self.right_size);
        self.bits[a * self.words + b / 64] >> (b % 64) & 1 == 1
    }

    pub fn pair_count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    /// All allowed pairs in row-major order.
    pub fn pairs(&self) -> Vec<(Value, Value)> {
        let mut out = Vec::with_capacity(self.pair_count());
        for a in 0..self.left_size {
            for b in self.row_values(a) {
                out.push((a, b));
            }
        }
        out
    }

    /// Iterates the right partners of `a` in ascending order.
    pub fn row_values(&self, a: Value) -> impl Iterator<Item = Value> + '_ {
        let row = self.row(a);
        row.iter().enumerate().flat_map(|(wi, &w)| {
            let mut word = w;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let bit = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(wi * 64 + bit)
            })
        })
    }

    /// First right partner of `a` that is `>= from`, if any.
    pub fn next_support(&self, a: Value, from: Value) -> Option<Value> {
        if from >= self.right_size {
            return None;
        }
        let row = self.row(a);
        let mut wi = from / 64;
        let mut word = row[wi] & (!0u64 << (from % 64));
        loop {
            if word != 0 {
                return Some(wi * 64 + word.trailing_zeros() as usize);
            }
            wi += 1;
            if wi == self.words {
                return None;
            }
            word = row[wi];
        }
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::empty(self.right_size, self.left_size);
        for a in 0..self.left_size {
            for b in self.row_values(a) {
                out.set(b, a);
            }
        }
        out.recompute_image();
        out
    }

    fn recompute_image(&mut self) {
        let mut image = Vec::with_capacity(self.left_size);
        let mut functional = true;
        for a in 0..self.left_size {
            let mut it = self.row_values(a);
            let first = it.next();
            if first.is_some() && it.next().is_some() {
                functional = false;
                break;
            }
            image.push(first);
        }
        self.image = if functional { Some(image) } else { None };
    }

    /// True iff every left value has at most one right partner.
    pub fn is_functional_on_right(&self) -> bool {
        self.image.is_some()
    }

    /// True iff functional in both orientations, i.e. a partial bijection.
    pub fn is_bifunctional(&self) -> bool {
        self.inverse_table().is_some()
    }

    /// The unique right partner of `a`, if one exists.
    /// Panics unless the relation is functional on its right variable.
    pub fn image(&self, a: Value) -> Option<Value> {
        let image = self
            .image
            .as_ref()
            .expect("image lookup on a relation that is not functional on its right variable");
        image[a]
    }

    /// Left partner per right value, present iff the relation is bifunctional.
    fn inverse_table(&self) -> Option<Vec<Option<Value>>> {
        let image = self.image.as_ref()?;
        let mut inv = vec![None; self.right_size];
        for (a, &b) in image.iter().enumerate() {
            if let Some(b) = b {
                if inv[b].is_some() {
                    return None;
                }
                inv[b] = Some(a);
            }
        }
        Some(inv)
    }

    fn check_same_dims(&self, other: &Self) -> Result<()> {
        if self.left_size != other.left_size || self.right_size != other.right_size {
            return Err(Error::DimensionMismatch {
                left: self.left_size,
                right: self.right_size,
                other_left: other.left_size,
                other_right: other.right_size,
            });
        }
        Ok(())
    }

    /// Pairwise set intersection of two relations with identical dimensions.
    pub fn intersect(&self, other: &Self) -> Result<Self> {
        self.check_same_dims(other)?;
        let mut out = self.clone();
        for (w, ow) in out.bits.iter_mut().zip(&other.bits) {
            *w &= ow;
        }
        out.recompute_image();
        Ok(out)
    }

    /// Relation product `self . right`: the result allows `(a, c)` iff the
    /// unique partner `b` of `a` under `self` satisfies `right(b, c)`.
    ///
    /// `self` must be functional on its right variable; the inner dimensions
    /// must agree.
    pub fn compose(&self, right: &Self) -> Result<Self> {
        let mut cells = 0;
        self.compose_counted(right, &mut cells)
    }

    /// Same as [`compose`](Self::compose), adding the number of matrix cells
    /// touched to `cells`. When `self` is bifunctional only the allowed
    /// tuples of `right` are visited, so the count stays linear in the tuple
    /// count instead of quadratic in the domain size.
    pub fn compose_counted(&self, right: &Self, cells: &mut u64) -> Result<Self> {
        if self.right_size != right.left_size {
            return Err(Error::DimensionMismatch {
                left: self.left_size,
                right: self.right_size,
                other_left: right.left_size,
                other_right: right.right_size,
            });
        }
        let image = self.image.as_ref().ok_or(Error::NotFunctional)?;
        let mut out = Self::empty(self.left_size, right.right_size);
        if let Some(inv) = self.inverse_table() {
            for (b, &a) in inv.iter().enumerate() {
                if let Some(a) = a {
                    for c in right.row_values(b) {
                        out.set(a, c);
                        *cells += 1;
                    }
                }
            }
        } else {
            for (a, &b) in image.iter().enumerate() {
                if let Some(b) = b {
                    let from = b * right.words;
                    let to = a * out.words;
                    out.bits[to..to + out.words].copy_from_slice(&right.bits[from..from + right.words]);
                    *cells += right.right_size as u64;
                }
            }
        }
        out.recompute_image();
        Ok(out)
    }

    /// Unrestricted relation product: `(a, c)` is allowed iff some `b`
    /// satisfies both factors. Quadratic-times-words; used as the oracle for
    /// [`compose`](Self::compose) and the n-ary join.
    pub fn general_compose(&self, right: &Self) -> Result<Self> {
        if self.right_size != right.left_size {
            return Err(Error::DimensionMismatch {
                left: self.left_size,
                right: self.right_size,
                other_left: right.left_size,
                other_right: right.right_size,
            });
        }
        let mut out = Self::empty(self.left_size, right.right_size);
        for a in 0..self.left_size {
            for b in self.row_values(a) {
                let from = b * right.words;
                let to = a * out.words;
                for w in 0..out.words {
                    out.bits[to + w] |= right.bits[from + w];
                }
            }
        }
        out.recompute_image();
        Ok(out)
    }
}

impl fmt::Debug for BinaryRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryRelation({}x{}, {:?})", self.left_size, self.right_size, self.pairs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(pairs: &[(Value, Value)]) -> BinaryRelation {
        BinaryRelation::from_pairs(3, 3, pairs).unwrap()
    }

    #[test]
    fn membership_of_listed_pairs() {
        let r = rel(&[(1, 1), (2, 2)]);
        assert!(r.allows(1, 1));
        assert!(!r.allows(1, 2));
        assert!(BinaryRelation::universal(3, 3).allows(2, 0));
    }

    #[test]
    #[should_panic(expected = "out of range")]
    fn membership_rejects_out_of_range() {
        rel(&[(1, 1)]).allows(3, 0);
    }

    #[test]
    fn functional_detection() {
        // Many-to-one is functional on the right, one-to-many is not.
        assert!(rel(&[(0, 0), (1, 0), (2, 1)]).is_functional_on_right());
        assert!(!rel(&[(0, 0), (0, 1), (1, 0), (2, 1)]).is_functional_on_right());
        assert!(BinaryRelation::empty(3, 3).is_functional_on_right());
    }

    #[test]
    fn bifunctional_detection() {
        assert!(rel(&[(0, 2), (1, 0), (2, 1)]).is_bifunctional());
        assert!(!rel(&[(0, 0), (1, 0), (2, 1)]).is_bifunctional());
        assert!(BinaryRelation::identity(4).is_bifunctional());
    }

    #[test]
    fn image_lookup() {
        let r = rel(&[(1, 0), (2, 1)]);
        assert_eq!(r.image(1), Some(0));
        assert_eq!(r.image(0), None);
        assert_eq!(BinaryRelation::identity(3).image(2), Some(2));
    }

    #[test]
    #[should_panic(expected = "not functional")]
    fn image_rejects_non_functional() {
        rel(&[(0, 0), (0, 1)]).image(0);
    }

    #[test]
    fn intersection() {
        // Restricting x != y to two listed pairs keeps exactly those pairs.
        let sparse = rel(&[(1, 0), (2, 1)]);
        let mut neq = Vec::new();
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    neq.push((a, b));
                }
            }
        }
        let neq = rel(&neq);
        assert_eq!(sparse.intersect(&neq).unwrap(), sparse);
        assert_eq!(sparse.intersect(&BinaryRelation::universal(3, 3)).unwrap(), sparse);
        let lone = rel(&[(0, 0)]);
        assert!(lone.intersect(&rel(&[(1, 1)])).unwrap().is_empty());
        assert!(lone.intersect(&BinaryRelation::universal(2, 2)).is_err());
    }

    #[test]
    fn intersection_with_functional_operand_is_functional() {
        let f = rel(&[(0, 0), (1, 0), (2, 1)]);
        let g = rel(&[(0, 0), (0, 1), (1, 0), (2, 2)]);
        assert!(f.intersect(&g).unwrap().is_functional_on_right());
        assert!(g.intersect(&f).unwrap().is_functional_on_right());
    }

    #[test]
    fn compose_requires_functional_left() {
        let fan_out = rel(&[(0, 0), (1, 1), (1, 2)]);
        let merge = rel(&[(0, 0), (1, 1), (2, 1)]);
        assert!(matches!(fan_out.compose(&merge), Err(Error::NotFunctional)));
        // The unrestricted product handles the same inputs.
        let composed = fan_out.general_compose(&merge).unwrap();
        assert_eq!(composed.pairs(), vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn compose_identity_is_neutral() {
        let r = rel(&[(0, 1), (1, 1), (2, 0)]);
        assert_eq!(BinaryRelation::identity(3).compose(&r).unwrap(), r);
    }

    #[test]
    fn compose_of_functionals_is_functional() {
        let f = rel(&[(0, 1), (1, 1), (2, 2)]);
        let g = rel(&[(1, 0), (2, 0)]);
        let fg = f.compose(&g).unwrap();
        assert!(fg.is_functional_on_right());
        assert_eq!(fg.pairs(), vec![(0, 0), (1, 0), (2, 0)]);
    }

    #[test]
    fn general_compose_empty_absorbs() {
        let r = rel(&[(0, 1), (1, 2)]);
        assert!(BinaryRelation::empty(3, 3).general_compose(&r).unwrap().is_empty());
    }

    #[test]
    fn transpose_mirrors_pairs() {
        let r = rel(&[(0, 2), (1, 0)]);
        let t = r.transpose();
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(r.allows(a, b), t.allows(b, a));
            }
        }
        assert_eq!(t.transpose(), r);
    }

    #[test]
    fn next_support_scans_forward() {
        let r = rel(&[(0, 0), (0, 2)]);
        assert_eq!(r.next_support(0, 0), Some(0));
        assert_eq!(r.next_support(0, 1), Some(2));
        assert_eq!(r.next_support(0, 3), None);
        assert_eq!(r.next_support(1, 0), None);
    }

    #[test]
    fn wide_rows_cross_word_boundaries() {
        let pairs: Vec<_> = (0..130).step_by(13).map(|b| (1, b)).collect();
        let r = BinaryRelation::from_pairs(2, 130, &pairs).unwrap();
        assert_eq!(r.row_values(1).collect::<Vec<_>>(), pairs.iter().map(|p| p.1).collect::<Vec<_>>());
        assert_eq!(r.next_support(1, 64), Some(65));
        assert_eq!(r.transpose().transpose(), r);
    }

    /// Cell-by-cell product, the oracle for both compose routes.
    fn enumerate_compose(r1: &BinaryRelation, r2: &BinaryRelation) -> Vec<(Value, Value)> {
        let mut out = Vec::new();
        for a in 0..r1.left_size() {
            for c in 0..r2.right_size() {
                let witness = (0..r1.right_size()).any(|b| r1.allows(a, b) && r2.allows(b, c));
                if witness {
                    out.push((a, c));
                }
            }
        }
        out
    }

    #[test]
    fn general_compose_matches_enumeration_on_random_relations() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let pick = |rng: &mut rand_chacha::ChaCha8Rng| {
                let mut pairs = Vec::new();
                for a in 0..4 {
                    for b in 0..4 {
                        if rng.gen_bool(0.35) {
                            pairs.push((a, b));
                        }
                    }
                }
                BinaryRelation::from_pairs(4, 4, &pairs).unwrap()
            };
            let r1 = pick(&mut rng);
            let r2 = pick(&mut rng);
            assert_eq!(r1.general_compose(&r2).unwrap().pairs(), enumerate_compose(&r1, &r2));
        }
    }

    #[test]
    fn compose_agrees_with_general_compose_exhaustively_for_d2() {
        // All 16 relations on 2x2, paired every way; compare whenever the
        // left factor is functional.
        let all: Vec<BinaryRelation> = (0u32..16)
            .map(|mask| {
                let mut pairs = Vec::new();
                for bit in 0..4 {
                    if mask >> bit & 1 == 1 {
                        pairs.push((bit / 2, bit % 2));
                    }
                }
                BinaryRelation::from_pairs(2, 2, &pairs).unwrap()
            })
            .collect();
        for r1 in &all {
            for r2 in &all {
                if r1.is_functional_on_right() {
                    assert_eq!(r1.compose(r2).unwrap(), r1.general_compose(r2).unwrap());
                }
            }
        }
    }

    #[test]
    fn compose_agrees_with_general_compose_on_random_functional_left() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let d = rng.gen_range(1..=16);
            let mut left_pairs = Vec::new();
            for a in 0..d {
                if rng.gen_bool(0.8) {
                    left_pairs.push((a, rng.gen_range(0..d)));
                }
            }
            let mut right_pairs = Vec::new();
            for b in 0..d {
                for c in 0..d {
                    if rng.gen_bool(0.3) {
                        right_pairs.push((b, c));
                    }
                }
            }
            let left = BinaryRelation::from_pairs(d, d, &left_pairs).unwrap();
            let right = BinaryRelation::from_pairs(d, d, &right_pairs).unwrap();
            assert_eq!(left.compose(&right).unwrap(), left.general_compose(&right).unwrap());
        }
    }

    #[test]
    fn bifunctional_compose_touches_linearly_many_cells() {
        let d = 32;
        let shift: Vec<_> = (0..d).map(|a| (a, (a + 1) % d)).collect();
        let left = BinaryRelation::from_pairs(d, d, &shift).unwrap();
        let right = BinaryRelation::identity(d);
        let mut cells = 0;
        left.compose_counted(&right, &mut cells).unwrap();
        assert_eq!(cells, d as u64);

        // A merely functional left factor falls back to row copies.
        let collapse: Vec<_> = (0..d).map(|a| (a, 0)).collect();
        let left = BinaryRelation::from_pairs(d, d, &collapse).unwrap();
        let mut cells = 0;
        left.compose_counted(&right, &mut cells).unwrap();
        assert_eq!(cells, (d * d) as u64);
    }
}
