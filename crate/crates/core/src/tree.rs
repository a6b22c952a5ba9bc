//! The `q^n`-ary refinement tree of the unit polyball `O_K^n`.
//!
//! A ball of radius `q^-l` is a path of `l` child indices from the root; every
//! ball splits into `q^n` maximal subballs. Only `q` enters the combinatorics,
//! so residue degree `f > 1` needs no field arithmetic.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbolic::{Monomial, SymbolicValue};

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Ambient parameters: prime `p`, residue degree `f`, `q = p^f`, dimension `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PAdicStructure {
    p: u64,
    f: u32,
    q: u64,
    n: u32,
    branching: u64,
}

impl PAdicStructure {
    pub fn new(p: u64, f: u32, n: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidStructure(format!("p={p} is not prime")));
        }
        if f == 0 {
            return Err(Error::InvalidStructure("f must be at least 1".into()));
        }
        if n == 0 {
            return Err(Error::InvalidStructure("n must be at least 1".into()));
        }
        let q = p.checked_pow(f).ok_or_else(|| Error::InvalidStructure(format!("q = {p}^{f} overflows")))?;
        let branching = q
            .checked_pow(n)
            .filter(|b| *b <= u32::MAX as u64)
            .ok_or_else(|| Error::InvalidStructure(format!("q^n = {q}^{n} is too large")))?;
        Ok(PAdicStructure { p, f, q, n, branching })
    }

    /// Finds `p, f` with `p^f = q`.
    pub fn from_q(q: u64, n: u32) -> Result<Self> {
        for p in 2..=q {
            if q.is_multiple_of(p) {
                let mut f = 0;
                let mut r = q;
                while r.is_multiple_of(p) {
                    r /= p;
                    f += 1;
                }
                if r != 1 {
                    break;
                }
                return Self::new(p, f, n);
            }
        }
        Err(Error::InvalidStructure(format!("q={q} is not a prime power")))
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn f(&self) -> u32 {
        self.f
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Number of maximal subballs of any ball, `q^n`.
    pub fn branching(&self) -> u32 {
        self.branching as u32
    }

    /// Exponent `e - l*n` of the measure `Q^(e - l*n)` of a level-`l` ball at density `q^e`.
    pub fn measure_exponent(&self, level: usize, density_exp: i64) -> i64 {
        density_exp - level as i64 * self.n as i64
    }

    pub fn ball_measure(&self, ball: &Ball, density_exp: i64) -> SymbolicValue {
        SymbolicValue::q_pow(self.measure_exponent(ball.level(), density_exp))
    }

    /// Covering of the annulus `outer \ inner` by spheres around `inner`.
    ///
    /// Entry `k` is the set of points whose join with `inner` sits at level
    /// `k`: a level-`k` ball minus its level-`k+1` subball towards `inner`.
    pub fn sphere_decomposition(&self, outer: &Ball, inner: &Ball, density_exp: i64) -> Result<Vec<SphereShell>> {
        if !outer.is_strict_prefix_of(inner) {
            return Err(Error::NotStrictlyInside { outer: outer.to_string(), inner: inner.to_string() });
        }
        Ok((outer.level()..inner.level())
            .map(|k| {
                let join = self.measure_exponent(k, density_exp);
                let next = self.measure_exponent(k + 1, density_exp);
                SphereShell {
                    level: k,
                    sphere_measure: &SymbolicValue::q_pow(join) - &SymbolicValue::q_pow(next),
                    join_measure: SymbolicValue::q_pow(join),
                }
            })
            .collect())
    }

    pub fn check_ball(&self, ball: &Ball) -> std::result::Result<(), String> {
        match ball.digits().iter().position(|&d| d >= self.branching()) {
            Some(i) => Err(format!("digit {i} = {} is not below q^n = {}", ball.digits()[i], self.branching)),
            None => Ok(()),
        }
    }

    /// All balls at `level` below `root`, in digit order.
    pub fn descendants(&self, root: &Ball, level: usize) -> Vec<Ball> {
        let mut out = vec![root.clone()];
        for _ in root.level()..level {
            out = out.iter().flat_map(|b| b.children(self.branching())).collect();
        }
        out
    }
}

/// One shell of [`PAdicStructure::sphere_decomposition`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SphereShell {
    pub level: usize,
    pub sphere_measure: SymbolicValue,
    pub join_measure: SymbolicValue,
}

impl SphereShell {
    /// `sphere_measure * join_measure^-s`, the annulus contribution to an eigenvalue.
    pub fn kernel_weighted(&self) -> SymbolicValue {
        let j = self.join_measure.as_unit_monomial().expect("join measure is a monomial");
        self.sphere_measure.mul_monomial(Monomial::new(0, -j.q))
    }
}

/// A ball in one sheet, given by its digit path from the root.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ball {
    digits: Vec<u32>,
}

impl Ball {
    pub fn root() -> Self {
        Ball { digits: Vec::new() }
    }

    pub fn new(digits: Vec<u32>) -> Self {
        Ball { digits }
    }

    pub fn level(&self) -> usize {
        self.digits.len()
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn is_root(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn child(&self, c: u32) -> Ball {
        let mut digits = Vec::with_capacity(self.digits.len() + 1);
        digits.extend_from_slice(&self.digits);
        digits.push(c);
        Ball { digits }
    }

    pub fn children(&self, branching: u32) -> impl Iterator<Item = Ball> + '_ {
        (0..branching).map(move |c| self.child(c))
    }

    pub fn truncate(&self, level: usize) -> Ball {
        Ball { digits: self.digits[..level.min(self.digits.len())].to_vec() }
    }

    pub fn parent(&self) -> Option<Ball> {
        (!self.is_root()).then(|| self.truncate(self.level() - 1))
    }

    /// True when `self` contains `other` (or equals it).
    pub fn is_prefix_of(&self, other: &Ball) -> bool {
        other.digits.starts_with(&self.digits)
    }

    pub fn is_strict_prefix_of(&self, other: &Ball) -> bool {
        self.level() < other.level() && self.is_prefix_of(other)
    }

    /// Balls in an ultrametric tree either nest or are disjoint.
    pub fn intersects(&self, other: &Ball) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    /// Level of the smallest ball containing both.
    pub fn join_level(&self, other: &Ball) -> usize {
        self.digits.iter().zip(&other.digits).take_while(|(a, b)| a == b).count()
    }

    /// Smallest ball containing both balls: their longest common prefix.
    pub fn join(&self, other: &Ball) -> Ball {
        self.truncate(self.join_level(other))
    }
}

impl fmt::Display for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, d) in self.digits.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{d}")?;
        }
        f.write_str("]")
    }
}

impl fmt::Debug for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ball{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(d: &[u32]) -> Ball {
        Ball::new(d.to_vec())
    }

    #[test]
    fn structure_validation() {
        assert!(PAdicStructure::new(4, 1, 1).is_err());
        assert!(PAdicStructure::new(3, 0, 1).is_err());
        assert!(PAdicStructure::new(3, 1, 0).is_err());
        let s = PAdicStructure::from_q(8, 2).unwrap();
        assert_eq!((s.p(), s.f(), s.q(), s.branching()), (2, 3, 8, 64));
        assert!(PAdicStructure::from_q(6, 1).is_err());
    }

    #[test]
    fn join_examples() {
        assert_eq!(b(&[0, 1]).join(&b(&[0, 2])), b(&[0]));
        assert_eq!(b(&[1, 1]).join(&b(&[1, 1])), b(&[1, 1]));
        assert_eq!(b(&[2, 0, 1]).join(&b(&[2, 0, 1, 4])), b(&[2, 0, 1]));
        assert_eq!(b(&[3]).join(&b(&[1])), Ball::root());
    }

    #[test]
    fn measure_examples() {
        let s31 = PAdicStructure::new(3, 1, 1).unwrap();
        assert_eq!(s31.ball_measure(&Ball::root(), 0), SymbolicValue::one());
        assert_eq!(s31.ball_measure(&b(&[2]), 0), SymbolicValue::q_pow(-1));
        let s52 = PAdicStructure::new(5, 1, 2).unwrap();
        assert_eq!(s52.ball_measure(&b(&[7, 24]), -1), SymbolicValue::q_pow(-5));
    }

    #[test]
    fn sphere_examples() {
        let s = PAdicStructure::new(3, 1, 1).unwrap();
        let shells = s.sphere_decomposition(&Ball::root(), &b(&[1]), 0).unwrap();
        assert_eq!(shells.len(), 1);
        assert_eq!(shells[0].level, 0);
        assert_eq!(shells[0].sphere_measure, &SymbolicValue::one() - &SymbolicValue::q_pow(-1));
        assert_eq!(shells[0].join_measure, SymbolicValue::one());

        assert!(s.sphere_decomposition(&b(&[1]), &b(&[1]), 0).is_err());
        assert!(s.sphere_decomposition(&b(&[0]), &b(&[1, 0]), 0).is_err());
    }

    /// Buckets every level-`depth` cell of the sheet by its join level with `inner`.
    fn sphere_by_enumeration(
        s: &PAdicStructure,
        outer: &Ball,
        inner: &Ball,
        depth: usize,
    ) -> Vec<(usize, SymbolicValue)> {
        let mut buckets = vec![0i64; inner.level()];
        for cell in s.descendants(outer, depth) {
            if !inner.is_prefix_of(&cell) {
                buckets[cell.join_level(inner)] += 1;
            }
        }
        (outer.level()..inner.level())
            .map(|k| (k, SymbolicValue::from(buckets[k]) * SymbolicValue::q_pow(-(depth as i64) * s.n() as i64)))
            .collect()
    }

    #[test]
    fn sphere_decomposition_matches_enumeration() {
        let s = PAdicStructure::new(2, 1, 1).unwrap();
        let shells = s.sphere_decomposition(&Ball::root(), &b(&[1, 0]), 0).unwrap();
        let oracle = sphere_by_enumeration(&s, &Ball::root(), &b(&[1, 0]), 2);
        // Enumeration at depth 2 gives counts * Q^-2; compare numerically at Q = q.
        for (shell, (k, v)) in shells.iter().zip(&oracle) {
            assert_eq!(shell.level, *k);
            assert_eq!(shell.sphere_measure.evaluate_exact(2), v.evaluate_exact(2));
        }
        assert_eq!(shells[0].sphere_measure.to_string(), "1-Q^-1");
        assert_eq!(shells[1].sphere_measure.to_string(), "Q^-1-Q^-2");
        assert_eq!(shells[1].join_measure, SymbolicValue::q_pow(-1));

        let s = PAdicStructure::new(3, 1, 2).unwrap();
        let inner = b(&[4, 2, 8]);
        let shells = s.sphere_decomposition(&b(&[4]), &inner, -1).unwrap();
        let oracle = sphere_by_enumeration(&s, &b(&[4]), &inner, 3);
        for (shell, (_, v)) in shells.iter().zip(&oracle) {
            let dens = SymbolicValue::q_pow(-1);
            assert_eq!(shell.sphere_measure.evaluate_exact(3), (v * &dens).evaluate_exact(3));
        }
    }

    fn arb_ball(max_digit: u32) -> impl Strategy<Value = Ball> {
        prop::collection::vec(0..max_digit, 0..6).prop_map(Ball::new)
    }

    proptest! {
        #[test]
        fn join_laws(a in arb_ball(3), c in arb_ball(3)) {
            let j = a.join(&c);
            prop_assert_eq!(&j, &c.join(&a));
            prop_assert!(j.level() <= a.level().min(c.level()));
            prop_assert!(j.is_prefix_of(&a) && j.is_prefix_of(&c));
            prop_assert_eq!(a.join(&a), a.clone());
        }

        #[test]
        fn measure_additive(p in prop::sample::select(vec![2u64, 3, 5]), n in 1u32..3, ball in arb_ball(4), e in -3i64..1) {
            let s = PAdicStructure::new(p, 1, n).unwrap();
            let ball = Ball::new(ball.digits().iter().map(|d| d % s.branching()).collect());
            let total: SymbolicValue = ball.children(s.branching()).map(|c| s.ball_measure(&c, e)).sum();
            prop_assert_eq!(total.evaluate_exact(p), s.ball_measure(&ball, e).evaluate_exact(p));
        }

        #[test]
        fn spheres_partition_annulus(q in prop::sample::select(vec![2u64, 3, 4, 5, 7, 8, 9]), n in 1u32..3, outer_level in 0usize..3, extra in 1usize..4, e in -3i64..1) {
            let s = PAdicStructure::from_q(q, n).unwrap();
            let outer = Ball::new(vec![0; outer_level]);
            let inner = Ball::new(vec![0; outer_level + extra]);
            let shells = s.sphere_decomposition(&outer, &inner, e).unwrap();
            let sum: SymbolicValue = shells.iter().map(|sh| sh.sphere_measure.clone()).sum();
            prop_assert_eq!(&sum + &s.ball_measure(&inner, e), s.ball_measure(&outer, e));
        }
    }
}
