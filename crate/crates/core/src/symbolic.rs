//! Exact Laurent polynomials in two formal variables.
//!
//! `Q` stands for the residue field size `q` and `T` for `q^s`, where `s` is
//! the spectral parameter. Keeping both formal lets every measure and every
//! eigenvalue be an exact ring element. Congruences modulo `q - 1` are then
//! the ring homomorphism `Q -> 1, T -> 1` followed by integer reduction.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Coefficient ring of a [`Laurent`] polynomial.
pub trait Coefficient: Clone + PartialEq + Signed + ToPrimitive + fmt::Display + fmt::Debug + Send + Sync {}

impl Coefficient for BigInt {}
impl Coefficient for BigRational {}

/// The monomial `Q^q * T^t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial {
    pub q: i64,
    pub t: i64,
}

impl Monomial {
    pub const ONE: Monomial = Monomial { q: 0, t: 0 };

    pub fn new(q: i64, t: i64) -> Self {
        Monomial { q, t }
    }

    pub fn q(q: i64) -> Self {
        Monomial { q, t: 0 }
    }
}

impl Mul for Monomial {
    type Output = Monomial;

    fn mul(self, rhs: Monomial) -> Monomial {
        Monomial { q: self.q + rhs.q, t: self.t + rhs.t }
    }
}

/// Integer-coefficient Laurent polynomial in `Q` and `T`.
pub type SymbolicValue = Laurent<BigInt>;

/// Rational-coefficient variant used for cell function values.
pub type RationalSymbolic = Laurent<BigRational>;

/// Laurent polynomial over `C` in the formal variables `Q`, `T`.
///
/// Stored sparsely; zero coefficients are never kept, so structural equality
/// is ring equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Laurent<C> {
    terms: BTreeMap<Monomial, C>,
}

impl<C: Coefficient> Default for Laurent<C> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<C: Coefficient> Laurent<C> {
    pub fn zero() -> Self {
        Laurent { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(C::one())
    }

    pub fn constant(c: C) -> Self {
        Self::term(c, Monomial::ONE)
    }

    pub fn term(c: C, m: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Laurent { terms }
    }

    /// `Q^a` with coefficient one.
    pub fn q_pow(a: i64) -> Self {
        Self::term(C::one(), Monomial::q(a))
    }

    pub fn monomial(m: Monomial) -> Self {
        Self::term(C::one(), m)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: Monomial) -> C {
        self.terms.get(&m).cloned().unwrap_or_else(C::zero)
    }

    /// True when no term carries a nonzero `T` exponent.
    pub fn is_t_free(&self) -> bool {
        self.terms.keys().all(|m| m.t == 0)
    }

    /// Returns the single monomial if `self` is `1 * Q^a * T^b`.
    pub fn as_unit_monomial(&self) -> Option<Monomial> {
        match self.terms.iter().next() {
            Some((m, c)) if self.terms.len() == 1 && c.is_one() => Some(*m),
            _ => None,
        }
    }

    fn add_term(&mut self, m: Monomial, c: C) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let sum = o.get().clone() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn mul_monomial(&self, m: Monomial) -> Self {
        Laurent { terms: self.terms.iter().map(|(k, c)| (*k * m, c.clone())).collect() }
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Laurent { terms: self.terms.iter().map(|(k, v)| (*k, v.clone() * c.clone())).collect() }
    }

    /// Accumulates `c * m * other` into `self`.
    pub fn add_scaled(&mut self, other: &Self, c: &C, m: Monomial) {
        for (k, v) in &other.terms {
            self.add_term(*k * m, v.clone() * c.clone());
        }
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Integer power; negative exponents exist only for monomials with a unit coefficient.
    pub fn powi(&self, e: i64) -> Option<Self> {
        if e >= 0 {
            return Some(self.pow(u32::try_from(e).ok()?));
        }
        let (m, c) = self.terms.iter().next()?;
        if self.terms.len() != 1 || !(c.is_one() || (-c.clone()).is_one()) {
            return None;
        }
        let k = -e;
        let sign = if c.is_negative() && k % 2 == 1 { -C::one() } else { C::one() };
        Some(Self::term(sign, Monomial::new(-m.q * k, -m.t * k)))
    }

    /// `Q^a -> Q^a T^-a`: the `(1 - s)`-th power of a measure monomial under `T = Q^s`.
    pub fn power_one_minus_s(&self) -> Result<Self> {
        let a = self.measure_exponent()?;
        Ok(Self::monomial(Monomial::new(a, -a)))
    }

    /// `Q^a -> T^-a`: the `(-s)`-th power of a measure monomial.
    pub fn power_minus_s(&self) -> Result<Self> {
        let a = self.measure_exponent()?;
        Ok(Self::monomial(Monomial::new(0, -a)))
    }

    fn measure_exponent(&self) -> Result<i64> {
        match self.as_unit_monomial() {
            Some(m) if m.t == 0 => Ok(m.q),
            _ => Err(Error::NonMonomial(self.to_string())),
        }
    }

    /// Floating-point view with `Q = q` and `T = q^s`.
    pub fn evaluate_numeric(&self, q: u64, s: f64) -> f64 {
        let qf = q as f64;
        self.terms
            .iter()
            .map(|(m, c)| {
                let c = c.to_f64().unwrap_or(f64::NAN);
                c * qf.powf(m.q as f64 + s * m.t as f64)
            })
            .sum()
    }
}

impl SymbolicValue {
    /// Residue modulo `q - 1` under `Q -> 1, T -> 1`.
    pub fn reduce_mod(&self, q: u64) -> Residue {
        assert!(q >= 2, "reduce_mod needs q >= 2");
        let modulus = q - 1;
        let sum: BigInt = self.terms.values().cloned().sum();
        Residue::from_bigint(&sum, modulus)
    }

    pub fn to_rational(&self) -> RationalSymbolic {
        Laurent { terms: self.terms.iter().map(|(m, c)| (*m, BigRational::from_integer(c.clone()))).collect() }
    }

    /// Exact value at `Q = q` for a `T`-free polynomial.
    pub fn evaluate_exact(&self, q: u64) -> Option<BigRational> {
        if !self.is_t_free() {
            return None;
        }
        let qb = BigInt::from(q);
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let p = num_traits::pow(qb.clone(), m.q.unsigned_abs() as usize);
            let v = if m.q >= 0 { BigRational::from_integer(c * p) } else { BigRational::new(c.clone(), p) };
            acc += v;
        }
        Some(acc)
    }
}

impl RationalSymbolic {
    /// Substitutes `Q = q` and keeps `T` formal.
    ///
    /// Formal `Q` hides relations such as `9*Q^-2 = 1` at `q = 3`; two values
    /// are equal as functions of `s` iff their specializations are equal.
    pub fn specialize_q(&self, q: u64) -> RationalSymbolic {
        let qr = BigRational::from_integer(BigInt::from(q));
        let mut out = RationalSymbolic::zero();
        for (m, c) in &self.terms {
            let scale = num_traits::pow(qr.clone(), m.q.unsigned_abs() as usize);
            let c = if m.q >= 0 { c * scale } else { c / scale };
            out.add_term(Monomial::new(0, m.t), c);
        }
        out
    }
}

impl From<i64> for SymbolicValue {
    fn from(v: i64) -> Self {
        Self::constant(BigInt::from(v))
    }
}

impl<C: Coefficient> Add for &Laurent<C> {
    type Output = Laurent<C>;

    fn add(self, rhs: &Laurent<C>) -> Laurent<C> {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl<C: Coefficient> Add for Laurent<C> {
    type Output = Laurent<C>;

    fn add(mut self, rhs: Laurent<C>) -> Laurent<C> {
        self += &rhs;
        self
    }
}

impl<C: Coefficient> AddAssign<&Laurent<C>> for Laurent<C> {
    fn add_assign(&mut self, rhs: &Laurent<C>) {
        for (m, c) in &rhs.terms {
            self.add_term(*m, c.clone());
        }
    }
}

impl<C: Coefficient> SubAssign<&Laurent<C>> for Laurent<C> {
    fn sub_assign(&mut self, rhs: &Laurent<C>) {
        for (m, c) in &rhs.terms {
            self.add_term(*m, -c.clone());
        }
    }
}

impl<C: Coefficient> Sub for &Laurent<C> {
    type Output = Laurent<C>;

    fn sub(self, rhs: &Laurent<C>) -> Laurent<C> {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl<C: Coefficient> Sub for Laurent<C> {
    type Output = Laurent<C>;

    fn sub(mut self, rhs: Laurent<C>) -> Laurent<C> {
        self -= &rhs;
        self
    }
}

impl<C: Coefficient> Neg for Laurent<C> {
    type Output = Laurent<C>;

    fn neg(self) -> Laurent<C> {
        Laurent { terms: self.terms.into_iter().map(|(m, c)| (m, -c)).collect() }
    }
}

impl<C: Coefficient> Mul for &Laurent<C> {
    type Output = Laurent<C>;

    fn mul(self, rhs: &Laurent<C>) -> Laurent<C> {
        let mut out = Laurent::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(*ma * *mb, ca.clone() * cb.clone());
            }
        }
        out
    }
}

impl<C: Coefficient> Mul for Laurent<C> {
    type Output = Laurent<C>;

    fn mul(self, rhs: Laurent<C>) -> Laurent<C> {
        &self * &rhs
    }
}

impl<C: Coefficient> std::iter::Sum for Laurent<C> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |mut acc, v| {
            acc += &v;
            acc
        })
    }
}

impl<C: Coefficient> fmt::Display for Laurent<C> {
    /// Terms ordered by descending `Q` then descending `T` exponent,
    /// e.g. `1-Q^-1`, `Q^-1*T^1`, `9*Q^-1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            if neg {
                f.write_str("-")?;
            } else if i > 0 {
                f.write_str("+")?;
            }
            let mag = c.abs();
            let mut body = Vec::with_capacity(2);
            if m.q != 0 {
                body.push(format!("Q^{}", m.q));
            }
            if m.t != 0 {
                body.push(format!("T^{}", m.t));
            }
            if body.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                f.write_str(&body.join("*"))?;
            } else {
                write!(f, "{mag}*{}", body.join("*"))?;
            }
        }
        Ok(())
    }
}

impl<C: Coefficient> fmt::Debug for Laurent<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Laurent({self})")
    }
}

/// An element of `Z/(q-1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Residue {
    pub value: u64,
    pub modulus: u64,
}

impl Residue {
    pub fn new(value: i128, modulus: u64) -> Self {
        let value = value.rem_euclid(modulus as i128) as u64;
        Residue { value, modulus }
    }

    pub fn from_bigint(v: &BigInt, modulus: u64) -> Self {
        let r = v.mod_floor(&BigInt::from(modulus));
        Residue { value: r.to_u64().expect("residue below modulus"), modulus }
    }
}

impl Add for Residue {
    type Output = Residue;

    fn add(self, rhs: Residue) -> Residue {
        assert_eq!(self.modulus, rhs.modulus);
        Residue::new(self.value as i128 + rhs.value as i128, self.modulus)
    }
}

impl Mul for Residue {
    type Output = Residue;

    fn mul(self, rhs: Residue) -> Residue {
        assert_eq!(self.modulus, rhs.modulus);
        Residue::new(self.value as i128 * rhs.value as i128, self.modulus)
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.value, self.modulus)
    }
}
