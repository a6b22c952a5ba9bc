//! Elliptic curves over `Q_p`-like fields: reduction type, point counts of
//! the reduced cubic, the Neron measure of `E(K)`, and manifold models of
//! `E(K)` as fibres of the reduction map.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifold::{Chart, ManifoldModel, Region, Sheet, SheetId};
use crate::par::Execution;
use crate::spectral::{congruence_check, Normalization, Profile, WaveletSpec};
use crate::symbolic::{Residue, SymbolicValue};
use crate::tree::{is_prime, Ball, PAdicStructure};

/// `y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WeierstrassCurve {
    pub a1: i64,
    pub a2: i64,
    pub a3: i64,
    pub a4: i64,
    pub a6: i64,
}

impl WeierstrassCurve {
    pub fn new(a1: i64, a2: i64, a3: i64, a4: i64, a6: i64) -> Self {
        WeierstrassCurve { a1, a2, a3, a4, a6 }
    }

    pub fn short(a: i64, b: i64) -> Self {
        Self::new(0, 0, 0, a, b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurveQuantities {
    pub b2: BigInt,
    pub b4: BigInt,
    pub b6: BigInt,
    pub b8: BigInt,
    pub c4: BigInt,
    pub c6: BigInt,
    pub discriminant: BigInt,
    pub j_numerator: BigInt,
    pub j_denominator: BigInt,
}

pub fn curve_quantities(c: &WeierstrassCurve) -> Result<CurveQuantities> {
    let [a1, a2, a3, a4, a6] = [c.a1, c.a2, c.a3, c.a4, c.a6].map(BigInt::from);
    let b2 = &a1 * &a1 + 4 * &a2;
    let b4 = 2 * &a4 + &a1 * &a3;
    let b6 = &a3 * &a3 + 4 * &a6;
    let b8 = &a1 * &a1 * &a6 + 4 * &a2 * &a6 - &a1 * &a3 * &a4 + &a2 * &a3 * &a3 - &a4 * &a4;
    let c4 = &b2 * &b2 - 24 * &b4;
    let b2_cubed: BigInt = &b2 * &b2 * &b2;
    let c6 = -b2_cubed + 36 * &b2 * &b4 - 216 * &b6;
    let b2b2b8: BigInt = &b2 * &b2 * &b8;
    let discriminant: BigInt = -b2b2b8 - 8 * &b4 * &b4 * &b4 - 27 * &b6 * &b6 + 9 * &b2 * &b4 * &b6;
    if discriminant.is_zero() {
        return Err(Error::SingularCurve);
    }
    let num: BigInt = &c4 * &c4 * &c4;
    let g = num.gcd(&discriminant);
    let (mut j_numerator, mut j_denominator) = (num / &g, &discriminant / &g);
    if j_denominator.is_negative() {
        j_numerator = -j_numerator;
        j_denominator = -j_denominator;
    }
    Ok(CurveQuantities { b2, b4, b6, b8, c4, c6, discriminant, j_numerator, j_denominator })
}

/// Exponent of `p` in `v`; `None` for zero.
pub fn valuation(v: &BigInt, p: u64) -> Option<u32> {
    if v.is_zero() {
        return None;
    }
    let p = BigInt::from(p);
    let mut v = v.clone();
    let mut k = 0;
    while (&v % &p).is_zero() {
        v /= &p;
        k += 1;
    }
    Some(k)
}

/// Projective point counts of the reduced cubic over `F_p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PointCount {
    /// All points including the one at infinity.
    pub total: u64,
    /// Non-singular points, including the one at infinity.
    pub smooth: u64,
}

struct Reduced {
    p: u64,
    a: [u64; 5],
}

impl Reduced {
    fn new(c: &WeierstrassCurve, p: u64) -> Self {
        let r = |v: i64| v.rem_euclid(p as i64) as u64;
        Reduced { p, a: [r(c.a1), r(c.a2), r(c.a3), r(c.a4), r(c.a6)] }
    }

    fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.p as u128) as u64
    }

    /// Values `F`, `dF/dx`, `dF/dy` at `(x, y)`.
    fn eval(&self, x: u64, y: u64) -> (u64, u64, u64) {
        let p = self.p;
        let [a1, a2, a3, a4, a6] = self.a;
        let x2 = self.mul(x, x);
        let lhs = (self.mul(y, y) + self.mul(self.mul(a1, x), y) + self.mul(a3, y)) % p;
        let rhs = (self.mul(x2, x) + self.mul(a2, x2) + self.mul(a4, x) + a6) % p;
        let f = (lhs + p - rhs) % p;
        let fx_pos = self.mul(a1, y);
        let fx_neg = (self.mul(3, x2) + self.mul(self.mul(2, a2), x) + a4) % p;
        let fx = (fx_pos + p - fx_neg) % p;
        let fy = (self.mul(2, y) + self.mul(a1, x) + a3) % p;
        (f, fx, fy)
    }

    fn singular_points(&self) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        for x in 0..self.p {
            for y in 0..self.p {
                if self.eval(x, y) == (0, 0, 0) {
                    out.push((x, y));
                }
            }
        }
        out
    }
}

pub fn count_points_fp(c: &WeierstrassCurve, p: u64) -> Result<PointCount> {
    count_points_fp_with(c, p, Execution::default())
}

/// Brute force over all affine `(x, y)`, split over `x`.
pub fn count_points_fp_with(c: &WeierstrassCurve, p: u64, exec: Execution) -> Result<PointCount> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let red = Reduced::new(c, p);
    let per_x = exec.map_range(p as usize, |x| {
        let mut on = 0u64;
        let mut singular = 0u64;
        for y in 0..p {
            let (f, fx, fy) = red.eval(x as u64, y);
            if f == 0 {
                on += 1;
                if fx == 0 && fy == 0 {
                    singular += 1;
                }
            }
        }
        (on, singular)
    });
    let (on, singular) = per_x.into_iter().fold((0, 0), |(a, b), (c, d)| (a + c, b + d));
    Ok(PointCount { total: on + 1, smooth: on + 1 - singular })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ReductionType {
    Good,
    MultSplit,
    MultNonsplit,
    Additive,
}

impl ReductionType {
    pub fn name(self) -> &'static str {
        match self {
            ReductionType::Good => "Good",
            ReductionType::MultSplit => "MultSplit",
            ReductionType::MultNonsplit => "MultNonsplit",
            ReductionType::Additive => "Additive",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReductionReport {
    pub p: u64,
    pub kind: ReductionType,
    /// `v_p(Delta)` for multiplicative reduction.
    pub m: Option<u32>,
    /// `(E(K) : E_0(K))`; derived for good and split reduction, supplied otherwise.
    pub component_index: Option<u64>,
    /// Non-singular points of the reduced cubic, infinity included.
    pub smooth_count: u64,
    pub total_count: u64,
}

impl ReductionReport {
    /// Split multiplicative report with `m` components, without a curve.
    pub fn tate(p: u64, m: u32) -> Self {
        ReductionReport {
            p,
            kind: ReductionType::MultSplit,
            m: Some(m),
            component_index: Some(m as u64),
            smooth_count: p - 1,
            total_count: p,
        }
    }
}

/// Classifies the reduction of a model assumed minimal at `p`.
pub fn classify_reduction(c: &WeierstrassCurve, p: u64, component_index: Option<u64>) -> Result<ReductionReport> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let qs = curve_quantities(c)?;
    let count = count_points_fp(c, p)?;
    let pb = BigInt::from(p);
    let mut report = ReductionReport {
        p,
        kind: ReductionType::Good,
        m: None,
        component_index: Some(1),
        smooth_count: count.smooth,
        total_count: count.total,
    };
    if !(&qs.discriminant % &pb).is_zero() {
        return Ok(report);
    }
    if p == 2 || p == 3 {
        return Err(Error::UnsupportedClassification { p });
    }
    if let Some(ci) = component_index {
        if ci == 0 {
            return Err(Error::InvalidArgument("component index must be positive".into()));
        }
    }
    if (&qs.c4 % &pb).is_zero() {
        report.kind = ReductionType::Additive;
        report.component_index = component_index;
        return Ok(report);
    }
    let m = valuation(&qs.discriminant, p).expect("nonzero discriminant");
    report.m = Some(m);
    let red = Reduced::new(c, p);
    let node = red.singular_points();
    let &[(x0, _)] = node.as_slice() else {
        unreachable!("a nodal cubic has exactly one singular point");
    };
    // Tangent cone at the node: v^2 + a1 u v - (3 x0 + a2) u^2.
    let [a1, a2, ..] = red.a;
    let disc = (red.mul(a1, a1) + red.mul(4, (red.mul(3, x0) + a2) % p)) % p;
    if is_square_mod(disc, p) {
        report.kind = ReductionType::MultSplit;
        report.component_index = Some(m as u64);
    } else {
        report.kind = ReductionType::MultNonsplit;
        if let Some(ci) = component_index {
            if ci > 2 {
                return Err(Error::InvalidArgument(format!(
                    "non-split multiplicative component index must be 1 or 2, got {ci}"
                )));
            }
        }
        report.component_index = component_index;
    }
    Ok(report)
}

fn is_square_mod(a: u64, p: u64) -> bool {
    a != 0 && BigInt::from(a).modpow(&BigInt::from((p - 1) / 2), &BigInt::from(p)) == BigInt::from(1)
}

/// Measure of `E(K)`: `c * |E_ns(F_p)| / q`, with `Q -> p`.
pub fn curve_measure(r: &ReductionReport) -> Result<SymbolicValue> {
    let per_component = |n: u64| SymbolicValue::from(n as i64) * SymbolicValue::q_pow(-1);
    match r.kind {
        ReductionType::Good => Ok(per_component(r.smooth_count)),
        ReductionType::MultSplit => {
            let m = r.m.ok_or(Error::MissingComponentIndex("split multiplicative"))? as i64;
            // m (Q - 1) Q^-1
            Ok(SymbolicValue::from(m) * (SymbolicValue::q_pow(1) - SymbolicValue::one()) * SymbolicValue::q_pow(-1))
        }
        ReductionType::MultNonsplit | ReductionType::Additive => {
            let c = r.component_index.ok_or(Error::MissingComponentIndex(r.kind.name()))?;
            Ok(per_component(c * r.smooth_count))
        }
    }
}

/// `E(K)` as a union of reduction fibres, one unit sheet of density `q^-1`
/// per non-singular point.
///
/// Good reduction chains the fibres along a path. Split multiplicative
/// reduction groups them into `m` components of `p - 1` fibres; chart `i`
/// covers component `i` and the first fibre of component `i + 1`, so the
/// nerve is an `m`-cycle like the special fibre.
pub fn build_manifold(r: &ReductionReport) -> Result<ManifoldModel> {
    let structure = PAdicStructure::new(r.p, 1, 1)?;
    match r.kind {
        ReductionType::Good => ManifoldModel::with_chain_atlas(structure, &vec![-1; r.smooth_count as usize]),
        ReductionType::MultSplit => {
            let m = r.m.ok_or(Error::MissingComponentIndex("split multiplicative"))? as usize;
            if m == 0 {
                return Err(Error::InvalidArgument("m must be at least 1".into()));
            }
            let per = (r.p - 1) as usize;
            let sheets: Vec<Sheet> = (0..m * per).map(|i| Sheet { id: i as SheetId, density_exp: -1 }).collect();
            let charts = (0..m)
                .map(|i| {
                    let mut ids: Vec<usize> = (i * per..(i + 1) * per).collect();
                    let bridge = ((i + 1) % m) * per;
                    if !ids.contains(&bridge) {
                        ids.push(bridge);
                    }
                    Chart { id: i as u32, regions: ids.into_iter().map(|s| Region::root(s as SheetId)).collect() }
                })
                .collect();
            ManifoldModel::new(structure, sheets, charts)
        }
        other => Err(Error::UnsupportedReduction(other.name())),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HearingReport {
    pub serre_residue: Residue,
    pub wavelet_residue: Residue,
    pub equal: bool,
}

/// Reads the Serre invariant of `E(K)` off a sample wavelet eigenvalue.
pub fn hear_curve(r: &ReductionReport) -> Result<HearingReport> {
    let model = build_manifold(r)?;
    let branching = model.structure().branching();
    let w = WaveletSpec::new(
        &model,
        model.sheets()[0].id,
        Ball::new(vec![0]),
        Profile::dipole(branching, 0, 1),
        Normalization::Raw,
    )?;
    let c = congruence_check(&model, &w)?;
    Ok(HearingReport { serre_residue: c.serre_residue, wavelet_residue: c.lambda_residue, equal: c.equal })
}

/// `|total - (p + 1)| <= 2 sqrt(p)`.
pub fn within_hasse_bound(total: u64, p: u64) -> bool {
    let diff = (total as i128 - (p as i128 + 1)).unsigned_abs();
    diff * diff <= 4 * p as u128
}

/// Machine-readable summary printed by the `elliptic` command.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CurveReport {
    pub p: u64,
    #[serde(rename = "type")]
    pub kind: ReductionType,
    pub m: Option<u32>,
    pub component_index: Option<u64>,
    pub smooth_count: u64,
    pub measure: String,
    pub serre_residue: u64,
}

impl CurveReport {
    pub fn new(r: &ReductionReport) -> Result<Self> {
        let measure = curve_measure(r)?;
        Ok(CurveReport {
            p: r.p,
            kind: r.kind,
            m: r.m,
            component_index: r.component_index,
            smooth_count: r.smooth_count,
            serre_residue: measure.reduce_mod(r.p).value,
            measure: measure.to_string(),
        })
    }
}

/// `y^2 = x^3 + a2 x^2 + p^m`: multiplicative at `p >= 5` with `v_p(Delta) = m`,
/// split iff `a2` is a nonzero square mod `p`.
pub fn nodal_curve(p: u64, m: u32, a2: i64) -> Option<WeierstrassCurve> {
    let a6 = (p as i64).checked_pow(m)?;
    Some(WeierstrassCurve::new(0, a2, 0, 0, a6))
}

/// `j` as a float, for display.
pub fn j_invariant_f64(q: &CurveQuantities) -> f64 {
    q.j_numerator.to_f64().unwrap_or(f64::NAN) / q.j_denominator.to_f64().unwrap_or(f64::NAN)
}
