//! Discrete application of the nonlocal operator
//! `(Du)(x) = sum_y k(x, y) (u(x) - u(y)) mu(y)`.
//!
//! The kernel only sees join levels (same sheet) or chart paths (different
//! sheets), so both `u` and `Du` are constant on every ball of the partition
//! built by [`partition`]. Summing over those balls is exact.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::manifold::{ManifoldModel, Point, Region};
use crate::par::Execution;
use crate::spectral::cells::{expand, partition, AnyCellFunction, ExactCellFunction, NumericCellFunction, Piece};
use crate::symbolic::{Monomial, RationalSymbolic};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelVariant {
    /// `mu(x ^ y)^-s` when the join exists, `1` across sheets.
    K0,
    /// `d_g(x, y)^-s`; numeric only.
    Geodetic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SParam {
    /// Keep `T = q^s` formal.
    Symbolic,
    Real(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelChoice {
    pub variant: KernelVariant,
    pub s: SParam,
}

impl KernelChoice {
    pub fn k0_symbolic() -> Self {
        KernelChoice { variant: KernelVariant::K0, s: SParam::Symbolic }
    }

    pub fn k0(s: f64) -> Self {
        KernelChoice { variant: KernelVariant::K0, s: SParam::Real(s) }
    }

    pub fn geodetic(s: f64) -> Self {
        KernelChoice { variant: KernelVariant::Geodetic, s: SParam::Real(s) }
    }
}

/// `k0(A, C) * mu(C)` as a monomial in `Q`, `T`.
fn k0_weight<V>(model: &ManifoldModel, a: &Piece<V>, c: &Piece<V>) -> Monomial {
    let st = model.structure();
    let measure = Monomial::q(st.measure_exponent(c.ball.level(), c.density_exp));
    if a.sheet == c.sheet {
        let join = st.measure_exponent(a.ball.join_level(&c.ball), a.density_exp);
        measure * Monomial::new(0, -join)
    } else {
        measure
    }
}

/// Applies `D0^s` with formal `s` to an exact function.
///
/// Output values are in the canonical form of [`RationalSymbolic::specialize_q`]:
/// `Q` is replaced by `q`, so only powers of `T` remain.
pub fn apply_exact(model: &ManifoldModel, u: &ExactCellFunction) -> Result<ExactCellFunction> {
    apply_exact_with(model, u, Execution::default())
}

pub fn apply_exact_with(model: &ManifoldModel, u: &ExactCellFunction, exec: Execution) -> Result<ExactCellFunction> {
    u.validate(model)?;
    let pieces = partition(model, u, &[]);
    let nonzero: Vec<usize> = (0..pieces.len()).filter(|&i| !pieces[i].value.is_zero()).collect();
    let q = model.structure().q();
    let values = exec.map_range(pieces.len(), |i| {
        let a = &pieces[i];
        let mut out = RationalSymbolic::zero();
        if !a.value.is_zero() {
            // u(A) * sum_C w(A, C), with the weight sum kept as integer counts.
            let mut counts: HashMap<Monomial, i64> = HashMap::new();
            for (j, c) in pieces.iter().enumerate() {
                if j != i {
                    *counts.entry(k0_weight(model, a, c)).or_default() += 1;
                }
            }
            for (m, k) in counts {
                out.add_scaled(&a.value, &BigRational::from_integer(BigInt::from(k)), m);
            }
        }
        let minus_one = BigRational::from_integer(BigInt::from(-1));
        for &j in &nonzero {
            if j != i {
                let c = &pieces[j];
                out.add_scaled(&c.value, &minus_one, k0_weight(model, a, c));
            }
        }
        out.specialize_q(q)
    });
    expand(model, &pieces, values, u.precision())
}

/// Applies the operator numerically for real `s`.
pub fn apply_numeric(
    model: &ManifoldModel,
    variant: KernelVariant,
    s: f64,
    u: &NumericCellFunction,
) -> Result<NumericCellFunction> {
    apply_numeric_with(model, variant, s, u, Execution::default())
}

pub fn apply_numeric_with(
    model: &ManifoldModel,
    variant: KernelVariant,
    s: f64,
    u: &NumericCellFunction,
    exec: Execution,
) -> Result<NumericCellFunction> {
    u.validate(model)?;
    let markers: Vec<Region> = match variant {
        KernelVariant::K0 => Vec::new(),
        KernelVariant::Geodetic => {
            let deepest = model.charts().iter().flat_map(|c| &c.regions).map(|r| r.ball.level()).max().unwrap_or(0);
            if deepest > u.precision() {
                return Err(Error::KernelMode(format!(
                    "geodetic kernel needs precision >= {deepest} (deepest chart region), got {}",
                    u.precision()
                )));
            }
            model.charts().iter().flat_map(|c| c.regions.iter().cloned()).collect()
        }
    };
    let pieces = partition(model, u, &markers);
    let q = model.structure().q() as f64;
    let cross = match variant {
        KernelVariant::K0 => None,
        KernelVariant::Geodetic => Some(CrossSheetDistances::new(model, &pieces)?),
    };
    let weight = |a: &Piece<Complex64>, ai: usize, c: &Piece<Complex64>, ci: usize| -> f64 {
        if a.sheet != c.sheet {
            if let Some(cross) = &cross {
                let d = cross.get(ai, ci);
                let measure = q.powi(model.structure().measure_exponent(c.ball.level(), c.density_exp) as i32);
                return d.powf(-s) * measure;
            }
        }
        let m = k0_weight(model, a, c);
        q.powf(m.q as f64 + s * m.t as f64)
    };
    let values = exec.map_range(pieces.len(), |i| {
        let a = &pieces[i];
        let mut acc = Complex64::new(0.0, 0.0);
        let mut magnitude = 0.0;
        for (j, c) in pieces.iter().enumerate() {
            if j != i && a.value != c.value {
                let term = (a.value - c.value) * weight(a, i, c, j);
                magnitude += term.norm();
                acc += term;
            }
        }
        // Unlisted pieces carry cancellations that are exact in the ring;
        // flush the round-off so they are not expanded into cells.
        if !a.listed && acc.norm() <= pieces.len() as f64 * f64::EPSILON * magnitude {
            acc = Complex64::new(0.0, 0.0);
        }
        acc
    });
    expand(model, &pieces, values, u.precision())
}

/// Geodetic distances between pieces on different sheets, cached per chart set.
struct CrossSheetDistances {
    class_of: Vec<usize>,
    table: Vec<Vec<f64>>,
}

impl CrossSheetDistances {
    fn new(model: &ManifoldModel, pieces: &[Piece<Complex64>]) -> Result<Self> {
        let mut classes: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        let mut class_of = Vec::with_capacity(pieces.len());
        for piece in pieces {
            let point = Point::new(piece.sheet, piece.ball.clone());
            let charts = model.charts_containing(&point);
            if charts.is_empty() {
                return Err(Error::PointNotCovered(point.to_string()));
            }
            let next = classes.len();
            let id = *classes.entry(charts.clone()).or_insert_with(|| {
                members.push(charts);
                next
            });
            class_of.push(id);
        }
        let q = model.structure().q();
        let table = members
            .iter()
            .map(|a| members.iter().map(|b| model.min_path_measure(a, b).evaluate_numeric(q, 0.0)).collect())
            .collect();
        Ok(CrossSheetDistances { class_of, table })
    }

    fn get(&self, a: usize, b: usize) -> f64 {
        self.table[self.class_of[a]][self.class_of[b]]
    }
}

/// Dispatches on kernel, `s` mode and value mode.
pub fn apply_operator(model: &ManifoldModel, kernel: KernelChoice, u: &AnyCellFunction) -> Result<AnyCellFunction> {
    apply_operator_with(model, kernel, u, Execution::default())
}

pub fn apply_operator_with(
    model: &ManifoldModel,
    kernel: KernelChoice,
    u: &AnyCellFunction,
    exec: Execution,
) -> Result<AnyCellFunction> {
    match (kernel.variant, kernel.s, u) {
        (KernelVariant::Geodetic, SParam::Symbolic, _) => {
            Err(Error::KernelMode("the geodetic kernel needs a numeric s".into()))
        }
        (KernelVariant::K0, SParam::Symbolic, AnyCellFunction::Exact(f)) => {
            apply_exact_with(model, f, exec).map(AnyCellFunction::Exact)
        }
        (_, SParam::Symbolic, AnyCellFunction::Numeric(_)) => {
            Err(Error::KernelMode("symbolic s needs an exact input function".into()))
        }
        (variant, SParam::Real(s), AnyCellFunction::Exact(f)) => {
            let q = model.structure().q();
            let numeric = f.map(|v| Complex64::new(v.evaluate_numeric(q, s), 0.0));
            apply_numeric_with(model, variant, s, &numeric, exec).map(AnyCellFunction::Numeric)
        }
        (variant, SParam::Real(s), AnyCellFunction::Numeric(f)) => {
            apply_numeric_with(model, variant, s, f, exec).map(AnyCellFunction::Numeric)
        }
    }
}

/// `<Du, u> / <u, u>` in `L^2(mu)` for a numeric function.
pub fn rayleigh_quotient(model: &ManifoldModel, u: &NumericCellFunction, du: &NumericCellFunction) -> Complex64 {
    let st = model.structure();
    let q = st.q() as f64;
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for (point, v) in u.iter() {
        let e = model.density_exp(point.sheet).expect("validated point");
        let mu = q.powi(st.measure_exponent(point.cell.level(), e) as i32);
        num += du.get(point) * v.conj() * mu;
        den += v.norm_sqr() * mu;
    }
    num / den
}
