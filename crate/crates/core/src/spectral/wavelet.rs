use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::manifold::{ManifoldModel, Point, SheetId};
use crate::spectral::cells::{ExactCellFunction, NumericCellFunction};
use crate::symbolic::{Monomial, RationalSymbolic};
use crate::tree::{Ball, PAdicStructure};

/// Values of a wavelet on the `q^n` maximal subballs of its support.
#[derive(Clone, Debug, PartialEq)]
pub enum Profile {
    Rational(Vec<BigRational>),
    Complex(Vec<Complex64>),
}

impl Profile {
    pub fn integers(values: &[i64]) -> Self {
        Profile::Rational(values.iter().map(|&v| BigRational::from_integer(BigInt::from(v))).collect())
    }

    /// `+1` on child `plus`, `-1` on child `minus`, zero elsewhere.
    pub fn dipole(branching: u32, plus: u32, minus: u32) -> Self {
        let mut v = vec![0i64; branching as usize];
        v[plus as usize] += 1;
        v[minus as usize] -= 1;
        Self::integers(&v)
    }

    pub fn len(&self) -> usize {
        match self {
            Profile::Rational(v) => v.len(),
            Profile::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        match self {
            Profile::Rational(v) => v.iter().map(|r| Complex64::new(r.to_f64().unwrap_or(f64::NAN), 0.0)).collect(),
            Profile::Complex(v) => v.clone(),
        }
    }
}

/// Character profile `c -> exp(2 pi i j c / p)` for `f = 1`, `n = 1`.
pub fn kozyrev_profile(structure: &PAdicStructure, j: u64) -> Result<Vec<Complex64>> {
    if structure.f() != 1 || structure.n() != 1 {
        return Err(Error::InvalidWavelet(format!(
            "character profiles need f=1 and n=1 (got f={}, n={}); use a mean-zero profile",
            structure.f(),
            structure.n()
        )));
    }
    let p = structure.p();
    if j == 0 || j >= p {
        return Err(Error::InvalidWavelet(format!("j={j} outside [1, {}]", p - 1)));
    }
    Ok((0..p)
        .map(|c| {
            // Reduce j*c first so the angle stays in [0, 2pi).
            let k = (j * c) % p;
            Complex64::from_polar(1.0, 2.0 * PI * k as f64 / p as f64)
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Normalization {
    #[default]
    Raw,
    /// Scaled to unit norm in `L^2(mu)`.
    L2,
}

/// A mean-zero function on a ball, constant on each maximal subball.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletSpec {
    sheet: SheetId,
    support: Ball,
    profile: Profile,
    normalization: Normalization,
}

const COMPLEX_MEAN_TOL: f64 = 1e-12;

impl WaveletSpec {
    pub fn new(
        model: &ManifoldModel,
        sheet: SheetId,
        support: Ball,
        profile: Profile,
        normalization: Normalization,
    ) -> Result<Self> {
        if model.sheet(sheet).is_none() {
            return Err(Error::InvalidWavelet(format!("unknown sheet id {sheet}")));
        }
        let st = model.structure();
        st.check_ball(&support).map_err(Error::InvalidWavelet)?;
        if profile.len() != st.branching() as usize {
            return Err(Error::InvalidWavelet(format!(
                "profile has {} values, expected q^n = {}",
                profile.len(),
                st.branching()
            )));
        }
        // Children of a constant-density ball share one measure, so mean zero
        // is a plain zero sum.
        match &profile {
            Profile::Rational(v) => {
                if v.iter().all(Zero::is_zero) {
                    return Err(Error::InvalidWavelet("profile is identically zero".into()));
                }
                let sum: BigRational = v.iter().cloned().sum();
                if !sum.is_zero() {
                    return Err(Error::InvalidWavelet(format!("profile is not mean-zero (sum {sum})")));
                }
            }
            Profile::Complex(v) => {
                let scale: f64 = v.iter().map(|z| z.norm()).sum();
                if scale == 0.0 {
                    return Err(Error::InvalidWavelet("profile is identically zero".into()));
                }
                let sum: Complex64 = v.iter().sum();
                if sum.norm() > COMPLEX_MEAN_TOL * scale.max(1.0) {
                    return Err(Error::InvalidWavelet(format!("profile is not mean-zero (sum {sum})")));
                }
            }
        }
        Ok(WaveletSpec { sheet, support, profile, normalization })
    }

    pub fn sheet(&self) -> SheetId {
        self.sheet
    }

    pub fn support(&self) -> &Ball {
        &self.support
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn default_precision(&self) -> usize {
        self.support.level() + 1
    }

    fn check_precision(&self, precision: usize) -> Result<()> {
        if precision <= self.support.level() {
            return Err(Error::InvalidWavelet(format!(
                "precision {precision} must exceed support level {}",
                self.support.level()
            )));
        }
        Ok(())
    }

    /// Exact cell values; needs a rational profile without L2 scaling.
    pub fn to_exact(&self, model: &ManifoldModel, precision: usize) -> Result<ExactCellFunction> {
        self.check_precision(precision)?;
        let Profile::Rational(values) = &self.profile else {
            return Err(Error::InvalidWavelet("complex profiles have no exact cell values".into()));
        };
        if self.normalization == Normalization::L2 {
            return Err(Error::InvalidWavelet("L2 normalization involves mu(B)^(-1/2); use numeric mode".into()));
        }
        let level = self.support.level();
        let mut f = ExactCellFunction::new(precision);
        for cell in model.structure().descendants(&self.support, precision) {
            let v = RationalSymbolic::constant(values[cell.digits()[level] as usize].clone());
            f.insert(Point::new(self.sheet, cell), v)?;
        }
        Ok(f)
    }

    pub fn to_numeric(&self, model: &ManifoldModel, precision: usize) -> Result<NumericCellFunction> {
        self.check_precision(precision)?;
        let mut values = self.profile.to_complex();
        if self.normalization == Normalization::L2 {
            let st = model.structure();
            let e = model.density_exp(self.sheet).expect("validated sheet");
            let child_measure = (st.q() as f64).powi(st.measure_exponent(self.support.level() + 1, e) as i32);
            let norm2: f64 = values.iter().map(|z| z.norm_sqr()).sum::<f64>() * child_measure;
            let k = 1.0 / norm2.sqrt();
            values.iter_mut().for_each(|z| *z *= k);
        }
        let level = self.support.level();
        let mut f = NumericCellFunction::new(precision);
        for cell in model.structure().descendants(&self.support, precision) {
            let v = values[cell.digits()[level] as usize];
            f.insert(Point::new(self.sheet, cell), v)?;
        }
        Ok(f)
    }
}

/// Value of an integral: exact for rational profiles, floating otherwise.
#[derive(Clone, Debug, PartialEq)]
pub enum IntegralValue {
    Exact(RationalSymbolic),
    Numeric(Complex64),
}

impl IntegralValue {
    pub fn is_zero_within(&self, tol: f64) -> bool {
        match self {
            IntegralValue::Exact(v) => v.is_zero(),
            IntegralValue::Numeric(z) => z.norm() < tol,
        }
    }
}

/// `sum_c profile[c] * mu(child c)` over the maximal subballs of the support.
pub fn wavelet_integral(model: &ManifoldModel, w: &WaveletSpec) -> IntegralValue {
    let st = model.structure();
    let e = model.density_exp(w.sheet).expect("validated sheet");
    let child = st.measure_exponent(w.support.level() + 1, e);
    match (&w.profile, w.normalization) {
        (Profile::Rational(v), Normalization::Raw) => {
            let sum: BigRational = v.iter().cloned().sum();
            IntegralValue::Exact(RationalSymbolic::term(sum, Monomial::q(child)))
        }
        _ => {
            let measure = (st.q() as f64).powi(child as i32);
            let f = w.to_numeric(model, w.default_precision()).expect("precision is valid");
            IntegralValue::Numeric(f.iter().map(|(_, v)| v * measure).sum())
        }
    }
}
