//! Closed-form wavelet eigenvalues and the congruence with the Serre invariant.

use std::fmt;

use crate::error::{Error, Result};
use crate::manifold::{ManifoldModel, SheetId};
use crate::par::Execution;
use crate::spectral::wavelet::WaveletSpec;
use crate::symbolic::{Residue, SymbolicValue};
use crate::tree::Ball;

/// An eigenvalue split into its three contributions: the mass outside the
/// support's sheet, the annulus between the sheet root and the support, and
/// the support ball itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Eigenvalue {
    pub outside: SymbolicValue,
    pub annulus: SymbolicValue,
    pub ball: SymbolicValue,
}

impl Eigenvalue {
    pub fn total(&self) -> SymbolicValue {
        &(&self.outside + &self.annulus) + &self.ball
    }

    pub fn evaluate(&self, q: u64, s: f64) -> f64 {
        self.total().evaluate_numeric(q, s)
    }
}

impl fmt::Display for Eigenvalue {
    /// Nonzero parts joined by `+`, multi-term parts in parentheses:
    /// `(1-Q^-1)+Q^-1*T^1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&SymbolicValue> =
            [&self.outside, &self.annulus, &self.ball].into_iter().filter(|p| !p.is_zero()).collect();
        if parts.is_empty() {
            return f.write_str("0");
        }
        for (i, part) in parts.into_iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            if part.len() > 1 {
                write!(f, "({part})")?;
            } else {
                write!(f, "{part}")?;
            }
        }
        Ok(())
    }
}

/// Eigenvalue of every wavelet supported on `ball` of `sheet`.
pub fn support_eigenvalue(model: &ManifoldModel, sheet: SheetId, ball: &Ball) -> Result<Eigenvalue> {
    let e = model.density_exp(sheet).ok_or_else(|| Error::InvalidWavelet(format!("unknown sheet id {sheet}")))?;
    let st = model.structure();
    st.check_ball(ball).map_err(Error::InvalidWavelet)?;
    let sheet_measure = SymbolicValue::q_pow(e);
    let outside = &model.total_measure() - &sheet_measure;
    let annulus = if ball.is_root() {
        SymbolicValue::zero()
    } else {
        st.sphere_decomposition(&Ball::root(), ball, e)?.iter().map(|shell| shell.kernel_weighted()).sum()
    };
    let ball = st.ball_measure(ball, e).power_one_minus_s()?;
    Ok(Eigenvalue { outside, annulus, ball })
}

pub fn wavelet_eigenvalue(model: &ManifoldModel, w: &WaveletSpec) -> Result<Eigenvalue> {
    support_eigenvalue(model, w.sheet(), w.support())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CongruenceReport {
    pub lambda_residue: Residue,
    pub serre_residue: Residue,
    pub equal: bool,
}

pub fn congruence_check(model: &ManifoldModel, w: &WaveletSpec) -> Result<CongruenceReport> {
    let lambda = wavelet_eigenvalue(model, w)?;
    Ok(congruence_of(model, &lambda))
}

fn congruence_of(model: &ManifoldModel, lambda: &Eigenvalue) -> CongruenceReport {
    let lambda_residue = lambda.total().reduce_mod(model.structure().q());
    let serre_residue = model.serre_invariant();
    CongruenceReport { lambda_residue, serre_residue, equal: lambda_residue == serre_residue }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumRow {
    pub sheet: SheetId,
    /// First support ball (in digit order) of this level.
    pub ball: Ball,
    /// Number of supports sharing this eigenvalue: `q^(n * level)`.
    pub multiplicity: u128,
    pub lambda: Eigenvalue,
    pub lambda_at_s: Option<f64>,
    pub residue: Residue,
}

/// Wavelet spectrum by support, up to `max_level`.
///
/// The eigenvalue depends only on the sheet and the support level, so the
/// supports of one level are collapsed into one row represented by the
/// all-zero digit path.
pub fn spectrum_table(model: &ManifoldModel, max_level: usize, s: Option<f64>) -> Result<Vec<SpectrumRow>> {
    spectrum_table_with(model, max_level, s, Execution::default())
}

pub fn spectrum_table_with(
    model: &ManifoldModel,
    max_level: usize,
    s: Option<f64>,
    exec: Execution,
) -> Result<Vec<SpectrumRow>> {
    if max_level < 1 {
        return Err(Error::InvalidArgument("max_level must be at least 1".into()));
    }
    let mut jobs: Vec<(SheetId, usize)> = Vec::new();
    let mut sheets: Vec<SheetId> = model.sheets().iter().map(|s| s.id).collect();
    sheets.sort_unstable();
    for &sheet in &sheets {
        jobs.extend((0..=max_level).map(|level| (sheet, level)));
    }
    let branching = model.structure().branching() as u128;
    let q = model.structure().q();
    exec.map_slice(&jobs, |&(sheet, level)| {
        let ball = Ball::new(vec![0; level]);
        let lambda = support_eigenvalue(model, sheet, &ball)?;
        let report = congruence_of(model, &lambda);
        Ok(SpectrumRow {
            sheet,
            ball,
            multiplicity: branching.saturating_pow(level as u32),
            lambda_at_s: s.map(|s| lambda.evaluate(q, s)),
            lambda,
            residue: report.lambda_residue,
        })
    })
    .into_iter()
    .collect()
}

/// One row per support ball (no collapsing). Sizes grow as `q^(n * level)`.
pub fn spectrum_table_expanded(model: &ManifoldModel, max_level: usize) -> Result<Vec<(SheetId, Ball, Eigenvalue)>> {
    let st = model.structure();
    let mut rows = Vec::new();
    let mut sheets: Vec<SheetId> = model.sheets().iter().map(|s| s.id).collect();
    sheets.sort_unstable();
    for sheet in sheets {
        for level in 0..=max_level {
            for ball in st.descendants(&Ball::root(), level) {
                let lambda = support_eigenvalue(model, sheet, &ball)?;
                rows.push((sheet, ball, lambda));
            }
        }
    }
    Ok(rows)
}
