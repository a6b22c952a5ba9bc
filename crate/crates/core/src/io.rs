//! JSON and CSV formats for models, cell functions, spectra and curve reports.

use std::fs;
use std::path::Path;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{Chart, ChartId, ManifoldModel, Point, Region, Sheet, SheetId};
use crate::spectral::{AnyCellFunction, ExactCellFunction, NumericCellFunction, SpectrumRow};
use crate::symbolic::{Monomial, RationalSymbolic};
use crate::tree::{Ball, PAdicStructure};

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

/// Deserializes with the failing field path and line/column in the error.
fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            Error::Parse(inner.to_string())
        } else {
            Error::Parse(format!("{path}: {inner}"))
        }
    })
}

/// Rounds to 12 significant digits; `-0` becomes `0`.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    let r: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

// ---------------------------------------------------------------- manifolds

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifoldFile {
    p: u64,
    f: u32,
    n: u32,
    sheets: Vec<SheetEntry>,
    charts: Vec<ChartEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SheetEntry {
    id: SheetId,
    density_exp: i64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChartEntry {
    id: ChartId,
    regions: Vec<RegionEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionEntry {
    sheet: SheetId,
    ball: Ball,
}

pub fn parse_manifold(text: &str) -> Result<ManifoldModel> {
    let file: ManifoldFile = parse_json(text)?;
    let structure = PAdicStructure::new(file.p, file.f, file.n)?;
    let sheets = file.sheets.into_iter().map(|s| Sheet { id: s.id, density_exp: s.density_exp }).collect();
    let charts = file
        .charts
        .into_iter()
        .map(|c| Chart { id: c.id, regions: c.regions.into_iter().map(|r| Region::new(r.sheet, r.ball)).collect() })
        .collect();
    ManifoldModel::new(structure, sheets, charts)
}

pub fn read_manifold(path: &Path) -> Result<ManifoldModel> {
    parse_manifold(&read_file(path)?)
}

pub fn manifold_to_json(model: &ManifoldModel) -> String {
    let st = model.structure();
    let file = ManifoldFile {
        p: st.p(),
        f: st.f(),
        n: st.n(),
        sheets: model.sheets().iter().map(|s| SheetEntry { id: s.id, density_exp: s.density_exp }).collect(),
        charts: model
            .charts()
            .iter()
            .map(|c| ChartEntry {
                id: c.id,
                regions: c.regions.iter().map(|r| RegionEntry { sheet: r.sheet, ball: r.ball.clone() }).collect(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("manifold serializes");
    s.push('\n');
    s
}

// ----------------------------------------------------------- cell functions

/// An integer that is a JSON number when it fits `i64`, else a decimal string.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum BigNumber {
    Small(i64),
    Text(String),
}

impl BigNumber {
    fn from_bigint(v: &BigInt) -> Self {
        v.to_i64().map_or_else(|| BigNumber::Text(v.to_string()), BigNumber::Small)
    }

    fn to_bigint(&self) -> std::result::Result<BigInt, String> {
        match self {
            BigNumber::Small(v) => Ok(BigInt::from(*v)),
            BigNumber::Text(s) => s.trim().parse().map_err(|_| format!("not an integer: {s:?}")),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermEntry {
    q: i64,
    t: i64,
    num: BigNumber,
    den: BigNumber,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ValueEntry {
    sheet: SheetId,
    cell: Ball,
    #[serde(skip_serializing_if = "Option::is_none")]
    re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    im: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    terms: Option<Vec<TermEntry>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellFunctionFile {
    precision: usize,
    values: Vec<ValueEntry>,
}

fn bad_value(i: usize, reason: impl Into<String>) -> Error {
    Error::InvalidCellFunction { path: format!("values[{i}]"), reason: reason.into() }
}

/// Entries with `terms` are exact, entries with `re`/`im` numeric; mixing is
/// rejected. An empty value list reads as the exact zero function.
pub fn parse_cell_function(text: &str) -> Result<AnyCellFunction> {
    let file: CellFunctionFile = parse_json(text)?;
    let exact = file.values.first().is_none_or(|v| v.terms.is_some());
    if exact {
        let mut f = ExactCellFunction::new(file.precision);
        for (i, entry) in file.values.into_iter().enumerate() {
            if entry.re.is_some() || entry.im.is_some() {
                return Err(bad_value(i, "re/im given in an exact function"));
            }
            let terms = entry.terms.ok_or_else(|| bad_value(i, "missing terms"))?;
            let mut value = RationalSymbolic::zero();
            for (j, term) in terms.iter().enumerate() {
                let at = |r: String| bad_value(i, format!("terms[{j}]: {r}"));
                let num = term.num.to_bigint().map_err(at)?;
                let den = term.den.to_bigint().map_err(at)?;
                if den == BigInt::from(0) {
                    return Err(at("zero denominator".into()));
                }
                value += &RationalSymbolic::term(BigRational::new(num, den), Monomial::new(term.q, term.t));
            }
            f.insert(Point::new(entry.sheet, entry.cell), value)
                .map_err(|_| bad_value(i, "cell level differs from precision"))?;
        }
        Ok(AnyCellFunction::Exact(f))
    } else {
        let mut f = NumericCellFunction::new(file.precision);
        for (i, entry) in file.values.into_iter().enumerate() {
            if entry.terms.is_some() {
                return Err(bad_value(i, "terms given in a numeric function"));
            }
            let re = entry.re.ok_or_else(|| bad_value(i, "missing re"))?;
            let z = Complex64::new(re, entry.im.unwrap_or(0.0));
            f.insert(Point::new(entry.sheet, entry.cell), z)
                .map_err(|_| bad_value(i, "cell level differs from precision"))?;
        }
        Ok(AnyCellFunction::Numeric(f))
    }
}

pub fn read_cell_function(path: &Path) -> Result<AnyCellFunction> {
    parse_cell_function(&read_file(path)?)
}

/// Cells in sheet-then-digit order; numeric values rounded by [`round12`].
pub fn cell_function_to_json(f: &AnyCellFunction) -> String {
    let (precision, values) = match f {
        AnyCellFunction::Exact(f) => (
            f.precision(),
            f.iter()
                .map(|(p, v)| ValueEntry {
                    sheet: p.sheet,
                    cell: p.cell.clone(),
                    re: None,
                    im: None,
                    terms: Some(
                        v.terms()
                            .map(|(m, c)| TermEntry {
                                q: m.q,
                                t: m.t,
                                num: BigNumber::from_bigint(c.numer()),
                                den: BigNumber::from_bigint(c.denom()),
                            })
                            .collect(),
                    ),
                })
                .collect(),
        ),
        AnyCellFunction::Numeric(f) => (
            f.precision(),
            f.iter()
                .map(|(p, v)| ValueEntry {
                    sheet: p.sheet,
                    cell: p.cell.clone(),
                    re: Some(round12(v.re)),
                    im: Some(round12(v.im)),
                    terms: None,
                })
                .collect(),
        ),
    };
    let mut s =
        serde_json::to_string_pretty(&CellFunctionFile { precision, values }).expect("cell function serializes");
    s.push('\n');
    s
}

// ----------------------------------------------------------------- spectra

pub const SPECTRUM_HEADER: [&str; 5] = ["sheet", "ball", "lambda_symbolic", "lambda_at_s", "residue"];

fn lambda_at_s_text(v: Option<f64>) -> String {
    v.map(|x| round12(x).to_string()).unwrap_or_default()
}

pub fn spectrum_to_csv(rows: &[SpectrumRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(SPECTRUM_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.sheet.to_string(),
            r.ball.to_string(),
            r.lambda.to_string(),
            lambda_at_s_text(r.lambda_at_s),
            r.residue.value.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Serialize)]
struct SpectrumEntry<'a> {
    sheet: SheetId,
    ball: &'a Ball,
    level: usize,
    multiplicity: u128,
    lambda_symbolic: String,
    lambda_at_s: Option<f64>,
    residue: u64,
    modulus: u64,
}

pub fn spectrum_to_json(rows: &[SpectrumRow]) -> String {
    let entries: Vec<SpectrumEntry> = rows
        .iter()
        .map(|r| SpectrumEntry {
            sheet: r.sheet,
            ball: &r.ball,
            level: r.ball.level(),
            multiplicity: r.multiplicity,
            lambda_symbolic: r.lambda.to_string(),
            lambda_at_s: r.lambda_at_s.map(round12),
            residue: r.residue.value,
            modulus: r.residue.modulus,
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&entries).expect("spectrum serializes");
    s.push('\n');
    s
}
