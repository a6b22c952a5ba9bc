//! Command-line front end. [`run`] does the work; `main` only maps the
//! returned [`CliError`] to an exit code.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::elliptic::{build_manifold, classify_reduction, CurveReport, WeierstrassCurve};
use crate::error::Error;
use crate::io;
use crate::spectral::{apply_operator, spectrum_table, KernelChoice, KernelVariant, SParam};

#[derive(Debug, Parser)]
#[command(name = "serre-spectrum", version, about = "Wavelet spectra and Serre invariants of compact p-adic manifolds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Manifold model commands.
    Manifold {
        #[command(subcommand)]
        command: ManifoldCommand,
    },
    /// Wavelet eigenvalues by sheet and support level.
    Spectrum {
        file: PathBuf,
        #[arg(long)]
        max_level: usize,
        /// `NUM/DEN`, an integer, or `symbolic`.
        #[arg(long, default_value = "symbolic", allow_hyphen_values = true)]
        s: SValue,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Reduction type, measure and Serre residue of a Weierstrass curve.
    #[command(allow_negative_numbers = true)]
    Elliptic {
        a1: i64,
        a2: i64,
        a3: i64,
        a4: i64,
        a6: i64,
        #[arg(short)]
        p: u64,
        #[arg(long)]
        component_index: Option<u64>,
        #[arg(long)]
        emit_manifold: Option<PathBuf>,
    },
    /// Operator commands.
    Operator {
        #[command(subcommand)]
        command: OperatorCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum ManifoldCommand {
    Info { file: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum OperatorCommand {
    /// Applies the operator to a cell function.
    Apply {
        model: PathBuf,
        function: PathBuf,
        #[arg(long, value_enum)]
        kernel: Kernel,
        #[arg(long, default_value = "symbolic", allow_hyphen_values = true)]
        s: SValue,
        #[arg(long)]
        precision: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kernel {
    K0,
    Geodetic,
}

/// The `--s` argument: an exact rational or the formal symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SValue {
    Symbolic,
    Rational { num: i64, den: i64 },
}

impl SValue {
    pub fn to_param(self) -> SParam {
        match self {
            SValue::Symbolic => SParam::Symbolic,
            SValue::Rational { num, den } => SParam::Real(num as f64 / den as f64),
        }
    }

    fn as_f64(self) -> Option<f64> {
        match self.to_param() {
            SParam::Symbolic => None,
            SParam::Real(s) => Some(s),
        }
    }
}

impl std::str::FromStr for SValue {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("symbolic") {
            return Ok(SValue::Symbolic);
        }
        let (num, den) = s.split_once('/').unwrap_or((s, "1"));
        let num: i64 = num.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
        let den: i64 = den.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
        if den == 0 {
            return Err("s denominator must be nonzero".into());
        }
        Ok(SValue::Rational { num, den })
    }
}

/// Failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_CONGRUENCE: i32 = 3;
pub const EXIT_UNSUPPORTED: i32 = 4;
pub const EXIT_MISSING_INDEX: i32 = 5;
pub const EXIT_KERNEL_MODE: i32 = 6;

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { .. } | Error::Parse(_) | Error::Json(_) => EXIT_IO,
            Error::UnsupportedClassification { .. } => EXIT_UNSUPPORTED,
            Error::MissingComponentIndex(_) => EXIT_MISSING_INDEX,
            Error::KernelMode(_) => EXIT_KERNEL_MODE,
            _ => EXIT_INVALID,
        };
        CliError { code, message: e.to_string() }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError { code: EXIT_IO, message: format!("{}: {e}", path.display()) }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|e| CliError { code: EXIT_IO, message: format!("stdout: {e}") })
}

/// Parses `args` (program name first) and runs the command, writing
/// reports to `out`. Help and version text also go to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => return emit(out, &e.to_string()),
        Err(e) => return Err(CliError { code: EXIT_INVALID, message: e.to_string() }),
    };
    execute(cli.command, out)
}

pub fn execute(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Manifold { command: ManifoldCommand::Info { file } } => manifold_info(&file, out),
        Command::Spectrum { file, max_level, s, format, output } => {
            spectrum(&file, max_level, s, format, output.as_deref(), out)
        }
        Command::Elliptic { a1, a2, a3, a4, a6, p, component_index, emit_manifold } => {
            let curve = WeierstrassCurve::new(a1, a2, a3, a4, a6);
            elliptic(curve, p, component_index, emit_manifold.as_deref(), out)
        }
        Command::Operator { command: OperatorCommand::Apply { model, function, kernel, s, precision, output } } => {
            operator_apply(&model, &function, kernel, s, precision, &output)
        }
    }
}

fn manifold_info(file: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let model = io::read_manifold(file)?;
    let st = model.structure();
    let nerve = model.nerve_complex();
    let line = format!(
        "q={}, n={}, sheets={}, charts={}, measure={}, i(X)={}, connected={}, nerve_dim={}\n",
        st.q(),
        st.n(),
        model.sheets().len(),
        model.charts().len(),
        model.total_measure(),
        model.serre_invariant().value,
        model.is_connected(),
        nerve.dimension(),
    );
    emit(out, &line)
}

fn spectrum(
    file: &Path,
    max_level: usize,
    s: SValue,
    format: Format,
    output: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let model = io::read_manifold(file)?;
    let rows = spectrum_table(&model, max_level, s.as_f64())?;
    let text = match format {
        Format::Csv => io::spectrum_to_csv(&rows)?,
        Format::Json => io::spectrum_to_json(&rows),
    };
    match output {
        Some(path) => std::fs::write(path, &text).map_err(|e| io_error(path, e))?,
        None => emit(out, &text)?,
    }
    let serre = model.serre_invariant();
    if let Some(bad) = rows.iter().find(|r| r.residue != serre) {
        return Err(CliError {
            code: EXIT_CONGRUENCE,
            message: format!(
                "congruence violated on sheet {} level {}: lambda = {}, i(X) = {}",
                bad.sheet,
                bad.ball.level(),
                bad.residue,
                serre
            ),
        });
    }
    Ok(())
}

fn elliptic(
    curve: WeierstrassCurve,
    p: u64,
    component_index: Option<u64>,
    emit_manifold: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let reduction = classify_reduction(&curve, p, component_index)?;
    let report = CurveReport::new(&reduction)?;
    if let Some(path) = emit_manifold {
        let model = build_manifold(&reduction)?;
        std::fs::write(path, io::manifold_to_json(&model)).map_err(|e| io_error(path, e))?;
    }
    let mut line = serde_json::to_string(&report).map_err(Error::from)?;
    line.push('\n');
    emit(out, &line)
}

fn operator_apply(
    model: &Path,
    function: &Path,
    kernel: Kernel,
    s: SValue,
    precision: usize,
    output: &Path,
) -> Result<(), CliError> {
    let model = io::read_manifold(model)?;
    let u = io::read_cell_function(function)?;
    if u.precision() != precision {
        return Err(CliError {
            code: EXIT_INVALID,
            message: format!("function precision {} differs from --precision {precision}", u.precision()),
        });
    }
    match &u {
        crate::spectral::AnyCellFunction::Exact(f) => f.validate(&model)?,
        crate::spectral::AnyCellFunction::Numeric(f) => f.validate(&model)?,
    }
    let variant = match kernel {
        Kernel::K0 => KernelVariant::K0,
        Kernel::Geodetic => KernelVariant::Geodetic,
    };
    let du = apply_operator(&model, KernelChoice { variant, s: s.to_param() }, &u)?;
    std::fs::write(output, io::cell_function_to_json(&du)).map_err(|e| io_error(output, e))
}
