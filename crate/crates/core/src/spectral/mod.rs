//! Wavelets, the nonlocal operator and its wavelet spectrum.

pub mod cells;
pub mod eigen;
pub mod operator;
pub mod wavelet;

pub use cells::{AnyCellFunction, CellFunction, CellValue, ExactCellFunction, NumericCellFunction};
pub use eigen::{
    congruence_check, spectrum_table, spectrum_table_expanded, spectrum_table_with, support_eigenvalue,
    wavelet_eigenvalue, CongruenceReport, Eigenvalue, SpectrumRow,
};
pub use operator::{
    apply_exact, apply_exact_with, apply_numeric, apply_numeric_with, apply_operator, apply_operator_with,
    rayleigh_quotient, KernelChoice, KernelVariant, SParam,
};
pub use wavelet::{kozyrev_profile, wavelet_integral, IntegralValue, Normalization, Profile, WaveletSpec};
