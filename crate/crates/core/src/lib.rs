//! Wavelet spectra of ultrametric integral operators on compact p-adic
//! manifolds, Serre invariants, and the elliptic-curve models built from them.
//!
//! Measures and eigenvalues are Laurent polynomials in `Q = q` and `T = q^s`
//! ([`symbolic::SymbolicValue`]); reducing them modulo `q - 1` recovers the
//! Serre invariant of the manifold.

pub mod cli;
pub mod elliptic;
pub mod error;
pub mod io;
pub mod manifold;
pub mod par;
pub mod spectral;
pub mod symbolic;
pub mod tree;

pub use error::{Error, Result};
pub use manifold::{Chart, ManifoldModel, Point, Region, Sheet};
pub use par::Execution;
pub use symbolic::{Monomial, RationalSymbolic, Residue, SymbolicValue};
pub use tree::{Ball, PAdicStructure};
