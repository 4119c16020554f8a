//! Quantum reflection of cold atoms on attractive Casimir-Polder type
//! potentials.
//!
//! Three independent routes to the reflection amplitude are provided:
//!
//! * direct integration of `Ψ'' + F Ψ = 0` (or of the coupled WKB amplitude
//!   equations) matched to WKB waves at both ends ([`scattering`]);
//! * integration after a Liouville change of coordinates, in particular the
//!   phase gauge `z̃ = φ_dB(z)/ϰ` which turns the attractive well into a
//!   repulsive wall ([`liouville`]);
//! * the exact solution of the `-C4/z^4` model through the modified Mathieu
//!   equation ([`mathieu`]).
//!
//! All internal quantities are in reduced units where `ħ²/2m = 1`, so that
//! `F(z) = E - U(z)` with `E = κ²`. The [`units`] module converts from SI and
//! atomic units.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod liouville;
pub mod mathieu;
pub mod ode;
pub mod potentials;
pub mod quad;
pub mod scattering;
pub mod specialfns;
pub mod units;
pub mod wkb;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use potentials::{HomogeneousPotential, PhysicalScales, PotentialModel, TabulatedPotential};
pub use scattering::{ScatteringLength, ScatteringResult, SolverControl};
pub use wkb::WkbField;
