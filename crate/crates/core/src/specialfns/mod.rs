//! Special functions used throughout the crate: complex Gamma, Bessel `J` of
//! complex order and the Gauss hypergeometric series.

mod bessel;
mod gamma;
mod hyp;

pub use bessel::bessel_j;
pub use gamma::{gamma, gamma_real, recip_gamma};
pub use hyp::hyp2f1;

use crate::error::{Error, Result};

/// Termination policy shared by every series in the crate.
///
/// A series stops once a term falls below `abs_tol + rel_tol * |partial sum|`
/// and fails with [`Error::NonConvergence`] if that does not happen within
/// `max_terms` terms.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SeriesControl {
    pub max_terms: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            max_terms: 2000,
            abs_tol: 1e-300,
            rel_tol: 1e-17,
        }
    }
}

impl SeriesControl {
    pub fn new(max_terms: usize, abs_tol: f64, rel_tol: f64) -> Result<Self> {
        let ctl = Self {
            max_terms,
            abs_tol,
            rel_tol,
        };
        ctl.validate()?;
        Ok(ctl)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_terms < 8 {
            return Err(Error::InvalidInput(format!(
                "series max_terms must be at least 8, got {}",
                self.max_terms
            )));
        }
        let in_unit = |t: f64| t > 0.0 && t < 1.0;
        if !in_unit(self.abs_tol) || !in_unit(self.rel_tol) {
            return Err(Error::InvalidInput("series tolerances must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub(crate) fn converged(&self, term: f64, sum: f64) -> bool {
        term <= self.abs_tol + self.rel_tol * sum
    }
}
