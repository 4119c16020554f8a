use super::SeriesControl;
use crate::error::{Error, Result};

/// Gauss hypergeometric function `₂F₁(a, b; c; x)` by its power series,
/// valid for `|x| < 1`.
pub fn hyp2f1(a: f64, b: f64, c: f64, x: f64, ctl: &SeriesControl) -> Result<f64> {
    if c <= 0.0 && c == c.round() {
        return Err(Error::Pole {
            what: "hyp2f1 parameter c",
            value: c,
        });
    }
    if !(x.abs() < 1.0) {
        return Err(Error::Domain {
            what: "hyp2f1 argument",
            value: x,
        });
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..ctl.max_terms {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * x;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        // Only stop once the ratio of successive terms is below one.
        let ratio = ((a + kf + 1.0) * (b + kf + 1.0) / ((c + kf + 1.0) * (kf + 2.0)) * x).abs();
        if ratio < 1.0 && ctl.converged(term.abs() / (1.0 - ratio), sum.abs()) {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence {
        what: "hyp2f1 series",
        iterations: ctl.max_terms,
    })
}
