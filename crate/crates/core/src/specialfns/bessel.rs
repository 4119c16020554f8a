use num_complex::Complex64;
use std::f64::consts::PI;

use super::gamma::gamma;
use super::SeriesControl;
use crate::error::{Error, Result};

/// Crossover between the ascending series and the Hankel expansion.
pub(crate) const ASYMPTOTIC_CROSSOVER: f64 = 12.0;

/// A value together with a rough estimate of its rounding/truncation error.
struct Estimate {
    value: Complex64,
    error: f64,
}

/// Bessel function of the first kind `J_ν(x)` for complex order and real
/// argument `x >= 0`.
pub fn bessel_j(nu: Complex64, x: f64, ctl: &SeriesControl) -> Result<Complex64> {
    if !nu.re.is_finite() || !nu.im.is_finite() {
        return Err(Error::Domain {
            what: "bessel_j order",
            value: nu.re,
        });
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            what: "bessel_j argument",
            value: x,
        });
    }

    // Integer order of either sign reduces to J_m with m >= 0.
    if nu.im == 0.0 && nu.re < 0.0 && nu.re == nu.re.round() {
        let m = -nu.re;
        let sign = if (m as i64) % 2 == 0 { 1.0 } else { -1.0 };
        return bessel_j(Complex64::new(m, 0.0), x, ctl).map(|j| sign * j);
    }

    if x == 0.0 {
        return if nu == Complex64::new(0.0, 0.0) {
            Ok(Complex64::new(1.0, 0.0))
        } else if nu.re > 0.0 {
            Ok(Complex64::new(0.0, 0.0))
        } else {
            Err(Error::Domain {
                what: "bessel_j at x = 0 with Re(nu) <= 0",
                value: nu.re,
            })
        };
    }

    if x < ASYMPTOTIC_CROSSOVER {
        return ascending(nu, x, ctl).map(|e| e.value);
    }
    let hankel = hankel(nu, x, ctl);
    if let Some(h) = &hankel {
        if h.error <= 1e-14 * h.value.norm().max(1e-300) {
            return Ok(h.value);
        }
    }
    let series = ascending(nu, x, ctl);
    match (hankel, series) {
        (Some(h), Ok(s)) => Ok(if h.error <= s.error { h.value } else { s.value }),
        (Some(h), Err(_)) => Ok(h.value),
        (None, s) => s.map(|e| e.value),
    }
}

/// `J_ν(x) = Σ_k (-1)^k (x/2)^{ν+2k} / (k! Γ(ν+k+1))`.
///
/// The term where `Re(ν+k+1) >= 1/2` is computed directly with Gamma and the
/// remaining terms follow from the ratio recurrence in both directions, so
/// orders close to negative integers do not lose precision.
fn ascending(nu: Complex64, x: f64, ctl: &SeriesControl) -> Result<Estimate> {
    let h = 0.25 * x * x;
    let lnhalf = (0.5 * x).ln();

    let k0 = if nu.re + 1.0 >= 0.5 {
        0usize
    } else {
        (0.5 - nu.re - 1.0).ceil() as usize
    };
    let mut log_fact = 0.0;
    for j in 1..=k0 {
        log_fact += (j as f64).ln();
    }
    let g = gamma(nu + (k0 as f64) + 1.0)?;
    let sign = if k0 % 2 == 0 { 1.0 } else { -1.0 };
    let anchor = sign * ((nu + 2.0 * k0 as f64) * lnhalf - log_fact).exp() / g;

    let mut sum = anchor;
    let mut max_term = anchor.norm();

    let mut t = anchor;
    for k in (1..=k0).rev() {
        // t_{k-1} = t_k * k (ν+k) / (-h)
        t = t * (k as f64) * (nu + k as f64) / (-h);
        sum += t;
        max_term = max_term.max(t.norm());
    }

    let mut t = anchor;
    let mut k = k0;
    loop {
        k += 1;
        if k > ctl.max_terms + k0 {
            return Err(Error::NonConvergence {
                what: "bessel_j ascending series",
                iterations: ctl.max_terms,
            });
        }
        let denom = (k as f64) * (nu + k as f64);
        t = t * (-h) / denom;
        sum += t;
        let tn = t.norm();
        max_term = max_term.max(tn);
        let shrinking = h < denom.norm();
        if shrinking && ctl.converged(tn, sum.norm()) {
            break;
        }
    }
    Ok(Estimate {
        value: sum,
        error: f64::EPSILON * max_term * 4.0,
    })
}

/// Hankel expansion for large argument. Returns `None` when the asymptotic
/// series starts to diverge before reaching double precision.
fn hankel(nu: Complex64, x: f64, ctl: &SeriesControl) -> Option<Estimate> {
    let mu = 4.0 * nu * nu;
    let mut p = Complex64::new(1.0, 0.0);
    let mut q = Complex64::new(0.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    let mut prev = f64::INFINITY;
    let mut max_term: f64 = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..ctl.max_terms {
        let odd = (2 * k - 1) as f64;
        term = term * (mu - odd * odd) / (k as f64 * 8.0 * x);
        let tn = term.norm();
        if tn > prev && k > 2 {
            break;
        }
        // a_k / x^k enters as (-1)^{k/2} in P (even k) or (-1)^{(k-1)/2} in Q.
        let s = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += s * term;
        } else {
            q += s * term;
        }
        max_term = max_term.max(tn);
        prev = tn;
        last = tn;
        if tn == 0.0 || tn <= ctl.rel_tol * p.norm().max(q.norm()) * 1e-2 {
            break;
        }
    }
    let omega = x - nu * (PI / 2.0) - PI / 4.0;
    let (c, s) = (omega.cos(), omega.sin());
    let pref = (2.0 / (PI * x)).sqrt();
    let value = pref * (p * c - q * s);
    let scale = pref * (c.norm() + s.norm());
    if !value.re.is_finite() || !value.im.is_finite() {
        return None;
    }
    Some(Estimate {
        value,
        error: scale * (last + f64::EPSILON * max_term * 4.0),
    })
}
