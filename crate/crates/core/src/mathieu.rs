//! Closed-form scattering for `-C₄/z⁴` through the modified Mathieu equation
//! `Ψ̃'' + (−a + 2q cosh 2z̃)Ψ̃ = 0` with `z̃ = ln(z/ζ)`, `a = 1/4`, `q = κℓ`.
//!
//! Solutions are Bessel-product series
//! `Ψ̃^(±)(z̃) = Σ (−1)ⁿ Aₙ J_{±(n+τ)}(√q e^{z̃}) J_{±n}(√q e^{−z̃})`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liouville::inversion_center;
use crate::specialfns::{bessel_j, SeriesControl};

/// `a` for the quartic problem.
pub const A_QUARTIC: f64 = 0.25;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MathieuControl {
    /// Initial truncation `N` (rows `−N..=N`).
    pub terms: usize,
    /// How many times `N` may be doubled while `cos πτ` settles.
    pub max_doublings: usize,
    /// Stop doubling once the extrapolated `cos πτ` moves by less than this.
    pub tau_tol: f64,
    pub series: SeriesControl,
}

impl Default for MathieuControl {
    fn default() -> Self {
        Self {
            terms: 25,
            max_doublings: 10,
            tau_tol: 1e-10,
            series: SeriesControl::default(),
        }
    }
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "Mathieu parameter q must be positive",
            value: q,
        })
    }
}

/// `Δ(0)` of the normalized Hill determinant truncated to `−n..=n`.
fn hill_determinant(q: f64, a: f64, n: usize) -> Result<f64> {
    let xi = |m: i64| -> Result<f64> {
        let d = (2 * m) as f64 * (2 * m) as f64 - a;
        if d == 0.0 {
            return Err(Error::Pole {
                what: "Hill determinant with a = (2n)²",
                value: a,
            });
        }
        Ok(q / d)
    };
    let n = n as i64;
    // Continuant of the tridiagonal matrix with unit diagonal.
    let (mut f_prev, mut f) = (1.0, 1.0);
    let mut x_prev = xi(-n)?;
    for m in (-n + 1)..=n {
        let x = xi(m)?;
        let next = f - x_prev * x * f_prev;
        f_prev = f;
        f = next;
        x_prev = x;
    }
    Ok(f)
}

/// Representative of `{±τ + 2m}` with `0 ≤ Re τ ≤ 1`, `Im τ ≥ 0`.
pub fn normalize_tau(tau: Complex64) -> Complex64 {
    let mut t = tau;
    t.re -= 2.0 * (t.re / 2.0).round();
    if t.re < 0.0 || (t.re == 0.0 && t.im < 0.0) {
        t = -t;
    }
    if t.im < 0.0 && (t.re - 1.0).abs() < 1e-12 {
        t = 2.0 - t;
    }
    if t.im.abs() < 1e-15 {
        t.im = 0.0;
    }
    t
}

/// `(A₁/A₀, A₋₁/A₀)` by downward continued fractions from row `n`.
fn first_ratios(tau: Complex64, q: f64, a: f64, n: usize) -> (Complex64, Complex64) {
    let mut rp = Complex64::new(0.0, 0.0);
    let mut rm = Complex64::new(0.0, 0.0);
    for m in (1..=n).rev() {
        let s = 2.0 * m as f64;
        rp = -q / ((tau + s) * (tau + s) - a + q * rp);
        rm = -q / ((tau - s) * (tau - s) - a + q * rm);
    }
    (rp, rm)
}

/// Central row of the recurrence after eliminating the tails.
fn central_condition(tau: Complex64, q: f64, a: f64, n: usize) -> Complex64 {
    let (rp, rm) = first_ratios(tau, q, a, n);
    tau * tau - a + q * (rp + rm)
}

/// Mathieu characteristic exponent `τ` from `cos πτ = 1 − 2Δ(0) sin²(π√a/2)`,
/// refined by Newton iteration on the continued-fraction condition.
pub fn characteristic_exponent(q: f64, a: f64, ctl: &MathieuControl) -> Result<Complex64> {
    check_q(q)?;
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Domain {
            what: "Mathieu parameter a must be positive",
            value: a,
        });
    }
    if ctl.terms < 10 {
        return Err(Error::InvalidInput(format!(
            "need at least 10 terms, got {}",
            ctl.terms
        )));
    }
    let s2 = (0.5 * PI * a.sqrt()).sin().powi(2);
    let cos_pi_tau = |n: usize| hill_determinant(q, a, n).map(|d| 1.0 - 2.0 * d * s2);
    // Truncation error falls like N⁻³; extrapolate each doubling.
    let mut n = ctl.terms;
    let mut raw = cos_pi_tau(n)?;
    let mut c = raw;
    let mut settled = false;
    for i in 0..ctl.max_doublings {
        n *= 2;
        let next_raw = cos_pi_tau(n)?;
        let next = (8.0 * next_raw - raw) / 7.0;
        let moved = (next - c).abs();
        raw = next_raw;
        c = next;
        if i > 0 && moved < ctl.tau_tol {
            settled = true;
            break;
        }
    }
    if !settled || !c.is_finite() {
        return Err(Error::NonConvergence {
            what: "Hill determinant truncation",
            iterations: ctl.max_doublings,
        });
    }
    let mut tau = normalize_tau(Complex64::new(c, 0.0).acos() / PI);

    // Newton polish.
    let depth = 4 * ctl.terms + 40;
    for it in 0..60 {
        let g = central_condition(tau, q, a, depth);
        let h = 1e-7 * tau.norm().max(1.0);
        let dg = (central_condition(tau + h, q, a, depth) - central_condition(tau - h, q, a, depth)) / (2.0 * h);
        if dg.norm() == 0.0 || !dg.is_finite() {
            return Err(Error::Singular {
                what: "characteristic exponent",
                detail: "flat continued-fraction condition".into(),
            });
        }
        let step = g / dg;
        tau -= step;
        if step.norm() <= 1e-15 * tau.norm().max(1.0) {
            break;
        }
        if it == 59 {
            return Err(Error::NonConvergence {
                what: "characteristic exponent Newton iteration",
                iterations: 60,
            });
        }
    }
    let tau = normalize_tau(tau);
    if ((PI * tau).cos() - c).norm() > 1e-7 * c.abs().max(1.0) {
        return Err(Error::NonConvergence {
            what: "characteristic exponent left the Hill-determinant root",
            iterations: 60,
        });
    }
    Ok(tau)
}

/// `Aₙ` for `n ∈ −N..=N`, `A₀ = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub tau: Complex64,
    pub q: f64,
    pub a: f64,
    pub n: usize,
    values: Vec<Complex64>,
}

impl Coefficients {
    pub fn get(&self, m: i64) -> Complex64 {
        let idx = m + self.n as i64;
        if idx < 0 || idx as usize >= self.values.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.values[idx as usize]
        }
    }

    /// `max_{|m| ≤ N−2} |((τ+2m)² − a)A_m + q(A_{m+1} + A_{m−1})| / max|A|`.
    pub fn recurrence_residual(&self) -> f64 {
        let scale = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let lim = self.n as i64 - 2;
        (-lim..=lim)
            .map(|m| {
                let t = self.tau + 2.0 * m as f64;
                ((t * t - self.a) * self.get(m) + self.q * (self.get(m + 1) + self.get(m - 1))).norm()
            })
            .fold(0.0, f64::max)
            / scale
    }
}

/// Coefficients from the continued fractions, truncated at `|n| = N`.
pub fn coefficients(tau: Complex64, q: f64, a: f64, n: usize, ctl: &MathieuControl) -> Result<Coefficients> {
    check_q(q)?;
    if n < 10 {
        return Err(Error::InvalidInput(format!("need N ≥ 10, got {n}")));
    }
    // Ratios are computed from a deeper start so the last kept ones are converged.
    let depth = 2 * n + 20;
    let mut up = vec![Complex64::new(0.0, 0.0); depth + 2];
    let mut down = vec![Complex64::new(0.0, 0.0); depth + 2];
    for m in (1..=depth).rev() {
        let s = 2.0 * m as f64;
        up[m] = -q / ((tau + s) * (tau + s) - a + q * up[m + 1]);
        down[m] = -q / ((tau - s) * (tau - s) - a + q * down[m + 1]);
        if !up[m].is_finite() || !down[m].is_finite() {
            return Err(Error::NonConvergence {
                what: "Mathieu continued fraction",
                iterations: depth,
            });
        }
    }
    let mut values = vec![Complex64::new(0.0, 0.0); 2 * n + 1];
    values[n] = Complex64::new(1.0, 0.0);
    for m in 1..=n {
        values[n + m] = values[n + m - 1] * up[m];
        values[n - m] = values[n - m + 1] * down[m];
    }
    let _ = ctl;
    Ok(Coefficients { tau, q, a, n, values })
}

/// Sign of the series: `Ψ̃^(+)` or `Ψ̃^(−)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// `Ψ̃^(±)(z̃)` and its derivative.
pub fn psi_jet(c: &Coefficients, branch: Branch, zt: f64, ctl: &MathieuControl) -> Result<(Complex64, Complex64)> {
    let s = branch.sign();
    let h = c.q.sqrt();
    let x = h * zt.exp();
    let y = h * (-zt).exp();
    let j = |nu: Complex64, arg: f64| bessel_j(nu, arg, &ctl.series);
    let mut val = Complex64::new(0.0, 0.0);
    let mut der = Complex64::new(0.0, 0.0);
    let n = c.n as i64;
    for m in -n..=n {
        let am = c.get(m);
        if am.norm() == 0.0 {
            continue;
        }
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let mu = s * (c.tau + m as f64);
        let nu = Complex64::new(s * m as f64, 0.0);
        let jx = j(mu, x)?;
        let jy = j(nu, y)?;
        let djx = 0.5 * (j(mu - 1.0, x)? - j(mu + 1.0, x)?);
        let djy = 0.5 * (j(nu - 1.0, y)? - j(nu + 1.0, y)?);
        val += sign * am * jx * jy;
        der += sign * am * (x * djx * jy - y * jx * djy);
    }
    Ok((val, der))
}

pub fn psi(c: &Coefficients, branch: Branch, zt: f64, ctl: &MathieuControl) -> Result<Complex64> {
    let s = branch.sign();
    let h = c.q.sqrt();
    let x = h * zt.exp();
    let y = h * (-zt).exp();
    let n = c.n as i64;
    let mut val = Complex64::new(0.0, 0.0);
    for m in -n..=n {
        let am = c.get(m);
        if am.norm() == 0.0 {
            continue;
        }
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let jx = bessel_j(s * (c.tau + m as f64), x, &ctl.series)?;
        let jy = bessel_j(Complex64::new(s * m as f64, 0.0), y, &ctl.series)?;
        val += sign * am * jx * jy;
    }
    Ok(val)
}

/// `σ = ln(Ψ̃^(−)(0)/Ψ̃^(+)(0))`, principal branch.
pub fn parity_sigma(c: &Coefficients, ctl: &MathieuControl) -> Result<Complex64> {
    let plus = psi(c, Branch::Plus, 0.0, ctl)?;
    let minus = psi(c, Branch::Minus, 0.0, ctl)?;
    if plus.norm() == 0.0 {
        return Err(Error::Singular {
            what: "parity constant",
            detail: "Ψ⁺(0) vanishes".into(),
        });
    }
    Ok((minus / plus).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MathieuSolution {
    pub q: f64,
    pub a_param: f64,
    pub tau: Complex64,
    pub coefficients: Coefficients,
    pub sigma: Complex64,
    pub r: Complex64,
    pub t: Complex64,
}

impl MathieuSolution {
    pub fn reflection(&self) -> f64 {
        self.r.norm_sqr()
    }
}

/// Full analytic solution of the quartic problem at `κℓ`.
pub fn solve(kappa_ell: f64, ctl: &MathieuControl) -> Result<MathieuSolution> {
    check_q(kappa_ell)?;
    let q = kappa_ell;
    let a = A_QUARTIC;
    let tau = characteristic_exponent(q, a, ctl)?;
    let coefficients = coefficients(tau, q, a, ctl.terms, ctl)?;
    let sigma = parity_sigma(&coefficients, ctl)?;
    let den = (sigma + I * PI * tau).sinh();
    if den.norm() == 0.0 {
        return Err(Error::Singular {
            what: "Mathieu amplitudes",
            detail: "sinh(σ + iπτ) vanishes".into(),
        });
    }
    let r = -I * sigma.sinh() / den;
    let t = (PI * tau).sin() * Complex64::from_polar(1.0, 2.0 * q.sqrt() * inversion_center()) / den;
    Ok(MathieuSolution {
        q,
        a_param: a,
        tau,
        coefficients,
        sigma,
        r,
        t,
    })
}

/// `(r, t)` for the quartic problem.
pub fn r4_t4(kappa_ell: f64, ctl: &MathieuControl) -> Result<(Complex64, Complex64)> {
    let s = solve(kappa_ell, ctl)?;
    Ok((s.r, s.t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct R4Point {
    pub kappa_ell: f64,
    pub r: Complex64,
    pub t: Complex64,
    pub reflection: f64,
}

/// `R₄(κℓ)` over a grid.
pub fn r4_curve(grid: &[f64], ctl: &MathieuControl) -> Result<Vec<R4Point>> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty κℓ grid".into()));
    }
    grid.iter()
        .map(|&kl| {
            let (r, t) = r4_t4(kl, ctl)?;
            Ok(R4Point {
                kappa_ell: kl,
                r,
                t,
                reflection: r.norm_sqr(),
            })
        })
        .collect()
}
