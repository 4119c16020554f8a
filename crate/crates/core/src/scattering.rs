//! Scattering amplitudes from numerical integration between WKB matching
//! points.
//!
//! The solution is started at the cliff side as the pure leftward WKB wave
//! `Ψ⁻ = k^{-1/2} e^{-iφ}` and projected onto `Ψ^±` at the far end.
//! Writing `Ψ = c₊Ψ⁺ + c₋Ψ⁻` there gives `r = c₊/c₋` and `t = 1/c₋` for a wave
//! incident from the far end.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liouville::TransformedProblem;
use crate::ode::{self, OdeControl};
use crate::potentials::PotentialModel;
use crate::wkb::WkbField;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Gate on `‖SS† − I‖` and `|det T − 1|`.
pub const UNITARITY_GATE: f64 = 1e-10;
/// Gate on the relative drift of `W(Ψ*, Ψ)`.
pub const WRONSKIAN_GATE: f64 = 1e-9;
/// Gate on the relative change of the probability current.
pub const CURRENT_GATE: f64 = 1e-10;

/// `Ψ₁Ψ₂' − Ψ₁'Ψ₂`.
pub fn wronskian(psi1: (Complex64, Complex64), psi2: (Complex64, Complex64)) -> Complex64 {
    psi1.0 * psi2.1 - psi1.1 * psi2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    pub pp: Complex64,
    pub pm: Complex64,
    pub mp: Complex64,
    pub mm: Complex64,
}

impl TransferMatrix {
    pub fn identity() -> Self {
        Self {
            pp: Complex64::new(1.0, 0.0),
            pm: Complex64::new(0.0, 0.0),
            mp: Complex64::new(0.0, 0.0),
            mm: Complex64::new(1.0, 0.0),
        }
    }

    pub fn det(&self) -> Complex64 {
        self.pp * self.mm - self.pm * self.mp
    }

    /// Transfer matrix of a real equation from the far-end coefficients
    /// of the solution that is purely leftward at the cliff.
    pub fn from_far_coefficients(c_plus: Complex64, c_minus: Complex64) -> Self {
        Self {
            pp: c_minus,
            pm: -c_plus,
            mp: -c_plus.conj(),
            mm: c_minus.conj(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringMatrix {
    pub pp: Complex64,
    pub pm: Complex64,
    pub mp: Complex64,
    pub mm: Complex64,
}

impl ScatteringMatrix {
    /// `max |(SS† − I)_ij|`.
    pub fn unitarity_residual(&self) -> f64 {
        let a = [[self.pp, self.pm], [self.mp, self.mm]];
        let mut worst: f64 = 0.0;
        for (i, ai) in a.iter().enumerate() {
            for (j, aj) in a.iter().enumerate() {
                let mut s: Complex64 = ai.iter().zip(aj).map(|(x, y)| x * y.conj()).sum();
                if i == j {
                    s -= 1.0;
                }
                worst = worst.max(s.norm());
            }
        }
        worst
    }

    /// Reflection amplitude `S₊⁻`.
    pub fn r(&self) -> Complex64 {
        self.pm
    }

    /// Transmission amplitude `S₋⁻`.
    pub fn t(&self) -> Complex64 {
        self.mm
    }
}

/// `S = (1/T₊⁺) [[1, −T₊⁻], [T₋⁺, 1]]`.
pub fn s_from_t(t: &TransferMatrix) -> Result<ScatteringMatrix> {
    if t.pp.norm() == 0.0 || !t.pp.is_finite() {
        return Err(Error::Singular {
            what: "transfer matrix",
            detail: "T₊⁺ vanishes".into(),
        });
    }
    let inv = 1.0 / t.pp;
    Ok(ScatteringMatrix {
        pp: inv,
        pm: -t.pm * inv,
        mp: t.mp * inv,
        mm: inv,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub unitarity_residual: f64,
    pub det_t_residual: f64,
    pub wronskian_drift: f64,
    pub current_residual: f64,
    /// `Q/Q_peak` at the cliff-side matching point.
    pub matching_q_left: f64,
    /// `Q/Q_peak` at the far-end matching point.
    pub matching_q_right: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub steps: u32,
}

impl Diagnostics {
    pub fn passes(&self) -> bool {
        self.unitarity_residual < UNITARITY_GATE
            && self.det_t_residual < UNITARITY_GATE
            && self.wronskian_drift < WRONSKIAN_GATE
            && self.current_residual < CURRENT_GATE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Direct,
    Coupled,
    Transformed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringResult {
    pub method: Method,
    pub kappa: f64,
    pub r: Complex64,
    pub t: Complex64,
    pub reflection: f64,
    pub transfer: TransferMatrix,
    pub smatrix: ScatteringMatrix,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverControl {
    pub rtol: f64,
    pub atol: f64,
    /// Matching points sit where `Q < matching_threshold · Q_peak`.
    pub matching_threshold: f64,
    /// Cliff-side override of `matching_threshold`.
    #[serde(default)]
    pub cliff_matching_threshold: Option<f64>,
    pub max_steps: u32,
}

impl Default for SolverControl {
    fn default() -> Self {
        Self {
            rtol: 1e-13,
            atol: 1e-15,
            matching_threshold: 1e-10,
            cliff_matching_threshold: None,
            max_steps: 2_000_000,
        }
    }
}

impl SolverControl {
    fn ode(&self) -> OdeControl {
        OdeControl {
            rtol: self.rtol,
            atol: self.atol,
            max_steps: self.max_steps,
        }
    }

    /// `(cliff, far)` matching thresholds.
    pub fn thresholds(&self) -> (f64, f64) {
        (
            self.cliff_matching_threshold.unwrap_or(self.matching_threshold),
            self.matching_threshold,
        )
    }

    fn validate(&self) -> Result<()> {
        let (cliff, far) = self.thresholds();
        for t in [cliff, far] {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::InvalidInput(format!(
                    "matching threshold must lie in (0, 1), got {t}"
                )));
            }
        }
        Ok(())
    }
}

/// `F`, `k` and `k'` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalWave {
    pub f: f64,
    pub k: f64,
    pub dk: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchingInterval {
    pub lo: f64,
    pub hi: f64,
    pub q_lo: f64,
    pub q_hi: f64,
    pub q_peak: f64,
}

/// `Ψ'' + F(x)Ψ = 0` together with the WKB data used for matching.
pub trait WaveEquation: Send + Sync {
    fn local(&self, x: f64) -> Result<LocalWave>;
    /// WKB phase, vanishing like `φ − κx` at the far end.
    fn phase(&self, x: f64) -> Result<f64>;
    fn matching(&self, cliff: f64, far: f64) -> Result<MatchingInterval>;
    fn kappa(&self) -> f64;
    /// Whether `F = k²` holds exactly, as the coupled form needs.
    fn is_untransformed(&self) -> bool {
        true
    }
    /// For equations whose `local` inverts a map: the original coordinate at
    /// `x`. Solvers then carry it along and call `local_tracked`.
    fn tracked_origin(&self, _x: f64) -> Result<Option<f64>> {
        Ok(None)
    }
    /// `local` at original coordinate `z`, with `dz/dx`.
    fn local_tracked(&self, z: f64) -> Result<(LocalWave, f64)> {
        Ok((self.local(z)?, 1.0))
    }
}

impl WaveEquation for WkbField {
    fn local(&self, z: f64) -> Result<LocalWave> {
        let j = self.k_jet(z)?;
        Ok(LocalWave {
            f: self.f(z)?,
            k: j.k,
            dk: j.dk,
        })
    }
    fn phase(&self, z: f64) -> Result<f64> {
        self.phi(z)
    }
    fn matching(&self, cliff: f64, far: f64) -> Result<MatchingInterval> {
        let (lo, hi) = self.matching_interval_split(cliff, far)?;
        let peak = self.badlands_peak()?.q;
        Ok(MatchingInterval {
            lo,
            hi,
            q_lo: self.badlands(lo)? / peak,
            q_hi: self.badlands(hi)? / peak,
            q_peak: peak,
        })
    }
    fn kappa(&self) -> f64 {
        WkbField::kappa(self)
    }
}

impl WaveEquation for TransformedProblem {
    fn local(&self, x: f64) -> Result<LocalWave> {
        let p = self.point(x)?;
        Ok(LocalWave {
            f: p.f,
            k: p.k,
            dk: p.dk,
        })
    }
    fn phase(&self, x: f64) -> Result<f64> {
        match self.gauge_scale() {
            Some(s) => Ok(s * x),
            None => Ok(self.point(x)?.phi),
        }
    }
    fn matching(&self, _cliff: f64, _far: f64) -> Result<MatchingInterval> {
        let (lo, hi) = self.domain();
        let (za, zb) = self.z_domain();
        let field = self.field();
        let peak = field.badlands_peak()?.q;
        Ok(MatchingInterval {
            lo,
            hi,
            q_lo: field.badlands(za)? / peak,
            q_hi: field.badlands(zb)? / peak,
            q_peak: peak,
        })
    }
    fn kappa(&self) -> f64 {
        self.field().kappa()
    }
    fn is_untransformed(&self) -> bool {
        false
    }
    fn tracked_origin(&self, x: f64) -> Result<Option<f64>> {
        self.map().inverse(x).map(Some)
    }
    fn local_tracked(&self, z: f64) -> Result<(LocalWave, f64)> {
        let l = self.local_at_z(z)?;
        Ok((
            LocalWave {
                f: l.f,
                k: l.k,
                dk: l.dk,
            },
            l.dz,
        ))
    }
}

fn check_matching(m: &MatchingInterval, (cliff, far): (f64, f64)) -> Result<()> {
    if m.q_lo > cliff * (1.0 + 1e-6) {
        return Err(Error::MatchingThreshold {
            side: "cliff",
            ratio: m.q_lo,
            threshold: cliff,
        });
    }
    if m.q_hi > far * (1.0 + 1e-6) {
        return Err(Error::MatchingThreshold {
            side: "far end",
            ratio: m.q_hi,
            threshold: far,
        });
    }
    Ok(())
}

/// `Ψ^η = k^{-1/2} e^{iηφ}` and its derivative.
fn wkb_wave(eta: f64, w: &LocalWave, phi: f64) -> (Complex64, Complex64) {
    let psi = Complex64::from_polar(w.k.powf(-0.5), eta * phi);
    (psi, psi * (I * eta * w.k - w.dk / (2.0 * w.k)))
}

struct Endpoint {
    psi: Complex64,
    dpsi: Complex64,
}

fn assemble(
    method: Method,
    eq: &dyn WaveEquation,
    m: &MatchingInterval,
    start: Endpoint,
    end: Endpoint,
    steps: u32,
) -> Result<ScatteringResult> {
    let far = eq.local(m.hi)?;
    let phi = eq.phase(m.hi)?;
    let wp = wkb_wave(1.0, &far, phi);
    let wm = wkb_wave(-1.0, &far, phi);
    let psi = (end.psi, end.dpsi);
    // (Ψ⁺)* = Ψ⁻ for real k and φ.
    let c_plus = wronskian(wm, psi) / (2.0 * I);
    let c_minus = wronskian(wp, psi) / (-2.0 * I);
    let transfer = TransferMatrix::from_far_coefficients(c_plus, c_minus);
    let smatrix = s_from_t(&transfer)?;

    let w_start = wronskian((start.psi.conj(), start.dpsi.conj()), (start.psi, start.dpsi));
    let w_end = wronskian((end.psi.conj(), end.dpsi.conj()), psi);
    let current_left = -1.0;
    let current_right = c_plus.norm_sqr() - c_minus.norm_sqr();

    let r = smatrix.r();
    let diagnostics = Diagnostics {
        unitarity_residual: smatrix.unitarity_residual(),
        det_t_residual: (transfer.det() - 1.0).norm(),
        wronskian_drift: (w_end - w_start).norm() / w_start.norm(),
        current_residual: (current_right - current_left).abs() / current_left.abs(),
        matching_q_left: m.q_lo,
        matching_q_right: m.q_hi,
        x_min: m.lo,
        x_max: m.hi,
        steps,
    };
    Ok(ScatteringResult {
        method,
        kappa: eq.kappa(),
        r,
        t: smatrix.t(),
        reflection: r.norm_sqr(),
        transfer,
        smatrix,
        diagnostics,
    })
}

/// Integrates `Ψ'' + FΨ = 0` with the scaled state `(Ψ√k, Ψ'/√k)`.
pub fn solve_direct_equation(eq: &dyn WaveEquation, ctl: &SolverControl) -> Result<ScatteringResult> {
    ctl.validate()?;
    let (cliff, far) = ctl.thresholds();
    let m = eq.matching(cliff, far)?;
    check_matching(&m, (cliff, far))?;
    solve_direct_on(eq, &m, ctl, Method::Direct)
}

fn solve_direct_on(
    eq: &dyn WaveEquation,
    m: &MatchingInterval,
    ctl: &SolverControl,
    method: Method,
) -> Result<ScatteringResult> {
    let near = eq.local(m.lo)?;
    let (psi0, dpsi0) = wkb_wave(-1.0, &near, eq.phase(m.lo)?);
    let sk = near.k.sqrt();
    let u0 = psi0 * sk;
    let v0 = dpsi0 / sk;
    let step = |w: &LocalWave, y: &[f64]| -> [f64; 4] {
        let g = w.dk / (2.0 * w.k);
        let h = w.f / w.k;
        let u = Complex64::new(y[0], y[1]);
        let v = Complex64::new(y[2], y[3]);
        let du = w.k * v + g * u;
        let dv = -h * u - g * v;
        [du.re, du.im, dv.re, dv.im]
    };
    let y0 = [u0.re, u0.im, v0.re, v0.im];
    let (y, steps) = match eq.tracked_origin(m.lo)? {
        None => {
            let rhs = |x: f64, y: &[f64; 4], dy: &mut [f64; 4]| -> Result<()> {
                *dy = step(&eq.local(x)?, y);
                Ok(())
            };
            let out = ode::integrate(rhs, m.lo, m.hi, y0, &ctl.ode())?;
            (out.y, out.accepted_steps)
        }
        Some(z0) => {
            let rhs = |_: f64, y: &[f64; 5], dy: &mut [f64; 5]| -> Result<()> {
                let (w, dz) = eq.local_tracked(y[4])?;
                let d = step(&w, y);
                *dy = [d[0], d[1], d[2], d[3], dz];
                Ok(())
            };
            let out = ode::integrate(rhs, m.lo, m.hi, [y0[0], y0[1], y0[2], y0[3], z0], &ctl.ode())?;
            (std::array::from_fn(|i| out.y[i]), out.accepted_steps)
        }
    };
    let far = eq.local(m.hi)?;
    let sk = far.k.sqrt();
    let end = Endpoint {
        psi: Complex64::new(y[0], y[1]) / sk,
        dpsi: Complex64::new(y[2], y[3]) * sk,
    };
    assemble(method, eq, m, Endpoint { psi: psi0, dpsi: dpsi0 }, end, steps)
}

/// Integrates the amplitude equations `β'_η = β_{−η} (k'/2k) e^{−2iηφ}`
/// with `φ` carried as an extra state component.
pub fn solve_coupled_equation(eq: &dyn WaveEquation, ctl: &SolverControl) -> Result<ScatteringResult> {
    ctl.validate()?;
    if !eq.is_untransformed() {
        return Err(Error::InvalidInput(
            "the amplitude equations need F = k² exactly".into(),
        ));
    }
    let (cliff, far) = ctl.thresholds();
    let m = eq.matching(cliff, far)?;
    check_matching(&m, (cliff, far))?;
    solve_coupled_on(eq, &m, ctl)
}

/// `(β₊, β₋)` with `Ψ = Σ β_η Ψ^η` and `Ψ' = ik Σ η β_η Ψ^η`.
fn amplitudes(psi: Complex64, dpsi: Complex64, w: &LocalWave, phi: f64) -> (Complex64, Complex64) {
    let a = psi * w.k.sqrt();
    let b = dpsi / (I * w.k.sqrt());
    (
        0.5 * (a + b) * Complex64::from_polar(1.0, -phi),
        0.5 * (a - b) * Complex64::from_polar(1.0, phi),
    )
}

fn solve_coupled_on(eq: &dyn WaveEquation, m: &MatchingInterval, ctl: &SolverControl) -> Result<ScatteringResult> {
    let near = eq.local(m.lo)?;
    let phi0 = eq.phase(m.lo)?;
    let (psi0, dpsi0) = wkb_wave(-1.0, &near, phi0);
    let (bp, bm) = amplitudes(psi0, dpsi0, &near, phi0);
    let rhs = |x: f64, y: &[f64; 5], dy: &mut [f64; 5]| -> Result<()> {
        let w = eq.local(x)?;
        let g = w.dk / (2.0 * w.k);
        let e = Complex64::from_polar(1.0, -2.0 * y[4]);
        let bp = Complex64::new(y[0], y[1]);
        let bm = Complex64::new(y[2], y[3]);
        let dbp = bm * g * e;
        let dbm = bp * g * e.conj();
        *dy = [dbp.re, dbp.im, dbm.re, dbm.im, w.k];
        Ok(())
    };
    let out = ode::integrate(rhs, m.lo, m.hi, [bp.re, bp.im, bm.re, bm.im, phi0], &ctl.ode())?;
    let far = eq.local(m.hi)?;
    let phi = out.y[4];
    let bp = Complex64::new(out.y[0], out.y[1]);
    let bm = Complex64::new(out.y[2], out.y[3]);
    let sk = far.k.sqrt();
    let ep = Complex64::from_polar(1.0, phi);
    let psi = (bp * ep + bm * ep.conj()) / sk;
    let dpsi = I * sk * (bp * ep - bm * ep.conj());
    assemble(
        Method::Coupled,
        eq,
        m,
        Endpoint { psi: psi0, dpsi: dpsi0 },
        Endpoint { psi, dpsi },
        out.accepted_steps,
    )
}

fn field_for(potential: &PotentialModel, energy: f64) -> Result<WkbField> {
    WkbField::new(potential.clone(), energy)
}

/// Reflection and transmission for `-U(z)` at reduced energy `E = κ²`.
pub fn solve_direct(potential: &PotentialModel, energy: f64, ctl: &SolverControl) -> Result<ScatteringResult> {
    solve_direct_equation(&field_for(potential, energy)?, ctl)
}

pub fn solve_coupled(potential: &PotentialModel, energy: f64, ctl: &SolverControl) -> Result<ScatteringResult> {
    solve_coupled_equation(&field_for(potential, energy)?, ctl)
}

/// Solves a Liouville-transformed problem on its own truncated domain.
pub fn solve_transformed(problem: &TransformedProblem, ctl: &SolverControl) -> Result<ScatteringResult> {
    ctl.validate()?;
    let (cliff, far) = ctl.thresholds();
    let m = problem.matching(cliff, far)?;
    solve_direct_on(problem, &m, ctl, Method::Transformed)
}

/// Low-energy parameters `r ≃ −(1 − 2iκa)`, `b = −Im a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringLength {
    pub a: Complex64,
    pub b: f64,
    /// Slope of `(r+1)/(2iκ)` in `κ`.
    pub slope: Complex64,
    /// RMS deviation from the linear fit, relative to `|a|`.
    pub fit_residual: f64,
    pub ell: f64,
    /// `(κ, r)` on the fit grid.
    pub samples: Vec<(f64, Complex64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringLengthControl {
    pub kappa_ell_min: f64,
    pub kappa_ell_max: f64,
    pub points: usize,
    pub residual_threshold: f64,
    pub solver: SolverControl,
}

impl Default for ScatteringLengthControl {
    fn default() -> Self {
        Self {
            kappa_ell_min: 1e-4,
            kappa_ell_max: 1e-2,
            points: 8,
            residual_threshold: 1e-4,
            solver: SolverControl {
                matching_threshold: 1e-14,
                cliff_matching_threshold: Some(1e-10),
                ..SolverControl::default()
            },
        }
    }
}

/// Fits `(r+1)/(2iκ) = a + cκ` over a geometric `κℓ` grid.
pub fn scattering_length(potential: &PotentialModel, ctl: &ScatteringLengthControl) -> Result<ScatteringLength> {
    if ctl.points < 3 || !(ctl.kappa_ell_min > 0.0) || !(ctl.kappa_ell_max > ctl.kappa_ell_min) {
        return Err(Error::InvalidInput(
            "scattering-length grid needs ≥ 3 increasing positive points".into(),
        ));
    }
    let c4 = potential
        .far_c4()
        .ok_or_else(|| Error::InvalidInput("scattering length needs a -C4/z^4 far tail".into()))?;
    let ell = c4.sqrt();
    let n = ctl.points;
    let ratio = (ctl.kappa_ell_max / ctl.kappa_ell_min).powf(1.0 / (n - 1) as f64);
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let kappa = ctl.kappa_ell_min * ratio.powi(i as i32) / ell;
        let res = solve_direct(potential, kappa * kappa, &ctl.solver)?;
        samples.push((kappa, res.r));
    }
    let ys: Vec<Complex64> = samples.iter().map(|&(k, r)| (r + 1.0) / (2.0 * I * k)).collect();
    let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<Complex64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: Complex64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let a = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - a - slope * x).norm_sqr())
        .sum::<f64>()
        / nf)
        .sqrt();
    let fit_residual = rms / a.norm();
    if fit_residual > ctl.residual_threshold {
        return Err(Error::FitResidual {
            residual: fit_residual,
            threshold: ctl.residual_threshold,
        });
    }
    Ok(ScatteringLength {
        a,
        b: -a.im,
        slope,
        fit_residual,
        ell,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::{special_gauge, transform_f, Affine};
    use crate::potentials::HomogeneousPotential;
    use proptest::prelude::*;
    use std::sync::Arc;

    /// `Ψ'' + κ²Ψ = 0` on a fixed interval.
    struct Free {
        kappa: f64,
    }

    impl WaveEquation for Free {
        fn local(&self, _: f64) -> Result<LocalWave> {
            Ok(LocalWave {
                f: self.kappa * self.kappa,
                k: self.kappa,
                dk: 0.0,
            })
        }
        fn phase(&self, x: f64) -> Result<f64> {
            Ok(self.kappa * x)
        }
        fn matching(&self, _: f64, _: f64) -> Result<MatchingInterval> {
            Ok(MatchingInterval {
                lo: -3.0,
                hi: 7.0,
                q_lo: 0.0,
                q_hi: 0.0,
                q_peak: 0.0,
            })
        }
        fn kappa(&self) -> f64 {
            self.kappa
        }
    }

    fn v4(kl: f64) -> (PotentialModel, f64) {
        (HomogeneousPotential::quartic(1.0).unwrap().into(), kl * kl)
    }

    #[test]
    fn wronskian_basics() {
        let a = (Complex64::new(0.3, 1.0), Complex64::new(-2.0, 0.5));
        let b = (Complex64::new(1.1, -0.2), Complex64::new(0.4, 0.9));
        assert_eq!(wronskian(a, a), Complex64::new(0.0, 0.0));
        assert_eq!(wronskian(a, b), -wronskian(b, a));
        let w = LocalWave {
            f: 4.0,
            k: 2.0,
            dk: 0.3,
        };
        let p = wkb_wave(1.0, &w, 0.7);
        let pc = (p.0.conj(), p.1.conj());
        assert!((wronskian(pc, p) - 2.0 * I).norm() < 1e-15);
    }

    #[test]
    fn free_particle_does_not_reflect() {
        let eq = Free { kappa: 1.3 };
        for res in [
            solve_direct_equation(&eq, &SolverControl::default()).unwrap(),
            solve_coupled_equation(&eq, &SolverControl::default()).unwrap(),
        ] {
            assert!(res.r.norm() < 1e-12);
            assert!((res.t - 1.0).norm() < 1e-10);
            assert!(res.diagnostics.passes());
        }
    }

    #[test]
    fn s_from_t_algebra() {
        let s = s_from_t(&TransferMatrix::identity()).unwrap();
        assert_eq!(s.pp, Complex64::new(1.0, 0.0));
        assert_eq!(s.pm, Complex64::new(0.0, 0.0));
        assert_eq!(s.unitarity_residual(), 0.0);
        let zero = TransferMatrix {
            pp: Complex64::new(0.0, 0.0),
            ..TransferMatrix::identity()
        };
        assert!(s_from_t(&zero).is_err());
    }

    proptest! {
        #[test]
        fn unitary_s_from_consistent_t(theta in 0.0f64..1.5, a in -3.0f64..3.0, b in -3.0f64..3.0) {
            // r and t with |r|² + |t|² = 1 and c₋ = 1/t, c₊ = r/t.
            let r = Complex64::from_polar(theta.sin(), a);
            let t = Complex64::from_polar(theta.cos(), b);
            let tm = TransferMatrix::from_far_coefficients(r / t, 1.0 / t);
            prop_assert!((tm.det() - 1.0).norm() < 1e-12 * (1.0 / t).norm_sqr());
            let s = s_from_t(&tm).unwrap();
            prop_assert!(s.unitarity_residual() < 1e-12);
            prop_assert!((s.r() - r).norm() < 1e-12);
            prop_assert!((s.t() - t).norm() < 1e-12);
        }
    }

    #[test]
    fn v4_direct_matches_reference() {
        // Reference from an independent fine-tolerance integration.
        let (p, e) = v4(1.0);
        let res = solve_direct(&p, e, &SolverControl::default()).unwrap();
        assert!((res.reflection - 0.064_907_515_8).abs() < 1e-8, "{}", res.reflection);
        assert!(
            (res.r - Complex64::new(-0.217_341_156_211, 0.132_929_822_213)).norm() < 1e-8,
            "{}",
            res.r
        );
        assert!(
            (res.t - Complex64::new(0.880_860_936_588, -0.398_969_290_268)).norm() < 1e-8,
            "{}",
            res.t
        );
        let d = res.diagnostics;
        assert!(d.passes(), "{d:?}");
        assert!(d.matching_q_left <= 1e-10 * 1.000001 && d.matching_q_right <= 1e-10 * 1.000001);
    }

    #[test]
    fn direct_and_coupled_agree() {
        for kl in [0.03, 0.3, 2.0] {
            let (p, e) = v4(kl);
            let ctl = SolverControl::default();
            let a = solve_direct(&p, e, &ctl).unwrap();
            let b = solve_coupled(&p, e, &ctl).unwrap();
            assert!((a.r - b.r).norm() < 1e-8, "κℓ = {kl}: {} vs {}", a.r, b.r);
            assert!((a.t - b.t).norm() < 1e-8);
            assert!(b.diagnostics.passes(), "{:?}", b.diagnostics);
        }
    }

    #[test]
    fn coupling_lives_in_the_badlands() {
        let (p, e) = v4(0.3);
        let wide = SolverControl {
            matching_threshold: 1e-12,
            ..SolverControl::default()
        };
        let a = solve_coupled(&p, e, &wide).unwrap();
        let b = solve_coupled(&p, e, &SolverControl::default()).unwrap();
        assert!((a.reflection - b.reflection).abs() < 1e-6);
    }

    #[test]
    fn reflection_limits() {
        let lo = v4(1e-3);
        let hi = v4(10.0);
        let ctl = SolverControl::default();
        assert!(solve_direct(&lo.0, lo.1, &ctl).unwrap().reflection > 0.99);
        assert!(solve_direct(&hi.0, hi.1, &ctl).unwrap().reflection < 0.01);
    }

    #[test]
    fn rejections() {
        let (p, e) = v4(0.1);
        let bad = SolverControl {
            matching_threshold: 2.0,
            ..SolverControl::default()
        };
        assert!(solve_direct(&p, e, &bad).is_err());
        assert!(solve_direct(&p, -1.0, &SolverControl::default()).is_err());
    }

    #[test]
    fn gauge_invariance() {
        for kl in [0.05, 0.5] {
            let (p, e) = v4(kl);
            let ctl = SolverControl::default();
            let direct = solve_direct(&p, e, &ctl).unwrap();
            let field = WkbField::new(p.clone(), e).unwrap();
            let (_, gauge) = special_gauge(&field, kl.sqrt()).unwrap();
            let special = solve_transformed(&gauge, &ctl).unwrap();
            assert!((direct.r - special.r).norm() < 1e-8, "{} vs {}", direct.r, special.r);
            assert!((direct.t - special.t).norm() < 1e-8);
            assert!(special.diagnostics.passes());
            let affine = transform_f(Arc::new(Affine::new(2.3, -1.1).unwrap()), &field).unwrap();
            let moved = solve_transformed(&affine, &ctl).unwrap();
            assert!((direct.r - moved.r).norm() < 1e-8);
            assert!((direct.t - moved.t).norm() < 1e-8);
            assert!(solve_coupled_equation(&gauge, &ctl).is_err());
        }
    }

    #[test]
    fn universal_wall_regimes() {
        let ctl = SolverControl::default();
        for (e_bold, above) in [(10.0, true), (0.01, false)] {
            // ϰ² = κℓ for ℓ = 1.
            let (p, e) = v4(e_bold);
            let field = WkbField::new(p, e).unwrap();
            let (_, wall) = special_gauge(&field, f64::sqrt(e_bold)).unwrap();
            let res = solve_transformed(&wall, &ctl).unwrap();
            if above {
                assert!(res.reflection < 0.01, "{}", res.reflection);
            } else {
                assert!(res.reflection > 0.9, "{}", res.reflection);
            }
        }
    }

    #[test]
    fn v4_reflection_decreases() {
        let ctl = SolverControl::default();
        let mut last = 1.0;
        for i in 0..12 {
            let kl = 1e-3 * 10f64.powf(4.0 * i as f64 / 11.0);
            let (p, e) = v4(kl);
            let r = solve_direct(&p, e, &ctl).unwrap().reflection;
            assert!(r < last, "κℓ = {kl}");
            last = r;
        }
    }

    #[test]
    fn scattering_length_of_v4() {
        let ctl = ScatteringLengthControl::default();
        let one: PotentialModel = HomogeneousPotential::quartic(1.0).unwrap().into();
        let sl = scattering_length(&one, &ctl).unwrap();
        assert!((sl.b / sl.ell - 1.0).abs() < 0.01, "{}", sl.b);
        assert!(sl.fit_residual < 1e-4);
        for &(k, r) in &sl.samples {
            let rr = r.norm_sqr();
            assert!(((1.0 - 4.0 * k * sl.b) - rr).abs() < 0.01 * rr);
        }
        let two: PotentialModel = HomogeneousPotential::new(4, 2.0).unwrap().into();
        let sl2 = scattering_length(&two, &ctl).unwrap();
        assert!((sl2.b / sl.b - 2f64.sqrt()).abs() < 1e-6);
        let strict = ScatteringLengthControl {
            residual_threshold: 1e-9,
            ..ctl
        };
        assert!(matches!(
            scattering_length(&one, &strict),
            Err(Error::FitResidual { .. })
        ));
        let cubic: PotentialModel = HomogeneousPotential::new(3, 1.0).unwrap().into();
        assert!(scattering_length(&cubic, &ctl).is_err());
    }
}
