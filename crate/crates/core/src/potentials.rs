//! Interaction potentials `U(z)` in reduced units (`ħ²/2m = 1`).
//!
//! `U = 2mV/ħ²`, so the Schrödinger equation reads `Ψ'' + (κ² - U)Ψ = 0`.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specialfns::{gamma_real, hyp2f1, SeriesControl};
use crate::units;

/// Default relative tolerance when gluing power-law tails onto a table.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 0.05;

/// Value and first two derivatives of `U` at a point.
///
/// `shape = 4s'' - s'² - 4s'` with `s = ln(-U)` differentiated in `ln z`, so
/// that `4UU'' - 5U'² = U² shape / z²` without cancellation (it is
/// `n(4 - n)` for `-Cₙ/zⁿ`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialJet {
    pub u: f64,
    pub du: f64,
    pub d2u: f64,
    pub shape: f64,
}

fn check_z(z: f64) -> Result<()> {
    if z > 0.0 && z.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "potential evaluated at non-positive z",
            value: z,
        })
    }
}

/// `U(z) = -Cₙ/zⁿ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousPotential {
    n: u32,
    strength: f64,
}

impl HomogeneousPotential {
    pub fn new(n: u32, strength: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidInput(format!("exponent n must exceed 2, got {n}")));
        }
        if !(strength > 0.0) || !strength.is_finite() {
            return Err(Error::InvalidInput(format!(
                "strength C_n must be positive, got {strength}"
            )));
        }
        Ok(Self { n, strength })
    }

    /// `-C₄/z⁴` with `C₄ = ℓ²`.
    pub fn quartic(ell: f64) -> Result<Self> {
        Self::new(4, ell * ell)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn value(&self, z: f64) -> Result<f64> {
        check_z(z)?;
        Ok(-self.strength / z.powi(self.n as i32))
    }

    pub fn jet(&self, z: f64) -> Result<PotentialJet> {
        check_z(z)?;
        let n = self.n as f64;
        let u = -self.strength / z.powi(self.n as i32);
        Ok(PotentialJet {
            u,
            du: -n * u / z,
            d2u: n * (n + 1.0) * u / (z * z),
            shape: n * (4.0 - n),
        })
    }

    /// `ζₙ = (Cₙ/κ²)^{1/n}`.
    pub fn zeta_n(&self, energy: f64) -> f64 {
        (self.strength / energy).powf(1.0 / self.n as f64)
    }

    /// `ℓₙ = Cₙ^{1/(n-2)}`.
    pub fn ell_n(&self) -> f64 {
        self.strength.powf(1.0 / (self.n as f64 - 2.0))
    }

    /// WKB phase `φ_dB(z)` with the far-end convention `φ - κz → 0`.
    pub fn phase(&self, kappa: f64, z: f64) -> Result<f64> {
        check_z(z)?;
        let zeta = self.zeta_n(kappa * kappa);
        Ok(kappa * zeta * scaled_phase(self.n, z / zeta)?)
    }
}

/// Constant of the near-cliff branch of [`scaled_phase`]:
/// `Dₙ = -(1/n) Γ(-1/n) Γ(1/n - 1/2) / Γ(-1/2)`.
pub fn phase_offset(n: u32) -> Result<f64> {
    let nf = n as f64;
    Ok(-gamma_real(-1.0 / nf)? * gamma_real(1.0 / nf - 0.5)? / (nf * gamma_real(-0.5)?))
}

/// `φ_dB/(κζₙ)` as a function of `x = z/ζₙ` for `-Cₙ/zⁿ`.
///
/// Both branches are written so that the hypergeometric argument stays in
/// `[0, 1/2]`.
pub fn scaled_phase(n: u32, x: f64) -> Result<f64> {
    let nf = n as f64;
    let ctl = SeriesControl::default();
    if x >= 1.0 {
        let y = x.powf(-nf);
        let w = y / (1.0 + y);
        // ₂F₁(1/2, -1/n; 1-1/n; -y) via Pfaff.
        let f = (1.0 + y).powf(-0.5) * hyp2f1(0.5, 1.0, 1.0 - 1.0 / nf, w, &ctl)?;
        Ok(nf * x / (nf - 2.0) * (f - 2.0 / nf * (1.0 + y).sqrt()))
    } else {
        let c = 1.0 - nf / 2.0;
        let w = x.powf(nf);
        let f = hyp2f1(-0.5, 1.0, 1.0 + c / nf, w / (1.0 + w), &ctl)?;
        Ok(phase_offset(n)? + x.powf(c) / c * (1.0 + w).sqrt() * f)
    }
}

/// Tabulated potential: shape-preserving cubic interpolation of `ln(-U)` in
/// `ln z`, glued to `-C₃/z³` below the table and `-C₄/z⁴` above it.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedPotential {
    z: Vec<f64>,
    u: Vec<f64>,
    t: Vec<f64>,
    s: Vec<f64>,
    slope: Vec<f64>,
    c3: f64,
    c4: f64,
    f3: f64,
    f4: f64,
}

impl TabulatedPotential {
    /// Builds the interpolant from samples already in reduced units.
    pub fn from_samples(z: Vec<f64>, u: Vec<f64>, c3: f64, c4: f64, tail_tol: f64) -> Result<Self> {
        if z.len() != u.len() {
            return Err(Error::InvalidInput("z and U columns differ in length".into()));
        }
        if z.len() < 4 {
            return Err(Error::InvalidInput("a potential table needs at least 4 rows".into()));
        }
        if !(c3 > 0.0 && c4 > 0.0) {
            return Err(Error::InvalidInput("tail constants C3 and C4 must be positive".into()));
        }
        for w in z.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidInput(format!(
                    "z must be strictly increasing (found {} after {})",
                    w[1], w[0]
                )));
            }
        }
        if !(z[0] > 0.0) {
            return Err(Error::InvalidInput("z must be positive".into()));
        }
        if let Some(bad) = u.iter().find(|v| !(**v < 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "potential values must be negative, got {bad}"
            )));
        }

        let last = z.len() - 1;
        let f3 = -u[0] * z[0].powi(3) / c3;
        let f4 = -u[last] * z[last].powi(4) / c4;
        if (f3 - 1.0).abs() > tail_tol {
            return Err(Error::TailMismatch(format!(
                "first row differs from -C3/z^3 by {:.3}% (tolerance {:.3}%)",
                100.0 * (f3 - 1.0),
                100.0 * tail_tol
            )));
        }
        if (f4 - 1.0).abs() > tail_tol {
            return Err(Error::TailMismatch(format!(
                "last row differs from -C4/z^4 by {:.3}% (tolerance {:.3}%)",
                100.0 * (f4 - 1.0),
                100.0 * tail_tol
            )));
        }

        let t: Vec<f64> = z.iter().map(|v| v.ln()).collect();
        let s: Vec<f64> = u.iter().map(|v| (-v).ln()).collect();
        let slope = pchip_slopes(&t, &s, -3.0, -4.0);
        Ok(Self {
            z,
            u,
            t,
            s,
            slope,
            c3,
            c4,
            f3,
            f4,
        })
    }

    /// Parses the two-column text format (`z V` in atomic units) and converts
    /// to reduced units for a particle of `mass_me` electron masses.
    pub fn parse(text: &str, mass_me: f64, tail_tol: f64) -> Result<Self> {
        let mut c3 = None;
        let mut c4 = None;
        let mut z = Vec::new();
        let mut v = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                for tok in comment.split_whitespace() {
                    let parse_val = |s: &str| {
                        s.parse::<f64>().map_err(|e| Error::Parse {
                            line: line_no,
                            message: format!("bad tail constant {s:?}: {e}"),
                        })
                    };
                    if let Some(val) = tok.strip_prefix("C3=") {
                        c3 = Some(parse_val(val)?);
                    } else if let Some(val) = tok.strip_prefix("C4=") {
                        c4 = Some(parse_val(val)?);
                    }
                }
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected two columns, found {}", cols.len()),
                });
            }
            let num = |s: &str| {
                s.parse::<f64>().map_err(|e| Error::Parse {
                    line: line_no,
                    message: format!("{s:?}: {e}"),
                })
            };
            z.push(num(cols[0])?);
            v.push(num(cols[1])?);
        }
        let missing = |name: &str| Error::Parse {
            line: 0,
            message: format!("header `# C3=<val> C4=<val>` is missing {name}"),
        };
        let c3 = c3.ok_or_else(|| missing("C3"))?;
        let c4 = c4.ok_or_else(|| missing("C4"))?;
        if !(mass_me > 0.0) {
            return Err(Error::InvalidInput("mass must be positive".into()));
        }
        let scale = units::reduced_from_hartree(1.0, mass_me);
        let u = v.into_iter().map(|x| x * scale).collect();
        Self::from_samples(z, u, c3 * scale, c4 * scale, tail_tol)
    }

    pub fn from_file(path: impl AsRef<Path>, mass_me: f64, tail_tol: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(&text, mass_me, tail_tol)
    }

    /// Declared `C₃` (reduced units).
    pub fn c3(&self) -> f64 {
        self.c3
    }

    /// Declared `C₄` (reduced units).
    pub fn c4(&self) -> f64 {
        self.c4
    }

    /// Multiplicative factors applied to the declared tails so that they meet
    /// the first and last table rows.
    pub fn tail_factors(&self) -> (f64, f64) {
        (self.f3, self.f4)
    }

    pub fn z_range(&self) -> (f64, f64) {
        (self.z[0], self.z[self.z.len() - 1])
    }

    pub fn nodes(&self) -> &[f64] {
        &self.z
    }

    /// Effective cliff-side tail `-C₃'/z³` below the table.
    pub fn cliff_tail(&self) -> HomogeneousPotential {
        HomogeneousPotential {
            n: 3,
            strength: self.f3 * self.c3,
        }
    }

    /// Effective far-end tail `-C₄'/z⁴` above the table.
    pub fn far_tail(&self) -> HomogeneousPotential {
        HomogeneousPotential {
            n: 4,
            strength: self.f4 * self.c4,
        }
    }

    pub fn value(&self, z: f64) -> Result<f64> {
        check_z(z)?;
        let (lo, hi) = self.z_range();
        if z < lo {
            return self.cliff_tail().value(z);
        }
        if z > hi {
            return self.far_tail().value(z);
        }
        let i = self.z.partition_point(|&zi| zi <= z);
        if i > 0 && self.z[i - 1] == z {
            return Ok(self.u[i - 1]);
        }
        Ok(self.jet(z)?.u)
    }

    pub fn jet(&self, z: f64) -> Result<PotentialJet> {
        check_z(z)?;
        let (lo, hi) = self.z_range();
        if z < lo {
            return self.cliff_tail().jet(z);
        }
        if z > hi {
            return self.far_tail().jet(z);
        }
        let t = z.ln();
        let i = (self.t.partition_point(|&ti| ti <= t)).clamp(1, self.t.len() - 1) - 1;
        let h = self.t[i + 1] - self.t[i];
        let tau = ((t - self.t[i]) / h).clamp(0.0, 1.0);
        let (s0, s1) = (self.s[i], self.s[i + 1]);
        let (m0, m1) = (self.slope[i] * h, self.slope[i + 1] * h);
        let tau2 = tau * tau;
        let tau3 = tau2 * tau;
        let s = (2.0 * tau3 - 3.0 * tau2 + 1.0) * s0
            + (tau3 - 2.0 * tau2 + tau) * m0
            + (-2.0 * tau3 + 3.0 * tau2) * s1
            + (tau3 - tau2) * m1;
        let ds = ((6.0 * tau2 - 6.0 * tau) * s0
            + (3.0 * tau2 - 4.0 * tau + 1.0) * m0
            + (-6.0 * tau2 + 6.0 * tau) * s1
            + (3.0 * tau2 - 2.0 * tau) * m1)
            / h;
        let d2s =
            ((12.0 * tau - 6.0) * s0 + (6.0 * tau - 4.0) * m0 + (-12.0 * tau + 6.0) * s1 + (6.0 * tau - 2.0) * m1)
                / (h * h);
        let u = -s.exp();
        Ok(PotentialJet {
            u,
            du: u * ds / z,
            d2u: u * (d2s + ds * ds - ds) / (z * z),
            shape: 4.0 * d2s - ds * ds - 4.0 * ds,
        })
    }
}

/// Monotone (PCHIP-style weighted harmonic mean) slopes with prescribed end
/// slopes.
fn pchip_slopes(x: &[f64], y: &[f64], start: f64, end: f64) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let d: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut m = vec![0.0; n];
    m[0] = start;
    m[n - 1] = end;
    for i in 1..n - 1 {
        if d[i - 1] * d[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    m
}

/// A potential of either kind. Cloning is cheap.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialModel {
    Homogeneous(HomogeneousPotential),
    Tabulated(Arc<TabulatedPotential>),
}

impl From<HomogeneousPotential> for PotentialModel {
    fn from(p: HomogeneousPotential) -> Self {
        Self::Homogeneous(p)
    }
}

impl From<TabulatedPotential> for PotentialModel {
    fn from(p: TabulatedPotential) -> Self {
        Self::Tabulated(Arc::new(p))
    }
}

impl fmt::Display for PotentialModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Homogeneous(p) => write!(f, "-C{}/z^{} (C{} = {})", p.n, p.n, p.n, p.strength),
            Self::Tabulated(t) => {
                let (lo, hi) = t.z_range();
                write!(f, "table with {} rows on [{lo}, {hi}]", t.z.len())
            }
        }
    }
}

impl PotentialModel {
    pub fn value(&self, z: f64) -> Result<f64> {
        match self {
            Self::Homogeneous(p) => p.value(z),
            Self::Tabulated(t) => t.value(z),
        }
    }

    pub fn jet(&self, z: f64) -> Result<PotentialJet> {
        match self {
            Self::Homogeneous(p) => p.jet(z),
            Self::Tabulated(t) => t.jet(z),
        }
    }

    /// Far-end `C₄`, if the potential has a `-C₄/z⁴` tail.
    pub fn far_c4(&self) -> Option<f64> {
        match self {
            Self::Homogeneous(p) if p.n == 4 => Some(p.strength),
            Self::Homogeneous(_) => None,
            Self::Tabulated(t) => Some(t.c4),
        }
    }

    /// The same potential with all strengths multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        match self {
            Self::Homogeneous(p) => Ok(HomogeneousPotential::new(p.n, p.strength * factor)?.into()),
            Self::Tabulated(t) => Ok(TabulatedPotential::from_samples(
                t.z.clone(),
                t.u.iter().map(|v| v * factor).collect(),
                t.c3 * factor,
                t.c4 * factor,
                f64::INFINITY,
            )?
            .into()),
        }
    }
}

/// Length and wave-vector scales of a potential at a given energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalScales {
    /// Reduced energy `E = κ²`.
    pub energy: f64,
    pub kappa: f64,
    /// Exponent of the power law used for `ζₙ`, `ℓₙ`.
    pub n: u32,
    pub zeta_n: f64,
    pub ell_n: f64,
    /// `ℓ = √C₄` when a far-end `C₄` exists.
    pub ell: Option<f64>,
    /// `ζ = (C₄/E)^{1/4}` when a far-end `C₄` exists.
    pub zeta: Option<f64>,
}

impl PhysicalScales {
    /// `κℓ`, when `ℓ` is defined.
    pub fn kappa_ell(&self) -> Option<f64> {
        self.ell.map(|l| self.kappa * l)
    }
}

/// Scales of `p` at reduced energy `energy = κ²`.
pub fn scales_for(p: &PotentialModel, energy: f64) -> Result<PhysicalScales> {
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(Error::InvalidInput(format!("energy must be positive, got {energy}")));
    }
    let kappa = energy.sqrt();
    let law = match p {
        PotentialModel::Homogeneous(h) => *h,
        PotentialModel::Tabulated(t) => HomogeneousPotential::new(4, t.c4)?,
    };
    let ell = p.far_c4().map(f64::sqrt);
    let zeta = p.far_c4().map(|c| (c / energy).powf(0.25));
    Ok(PhysicalScales {
        energy,
        kappa,
        n: law.n,
        zeta_n: law.zeta_n(energy),
        ell_n: law.ell_n(),
        ell,
        zeta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;
    use proptest::prelude::*;

    /// Far-end phase by quadrature in physical variables.
    fn phase_quadrature(p: &HomogeneousPotential, kappa: f64, z: f64) -> f64 {
        let n = p.n() as i32;
        let c = p.strength();
        let g = |t: f64| {
            let a = c / t.powi(n);
            a / ((kappa * kappa + a).sqrt() + kappa)
        };
        let h = |s: f64| if s <= 0.0 { 0.0 } else { g(z / s) * z / (s * s) };
        kappa * z - integrate(h, 0.0, 1.0, 1e-13).unwrap().value
    }

    #[test]
    fn homogeneous_values() {
        let v4 = HomogeneousPotential::new(4, 1.0).unwrap();
        assert_eq!(v4.value(1.0).unwrap(), -1.0);
        let v3 = HomogeneousPotential::new(3, 2.0).unwrap();
        assert_eq!(v3.value(2.0).unwrap(), -0.25);
        assert!(v3.value(0.0).is_err());
        assert!(v3.value(-1.0).is_err());
        assert!(HomogeneousPotential::new(2, 1.0).is_err());
        assert!(HomogeneousPotential::new(4, -1.0).is_err());
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        for n in [3, 4, 5] {
            let p = HomogeneousPotential::new(n, 0.7).unwrap();
            for &z in &[0.3, 1.0, 2.5] {
                let h = 1e-5 * z;
                let j = p.jet(z).unwrap();
                let fd1 = (p.value(z + h).unwrap() - p.value(z - h).unwrap()) / (2.0 * h);
                let fd2 = (p.jet(z + h).unwrap().du - p.jet(z - h).unwrap().du) / (2.0 * h);
                assert!((fd1 / j.du - 1.0).abs() < 1e-8);
                assert!((fd2 / j.d2u - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn quartic_near_cliff_constant() {
        // 2 z_* with z_* = Γ(3/4)²/√π
        let zs = gamma_real(0.75).unwrap().powi(2) / std::f64::consts::PI.sqrt();
        assert!((phase_offset(4).unwrap() - 2.0 * zs).abs() < 1e-13);
    }

    #[test]
    fn closed_form_phase_matches_quadrature() {
        for n in [3, 4, 5] {
            let p = HomogeneousPotential::new(n, 1.3).unwrap();
            let kappa = 0.8;
            let zeta = p.zeta_n(kappa * kappa);
            for &x in &[0.05, 0.3, 0.9, 0.999, 1.0, 1.2, 3.0, 20.0] {
                let z = x * zeta;
                let a = p.phase(kappa, z).unwrap();
                let b = phase_quadrature(&p, kappa, z);
                assert!((a - b).abs() < 1e-10 * a.abs().max(1.0), "n = {n}, x = {x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn quartic_phase_asymptotics() {
        let ell = 2.0;
        let kappa = 0.05;
        let p = HomogeneousPotential::quartic(ell).unwrap();
        let zs = phase_offset(4).unwrap() / 2.0;
        let varkappa = (kappa * ell).sqrt();
        let zeta = (ell / kappa).sqrt();
        let z = 1e-3 * zeta;
        let near = 2.0 * varkappa * zs - ell / z;
        assert!((p.phase(kappa, z).unwrap() - near).abs() < 1e-5 * near.abs());
        for &x in &[1e3, 1e4, 1e6] {
            let z = x * zeta;
            let phi = p.phase(kappa, z).unwrap();
            assert!((phi - kappa * z).abs() < 1e-8 * kappa * z);
        }
    }

    #[test]
    fn scales_identities() {
        let p: PotentialModel = HomogeneousPotential::new(4, 1.0).unwrap().into();
        let s = scales_for(&p, 1.0).unwrap();
        assert!((s.zeta.unwrap() - 1.0).abs() < 1e-15);
        for &e in &[1e-4, 0.3, 7.0] {
            let s = scales_for(&p, e).unwrap();
            let (ell, zeta) = (s.ell.unwrap(), s.zeta.unwrap());
            assert!((zeta * zeta - ell / s.kappa).abs() < 1e-12 * zeta * zeta);
            assert!((s.kappa.powi(2) * zeta.powi(4) - ell * ell).abs() < 1e-12 * ell * ell);
            assert!((s.ell_n - ell).abs() < 1e-14);
        }
        for n in [3, 5, 6] {
            let p: PotentialModel = HomogeneousPotential::new(n, 2.2).unwrap().into();
            let s = scales_for(&p, 0.4).unwrap();
            let lhs = s.ell_n.powi(n as i32 - 2);
            let rhs = s.kappa.powi(2) * s.zeta_n.powi(n as i32);
            assert!((lhs / rhs - 1.0).abs() < 1e-12);
            assert!(s.ell.is_none());
        }
        assert!(scales_for(&p, 0.0).is_err());
    }

    fn synthetic_table(rows: usize) -> (Vec<f64>, Vec<f64>, f64, f64) {
        // U = -C3/(z^3 (1 + z/L)) interpolates between -C3/z^3 and -C3 L/z^4.
        let (c3, big_l) = (0.5, 20.0);
        let z: Vec<f64> = (0..rows)
            .map(|i| 1e-2 * (1e6_f64).powf(i as f64 / (rows - 1) as f64))
            .collect();
        let u = z.iter().map(|&z| -c3 / (z.powi(3) * (1.0 + z / big_l))).collect();
        (z, u, c3, c3 * big_l)
    }

    #[test]
    fn table_nodes_and_tails() {
        let (z, u, c3, c4) = synthetic_table(200);
        let t = TabulatedPotential::from_samples(z.clone(), u.clone(), c3, c4, 0.05).unwrap();
        for i in [0, 17, 100, 199] {
            assert_eq!(t.value(z[i]).unwrap(), u[i]);
        }
        let (f3, f4) = t.tail_factors();
        assert!((f3 - 1.0).abs() < 0.05 && (f4 - 1.0).abs() < 0.05);
        // Continuity across both junctions, including the first derivative.
        for &edge in &[z[0], z[199]] {
            let a = t.jet(edge * (1.0 - 1e-9)).unwrap();
            let b = t.jet(edge * (1.0 + 1e-9)).unwrap();
            assert!((a.u / b.u - 1.0).abs() < 1e-7);
            assert!((a.du / b.du - 1.0).abs() < 1e-6);
        }
        let exact = |z: f64| -c3 / (z.powi(3) * (1.0 + z / 20.0));
        for &zz in &[0.013, 0.5, 7.7, 20.0, 300.0, 9000.0] {
            assert!((t.value(zz).unwrap() / exact(zz) - 1.0).abs() < 1e-4, "z = {zz}");
        }
    }

    #[test]
    fn table_derivatives_are_consistent() {
        let (z, u, c3, c4) = synthetic_table(150);
        let t = TabulatedPotential::from_samples(z, u, c3, c4, 0.05).unwrap();
        for &zz in &[0.021, 0.9, 13.0, 450.0] {
            let h = 1e-6 * zz;
            let j = t.jet(zz).unwrap();
            let fd1 = (t.jet(zz + h).unwrap().u - t.jet(zz - h).unwrap().u) / (2.0 * h);
            let fd2 = (t.jet(zz + h).unwrap().du - t.jet(zz - h).unwrap().du) / (2.0 * h);
            assert!((fd1 / j.du - 1.0).abs() < 1e-6);
            assert!((fd2 / j.d2u - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn table_ingestion_errors() {
        let (z, mut u, c3, c4) = synthetic_table(50);
        assert!(matches!(
            TabulatedPotential::from_samples(z.clone(), u.clone(), c3, 2.0 * c4, 0.05),
            Err(Error::TailMismatch(_))
        ));
        u[3] = 0.1;
        assert!(TabulatedPotential::from_samples(z.clone(), u.clone(), c3, c4, 0.05).is_err());
        let mut zz = z.clone();
        zz.swap(4, 5);
        assert!(TabulatedPotential::from_samples(zz, u, c3, c4, 0.05).is_err());
    }

    #[test]
    fn parse_text_format() {
        let mut text = String::from("# synthetic table\n# C3=0.25 C4=5\n\n");
        let (z, u, _, _) = synthetic_table(40);
        for (zi, ui) in z.iter().zip(&u) {
            // u was built with C3 = 0.5; halve it to match the header.
            text.push_str(&format!("{zi:.17e} {:.17e}\n", ui / 2.0));
        }
        let t = TabulatedPotential::parse(&text, 1000.0, 0.05).unwrap();
        assert!((t.c3() - 500.0).abs() < 1e-12);
        assert!((t.c4() - 10_000.0).abs() < 1e-9);
        assert!((t.value(z[7]).unwrap() - u[7] * 1000.0).abs() < 1e-12 * u[7].abs() * 1000.0);

        assert!(matches!(
            TabulatedPotential::parse("1 -1\n2 -0.1\n", 1.0, 0.05),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            TabulatedPotential::parse("# C3=1 C4=1\n1 -1 3\n", 1.0, 0.05),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            TabulatedPotential::parse("# C3=x C4=1\n", 1.0, 0.05),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    proptest! {
        #[test]
        fn homogeneous_attraction_is_monotone(n in 3u32..8, c in 1e-3f64..1e3, z1 in 1e-3f64..1e3, r in 1.0001f64..10.0) {
            let p = HomogeneousPotential::new(n, c).unwrap();
            let z2 = z1 * r;
            let (v1, v2) = (p.value(z1).unwrap(), p.value(z2).unwrap());
            prop_assert!(v1 < v2 && v2 < 0.0);
        }

        #[test]
        fn scale_identities_hold(c4 in 1e-2f64..1e6, e in 1e-8f64..1e2) {
            let p: PotentialModel = HomogeneousPotential::new(4, c4).unwrap().into();
            let s = scales_for(&p, e).unwrap();
            let zeta = s.zeta.unwrap();
            prop_assert!((zeta * zeta / (s.ell.unwrap() / s.kappa) - 1.0).abs() < 1e-12);
        }
    }
}
