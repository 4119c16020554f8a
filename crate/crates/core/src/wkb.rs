//! WKB quantities for a potential at fixed energy: `k_dB`, `α_dB`, `φ_dB`
//! and the badlands function `Q`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::{HomogeneousPotential, PotentialModel, TabulatedPotential};
use crate::quad;

/// `k` and its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KJet {
    pub k: f64,
    pub dk: f64,
    pub d2k: f64,
}

impl KJet {
    /// From `F` and its first two derivatives, `k = √F`.
    pub fn from_f(f: f64, df: f64, d2f: f64) -> Result<Self> {
        if !(f > 0.0) {
            return Err(Error::Domain {
                what: "k_dB requires F > 0",
                value: f,
            });
        }
        let k = f.sqrt();
        let dk = df / (2.0 * k);
        let d2k = d2f / (2.0 * k) - df * df / (4.0 * k * k * k);
        Ok(Self { k, dk, d2k })
    }

    /// `Q = {φ, z}/(2k²)` with `φ' = k`.
    pub fn badlands(&self) -> f64 {
        let r = self.dk / self.k;
        (self.d2k / self.k - 1.5 * r * r) / (2.0 * self.k * self.k)
    }
}

/// Schwarzian derivative `f'''/f' - (3/2)(f''/f')²` from the first three
/// derivatives of `f`.
pub fn schwarzian(d1: f64, d2: f64, d3: f64) -> Result<f64> {
    if d1 == 0.0 || !d1.is_finite() {
        return Err(Error::Singular {
            what: "schwarzian",
            detail: format!("first derivative is {d1}"),
        });
    }
    let r = d2 / d1;
    Ok(d3 / d1 - 1.5 * r * r)
}

/// Location and height of the maximum of `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BadlandsPeak {
    pub z: f64,
    pub q: f64,
    /// Set when a scan found more than one significant local maximum.
    pub multimodal: bool,
}

/// Closed-form peak position `x_* = z_peak/ζₙ` of `Q` for `-Cₙ/zⁿ`.
pub fn peak_position(n: u32) -> f64 {
    let n = n as f64;
    let disc = (3.0 * (7.0 * n.powi(4) - 6.0 * n.powi(3) - 13.0 * n * n)).sqrt();
    let num = 5.0 * n * n - 3.0 * n - 8.0 + disc;
    let den = 4.0 * (n * n + 3.0 * n + 2.0);
    (num / den).powf(1.0 / n)
}

/// `Q(x)·(κζₙ)²` for `-Cₙ/zⁿ`, `x = z/ζₙ`.
pub fn scaled_badlands(n: u32, x: f64) -> f64 {
    let nf = n as f64;
    let xn = x.powi(n as i32);
    nf * x.powi(n as i32 - 2) * (4.0 - nf + 4.0 * (1.0 + nf) * xn) / (16.0 * (1.0 + xn).powi(3))
}

/// Maximizes a unimodal function on `[a, b]` (in whatever variable the
/// caller uses). Golden-section search followed by bisection on the sign of
/// a symmetric difference, which pins the location well below `√ε`.
pub fn maximize_unimodal<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-6 * (a.abs() + b.abs()).max(1e-300) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let h = 1e-3 * (b - a).abs().max(1e-300);
    let (mut lo, mut hi) = (a - 2.0 * h, b + 2.0 * h);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        let hh = h.min(0.25 * (hi - lo)).max(1e-7 * m.abs().max(1e-300));
        if f(m + hh) > f(m - hh) {
            lo = m;
        } else {
            hi = m;
        }
        if hi - lo <= 4.0 * f64::EPSILON * m.abs() {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Number of local maxima of a sampled curve whose topographic prominence
/// exceeds `min_prominence`.
fn prominent_maxima(vals: &[(f64, f64)], min_prominence: f64) -> usize {
    let q: Vec<f64> = vals.iter().map(|v| v.1).collect();
    let mut count = 0;
    for i in 1..q.len().saturating_sub(1) {
        if !(q[i] > q[i - 1] && q[i] >= q[i + 1]) {
            continue;
        }
        let mut left = q[i];
        for j in (0..i).rev() {
            if q[j] > q[i] {
                break;
            }
            left = left.min(q[j]);
        }
        let mut right = q[i];
        for &v in &q[i + 1..] {
            if v > q[i] {
                break;
            }
            right = right.min(v);
        }
        if q[i] - left.max(right) > min_prominence {
            count += 1;
        }
    }
    count
}

/// Cumulative phase integrals for a tabulated potential at one energy.
#[derive(Debug)]
struct PhaseTable {
    /// `∫_{z_i}^{z_N} k dz` at every node.
    from_node: Vec<f64>,
    phi_end: f64,
    phi_start: f64,
}

/// WKB evaluators for a potential at reduced energy `E = κ²`.
#[derive(Debug, Clone)]
pub struct WkbField {
    potential: PotentialModel,
    energy: f64,
    kappa: f64,
    table: Option<Arc<PhaseTable>>,
}

impl WkbField {
    pub fn new(potential: PotentialModel, energy: f64) -> Result<Self> {
        if !(energy > 0.0) || !energy.is_finite() {
            return Err(Error::InvalidInput(format!("energy must be positive, got {energy}")));
        }
        let kappa = energy.sqrt();
        let mut field = Self {
            potential,
            energy,
            kappa,
            table: None,
        };
        if let PotentialModel::Tabulated(t) = &field.potential {
            let table = field.build_phase_table(t)?;
            field.table = Some(Arc::new(table));
        }
        Ok(field)
    }

    pub fn potential(&self) -> &PotentialModel {
        &self.potential
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `F = E - U`.
    pub fn f(&self, z: f64) -> Result<f64> {
        Ok(self.energy - self.potential.value(z)?)
    }

    /// `F, F', F''`.
    pub fn f_jet(&self, z: f64) -> Result<(f64, f64, f64)> {
        let j = self.potential.jet(z)?;
        Ok((self.energy - j.u, -j.du, -j.d2u))
    }

    pub fn k(&self, z: f64) -> Result<f64> {
        Ok(self.f(z)?.sqrt())
    }

    pub fn k_jet(&self, z: f64) -> Result<KJet> {
        let (f, df, d2f) = self.f_jet(z)?;
        KJet::from_f(f, df, d2f)
    }

    /// WKB amplitude `α = k^{-1/2}`.
    pub fn alpha(&self, z: f64) -> Result<f64> {
        Ok(self.k(z)?.powf(-0.5))
    }

    /// `α, α', α''`.
    pub fn alpha_jet(&self, z: f64) -> Result<(f64, f64, f64)> {
        let (f, df, d2f) = self.f_jet(z)?;
        let a = f.powf(-0.25);
        let da = -0.25 * df * a / f;
        let d2a = -0.25 * d2f * a / f + 5.0 / 16.0 * df * df * a / (f * f);
        Ok((a, da, d2a))
    }

    /// Phase `φ_dB(z)` with `φ - κz → 0` at infinity.
    pub fn phi(&self, z: f64) -> Result<f64> {
        match &self.potential {
            PotentialModel::Homogeneous(p) => p.phase(self.kappa, z),
            PotentialModel::Tabulated(t) => {
                let table = self.table.as_ref().expect("phase table built with the field");
                self.tabulated_phase(t, table, z)
            }
        }
    }

    /// Badlands function from the amplitude, `Q = -α³α''`.
    ///
    /// Evaluated as `(4FF'' - 5F'²)/(16F³)` with the numerator rearranged to
    /// `-4E U'' + U² shape/z²`, which stays accurate where `Q` is tiny.
    pub fn badlands(&self, z: f64) -> Result<f64> {
        let j = self.potential.jet(z)?;
        let f = self.energy - j.u;
        if !(f > 0.0) {
            return Err(Error::Domain {
                what: "badlands requires F > 0",
                value: f,
            });
        }
        let num = -4.0 * self.energy * j.d2u + j.u * j.u * j.shape / (z * z);
        Ok(num / (16.0 * f * f * f))
    }

    /// Badlands function from the Schwarzian of the phase, `{φ, z}/(2k²)`.
    pub fn badlands_schwarzian(&self, z: f64) -> Result<f64> {
        let j = self.k_jet(z)?;
        let s = schwarzian(j.k, j.dk, j.d2k)?;
        Ok(s / (2.0 * j.k * j.k))
    }

    /// Maximum of `Q`: closed form for homogeneous potentials, a scan plus
    /// golden-section search for tables.
    pub fn badlands_peak(&self) -> Result<BadlandsPeak> {
        match &self.potential {
            PotentialModel::Homogeneous(p) => {
                let z = peak_position(p.n()) * p.zeta_n(self.energy);
                Ok(BadlandsPeak {
                    z,
                    q: self.badlands(z)?,
                    multimodal: false,
                })
            }
            PotentialModel::Tabulated(t) => self.numeric_peak(t),
        }
    }

    fn numeric_peak(&self, t: &TabulatedPotential) -> Result<BadlandsPeak> {
        let (lo, hi) = t.z_range();
        let zeta = (t.c4() / self.energy).powf(0.25);
        let a = (lo.min(zeta) * 1e-3).ln();
        let b = (hi.max(zeta) * 1e3).ln();
        let samples = 4000;
        let mut vals = Vec::with_capacity(samples + 1);
        for i in 0..=samples {
            let s = a + (b - a) * i as f64 / samples as f64;
            vals.push((s, self.badlands(s.exp())?));
        }
        let (imax, &(_, qmax)) = vals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .1.total_cmp(&y.1 .1))
            .expect("non-empty scan");
        let significant = prominent_maxima(&vals, 0.1 * qmax);
        let lo_s = vals[imax.saturating_sub(1)].0;
        let hi_s = vals[(imax + 1).min(samples)].0;
        let s = maximize_unimodal(|s| self.badlands(s.exp()).unwrap_or(f64::NEG_INFINITY), lo_s, hi_s);
        let z = s.exp();
        Ok(BadlandsPeak {
            z,
            q: self.badlands(z)?,
            multimodal: significant > 1,
        })
    }

    /// `Q/Q_peak` at the first and last table nodes, where the interpolant
    /// hands over to the power-law tails. `None` for homogeneous models.
    pub fn table_end_badlands(&self) -> Result<Option<(f64, f64)>> {
        let PotentialModel::Tabulated(t) = &self.potential else {
            return Ok(None);
        };
        let (lo, hi) = t.z_range();
        let peak = self.badlands_peak()?.q;
        Ok(Some((self.badlands(lo)? / peak, self.badlands(hi)? / peak)))
    }

    /// Points `z_min < z_peak < z_max` where `Q` has dropped to
    /// `threshold · Q_peak`.
    pub fn matching_interval(&self, threshold: f64) -> Result<(f64, f64)> {
        self.matching_interval_split(threshold, threshold)
    }

    /// As [`WkbField::matching_interval`] with separate cliff-side and
    /// far-end thresholds.
    pub fn matching_interval_split(&self, cliff: f64, far: f64) -> Result<(f64, f64)> {
        for threshold in [cliff, far] {
            if !(threshold > 0.0 && threshold < 1.0) {
                return Err(Error::InvalidInput(format!(
                    "matching threshold must lie in (0, 1), got {threshold}"
                )));
            }
        }
        let peak = self.badlands_peak()?;
        let crossing = |factor: f64, threshold: f64| -> Result<f64> {
            let target = threshold * peak.q;
            let mut inner = peak.z;
            let mut outer = peak.z;
            for _ in 0..400 {
                outer *= factor;
                if self.badlands(outer)?.abs() < target {
                    let (mut a, mut b) = (inner.ln(), outer.ln());
                    for _ in 0..200 {
                        let m = 0.5 * (a + b);
                        if self.badlands(m.exp())?.abs() < target {
                            b = m;
                        } else {
                            a = m;
                        }
                        if (b - a).abs() < 1e-13 {
                            break;
                        }
                    }
                    return Ok(b.exp());
                }
                inner = outer;
            }
            Err(Error::NonConvergence {
                what: "badlands matching point",
                iterations: 400,
            })
        };
        Ok((crossing(0.5, cliff)?, crossing(2.0, far)?))
    }

    fn build_phase_table(&self, t: &TabulatedPotential) -> Result<PhaseTable> {
        let nodes = t.nodes();
        let last = nodes.len() - 1;
        let mut from_node = vec![0.0; nodes.len()];
        for i in (0..last).rev() {
            from_node[i] = from_node[i + 1] + self.log_integral_of_k(nodes[i], nodes[i + 1])?;
        }
        let phi_end = t.far_tail().phase(self.kappa, nodes[last])?;
        Ok(PhaseTable {
            phi_start: phi_end - from_node[0],
            from_node,
            phi_end,
        })
    }

    /// `∫_a^b k dz` evaluated in `ln z`.
    fn log_integral_of_k(&self, a: f64, b: f64) -> Result<f64> {
        let integrand = |s: f64| {
            let z = s.exp();
            self.k(z).map(|k| k * z).unwrap_or(f64::NAN)
        };
        let scale = self.k(a.max(b))?.max(self.k(a.min(b))?) * (b - a).abs();
        let tol = 1e-14 * scale.max(1e-2);
        Ok(quad::integrate(integrand, a.ln(), b.ln(), tol)?.value)
    }

    fn tabulated_phase(&self, t: &TabulatedPotential, table: &PhaseTable, z: f64) -> Result<f64> {
        if !(z > 0.0) {
            return Err(Error::Domain {
                what: "phase at non-positive z",
                value: z,
            });
        }
        let nodes = t.nodes();
        let last = nodes.len() - 1;
        if z >= nodes[last] {
            return t.far_tail().phase(self.kappa, z);
        }
        if z < nodes[0] {
            let tail: HomogeneousPotential = t.cliff_tail();
            let diff = tail.phase(self.kappa, nodes[0])? - tail.phase(self.kappa, z)?;
            return Ok(table.phi_start - diff);
        }
        let i = nodes.partition_point(|&zi| zi <= z) - 1;
        let partial = self.log_integral_of_k(z, nodes[i + 1])?;
        Ok(table.phi_end - table.from_node[i + 1] - partial)
    }
}
