//! Liouville transformations `z → z̃(z)`, `Ψ̃ = √(z̃')Ψ`, and the phase gauge
//! `z̃ = φ_dB(z)/ϰ` in which the attractive well becomes a repulsive wall.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::potentials::scaled_phase;
use crate::quad;
use crate::specialfns::gamma_real;
use crate::wkb::{scaled_badlands, WkbField};

/// Badlands threshold (relative to the peak) that truncates the phase gauge.
pub const SPECIAL_GAUGE_THRESHOLD: f64 = 1e-12;
/// Badlands threshold used for generic transformed problems.
pub const DEFAULT_DOMAIN_THRESHOLD: f64 = 1e-10;

/// Value, first two derivatives and Schwarzian of a map at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapJet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub schwarzian: f64,
}

/// A smooth, strictly increasing coordinate map.
pub trait LiouvilleMap: Send + Sync + fmt::Debug {
    fn jet(&self, z: f64) -> Result<MapJet>;

    /// Open interval on which the map is defined.
    fn domain(&self) -> (f64, f64);

    /// Image of [`domain`](Self::domain).
    fn range(&self) -> (f64, f64);

    fn value(&self, z: f64) -> Result<f64> {
        Ok(self.jet(z)?.value)
    }

    /// `z` such that `z̃(z) = zt`, by safeguarded Newton iteration.
    fn inverse(&self, zt: f64) -> Result<f64> {
        invert_numerically(self, zt)
    }
}

/// Reparametrizes an interval by an unconstrained variable `u`.
#[derive(Clone, Copy)]
enum Chart {
    Line,
    Log,
    Above(f64),
    Below(f64),
    Between(f64, f64),
}

impl Chart {
    fn for_interval((a, b): (f64, f64)) -> Self {
        match (a.is_finite(), b.is_finite()) {
            (false, false) => Chart::Line,
            (true, false) if a == 0.0 => Chart::Log,
            (true, false) => Chart::Above(a),
            (false, true) => Chart::Below(b),
            (true, true) => Chart::Between(a, b),
        }
    }

    /// `(z, dz/du)`.
    fn z(&self, u: f64) -> (f64, f64) {
        match *self {
            Chart::Line => (u, 1.0),
            Chart::Log => {
                let e = u.exp();
                (e, e)
            }
            Chart::Above(a) => {
                let e = u.exp();
                (a + e, e)
            }
            Chart::Below(b) => {
                let e = (-u).exp();
                (b - e, e)
            }
            Chart::Between(a, b) => {
                let s = 1.0 / (1.0 + (-u).exp());
                (a + (b - a) * s, (b - a) * s * (1.0 - s))
            }
        }
    }
}

fn invert_numerically<M: LiouvilleMap + ?Sized>(map: &M, zt: f64) -> Result<f64> {
    let (ra, rb) = map.range();
    if !(zt > ra && zt < rb) {
        return Err(Error::Domain {
            what: "map inverse outside the range",
            value: zt,
        });
    }
    let chart = Chart::for_interval(map.domain());
    let g = |u: f64| -> Result<(f64, f64)> {
        let (z, dzdu) = chart.z(u);
        let j = map.jet(z)?;
        Ok((j.value - zt, j.d1 * dzdu))
    };

    // Bracket by expanding steps away from u = 0.
    let (mut lo, mut hi) = (-1.0, 1.0);
    let mut glo = g(lo)?.0;
    let mut ghi = g(hi)?.0;
    let mut step = 2.0;
    for _ in 0..200 {
        if glo <= 0.0 && ghi >= 0.0 {
            break;
        }
        if glo > 0.0 {
            hi = lo;
            ghi = glo;
            lo -= step;
            glo = g(lo)?.0;
        } else {
            lo = hi;
            glo = ghi;
            hi += step;
            ghi = g(hi)?.0;
        }
        step *= 2.0;
    }
    if !(glo <= 0.0 && ghi >= 0.0) {
        return Err(Error::NonConvergence {
            what: "map inverse bracketing",
            iterations: 200,
        });
    }

    let mut u = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (val, der) = g(u)?;
        if val == 0.0 {
            return Ok(chart.z(u).0);
        }
        if val < 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let newton = u - val / der;
        let next = if der > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let done = (next - u).abs() <= 1e-15 * u.abs().max(1.0) || hi - lo <= 1e-15 * u.abs().max(1.0);
        u = next;
        if done {
            return Ok(chart.z(u).0);
        }
    }
    Err(Error::NonConvergence {
        what: "map inverse Newton iteration",
        iterations: 200,
    })
}

/// `z̃ = z`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl LiouvilleMap for Identity {
    fn jet(&self, z: f64) -> Result<MapJet> {
        Ok(MapJet {
            value: z,
            d1: 1.0,
            d2: 0.0,
            schwarzian: 0.0,
        })
    }
    fn domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
    fn range(&self) -> (f64, f64) {
        self.domain()
    }
    fn inverse(&self, zt: f64) -> Result<f64> {
        Ok(zt)
    }
}

/// `z̃ = a z + b` with `a > 0`.
#[derive(Debug, Clone, Copy)]
pub struct Affine {
    a: f64,
    b: f64,
}

impl Affine {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::NonMonotoneMap { at: 0.0 });
        }
        Ok(Self { a, b })
    }
}

impl LiouvilleMap for Affine {
    fn jet(&self, z: f64) -> Result<MapJet> {
        Ok(MapJet {
            value: self.a * z + self.b,
            d1: self.a,
            d2: 0.0,
            schwarzian: 0.0,
        })
    }
    fn domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
    fn range(&self) -> (f64, f64) {
        self.domain()
    }
    fn inverse(&self, zt: f64) -> Result<f64> {
        Ok((zt - self.b) / self.a)
    }
}

/// `z̃ = -ζ²/z` on `z > 0`: exchanges the cliff and the far end.
#[derive(Debug, Clone, Copy)]
pub struct Inversion {
    zeta: f64,
}

impl Inversion {
    pub fn new(zeta: f64) -> Result<Self> {
        if !(zeta > 0.0) {
            return Err(Error::InvalidInput("inversion centre must be positive".into()));
        }
        Ok(Self { zeta })
    }
}

impl LiouvilleMap for Inversion {
    fn jet(&self, z: f64) -> Result<MapJet> {
        if !(z > 0.0) {
            return Err(Error::Domain {
                what: "inversion map",
                value: z,
            });
        }
        let z2 = self.zeta * self.zeta;
        Ok(MapJet {
            value: -z2 / z,
            d1: z2 / (z * z),
            d2: -2.0 * z2 / (z * z * z),
            schwarzian: 0.0,
        })
    }
    fn domain(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }
    fn range(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, 0.0)
    }
    fn inverse(&self, zt: f64) -> Result<f64> {
        if !(zt < 0.0) {
            return Err(Error::Domain {
                what: "inversion inverse",
                value: zt,
            });
        }
        Ok(-self.zeta * self.zeta / zt)
    }
}

/// `z̃ = ln(z/ζ)`: turns the `-C₄/z⁴` problem into a modified Mathieu equation.
#[derive(Debug, Clone, Copy)]
pub struct Logarithmic {
    zeta: f64,
}

impl Logarithmic {
    pub fn new(zeta: f64) -> Result<Self> {
        if !(zeta > 0.0) {
            return Err(Error::InvalidInput("logarithmic scale must be positive".into()));
        }
        Ok(Self { zeta })
    }
}

impl LiouvilleMap for Logarithmic {
    fn jet(&self, z: f64) -> Result<MapJet> {
        if !(z > 0.0) {
            return Err(Error::Domain {
                what: "logarithmic map",
                value: z,
            });
        }
        Ok(MapJet {
            value: (z / self.zeta).ln(),
            d1: 1.0 / z,
            d2: -1.0 / (z * z),
            schwarzian: 0.5 / (z * z),
        })
    }
    fn domain(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }
    fn range(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
    fn inverse(&self, zt: f64) -> Result<f64> {
        Ok(self.zeta * zt.exp())
    }
}

/// `z̃ = φ_dB(z)/ϰ`.
#[derive(Debug, Clone)]
pub struct PhaseMap {
    field: WkbField,
    scale: f64,
}

impl PhaseMap {
    pub fn new(field: WkbField, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidInput(format!(
                "gauge scale must be positive, got {scale}"
            )));
        }
        Ok(Self { field, scale })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn field(&self) -> &WkbField {
        &self.field
    }
}

impl LiouvilleMap for PhaseMap {
    fn jet(&self, z: f64) -> Result<MapJet> {
        let k = self.field.k_jet(z)?;
        let r = k.dk / k.k;
        Ok(MapJet {
            value: self.field.phi(z)? / self.scale,
            d1: k.k / self.scale,
            d2: k.dk / self.scale,
            schwarzian: k.d2k / k.k - 1.5 * r * r,
        })
    }
    fn domain(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }
    fn range(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
}

/// `ẑ = outer(inner(z))`, with the Schwarzian from Cayley's identity.
#[derive(Debug, Clone)]
pub struct Composed {
    inner: Arc<dyn LiouvilleMap>,
    outer: Arc<dyn LiouvilleMap>,
}

impl LiouvilleMap for Composed {
    fn jet(&self, z: f64) -> Result<MapJet> {
        let a = self.inner.jet(z)?;
        let b = self.outer.jet(a.value)?;
        Ok(MapJet {
            value: b.value,
            d1: b.d1 * a.d1,
            d2: b.d2 * a.d1 * a.d1 + b.d1 * a.d2,
            schwarzian: a.d1 * a.d1 * b.schwarzian + a.schwarzian,
        })
    }
    fn domain(&self) -> (f64, f64) {
        self.inner.domain()
    }
    fn range(&self) -> (f64, f64) {
        let (ia, ib) = self.inner.range();
        let (od, ou) = self.outer.domain();
        let (oa, ob) = self.outer.range();
        let lo = if ia == od {
            oa
        } else {
            self.outer.value(ia).unwrap_or(oa)
        };
        let hi = if ib == ou {
            ob
        } else {
            self.outer.value(ib).unwrap_or(ob)
        };
        (lo, hi)
    }
    fn inverse(&self, zt: f64) -> Result<f64> {
        self.inner.inverse(self.outer.inverse(zt)?)
    }
}

/// `outer ∘ inner`. Fails if the range of `inner` leaves the domain of `outer`.
pub fn compose(inner: Arc<dyn LiouvilleMap>, outer: Arc<dyn LiouvilleMap>) -> Result<Composed> {
    let (ia, ib) = inner.range();
    let (oa, ob) = outer.domain();
    if ia < oa || ib > ob {
        return Err(Error::DomainMismatch);
    }
    Ok(Composed { inner, outer })
}

/// Inverse of a map, `z(z̃)`.
#[derive(Debug, Clone)]
pub struct InverseMap {
    map: Arc<dyn LiouvilleMap>,
}

impl InverseMap {
    pub fn new(map: Arc<dyn LiouvilleMap>) -> Self {
        Self { map }
    }
}

impl LiouvilleMap for InverseMap {
    fn jet(&self, zt: f64) -> Result<MapJet> {
        let z = self.map.inverse(zt)?;
        let j = self.map.jet(z)?;
        Ok(MapJet {
            value: z,
            d1: 1.0 / j.d1,
            d2: -j.d2 / j.d1.powi(3),
            schwarzian: -j.schwarzian / (j.d1 * j.d1),
        })
    }
    fn domain(&self) -> (f64, f64) {
        self.map.range()
    }
    fn range(&self) -> (f64, f64) {
        self.map.domain()
    }
    fn inverse(&self, z: f64) -> Result<f64> {
        self.map.value(z)
    }
}

/// `Ψ̃(z̃) = √(z̃'(z)) Ψ(z)`.
pub fn transform_wavefunction(map: &dyn LiouvilleMap, psi: Complex64, z: f64) -> Result<Complex64> {
    let j = map.jet(z)?;
    if !(j.d1 > 0.0) {
        return Err(Error::NonMonotoneMap { at: z });
    }
    Ok(psi * j.d1.sqrt())
}

/// `Ψ̃'' + F̃(z̃)Ψ̃ = 0` obtained from a WKB field by a Liouville map.
#[derive(Debug, Clone)]
pub struct TransformedProblem {
    field: WkbField,
    map: Arc<dyn LiouvilleMap>,
    z_domain: (f64, f64),
    domain: (f64, f64),
    gauge_scale: Option<f64>,
}

/// Value of the transformed WKB phase and wave-vector at `z̃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformedPoint {
    pub z: f64,
    pub f: f64,
    pub phi: f64,
    pub k: f64,
    pub dk: f64,
    pub badlands: f64,
}

impl TransformedProblem {
    pub fn field(&self) -> &WkbField {
        &self.field
    }

    pub fn map(&self) -> &Arc<dyn LiouvilleMap> {
        &self.map
    }

    /// Truncated `z̃` interval.
    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// The same interval in the original coordinate.
    pub fn z_domain(&self) -> (f64, f64) {
        self.z_domain
    }

    /// `ϰ` when this is the phase gauge.
    pub fn gauge_scale(&self) -> Option<f64> {
        self.gauge_scale
    }

    /// `E_bold = ϰ²` in the phase gauge.
    pub fn e_bold(&self) -> Option<f64> {
        self.gauge_scale.map(|s| s * s)
    }

    /// `F̃(z̃) = (F(z) - {z̃,z}/2)/z̃'²`.
    pub fn f(&self, zt: f64) -> Result<f64> {
        let z = self.map.inverse(zt)?;
        self.f_at(z)
    }

    fn f_at(&self, z: f64) -> Result<f64> {
        let j = self.map.jet(z)?;
        Ok((self.field.f(z)? - 0.5 * j.schwarzian) / (j.d1 * j.d1))
    }

    /// Same quantity from the inverse map, `z'(z̃)² F(z) + {z,z̃}/2`.
    pub fn f_explicit(&self, zt: f64) -> Result<f64> {
        let inv = InverseMap::new(self.map.clone()).jet(zt)?;
        Ok(inv.d1 * inv.d1 * self.field.f(inv.value)? + 0.5 * inv.schwarzian)
    }

    /// Wall `V_bold(z̃) = ϰ² Q(z)` of the phase gauge.
    pub fn v_bold(&self, zt: f64) -> Result<f64> {
        let s = self
            .gauge_scale
            .ok_or_else(|| Error::InvalidInput("V_bold is defined only in the phase gauge".into()))?;
        let z = self.map.inverse(zt)?;
        Ok(s * s * self.field.badlands(z)?)
    }

    /// Everything a solver needs at `z̃`. In the phase gauge `F̃` is
    /// evaluated as `ϰ²(1 - Q)`.
    pub fn point(&self, zt: f64) -> Result<TransformedPoint> {
        let z = self.map.inverse(zt)?;
        let l = self.local_at_z(z)?;
        Ok(TransformedPoint {
            z,
            f: l.f,
            phi: self.field.phi(z)?,
            k: l.k,
            dk: l.dk,
            badlands: l.badlands,
        })
    }

    /// The local quantities of [`TransformedProblem::point`] at the point
    /// whose original coordinate is `z`, without inverting the map.
    pub fn local_at_z(&self, z: f64) -> Result<LocalAtZ> {
        let j = self.map.jet(z)?;
        let kj = self.field.k_jet(z)?;
        let q = self.field.badlands(z)?;
        let f = match self.gauge_scale {
            Some(s) => s * s * (1.0 - q),
            None => (kj.k * kj.k - 0.5 * j.schwarzian) / (j.d1 * j.d1),
        };
        Ok(LocalAtZ {
            f,
            k: kj.k / j.d1,
            dk: (kj.dk * j.d1 - kj.k * j.d2) / j.d1.powi(3),
            badlands: q,
            dz: 1.0 / j.d1,
        })
    }
}

/// Transformed `F̃`, `k̃`, `dk̃/dz̃` and `dz/dz̃` at a point of the original axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalAtZ {
    pub f: f64,
    pub k: f64,
    pub dk: f64,
    pub badlands: f64,
    pub dz: f64,
}

fn check_monotone(map: &dyn LiouvilleMap, (lo, hi): (f64, f64)) -> Result<()> {
    let samples = 64;
    for i in 0..=samples {
        let s = lo.ln() + (hi.ln() - lo.ln()) * i as f64 / samples as f64;
        let z = s.exp();
        let j = map.jet(z)?;
        if !(j.d1 > 0.0) || !j.d1.is_finite() {
            return Err(Error::NonMonotoneMap { at: z });
        }
    }
    Ok(())
}

/// Applies `map` to the problem defined by `field`. The domain is the image
/// of the interval where `Q` exceeds `threshold · Q_peak`.
pub fn transform_f_with_threshold(
    map: Arc<dyn LiouvilleMap>,
    field: &WkbField,
    threshold: f64,
) -> Result<TransformedProblem> {
    transform_f_with_thresholds(map, field, threshold, threshold)
}

/// As [`transform_f_with_threshold`] with separate cliff-side and far-end
/// thresholds.
pub fn transform_f_with_thresholds(
    map: Arc<dyn LiouvilleMap>,
    field: &WkbField,
    cliff: f64,
    far: f64,
) -> Result<TransformedProblem> {
    let z_domain = field.matching_interval_split(cliff, far)?;
    let (da, db) = map.domain();
    if z_domain.0 <= da || z_domain.1 >= db {
        return Err(Error::DomainMismatch);
    }
    check_monotone(map.as_ref(), z_domain)?;
    let domain = (map.value(z_domain.0)?, map.value(z_domain.1)?);
    Ok(TransformedProblem {
        field: field.clone(),
        map,
        z_domain,
        domain,
        gauge_scale: None,
    })
}

pub fn transform_f(map: Arc<dyn LiouvilleMap>, field: &WkbField) -> Result<TransformedProblem> {
    transform_f_with_threshold(map, field, DEFAULT_DOMAIN_THRESHOLD)
}

/// Phase gauge `z̃ = φ_dB(z)/ϰ`, giving `F̃ = ϰ²(1 - Q)`.
pub fn special_gauge(field: &WkbField, scale: f64) -> Result<(Arc<dyn LiouvilleMap>, TransformedProblem)> {
    special_gauge_truncated(field, scale, SPECIAL_GAUGE_THRESHOLD, SPECIAL_GAUGE_THRESHOLD)
}

/// Phase gauge truncated where `Q` falls below `cliff · Q_peak` and
/// `far · Q_peak` on the two sides.
pub fn special_gauge_truncated(
    field: &WkbField,
    scale: f64,
    cliff: f64,
    far: f64,
) -> Result<(Arc<dyn LiouvilleMap>, TransformedProblem)> {
    let map: Arc<dyn LiouvilleMap> = Arc::new(PhaseMap::new(field.clone(), scale)?);
    let mut problem = transform_f_with_thresholds(map.clone(), field, cliff, far)?;
    problem.gauge_scale = Some(scale);
    Ok((map, problem))
}

/// Where the phase-gauge wall dips below zero.
#[derive(Debug, Clone, PartialEq)]
pub struct WallSign {
    pub min: f64,
    pub max: f64,
    /// Sampled `z` intervals on which `V_bold < 0`.
    pub negative: Vec<(f64, f64)>,
}

/// Scans `V_bold = ϰ²Q` over `samples` log-spaced points of the truncated
/// domain.
pub fn wall_sign(problem: &TransformedProblem, samples: usize) -> Result<WallSign> {
    let s = problem
        .gauge_scale()
        .ok_or_else(|| Error::InvalidInput("wall sign needs the phase gauge".into()))?;
    if samples < 2 {
        return Err(Error::InvalidInput("wall sign needs at least two samples".into()));
    }
    let (lo, hi) = problem.z_domain();
    let mut out = WallSign {
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
        negative: Vec::new(),
    };
    let mut open: Option<f64> = None;
    let mut last = lo;
    for i in 0..samples {
        let z = lo * (hi / lo).powf(i as f64 / (samples - 1) as f64);
        let v = s * s * problem.field().badlands(z)?;
        out.min = out.min.min(v);
        out.max = out.max.max(v);
        match (v < 0.0, open) {
            (true, None) => open = Some(z),
            (false, Some(a)) => {
                out.negative.push((a, last));
                open = None;
            }
            _ => {}
        }
        last = z;
    }
    if let Some(a) = open {
        out.negative.push((a, last));
    }
    Ok(out)
}

/// `∫ V_bold dz̃ = ϰ ∫ Q k dz` for a phase-gauge problem.
pub fn wall_integral(problem: &TransformedProblem) -> Result<f64> {
    let s = problem
        .gauge_scale
        .ok_or_else(|| Error::InvalidInput("wall integral needs the phase gauge".into()))?;
    let field = problem.field();
    let integrand = |t: f64| {
        let z = t.exp();
        match (field.badlands(z), field.k(z)) {
            (Ok(q), Ok(k)) => s * q * k * z,
            _ => f64::NAN,
        }
    };
    integrate_outward(integrand, field.badlands_peak()?.z.ln())
}

/// `ϰ ∫ (α')² dz`, equal to [`wall_integral`] after integration by parts.
pub fn wall_integral_from_amplitude(problem: &TransformedProblem) -> Result<f64> {
    let s = problem
        .gauge_scale
        .ok_or_else(|| Error::InvalidInput("wall integral needs the phase gauge".into()))?;
    let field = problem.field();
    let integrand = |t: f64| {
        let z = t.exp();
        match field.alpha_jet(z) {
            Ok((_, da, _)) => s * da * da * z,
            _ => f64::NAN,
        }
    };
    integrate_outward(integrand, field.badlands_peak()?.z.ln())
}

/// Integrates a positive, decaying integrand over the real line by adding
/// unit panels on both sides of `centre` until they no longer contribute.
fn integrate_outward<F: Fn(f64) -> f64>(f: F, centre: f64) -> Result<f64> {
    let panel = |a: f64, b: f64| quad::integrate(&f, a, b, 1e-15).map(|r| r.value);
    let mut total = panel(centre - 1.0, centre + 1.0)?;
    for dir in [-1.0, 1.0] {
        let mut x = centre + dir;
        let mut quiet = 0;
        for _ in 0..2000 {
            let next = x + dir;
            let part = if dir > 0.0 { panel(x, next)? } else { panel(next, x)? };
            total += part;
            x = next;
            if part.abs() < 1e-17 * total.abs() {
                quiet += 1;
                if quiet >= 3 {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
    }
    Ok(total)
}

/// `z_* = Γ(3/4)²/√π`, the fixed point of the inversion symmetry in the
/// universal `n = 4` wall.
pub fn inversion_center() -> f64 {
    gamma_real(0.75).expect("Γ(3/4) is finite").powi(2) / PI.sqrt()
}

/// Universal `n = 4` wall as a function of `u = ln(z/ζ)`:
/// `(z_bold, V_bold) = (z_* + ∫₀ᵘ √(2cosh 2u') du', 5/(8cosh³2u))`.
pub fn universal_v4(u: f64) -> Result<(f64, f64)> {
    let v = 5.0 / (8.0 * (2.0 * u).cosh().powi(3));
    Ok((scaled_phase(4, u.exp())?, v))
}

/// `u` with `universal_v4(u).0 = z_bold`, by Newton from `u = 0`.
pub fn universal_v4_abscissa(z_bold: f64) -> Result<f64> {
    if !z_bold.is_finite() {
        return Err(Error::Domain {
            what: "universal wall abscissa",
            value: z_bold,
        });
    }
    let mut u = 0.0_f64;
    for _ in 0..200 {
        let slope = (2.0 * (2.0 * u).cosh()).sqrt();
        let step = ((universal_v4(u)?.0 - z_bold) / slope).clamp(-1.0, 1.0);
        u -= step;
        if step.abs() <= 1e-15 * u.abs().max(1.0) {
            return Ok(u);
        }
    }
    Err(Error::NonConvergence {
        what: "universal wall abscissa",
        iterations: 200,
    })
}

/// Universal wall for `-Cₙ/zⁿ` at `x = z/ζₙ`.
pub fn universal_vn(n: u32, x: f64) -> Result<(f64, f64)> {
    if n < 3 {
        return Err(Error::InvalidInput(format!("exponent n must exceed 2, got {n}")));
    }
    if !(x > 0.0) {
        return Err(Error::Domain {
            what: "universal wall at non-positive x",
            value: x,
        });
    }
    Ok((scaled_phase(n, x)?, scaled_badlands(n, x)))
}

/// `Iₙ = n√π Γ(2+1/n) sec(π/n) / (12 Γ(1/2+1/n))`.
pub fn universal_integral(n: u32) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidInput(format!("exponent n must exceed 2, got {n}")));
    }
    let nf = n as f64;
    Ok(nf * PI.sqrt() * gamma_real(2.0 + 1.0 / nf)? / ((PI / nf).cos() * 12.0 * gamma_real(0.5 + 1.0 / nf)?))
}

/// `I₄ = 5Γ(5/4)²/(3√π)`.
pub fn universal_integral_4() -> f64 {
    5.0 * gamma_real(1.25).expect("Γ(5/4) is finite").powi(2) / (3.0 * PI.sqrt())
}

/// `∫ Vₙ dz_bold` by quadrature in `ln x`.
pub fn universal_integral_quadrature(n: u32) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidInput(format!("exponent n must exceed 2, got {n}")));
    }
    let nf = n as f64;
    let integrand = |t: f64| {
        let x = t.exp();
        scaled_badlands(n, x) * (1.0 + x.powf(-nf)).sqrt() * x
    };
    integrate_outward(integrand, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::HomogeneousPotential;
    use proptest::prelude::*;

    fn v4_field(ell: f64, kappa: f64) -> WkbField {
        WkbField::new(HomogeneousPotential::quartic(ell).unwrap().into(), kappa * kappa).unwrap()
    }

    #[test]
    fn wall_sign_finds_negative_cliff_region() {
        let (_, quartic) = special_gauge(&v4_field(1.0, 0.2), 0.2f64.sqrt()).unwrap();
        let w = wall_sign(&quartic, 400).unwrap();
        assert!(w.negative.is_empty() && w.min > 0.0);
        assert!((w.max - 0.625).abs() < 1e-3);
        let pot = HomogeneousPotential::new(5, 1.0).unwrap();
        let field = WkbField::new(pot.into(), 1.0).unwrap();
        let (_, p) = special_gauge(&field, 1.0).unwrap();
        let w = wall_sign(&p, 400).unwrap();
        assert_eq!(w.negative.len(), 1);
        let (a, b) = w.negative[0];
        assert_eq!(a, p.z_domain().0);
        // Q changes sign where 4(1+n)xⁿ = n - 4, i.e. x⁵ = 1/24.
        let root = (1.0f64 / 24.0).powf(0.2);
        assert!(b < root && b > 0.95 * root, "{b} vs {root}");
        assert!(w.min < 0.0);
        assert!(wall_sign(&transform_f(Arc::new(Identity), &field).unwrap(), 10).is_err());
    }

    #[test]
    fn tracked_locals_agree_with_inverted_points() {
        let field = v4_field(1.0, 0.3);
        let (map, p) = special_gauge(&field, 0.3f64.sqrt()).unwrap();
        for &z in &[0.2, 1.0, 1.8, 9.0] {
            let a = p.point(map.value(z).unwrap()).unwrap();
            let b = p.local_at_z(z).unwrap();
            assert!((a.z - z).abs() < 1e-12 * z);
            assert!((a.f - b.f).abs() < 1e-10 * a.f.abs().max(1.0));
            assert!((a.k - b.k).abs() < 1e-10 * a.k && (a.dk - b.dk).abs() < 1e-9 * a.dk.abs().max(1e-3));
            assert!((b.dz * map.jet(z).unwrap().d1 - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn universal_abscissa_inverts_wall_coordinate() {
        for &u in &[-3.0, -0.7, 0.0, 0.2, 2.5] {
            let zb = universal_v4(u).unwrap().0;
            assert!((universal_v4_abscissa(zb).unwrap() - u).abs() < 1e-12);
        }
        assert!(universal_v4_abscissa(f64::NAN).is_err());
    }

    #[test]
    fn identity_and_affine_transforms() {
        let field = v4_field(1.0, 0.4);
        let id = transform_f(Arc::new(Identity), &field).unwrap();
        for &z in &[0.1, 1.0, 4.0] {
            assert!((id.f(z).unwrap() - field.f(z).unwrap()).abs() < 1e-14 * field.f(z).unwrap());
        }
        let a = 2.5;
        let aff = transform_f(Arc::new(Affine::new(a, 0.0).unwrap()), &field).unwrap();
        for &zt in &[0.3, 2.0, 9.0] {
            let expected = field.f(zt / a).unwrap() / (a * a);
            assert!((aff.f(zt).unwrap() / expected - 1.0).abs() < 1e-14);
        }
        assert!(Affine::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn inversion_exchanges_cliff_and_far_end() {
        // F̃(z̃) = κ² + ℓ²/z̃⁴ again, with -ζ²/z mapping far end to cliff.
        let (ell, kappa) = (1.3, 0.2);
        let field = v4_field(ell, kappa);
        let zeta = (ell / kappa).sqrt();
        let p = transform_f(Arc::new(Inversion::new(zeta).unwrap()), &field).unwrap();
        for &zt in &[-100.0_f64, -7.0, -1.0, -0.05] {
            let expected = kappa * kappa + ell * ell / zt.powi(4);
            assert!((p.f(zt).unwrap() / expected - 1.0).abs() < 1e-13, "z̃ = {zt}");
        }
    }

    #[test]
    fn explicit_form_agrees() {
        let field = v4_field(1.0, 0.3);
        let maps: Vec<Arc<dyn LiouvilleMap>> = vec![
            Arc::new(Affine::new(0.7, 3.0).unwrap()),
            Arc::new(Inversion::new(1.5).unwrap()),
            Arc::new(Logarithmic::new(2.0).unwrap()),
            Arc::new(PhaseMap::new(field.clone(), 0.5).unwrap()),
        ];
        for m in maps {
            let p = transform_f(m.clone(), &field).unwrap();
            let (a, b) = p.domain();
            for i in 1..10 {
                let zt = a + (b - a) * i as f64 / 10.0;
                let f1 = p.f(zt).unwrap();
                let f2 = p.f_explicit(zt).unwrap();
                assert!(
                    (f1 - f2).abs() < 1e-9 * f1.abs().max(1.0),
                    "{m:?} at {zt}: {f1} vs {f2}"
                );
            }
        }
    }

    #[test]
    fn logarithmic_map_gives_mathieu_form() {
        // F̃ = 2κℓ cosh(2z̃) - 1/4
        let (ell, kappa) = (1.0, 0.37);
        let field = v4_field(ell, kappa);
        let zeta = (ell / kappa).sqrt();
        let p = transform_f(Arc::new(Logarithmic::new(zeta).unwrap()), &field).unwrap();
        for &zt in &[-3.0_f64, -0.5, 0.0, 1.2, 4.0] {
            let expected = 2.0 * kappa * ell * (2.0 * zt).cosh() - 0.25;
            assert!((p.f(zt).unwrap() - expected).abs() < 1e-12 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn wavefunction_scaling_and_round_trip() {
        let psi = Complex64::new(0.3, -1.1);
        assert_eq!(transform_wavefunction(&Identity, psi, 2.0).unwrap(), psi);
        let a = 4.0;
        let scaled = transform_wavefunction(&Affine::new(a, 1.0).unwrap(), psi, 2.0).unwrap();
        assert!((scaled - psi * 2.0).norm() < 1e-15);
        // forward then inverse
        let field = v4_field(1.0, 0.2);
        let m: Arc<dyn LiouvilleMap> = Arc::new(PhaseMap::new(field, 0.4).unwrap());
        let inv = InverseMap::new(m.clone());
        for &z in &[0.01, 0.5, 3.0, 80.0] {
            let zt = m.value(z).unwrap();
            let fwd = transform_wavefunction(m.as_ref(), psi, z).unwrap();
            let back = transform_wavefunction(&inv, fwd, zt).unwrap();
            assert!((back - psi).norm() < 1e-12);
            assert!((m.inverse(zt).unwrap() / z - 1.0).abs() < 1e-12);
            // ρ(z) = z'(z̃) ρ̃(z̃)
            let rho = psi.norm_sqr();
            let rho_t = fwd.norm_sqr();
            assert!((rho - inv.jet(zt).unwrap().d1 * rho_t).abs() < 1e-12 * rho);
        }
    }

    #[test]
    fn composition_identities() {
        let field = v4_field(1.0, 0.25);
        let phase: Arc<dyn LiouvilleMap> = Arc::new(PhaseMap::new(field, 0.5).unwrap());
        let with_id = compose(phase.clone(), Arc::new(Identity)).unwrap();
        let inv: Arc<dyn LiouvilleMap> = Arc::new(InverseMap::new(phase.clone()));
        let round = compose(phase.clone(), inv).unwrap();
        let a1: Arc<dyn LiouvilleMap> = Arc::new(Affine::new(2.0, 1.0).unwrap());
        let a2: Arc<dyn LiouvilleMap> = Arc::new(Affine::new(0.3, -4.0).unwrap());
        let affine = compose(a1, a2).unwrap();
        for &z in &[0.05, 0.8, 2.0, 30.0] {
            let j = phase.jet(z).unwrap();
            let c = with_id.jet(z).unwrap();
            assert!((c.value - j.value).abs() < 1e-15 && (c.schwarzian - j.schwarzian).abs() < 1e-15);
            let r = round.jet(z).unwrap();
            assert!((r.value / z - 1.0).abs() < 1e-12);
            assert!((r.d1 - 1.0).abs() < 1e-12);
            assert!(r.schwarzian.abs() < 1e-9 * j.schwarzian.abs().max(1.0 / (z * z)));
            let f = affine.jet(z).unwrap();
            assert!((f.value - (0.3 * (2.0 * z + 1.0) - 4.0)).abs() < 1e-13);
            assert_eq!(f.schwarzian, 0.0);
        }
        // Inversion has range (-∞, 0), outside the logarithm's domain.
        let bad = compose(
            Arc::new(Inversion::new(1.0).unwrap()),
            Arc::new(Logarithmic::new(1.0).unwrap()),
        );
        assert!(matches!(bad, Err(Error::DomainMismatch)));
    }

    #[test]
    fn special_gauge_is_one_minus_q() {
        let (ell, kappa) = (1.0, 0.1);
        let field = v4_field(ell, kappa);
        let varkappa = (kappa * ell).sqrt();
        let (map, p) = special_gauge(&field, varkappa).unwrap();
        assert_eq!(p.e_bold(), Some(varkappa * varkappa));
        for &z in &[0.05, 0.5, 3.16, 20.0, 300.0] {
            let zt = map.value(z).unwrap();
            let generic = p.f(zt).unwrap();
            let q = field.badlands(z).unwrap();
            assert!((generic / (varkappa * varkappa) - (1.0 - q)).abs() < 1e-10);
            // V_bold is the universal function of u = ln(z/ζ).
            let u = (z * (kappa / ell).sqrt()).ln();
            let (zb, vb) = universal_v4(u).unwrap();
            assert!((p.v_bold(zt).unwrap() - vb).abs() < 1e-12);
            assert!((zt - zb).abs() < 1e-10 * zb.abs().max(1.0));
        }
        let zeta = (ell / kappa).sqrt();
        let peak = p.v_bold(map.value(zeta).unwrap()).unwrap();
        assert!((peak - 0.625).abs() < 1e-12);
        let (a, b) = p.domain();
        assert!(p.v_bold(a).unwrap() < 1e-11 && p.v_bold(b).unwrap() < 1e-11);
    }

    #[test]
    fn special_gauge_for_power_laws() {
        for n in [3, 5] {
            let pot = HomogeneousPotential::new(n, 1.7).unwrap();
            let e = 0.4;
            let field = WkbField::new(pot.into(), e).unwrap();
            let zeta = pot.zeta_n(e);
            let varkappa = e.sqrt() * zeta;
            let (map, p) = special_gauge(&field, varkappa).unwrap();
            for &x in &[0.2, 1.0, 3.0] {
                let (zb, vb) = universal_vn(n, x).unwrap();
                let zt = map.value(x * zeta).unwrap();
                assert!((zt - zb).abs() < 1e-10 * zb.abs().max(1.0));
                assert!((p.v_bold(zt).unwrap() - vb).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn universal_geometry() {
        let zs = inversion_center();
        assert!((zs - 0.847213).abs() < 5e-7);
        let (z0, v0) = universal_v4(0.0).unwrap();
        assert!((z0 - zs).abs() < 1e-14);
        assert_eq!(v0, 0.625);
        for &u in &[0.5, 1.0, 2.0] {
            let (zp, vp) = universal_v4(u).unwrap();
            let (zm, vm) = universal_v4(-u).unwrap();
            assert_eq!(vp, vm);
            assert!((zp + zm - 2.0 * zs).abs() < 1e-12);
            let quad = quad::integrate(|v| (2.0 * (2.0 * v).cosh()).sqrt(), 0.0, u, 1e-14).unwrap();
            assert!((zp - zs - quad.value).abs() < 1e-12);
        }
        // z_* as ∫_{-∞}^0 of dz_bold/du minus the far-end behaviour: the
        // n = 4 phase at x = 1.
        assert!((scaled_phase(4, 1.0).unwrap() - zs).abs() < 1e-14);
    }

    #[test]
    fn universal_integrals() {
        let i4 = universal_integral(4).unwrap();
        assert!((i4 - universal_integral_4()).abs() < 1e-14);
        assert!((i4 - 0.772531).abs() < 5e-7);
        for n in [3, 4, 5, 6] {
            let closed = universal_integral(n).unwrap();
            let numeric = universal_integral_quadrature(n).unwrap();
            assert!((closed - numeric).abs() < 1e-9, "n = {n}: {closed} vs {numeric}");
        }
    }

    #[test]
    fn wall_integral_forms_and_positivity() {
        for n in [3, 4, 5] {
            let pot = HomogeneousPotential::new(n, 1.0).unwrap();
            let e = 0.09;
            let field = WkbField::new(pot.into(), e).unwrap();
            let varkappa = e.sqrt() * pot.zeta_n(e);
            let (_, p) = special_gauge(&field, varkappa).unwrap();
            let a = wall_integral(&p).unwrap();
            let b = wall_integral_from_amplitude(&p).unwrap();
            assert!(a > 0.0);
            assert!((a - b).abs() < 1e-9 * a);
            assert!((a - universal_integral(n).unwrap()).abs() < 1e-9);
        }
        let field = v4_field(1.0, 0.1);
        let generic = transform_f(Arc::new(Identity), &field).unwrap();
        assert!(wall_integral(&generic).is_err());
    }

    proptest! {
        #[test]
        fn cayley_identity_for_random_pairs(
            a in 0.1f64..5.0, b in -3.0f64..3.0, zeta in 0.2f64..5.0,
            choice in 0usize..3, z in 0.05f64..20.0,
        ) {
            let inner: Arc<dyn LiouvilleMap> = match choice {
                0 => Arc::new(Logarithmic::new(zeta).unwrap()),
                1 => Arc::new(Inversion::new(zeta).unwrap()),
                _ => Arc::new(PhaseMap::new(v4_field(zeta, 0.3), 0.7).unwrap()),
            };
            let outer: Arc<dyn LiouvilleMap> = Arc::new(Affine::new(a, b).unwrap());
            let c = compose(inner.clone(), outer.clone()).unwrap();
            let j = c.jet(z).unwrap();
            // Affine post-composition leaves the Schwarzian unchanged.
            prop_assert!((j.schwarzian - inner.jet(z).unwrap().schwarzian).abs() < 1e-12 * (1.0 + j.schwarzian.abs()));
            // z -> w exp(-ζ²/z) through the inverse of a logarithm.
            let w = a + 0.5;
            let e = compose(
                Arc::new(Inversion::new(zeta).unwrap()),
                Arc::new(InverseMap::new(Arc::new(Logarithmic::new(w).unwrap()))),
            ).unwrap();
            let g = zeta * zeta / (z * z) - 2.0 / z;
            let exact = -2.0 * zeta * zeta / z.powi(3) + 2.0 / (z * z) - 0.5 * g * g;
            let got = e.jet(z).unwrap();
            prop_assert!((got.schwarzian - exact).abs() < 1e-10 * (1.0 + exact.abs()));
            prop_assert!((got.value - w * (-zeta * zeta / z).exp()).abs() <= 1e-13 * got.value.max(1e-300));
            let i = inner.jet(z).unwrap();
            let o = outer.jet(i.value).unwrap();
            prop_assert!((j.schwarzian - (i.d1 * i.d1 * o.schwarzian + i.schwarzian)).abs() < 1e-9 * (1.0 + j.schwarzian.abs()));
            let back = InverseMap::new(inner.clone());
            let r = compose(inner.clone(), Arc::new(back)).unwrap().jet(z).unwrap();
            prop_assert!(r.schwarzian.abs() < 1e-9 * (1.0 + i.schwarzian.abs()));
        }
    }
}
