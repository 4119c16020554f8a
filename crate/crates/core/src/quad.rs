//! Globally adaptive Gauss-Legendre quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

const RULE_DEGREE: usize = 20;
const MAX_SUBDIVISIONS: usize = 20_000;

fn rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(RULE_DEGREE).expect("valid Gauss-Legendre degree"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn estimate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Piece {
    let g = rule();
    let m = 0.5 * (a + b);
    let whole = g.integrate(a, b, f);
    let halves = g.integrate(a, m, f) + g.integrate(m, b, f);
    let round = 64.0 * f64::EPSILON * halves.abs();
    Piece {
        a,
        b,
        value: halves,
        error: ((whole - halves).abs() - round).max(0.0),
    }
}

/// Integrates `f` over `[a, b]` to an absolute tolerance `tol`, always
/// subdividing the interval with the largest error estimate.
pub fn integrate<F>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInput("quadrature limits must be finite".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("quadrature tolerance must be positive".into()));
    }
    let per_piece = 3 * RULE_DEGREE;
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let mut heap = BinaryHeap::new();
    let first = estimate(&f, a, b);
    let mut value = first.value;
    let mut error = first.error;
    heap.push(first);
    let mut evaluations = per_piece;
    while error > tol {
        if heap.len() > MAX_SUBDIVISIONS {
            return Err(Error::NonConvergence {
                what: "adaptive quadrature",
                iterations: evaluations,
            });
        }
        let worst = heap.pop().expect("heap holds at least one piece");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            return Err(Error::NonConvergence {
                what: "adaptive quadrature (interval underflow)",
                iterations: evaluations,
            });
        }
        let left = estimate(&f, worst.a, m);
        let right = estimate(&f, m, worst.b);
        evaluations += 2 * per_piece;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        if heap.len() % 64 == 0 {
            // Refresh the running sums to avoid drift from cancellation.
            value = heap.iter().map(|p| p.value).sum();
            error = heap.iter().map(|p| p.error).sum();
        }
    }
    if !value.is_finite() {
        return Err(Error::NonConvergence {
            what: "quadrature (non-finite integral)",
            iterations: evaluations,
        });
    }
    Ok(QuadResult {
        value,
        error,
        evaluations,
    })
}

/// Integrates over consecutive panels `[p0, p1], [p1, p2], …`, sharing the
/// tolerance evenly.
pub fn integrate_panels<F>(f: F, points: &[f64], tol: f64) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    let mut total = QuadResult {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };
    if points.len() < 2 {
        return Ok(total);
    }
    let share = tol / (points.len() - 1) as f64;
    for w in points.windows(2) {
        let r = integrate(&f, w[0], w[1], share)?;
        total.value += r.value;
        total.error += r.error;
        total.evaluations += r.evaluations;
    }
    Ok(total)
}
