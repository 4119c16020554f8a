//! Thin wrapper over the DOP853 integrator with fallible right-hand sides.

use std::cell::RefCell;

use ode_solvers::{DVector, Dop853, OutputType, System};

use crate::error::{Error, Result};

/// Step-size control for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: u32,
}

impl Default for OdeControl {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOutcome<const N: usize> {
    pub y: [f64; N],
    pub accepted_steps: u32,
    pub rejected_steps: u32,
    pub evaluations: u32,
}

struct Wrapped<'a, const N: usize, F> {
    f: &'a F,
    failure: &'a RefCell<Option<Error>>,
}

// The solver's tableau puts its twelfth stage at the wrong abscissa, so the
// independent variable is carried as an extra component with unit slope.
impl<const N: usize, F> System<f64, DVector<f64>> for Wrapped<'_, N, F>
where
    F: Fn(f64, &[f64; N], &mut [f64; N]) -> Result<()>,
{
    fn system(&self, _t: f64, y: &DVector<f64>, dy: &mut DVector<f64>) {
        let mut out = [0.0; N];
        let yin: [f64; N] = std::array::from_fn(|i| y[i]);
        match (self.f)(y[N], &yin, &mut out) {
            Ok(()) => {
                for i in 0..N {
                    dy[i] = out[i];
                }
                dy[N] = 1.0;
            }
            Err(e) => {
                dy.fill(0.0);
                let mut slot = self.failure.borrow_mut();
                if slot.is_none() {
                    *slot = Some(e);
                }
            }
        }
    }

    fn solout(&mut self, _x: f64, _y: &DVector<f64>, _dy: &DVector<f64>) -> bool {
        self.failure.borrow().is_some()
    }
}

/// Integrates `y' = f(x, y)` from `x0` to `x1` and returns the final state.
pub fn integrate<const N: usize, F>(f: F, x0: f64, x1: f64, y0: [f64; N], ctl: &OdeControl) -> Result<OdeOutcome<N>>
where
    F: Fn(f64, &[f64; N], &mut [f64; N]) -> Result<()>,
{
    if !(ctl.rtol > 0.0 && ctl.rtol < 1.0) || !(ctl.atol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tolerances must be positive, got rtol = {}, atol = {}",
            ctl.rtol, ctl.atol
        )));
    }
    if !x0.is_finite() || !x1.is_finite() || x0 == x1 {
        return Err(Error::InvalidInput(format!("bad integration interval [{x0}, {x1}]")));
    }
    let failure = RefCell::new(None);
    let system = Wrapped::<N, F> {
        f: &f,
        failure: &failure,
    };
    let mut solver = Dop853::from_param(
        system,
        x0,
        x1,
        0.0,
        DVector::from_iterator(N + 1, y0.iter().copied().chain(std::iter::once(x0))),
        ctl.rtol,
        ctl.atol,
        0.9,
        0.0,
        0.333,
        6.0,
        (x1 - x0).abs(),
        0.0,
        ctl.max_steps,
        u32::MAX,
        OutputType::Sparse,
    );
    let run = solver.integrate();
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    let stats = run.map_err(|e| Error::Integration(e.to_string()))?;
    let (xs, ys) = solver.results().get();
    let (&x_last, y_last) = xs
        .last()
        .zip(ys.last())
        .ok_or_else(|| Error::Integration("no output".into()))?;
    if (x_last - x1).abs() > 1e-12 * x1.abs().max(1.0) {
        return Err(Error::Integration(format!("stopped at x = {x_last} before {x1}")));
    }
    Ok(OdeOutcome {
        y: std::array::from_fn(|i| y_last[i]),
        accepted_steps: stats.accepted_steps,
        rejected_steps: stats.rejected_steps,
        evaluations: stats.num_eval,
    })
}
