//! Classical RK4 for systems with one constant delay, advanced step by step on
//! a grid with `tau = m dt`.
//!
//! On each delay interval the delayed argument only touches the already
//! computed past, so it acts as a known forcing term. Stage times `t` and
//! `t + dt` hit the grid exactly; the midpoint stage is interpolated from the
//! history within a single delay interval.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::history::HistoryBuffer;

/// Right-hand side `y' = f(t, y, z(t - tau))` where `z` is the part of the
/// state recorded in the history buffer.
pub trait DelayedField {
    fn dim(&self) -> usize;

    fn eval(&self, t: f64, y: &DVector<f64>, delayed: &DVector<f64>) -> DVector<f64>;

    /// Part of the state recorded in the history buffer.
    fn history_part(&self, y: &DVector<f64>) -> DVector<f64>;
}

/// One RK4 step from grid index `step` (time `step * dt`) to `step + 1`.
/// `history` must have its newest sample at index `step`.
pub fn rk4_step<F: DelayedField>(field: &F, step: i64, y: &DVector<f64>, history: &HistoryBuffer) -> Result<DVector<f64>> {
    if history.head_index() != step {
        return Err(Error::HistoryGap {
            t: step as f64 * history.dt(),
            start: history.t_head(),
            end: history.t_head(),
        });
    }
    let dt = history.dt();
    let m = history.steps_per_delay() as i64;
    let t = step as f64 * dt;
    let lag = step - m;

    let d0 = history.interpolate(lag, 0.0)?;
    let d_half = history.interpolate(lag, 0.5)?;
    let d1 = history.interpolate(lag + 1, 0.0)?;

    let k1 = field.eval(t, y, &d0);
    let k2 = field.eval(t + 0.5 * dt, &(y + &k1 * (0.5 * dt)), &d_half);
    let k3 = field.eval(t + 0.5 * dt, &(y + &k2 * (0.5 * dt)), &d_half);
    let k4 = field.eval(t + dt, &(y + &k3 * dt), &d1);

    Ok(y + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0))
}

/// Integrates `steps` steps, pushing each new history part into `history`.
/// Returns every state including the initial one.
pub fn integrate<F: DelayedField>(
    field: &F,
    y0: DVector<f64>,
    history: &mut HistoryBuffer,
    steps: usize,
) -> Result<alloc::vec::Vec<DVector<f64>>> {
    let mut out = alloc::vec::Vec::with_capacity(steps + 1);
    let mut y = y0;
    let start = history.head_index();
    out.push(y.clone());
    for s in 0..steps as i64 {
        y = rk4_step(field, start + s, &y, history)?;
        history.push(field.history_part(&y));
        out.push(y.clone());
    }
    Ok(out)
}
