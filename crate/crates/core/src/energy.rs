//! The delayed energy functional
//!
//! ```text
//! E(t) = 1/2 |u_t|^2 + 1/2 |A^{1/2}u|^2 - psi(u) + 1/2 ∫_{t-tau}^t |k(s+tau)| |B^* u_t(s)|^2 ds
//! ```
//!
//! and the pointwise checks built on it: the Gronwall growth bound with factor
//! `Cbar(t)` and the small-data lower bounds.

#[allow(unused_imports)] // float math under no_std
use num_traits::Float;
use alloc::vec::Vec;


use crate::delay::DelayCoefficient;
use crate::error::{Error, Result};
use crate::history::HistoryBuffer;
use crate::integrator::TrajectoryRecord;
use crate::nonlinearity::Nonlinearity;
use crate::spectral::{SpectralSystem, State};

/// The four terms of `E(t)`; `total = kinetic + elastic - potential + history`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    pub kinetic: f64,
    pub elastic: f64,
    pub potential: f64,
    pub history: f64,
    pub total: f64,
}

/// `∫_{t-tau}^t |k(s+tau)| <BB^* v(s), v(s)> ds` by the trapezoid rule on the
/// history grid.
pub fn history_integral(sys: &SpectralSystem, k: &DelayCoefficient, history: &HistoryBuffer) -> f64 {
    let tau = k.tau();
    let dt = history.dt();
    let m = history.steps_per_delay();
    history
        .window()
        .enumerate()
        .map(|(i, (s, v))| {
            let w = if i == 0 || i == m { 0.5 } else { 1.0 };
            w * k.eval(s + tau).abs() * sys.delay_energy(v)
        })
        .sum::<f64>()
        * dt
}

/// `E(t)` with `history` holding `[t - tau, t]`; its newest sample must be
/// the velocity of `state`.
pub fn energy(
    sys: &SpectralSystem,
    nl: &Nonlinearity,
    k: &DelayCoefficient,
    state: &State,
    history: &HistoryBuffer,
) -> Result<EnergyParts> {
    sys.check_dim(state)?;
    let tau = k.tau();
    if (history.tau() - tau).abs() > 1e-12 * tau {
        return Err(Error::HistoryGap { t: history.t_head() - tau, start: history.t_head() - history.tau(), end: history.t_head() });
    }
    let kinetic = 0.5 * state.v.norm_squared();
    let elastic = 0.5 * sys.elastic_norm(&state.u).powi(2);
    let potential = nl.psi(&state.u);
    let history = 0.5 * history_integral(sys, k, history);
    Ok(EnergyParts { kinetic, elastic, potential, history, total: kinetic + elastic - potential + history })
}

/// Gronwall factor `Cbar(t) = exp(2 b^2 ∫_0^t (|k(s)| + |k(s+tau)|) ds)`.
pub fn cbar(k: &DelayCoefficient, b: f64, t: f64) -> Result<f64> {
    let direct = k.abs_integral(0.0, t)?;
    let shifted = k.shifted_cumulative(t)?;
    Ok((2.0 * b * b * (direct + shifted)).exp())
}

/// Right-hand side of the energy identity
/// `dE/dt = -|C^* v|^2 - k(t)<B^* v(t), B^* v(t-tau)> + 1/2|k(t+tau)||B^* v(t)|^2 - 1/2|k(t)||B^* v(t-tau)|^2`.
pub fn energy_rate(sys: &SpectralSystem, k: &DelayCoefficient, t: f64, v: &nalgebra::DVector<f64>, v_delayed: &nalgebra::DVector<f64>) -> f64 {
    let dissipation = (sys.damping() * v).dot(v);
    let bv = sys.delay_op() * v;
    let cross = bv.dot(v_delayed);
    let kt = k.eval(t);
    -dissipation - kt * cross + 0.5 * k.eval(t + k.tau()).abs() * bv.dot(v)
        - 0.5 * kt.abs() * sys.delay_energy(v_delayed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyGrowthReport {
    /// Whether `E(t) >= 1/4 |u_t|^2` held at every recorded time.
    pub hypothesis_holds: bool,
    pub first_hypothesis_violation: Option<f64>,
    /// `E(t) <= Cbar(t) E(0) (1 + tol)` at every recorded time.
    pub passes: bool,
    pub first_failure: Option<f64>,
    /// `min_t (Cbar(t) E(0) (1 + tol) - E(t))`.
    pub worst_margin: f64,
    /// `max_t E(t) / (Cbar(t) E(0))` (0 when `E(0) = 0` and `E = 0`).
    pub worst_ratio: f64,
}

/// Pointwise Gronwall check on a recorded trajectory.
pub fn check_energy_growth(traj: &TrajectoryRecord, k: &DelayCoefficient, b: f64, tol: f64) -> Result<EnergyGrowthReport> {
    let e0 = traj.energy.first().copied().unwrap_or(0.0);
    let mut report = EnergyGrowthReport {
        hypothesis_holds: true,
        first_hypothesis_violation: None,
        passes: true,
        first_failure: None,
        worst_margin: f64::INFINITY,
        worst_ratio: 0.0,
    };
    for (i, &t) in traj.times.iter().enumerate() {
        let e = traj.energy[i];
        if e < 0.5 * traj.kinetic[i] && report.hypothesis_holds {
            report.hypothesis_holds = false;
            report.first_hypothesis_violation = Some(t);
        }
        let bound = cbar(k, b, t)? * e0;
        let margin = bound * (1.0 + tol) - e;
        if margin < report.worst_margin {
            report.worst_margin = margin;
        }
        let ratio = if bound > 0.0 {
            e / bound
        } else if e <= 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        report.worst_ratio = report.worst_ratio.max(ratio);
        if margin < 0.0 && report.passes {
            report.passes = false;
            report.first_failure = Some(t);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundReport {
    /// `E > 1/4 |u_t|^2 + 1/4 |A^{1/2}u|^2 + 1/4 ∫ |k(s+tau)| |B^*u_t|^2`.
    pub full_bound_holds: bool,
    pub first_full_failure: Option<f64>,
    pub worst_full_margin: f64,
    /// `E > 1/4 |U|_W^2`.
    pub w_bound_holds: bool,
    pub first_w_failure: Option<f64>,
    pub worst_w_margin: f64,
}

impl LowerBoundReport {
    pub fn passes(&self) -> bool {
        self.full_bound_holds && self.w_bound_holds
    }
}

// Strict inequality, except that the null solution (both sides zero) passes.
fn strictly_above(e: f64, rhs: f64) -> bool {
    e > rhs || (e == 0.0 && rhs == 0.0)
}

/// Pointwise small-data lower bounds on a recorded trajectory.
pub fn check_lower_bound(traj: &TrajectoryRecord) -> LowerBoundReport {
    let mut r = LowerBoundReport {
        full_bound_holds: true,
        first_full_failure: None,
        worst_full_margin: f64::INFINITY,
        w_bound_holds: true,
        first_w_failure: None,
        worst_w_margin: f64::INFINITY,
    };
    for (i, &t) in traj.times.iter().enumerate() {
        let e = traj.energy[i];
        let full = 0.5 * (traj.kinetic[i] + traj.elastic[i] + traj.history[i]);
        let w = 0.25 * traj.w_norms[i] * traj.w_norms[i];
        r.worst_full_margin = r.worst_full_margin.min(e - full);
        r.worst_w_margin = r.worst_w_margin.min(e - w);
        if !strictly_above(e, full) && r.full_bound_holds {
            r.full_bound_holds = false;
            r.first_full_failure = Some(t);
        }
        if !strictly_above(e, w) && r.w_bound_holds {
            r.w_bound_holds = false;
            r.first_w_failure = Some(t);
        }
    }
    r
}

/// Central finite differences of the recorded energy at interior samples.
pub fn energy_derivative_fd(traj: &TrajectoryRecord) -> Vec<(f64, f64)> {
    let dt = traj.dt;
    (1..traj.energy.len().saturating_sub(1))
        .map(|i| (traj.times[i], (traj.energy[i + 1] - traj.energy[i - 1]) / (2.0 * dt)))
        .collect()
}
