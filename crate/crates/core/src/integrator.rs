//! Scenarios and trajectory simulation for
//! `U' = A U - k(t) B U(t - tau) + F(U)` in the truncated eigenbasis.

#[allow(unused_imports)] // float math under no_std
use num_traits::Float;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DVector;

use crate::delay::DelayCoefficient;
use crate::energy::{self, EnergyParts};
use crate::error::{Error, Result};
use crate::history::{steps_per_delay, HistoryBuffer, HistoryDescriptor};
use crate::nonlinearity::Nonlinearity;
use crate::spectral::{SpectralSystem, State};
use crate::steps::{self, DelayedField};

pub const DEFAULT_BLOWUP_CEILING: f64 = 1e8;
/// RK4 guideline `dt <= 2.8 / sqrt(lambda_max)` for the undamped oscillator part.
pub const RK4_STABILITY_CONSTANT: f64 = 2.8;

#[derive(Debug, Clone)]
pub struct Scenario {
    pub sys: SpectralSystem,
    pub k: DelayCoefficient,
    pub nl: Nonlinearity,
    pub u0: DVector<f64>,
    pub v0: DVector<f64>,
    pub history: HistoryDescriptor,
    pub dt: f64,
    pub t_end: f64,
    pub blowup_ceiling: f64,
}

impl Scenario {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        sys: SpectralSystem,
        k: DelayCoefficient,
        nl: Nonlinearity,
        u0: DVector<f64>,
        v0: DVector<f64>,
        history: HistoryDescriptor,
        dt: f64,
        t_end: f64,
    ) -> Result<Self> {
        let scn = Self { sys, k, nl, u0, v0, history, dt, t_end, blowup_ceiling: DEFAULT_BLOWUP_CEILING };
        scn.validate()?;
        Ok(scn)
    }

    pub fn with_blowup_ceiling(mut self, ceiling: f64) -> Self {
        self.blowup_ceiling = ceiling;
        self
    }

    pub fn tau(&self) -> f64 {
        self.k.tau()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.sys.n();
        for v in [&self.u0, &self.v0] {
            if v.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: v.len() });
            }
        }
        steps_per_delay(self.tau(), self.dt)?;
        self.step_count()?;
        self.history.check_compatible(&self.v0)?;
        if let Nonlinearity::Power(p) = &self.nl {
            if p.synthesis().ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, got: p.synthesis().ncols() });
            }
        }
        if !(self.blowup_ceiling > 0.0) {
            return Err(Error::InvalidParameter { name: "blowup_ceiling", reason: "must be positive".into() });
        }
        Ok(())
    }

    /// Number of steps to reach `t_end`; `t_end` must be a multiple of `dt`.
    pub fn step_count(&self) -> Result<usize> {
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidParameter { name: "t_end", reason: format!("must be finite and >= 0, got {}", self.t_end) });
        }
        let ratio = self.t_end / self.dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidParameter {
                name: "t_end",
                reason: format!("t_end = {} is not a multiple of dt = {}", self.t_end, self.dt),
            });
        }
        Ok(steps as usize)
    }

    /// Warning text when `dt` exceeds the RK4 stability guideline.
    pub fn stability_warning(&self) -> Option<String> {
        let lmax = self.sys.lambdas()[self.sys.n() - 1];
        let limit = RK4_STABILITY_CONSTANT / lmax.sqrt();
        (self.dt > limit).then(|| format!("dt = {} exceeds the RK4 guideline 2.8/sqrt(lambda_max) = {limit}", self.dt))
    }

    /// Same scenario with initial data and history multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.u0 *= s;
        out.v0 *= s;
        out.history = self.history.scaled(s);
        out
    }

    pub fn initial_state(&self) -> State {
        State { u: self.u0.clone(), v: self.v0.clone() }
    }
}

/// Vector field on `y = (u, v)`.
struct WaveField<'a> {
    sys: &'a SpectralSystem,
    k: &'a DelayCoefficient,
    nl: &'a Nonlinearity,
}

impl DelayedField for WaveField<'_> {
    fn dim(&self) -> usize {
        2 * self.sys.n()
    }

    fn eval(&self, t: f64, y: &DVector<f64>, delayed: &DVector<f64>) -> DVector<f64> {
        let n = self.sys.n();
        let u = y.rows(0, n);
        let v = y.rows(n, n);
        let mut dv = -(self.sys.damping() * v);
        for i in 0..n {
            dv[i] -= self.sys.lambdas()[i] * u[i];
        }
        let kt = self.k.eval(t);
        if kt != 0.0 {
            dv -= (self.sys.delay_op() * delayed) * kt;
        }
        if !self.nl.is_zero() {
            dv += self.nl.grad_psi(&u.into_owned());
        }
        let mut out = DVector::zeros(2 * n);
        out.rows_mut(0, n).copy_from(&v);
        out.rows_mut(n, n).copy_from(&dv);
        out
    }

    fn history_part(&self, y: &DVector<f64>) -> DVector<f64> {
        y.rows(self.sys.n(), self.sys.n()).into_owned()
    }
}

fn pack(st: &State) -> DVector<f64> {
    let n = st.u.len();
    let mut y = DVector::zeros(2 * n);
    y.rows_mut(0, n).copy_from(&st.u);
    y.rows_mut(n, n).copy_from(&st.v);
    y
}

fn unpack(y: &DVector<f64>, n: usize) -> State {
    State { u: y.rows(0, n).into_owned(), v: y.rows(n, n).into_owned() }
}

/// History buffer on `[-tau, 0]` sampled from the scenario's descriptor.
pub fn initial_history(scn: &Scenario) -> Result<HistoryBuffer> {
    HistoryBuffer::from_descriptor(scn.tau(), scn.dt, &scn.history, &scn.v0)
}

/// One RK4 step from grid index `step_index` (the history head).
pub fn step(scn: &Scenario, state: &State, history: &HistoryBuffer, step_index: i64) -> Result<State> {
    scn.sys.check_dim(state)?;
    let field = WaveField { sys: &scn.sys, k: &scn.k, nl: &scn.nl };
    let y = steps::rk4_step(&field, step_index, &pack(state), history)?;
    Ok(unpack(&y, scn.sys.n()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Completed,
    /// `||U||_W` exceeded the ceiling (or became non-finite) at this time.
    Diverged { t: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// `E(t)`.
    pub energy: Vec<f64>,
    pub w_norms: Vec<f64>,
    /// `|k(t)| ||BB^* v(t - tau)||`.
    pub delayed_forcing_norms: Vec<f64>,
    /// `1/2 |u_t|^2`.
    pub kinetic: Vec<f64>,
    /// `1/2 |A^{1/2}u|^2`.
    pub elastic: Vec<f64>,
    /// `psi(u)`.
    pub potential: Vec<f64>,
    /// `1/2 ∫_{t-tau}^t |k(s+tau)| |B^*u_t(s)|^2 ds`.
    pub history: Vec<f64>,
    pub outcome: Outcome,
}

impl TrajectoryRecord {
    fn with_capacity(dt: f64, cap: usize) -> Self {
        Self {
            dt,
            times: Vec::with_capacity(cap),
            states: Vec::with_capacity(cap),
            energy: Vec::with_capacity(cap),
            w_norms: Vec::with_capacity(cap),
            delayed_forcing_norms: Vec::with_capacity(cap),
            kinetic: Vec::with_capacity(cap),
            elastic: Vec::with_capacity(cap),
            potential: Vec::with_capacity(cap),
            history: Vec::with_capacity(cap),
            outcome: Outcome::Completed,
        }
    }

    fn push(&mut self, t: f64, st: State, parts: EnergyParts, w_norm: f64, forcing: f64) {
        self.times.push(t);
        self.states.push(st);
        self.energy.push(parts.total);
        self.w_norms.push(w_norm);
        self.delayed_forcing_norms.push(forcing);
        self.kinetic.push(parts.kinetic);
        self.elastic.push(parts.elastic);
        self.potential.push(parts.potential);
        self.history.push(parts.history);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn diverged(&self) -> bool {
        matches!(self.outcome, Outcome::Diverged { .. })
    }

    pub fn final_state(&self) -> Option<&State> {
        self.states.last()
    }
}

/// Integrates from 0 to `t_end`, recording energy, phase-space norm and the
/// delayed forcing norm at every grid time. Stops early, with
/// [`Outcome::Diverged`], once `||U||_W` exceeds the scenario's ceiling.
pub fn simulate(scn: &Scenario) -> Result<TrajectoryRecord> {
    scn.validate()?;
    let n = scn.sys.n();
    let steps = scn.step_count()?;
    let m = steps_per_delay(scn.tau(), scn.dt)? as i64;
    let mut history = initial_history(scn)?;
    let field = WaveField { sys: &scn.sys, k: &scn.k, nl: &scn.nl };
    let mut rec = TrajectoryRecord::with_capacity(scn.dt, steps + 1);

    let record = |rec: &mut TrajectoryRecord, st: State, history: &HistoryBuffer, idx: i64| -> Result<()> {
        let t = idx as f64 * scn.dt;
        let parts = energy::energy(&scn.sys, &scn.nl, &scn.k, &st, history)?;
        let w = scn.sys.w_norm(&st)?;
        let delayed = history.at_index(idx - m)?;
        let forcing = scn.k.eval(t).abs() * (scn.sys.delay_op() * delayed).norm();
        rec.push(t, st, parts, w, forcing);
        Ok(())
    };

    let mut y = pack(&scn.initial_state());
    record(&mut rec, scn.initial_state(), &history, 0)?;
    for i in 0..steps as i64 {
        y = steps::rk4_step(&field, i, &y, &history)?;
        let st = unpack(&y, n);
        let w = scn.sys.w_norm(&st).unwrap_or(f64::INFINITY);
        if !w.is_finite() || w > scn.blowup_ceiling || y.iter().any(|x| !x.is_finite()) {
            rec.outcome = Outcome::Diverged { t: (i + 1) as f64 * scn.dt };
            break;
        }
        history.push(st.v.clone());
        record(&mut rec, st, &history, i + 1)?;
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::wave_preset;
    use core::f64::consts::PI;
    use nalgebra::DMatrix;

    fn oscillator() -> SpectralSystem {
        SpectralSystem::new(DVector::from_element(1, 1.0), DMatrix::zeros(1, 1), DMatrix::zeros(1, 1), 0.0).unwrap()
    }

    #[test]
    fn harmonic_oscillator_returns_after_one_period() {
        // 2 pi is not a multiple of 1e-3, so use the nearest grid time and
        // compare against the exact solution there.
        let dt = 1e-3;
        let steps = (2.0 * PI / dt).round();
        let t_end = steps * dt;
        let scn = Scenario::new(
            oscillator(),
            DelayCoefficient::zero(dt * 10.0).unwrap(),
            Nonlinearity::Zero,
            DVector::from_element(1, 1.0),
            DVector::zeros(1),
            HistoryDescriptor::Zero,
            dt,
            t_end,
        )
        .unwrap();
        let rec = simulate(&scn).unwrap();
        let last = rec.final_state().unwrap();
        assert!((last.u[0] - t_end.cos()).abs() < 1e-10);
        assert!((last.v[0] + t_end.sin()).abs() < 1e-10);
        assert!((last.u[0] - 1.0).abs() < 1e-6 && last.v[0].abs() < 1e-3);
    }

    #[test]
    fn zero_end_time_gives_single_record() {
        let sys = wave_preset(2, 1.0, (0.0, PI), Some((0.0, PI))).unwrap();
        let u0 = DVector::from_vec(alloc::vec![1.0, 0.0]);
        let scn = Scenario::new(
            sys,
            DelayCoefficient::constant(0.1, 0.5).unwrap(),
            Nonlinearity::Zero,
            u0,
            DVector::zeros(2),
            HistoryDescriptor::Zero,
            0.01,
            0.0,
        )
        .unwrap();
        let rec = simulate(&scn).unwrap();
        assert_eq!(rec.len(), 1);
        assert!((rec.energy[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn scenario_validation() {
        let sys = wave_preset(2, 1.0, (0.0, PI), Some((0.0, PI))).unwrap();
        let k = DelayCoefficient::constant(0.1, 1.0).unwrap();
        let mk = |dt: f64, t_end: f64, v0: DVector<f64>, h: HistoryDescriptor| {
            Scenario::new(sys.clone(), k.clone(), Nonlinearity::Zero, DVector::zeros(2), v0, h, dt, t_end)
        };
        assert!(mk(0.3, 3.0, DVector::zeros(2), HistoryDescriptor::Zero).is_err());
        assert!(mk(0.1, 0.25, DVector::zeros(2), HistoryDescriptor::Zero).is_err());
        assert!(mk(0.1, 1.0, DVector::from_element(2, 1.0), HistoryDescriptor::Zero).is_err());
        assert!(mk(0.1, 1.0, DVector::zeros(3), HistoryDescriptor::Zero).is_err());
        assert!(mk(0.1, 1.0, DVector::zeros(2), HistoryDescriptor::Zero).is_ok());
    }

    #[test]
    fn blowup_is_reported() {
        // anti-damped oscillator through a large negative-feedback delay term
        let sys = wave_preset(1, 0.01, (0.0, PI), Some((0.0, PI))).unwrap();
        let v0 = DVector::from_element(1, 1.0);
        let scn = Scenario::new(
            sys,
            DelayCoefficient::constant(-5.0, 0.1).unwrap(),
            Nonlinearity::Zero,
            DVector::zeros(1),
            v0.clone(),
            HistoryDescriptor::Constant(v0),
            0.01,
            50.0,
        )
        .unwrap()
        .with_blowup_ceiling(1e3);
        let rec = simulate(&scn).unwrap();
        assert!(rec.diverged());
        assert!(rec.w_norms.iter().all(|&w| w <= 1e3));
    }
}
