//! Uniformly sampled delay history.
//!
//! Samples live on the global grid `t = j dt` and `tau = m dt` for an integer
//! `m`. Besides the window `[t - tau, t]` the buffer keeps two older samples,
//! so a cubic stencil for a query in `[t - tau, t - tau + dt]` can always stay
//! inside one delay interval `[p tau, (p + 1) tau]`. The solution is only
//! piecewise smooth across multiples of `tau`, and stencils never straddle them.

#[allow(unused_imports)] // float math under no_std
use num_traits::Float;
use alloc::collections::VecDeque;
use alloc::format;

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Extra samples kept before `t - tau`.
const TRAILING: usize = 2;
/// Tolerance for `v0` against the history value at `s = 0`.
pub const COMPATIBILITY_TOL: f64 = 1e-10;

/// Initial velocity history `u_t(s)`, `s in [-tau, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub enum HistoryDescriptor {
    Zero,
    Constant(DVector<f64>),
    /// `amplitude * sin(frequency * s + phase)`.
    Sinusoid { amplitude: DVector<f64>, frequency: f64, phase: f64 },
}

impl HistoryDescriptor {
    pub fn eval(&self, s: f64, n: usize) -> DVector<f64> {
        match self {
            HistoryDescriptor::Zero => DVector::zeros(n),
            HistoryDescriptor::Constant(v) => v.clone(),
            HistoryDescriptor::Sinusoid { amplitude, frequency, phase } => amplitude * (frequency * s + phase).sin(),
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            HistoryDescriptor::Zero => None,
            HistoryDescriptor::Constant(v) => Some(v.len()),
            HistoryDescriptor::Sinusoid { amplitude, .. } => Some(amplitude.len()),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        match self {
            HistoryDescriptor::Zero => HistoryDescriptor::Zero,
            HistoryDescriptor::Constant(v) => HistoryDescriptor::Constant(v * s),
            HistoryDescriptor::Sinusoid { amplitude, frequency, phase } => HistoryDescriptor::Sinusoid {
                amplitude: amplitude * s,
                frequency: *frequency,
                phase: *phase,
            },
        }
    }

    /// Rejects a history whose value at `s = 0` differs from `v0`.
    pub fn check_compatible(&self, v0: &DVector<f64>) -> Result<()> {
        if let Some(d) = self.dim() {
            if d != v0.len() {
                return Err(Error::DimensionMismatch { expected: v0.len(), got: d });
            }
        }
        let deviation = (self.eval(0.0, v0.len()) - v0).amax();
        if deviation > COMPATIBILITY_TOL {
            return Err(Error::IncompatibleHistory { deviation });
        }
        Ok(())
    }
}

/// Integer number of steps per delay, or an error naming both values.
pub fn steps_per_delay(tau: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter { name: "dt", reason: format!("must be positive, got {dt}") });
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter { name: "tau", reason: format!("must be positive, got {tau}") });
    }
    let ratio = tau / dt;
    let m = ratio.round();
    if m < 1.0 || (ratio - m).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("tau / dt must be a positive integer (tau = {tau}, dt = {dt}, ratio = {ratio})"),
        });
    }
    Ok(m as usize)
}

#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    tau: f64,
    dt: f64,
    steps_per_delay: usize,
    samples: VecDeque<DVector<f64>>,
    /// Grid index of the newest sample.
    head: i64,
}

impl HistoryBuffer {
    /// Fills the buffer on `[-tau - 2 dt, 0]` from `f(s)`.
    pub fn from_fn<F: FnMut(f64) -> DVector<f64>>(tau: f64, dt: f64, mut f: F) -> Result<Self> {
        let m = steps_per_delay(tau, dt)?;
        let cap = m + 1 + TRAILING;
        let mut samples = VecDeque::with_capacity(cap);
        for j in -(cap as i64 - 1)..=0 {
            samples.push_back(f(j as f64 * dt));
        }
        Ok(Self { tau, dt, steps_per_delay: m, samples, head: 0 })
    }

    /// Samples `desc` and checks its value at `s = 0` against `v0`.
    pub fn from_descriptor(tau: f64, dt: f64, desc: &HistoryDescriptor, v0: &DVector<f64>) -> Result<Self> {
        desc.check_compatible(v0)?;
        let n = v0.len();
        let mut buf = Self::from_fn(tau, dt, |s| desc.eval(s, n))?;
        // s = 0 carries exactly v0
        *buf.samples.back_mut().unwrap() = v0.clone();
        Ok(buf)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps_per_delay(&self) -> usize {
        self.steps_per_delay
    }

    pub fn head_index(&self) -> i64 {
        self.head
    }

    pub fn t_head(&self) -> f64 {
        self.head as f64 * self.dt
    }

    /// Total samples held (`tau / dt + 3`).
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn oldest(&self) -> i64 {
        self.head - self.samples.len() as i64 + 1
    }

    /// Appends the sample at the next grid time and drops the oldest one.
    pub fn push(&mut self, v: DVector<f64>) {
        self.samples.push_back(v);
        self.head += 1;
        if self.samples.len() > self.steps_per_delay + 1 + TRAILING {
            self.samples.pop_front();
        }
    }

    /// Sample at grid index `j`.
    pub fn at_index(&self, j: i64) -> Result<&DVector<f64>> {
        if j < self.oldest() || j > self.head {
            return Err(self.gap(j as f64 * self.dt));
        }
        Ok(&self.samples[(j - self.oldest()) as usize])
    }

    /// The `m + 1` samples covering `[t - tau, t]`, oldest first, with their times.
    pub fn window(&self) -> impl Iterator<Item = (f64, &DVector<f64>)> + '_ {
        let start = self.head - self.steps_per_delay as i64;
        (start..=self.head).map(move |j| (j as f64 * self.dt, &self.samples[(j - self.oldest()) as usize]))
    }

    fn gap(&self, t: f64) -> Error {
        Error::HistoryGap { t, start: self.oldest() as f64 * self.dt, end: self.t_head() }
    }

    /// Value at `(cell + frac) dt` with `0 <= frac < 1`. On-grid queries return
    /// the stored sample; others use Lagrange interpolation through up to four
    /// samples of the delay interval containing the cell.
    pub fn interpolate(&self, cell: i64, frac: f64) -> Result<DVector<f64>> {
        if frac == 0.0 {
            return self.at_index(cell).cloned();
        }
        let m = self.steps_per_delay as i64;
        let seg = cell.div_euclid(m);
        let lo = (seg * m).max(self.oldest());
        let hi = ((seg + 1) * m).min(self.head);
        if cell < lo || cell + 1 > hi {
            return Err(self.gap((cell as f64 + frac) * self.dt));
        }
        let pts = ((hi - lo + 1) as usize).min(4) as i64;
        let start = (cell - 1).clamp(lo, hi - pts + 1);
        let x = (cell - start) as f64 + frac;
        let mut out = DVector::zeros(self.samples[0].len());
        for a in 0..pts {
            let mut w = 1.0;
            for c in 0..pts {
                if c != a {
                    w *= (x - c as f64) / (a - c) as f64;
                }
            }
            out.axpy(w, self.at_index(start + a)?, 1.0);
        }
        Ok(out)
    }

    /// Value at time `s`.
    pub fn value_at(&self, s: f64) -> Result<DVector<f64>> {
        let x = s / self.dt;
        let nearest = x.round();
        if (x - nearest).abs() <= 1e-9 * x.abs().max(1.0) {
            return self.at_index(nearest as i64).cloned();
        }
        let cell = x.floor();
        self.interpolate(cell as i64, x - cell)
    }
}
