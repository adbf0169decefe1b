//! Piecewise-linear delay coefficients `k(t)` and the integrals of `|k|` that
//! enter the window budget `K` and the admissibility pair `(gamma, omega')`.
//!
//! `k` is linear between breakpoints and constant after the last one, so every
//! integral of `|k|` is computed exactly by splitting at breakpoints and at the
//! zero crossings of the linear pieces.

#[allow(unused_imports)] // float math under no_std
use num_traits::Float;
use alloc::format;
use alloc::vec::Vec;


use crate::error::{Error, Result};

/// Number of uniform sample times used when certifying the admissibility
/// inequality on a finite horizon.
pub const DEFAULT_FIT_SAMPLES: usize = 2048;
/// Default number of `omega'` candidates in `[0, omega)`.
pub const DEFAULT_OMEGA_GRID: usize = 512;
/// Dense grid used alongside the exact candidates in [`DelayCoefficient::window_bound`].
const WINDOW_GRID: usize = 2048;

#[derive(Debug, Clone, PartialEq)]
pub struct DelayCoefficient {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    tau: f64,
}

/// Result of fitting `M b^2 e^{omega tau} ∫_0^t |k(s+tau)| ds <= gamma + omega' t`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityFit {
    pub feasible: bool,
    pub gamma: f64,
    pub omega_prime: f64,
    /// `min_t gamma - (lhs(t) - omega' t)` over every tested time.
    pub achieved_margin: f64,
    /// Asymptotic growth rate of the left-hand side; no `omega'` below it is admissible.
    pub tail_slope: f64,
    /// Largest tested time.
    pub horizon: f64,
    /// Every admissible `(omega', gamma(omega'))` candidate, ascending in `omega'`.
    pub frontier: Vec<(f64, f64)>,
}

fn abs_linear(t0: f64, y0: f64, t1: f64, y1: f64) -> f64 {
    let width = t1 - t0;
    if width <= 0.0 {
        return 0.0;
    }
    if y0 * y1 >= 0.0 {
        0.5 * (y0.abs() + y1.abs()) * width
    } else {
        // two triangles meeting at the zero crossing
        (y0 * y0 + y1 * y1) / (2.0 * (y0.abs() + y1.abs())) * width
    }
}

impl DelayCoefficient {
    /// Breakpoints must start at 0 and be strictly increasing.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>, tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidParameter { name: "tau", reason: format!("delay must be positive, got {tau}") });
        }
        if breakpoints.is_empty() {
            return Err(Error::InvalidCoefficient("at least one breakpoint is required".into()));
        }
        if breakpoints.len() != values.len() {
            return Err(Error::InvalidCoefficient(format!(
                "{} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::InvalidCoefficient(format!("first breakpoint must be 0, got {}", breakpoints[0])));
        }
        if let Some(i) = breakpoints.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidCoefficient(format!(
                "breakpoints not strictly increasing at index {}: {} then {}",
                i + 1,
                breakpoints[i],
                breakpoints[i + 1]
            )));
        }
        if breakpoints.iter().chain(values.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidCoefficient("non-finite breakpoint or value".into()));
        }
        Ok(Self { breakpoints, values, tau })
    }

    pub fn constant(c: f64, tau: f64) -> Result<Self> {
        Self::new(alloc::vec![0.0], alloc::vec![c], tau)
    }

    pub fn zero(tau: f64) -> Result<Self> {
        Self::constant(0.0, tau)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Last breakpoint; `k` is constant afterwards.
    pub fn support_end(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    /// `k` multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
            tau: self.tau,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    fn piece_index(&self, t: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= t).saturating_sub(1)
    }

    fn eval_in_piece(&self, idx: usize, t: f64) -> f64 {
        let last = self.breakpoints.len() - 1;
        if idx >= last {
            return self.values[last];
        }
        let (t0, t1) = (self.breakpoints[idx], self.breakpoints[idx + 1]);
        let (y0, y1) = (self.values[idx], self.values[idx + 1]);
        y0 + (y1 - y0) * (t - t0) / (t1 - t0)
    }

    /// `k(t)`; constant extrapolation beyond the last breakpoint, and the
    /// first value for `t < 0`.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.values[0];
        }
        self.eval_in_piece(self.piece_index(t), t)
    }

    /// Times where `|k|` is not smooth: breakpoints and zero crossings inside
    /// linear pieces. Sorted ascending.
    pub fn kinks(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.breakpoints.len());
        for i in 0..self.breakpoints.len() {
            out.push(self.breakpoints[i]);
            if i + 1 < self.breakpoints.len() {
                let (y0, y1) = (self.values[i], self.values[i + 1]);
                if y0 * y1 < 0.0 {
                    let (t0, t1) = (self.breakpoints[i], self.breakpoints[i + 1]);
                    out.push(t0 + (t1 - t0) * y0 / (y0 - y1));
                }
            }
        }
        out
    }

    /// Exact `∫_a^b |k(s)| ds` for `0 <= a <= b`.
    pub fn abs_integral(&self, a: f64, b: f64) -> Result<f64> {
        if !(a >= 0.0) || !(a <= b) || !b.is_finite() {
            return Err(Error::InvalidParameter {
                name: "integration bounds",
                reason: format!("need 0 <= a <= b, got a = {a}, b = {b}"),
            });
        }
        Ok(self.abs_integral_unchecked(a, b))
    }

    fn abs_integral_unchecked(&self, a: f64, b: f64) -> f64 {
        let last = self.breakpoints.len() - 1;
        let mut idx = self.piece_index(a);
        let mut cursor = a;
        let mut total = 0.0;
        while cursor < b {
            let end = if idx < last { self.breakpoints[idx + 1].min(b) } else { b };
            let y0 = self.eval_in_piece(idx, cursor);
            let y1 = self.eval_in_piece(idx, end);
            total += abs_linear(cursor, y0, end, y1);
            cursor = end;
            idx += 1;
        }
        total
    }

    /// `∫_0^t |k(s + tau)| ds`.
    pub fn shifted_cumulative(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter { name: "t", reason: format!("must be nonnegative, got {t}") });
        }
        Ok(self.abs_integral_unchecked(self.tau, t + self.tau))
    }

    /// Certified window budget `K = max_{t in [tau, horizon]} ∫_{t-tau}^t |k|`.
    ///
    /// The window integral is piecewise quadratic with kinks at the kinks of
    /// `|k|` and their `tau`-shifts; its maximum is taken over those points,
    /// the interior stationary points between them, and a uniform grid.
    pub fn window_bound(&self, horizon: f64) -> Result<f64> {
        let tau = self.tau;
        if !(horizon >= tau) || !horizon.is_finite() {
            return Err(Error::InvalidParameter {
                name: "horizon",
                reason: format!("horizon {horizon} is shorter than the delay {tau}"),
            });
        }
        let mut cand: Vec<f64> = Vec::with_capacity(WINDOW_GRID + 4 * self.breakpoints.len() + 2);
        cand.extend((0..=WINDOW_GRID).map(|i| tau + (horizon - tau) * i as f64 / WINDOW_GRID as f64));
        for kink in self.kinks() {
            for t in [kink, kink + tau] {
                if t > tau && t < horizon {
                    cand.push(t);
                }
            }
        }
        sort_dedup(&mut cand);

        let abs_k = |t: f64| self.eval(t).abs();
        let mut extra = Vec::new();
        for w in cand.windows(2) {
            let (c0, c1) = (w[0], w[1]);
            let f0 = abs_k(c0) - abs_k(c0 - tau);
            let f1 = abs_k(c1) - abs_k(c1 - tau);
            if f0 > 0.0 && f1 < 0.0 {
                extra.push(c0 + (c1 - c0) * f0 / (f0 - f1));
            }
        }
        cand.extend(extra);

        Ok(cand
            .iter()
            .map(|&t| self.abs_integral_unchecked(t - tau, t))
            .fold(0.0, f64::max))
    }

    /// Fits `(gamma, omega')` in `M b^2 e^{omega tau} ∫_0^t |k(s+tau)| ds <= gamma + omega' t`.
    ///
    /// Candidates for `omega'` are a uniform grid on `[0, omega)` plus the tail
    /// slope of the left-hand side; candidates below the tail slope give
    /// unbounded `gamma` and are discarded. For each candidate `gamma` is the
    /// maximum excess over the tested times. The returned pair has the smallest
    /// admissible `omega'` (largest decay rate `omega - omega'`).
    pub fn fit_gamma_omega(
        &self,
        m: f64,
        omega: f64,
        b: f64,
        horizon: f64,
        omega_grid_size: usize,
    ) -> Result<AdmissibilityFit> {
        let tau = self.tau;
        if !(m >= 1.0) || !m.is_finite() {
            return Err(Error::InvalidParameter { name: "M", reason: format!("must be >= 1, got {m}") });
        }
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::InvalidParameter { name: "omega", reason: format!("must be positive, got {omega}") });
        }
        if !(b >= 0.0) {
            return Err(Error::InvalidParameter { name: "b", reason: format!("must be nonnegative, got {b}") });
        }
        if !(horizon >= tau) || !horizon.is_finite() {
            return Err(Error::InvalidParameter {
                name: "horizon",
                reason: format!("horizon {horizon} is shorter than the delay {tau}"),
            });
        }
        let grid = omega_grid_size.max(1);
        let weight = m * b * b * (omega * tau).exp();
        let tail_slope = weight * self.values.last().unwrap().abs();

        // Past the last kink the left-hand side is linear, so covering it
        // makes the fit exact for all t >= 0.
        let span = horizon.max(self.support_end() - tau).max(0.0);
        let mut times: Vec<f64> =
            (0..=DEFAULT_FIT_SAMPLES).map(|i| span * i as f64 / DEFAULT_FIT_SAMPLES as f64).collect();
        let shifted_kinks: Vec<f64> = self
            .kinks()
            .into_iter()
            .flat_map(|k| [k - tau, k, k + tau])
            .filter(|&t| t > 0.0 && t < span)
            .collect();
        times.extend_from_slice(&shifted_kinks);
        sort_dedup(&mut times);
        let lhs: Vec<f64> = times.iter().map(|&t| weight * self.abs_integral_unchecked(tau, t + tau)).collect();

        let mut omegas: Vec<f64> = (0..grid).map(|j| omega * j as f64 / grid as f64).collect();
        if tail_slope < omega {
            omegas.push(tail_slope);
        }
        omegas.retain(|&w| w >= tail_slope && w < omega);
        sort_dedup(&mut omegas);

        let mut frontier = Vec::with_capacity(omegas.len());
        let mut best: Option<(f64, f64, f64)> = None;
        for &wp in &omegas {
            // excess d(t) = lhs(t) - omega' t is piecewise quadratic between
            // consecutive tested times; add its interior maxima.
            let mut gamma = 0.0f64;
            let mut excesses = Vec::with_capacity(times.len() + 8);
            for (i, &t) in times.iter().enumerate() {
                excesses.push(lhs[i] - wp * t);
            }
            for w in times.windows(2) {
                let (t0, t1) = (w[0], w[1]);
                let s0 = weight * self.eval(t0 + tau).abs() - wp;
                let s1 = weight * self.eval(t1 + tau).abs() - wp;
                if s0 > 0.0 && s1 < 0.0 {
                    let t = t0 + (t1 - t0) * s0 / (s0 - s1);
                    excesses.push(weight * self.abs_integral_unchecked(tau, t + tau) - wp * t);
                }
            }
            for &d in &excesses {
                gamma = gamma.max(d);
            }
            let margin = excesses.iter().map(|&d| gamma - d).fold(f64::INFINITY, f64::min);
            frontier.push((wp, gamma));
            if best.is_none() {
                best = Some((wp, gamma, margin));
            }
        }

        Ok(match best {
            Some((omega_prime, gamma, achieved_margin)) => AdmissibilityFit {
                feasible: true,
                gamma,
                omega_prime,
                achieved_margin,
                tail_slope,
                horizon: span,
                frontier,
            },
            None => AdmissibilityFit {
                feasible: false,
                gamma: f64::INFINITY,
                omega_prime: omega,
                achieved_margin: f64::NEG_INFINITY,
                tail_slope,
                horizon: span,
                frontier,
            },
        })
    }
}

pub(crate) fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1.0));
}
