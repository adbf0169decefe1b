//! Truncated eigenbasis representation of the abstract operators.
//!
//! The domain is `(0, pi)` with the orthonormal basis
//! `phi_i(x) = sqrt(2/pi) sin(i x)`, `i = 1..=n`. Indicator multipliers
//! `chi_(a,b)` are projected onto this basis in closed form.

#[allow(unused_imports)] // float math under no_std
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

const SYMMETRY_TOL: f64 = 1e-12;

/// Modal representation of `A`, `CC*` and `BB*` plus the bound `b = ||B||`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSystem {
    lambdas: DVector<f64>,
    damping: DMatrix<f64>,
    delay_op: DMatrix<f64>,
    b: f64,
}

/// Modal coefficients of `(u, u_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
}

impl State {
    pub fn new(u: DVector<f64>, v: DVector<f64>) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::DimensionMismatch { expected: u.len(), got: v.len() });
        }
        if u.iter().chain(v.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter { name: "state", reason: "non-finite entry".into() });
        }
        Ok(Self { u, v })
    }

    pub fn zeros(n: usize) -> Self {
        Self { u: DVector::zeros(n), v: DVector::zeros(n) }
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }
}

impl SpectralSystem {
    /// Validates and assembles a system. `damping` and `delay_op` must be
    /// symmetric and `b^2` must dominate the spectral norm of `delay_op`.
    pub fn new(
        lambdas: DVector<f64>,
        damping: DMatrix<f64>,
        delay_op: DMatrix<f64>,
        b: f64,
    ) -> Result<Self> {
        let n = lambdas.len();
        if n == 0 {
            return Err(Error::InvalidParameter { name: "n", reason: "mode count must be positive".into() });
        }
        if lambdas.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "lambdas",
                reason: "eigenvalues of A must be finite and strictly positive".into(),
            });
        }
        if lambdas.as_slice().windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter { name: "lambdas", reason: "eigenvalues must be nondecreasing".into() });
        }
        for (name, m) in [("damping", &damping), ("delay_op", &delay_op)] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, got: m.nrows() });
            }
            if m.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter { name, reason: "non-finite entry".into() });
            }
            if linalg::relative_asymmetry(m) > SYMMETRY_TOL {
                return Err(Error::InvalidParameter { name, reason: "matrix is not symmetric".into() });
            }
        }
        if !(b >= 0.0) || !b.is_finite() {
            return Err(Error::InvalidParameter { name: "b", reason: "must be finite and nonnegative".into() });
        }
        let delay_norm = linalg::spectral_norm(&delay_op);
        if delay_norm > b * b * (1.0 + 1e-10) + 1e-14 {
            return Err(Error::InvalidParameter {
                name: "b",
                reason: alloc::format!("b^2 = {} is below ||BB*|| = {}", b * b, delay_norm),
            });
        }
        Ok(Self { lambdas, damping, delay_op, b })
    }

    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &DVector<f64> {
        &self.lambdas
    }

    /// Modal matrix of `CC*`.
    pub fn damping(&self) -> &DMatrix<f64> {
        &self.damping
    }

    /// Modal matrix of `BB*`.
    pub fn delay_op(&self) -> &DMatrix<f64> {
        &self.delay_op
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Phase-space inner product `<A^{1/2}u, A^{1/2}u~> + <v, v~>`.
    pub fn w_inner(&self, x: &State, y: &State) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        let elastic: f64 = (0..self.n()).map(|i| self.lambdas[i] * x.u[i] * y.u[i]).sum();
        Ok(elastic + x.v.dot(&y.v))
    }

    /// Phase-space norm `sqrt(sum lambda_i u_i^2 + sum v_i^2)`.
    pub fn w_norm(&self, st: &State) -> Result<f64> {
        Ok(self.w_inner(st, st)?.max(0.0).sqrt())
    }

    /// `||A^{1/2} u||_H`.
    pub fn elastic_norm(&self, u: &DVector<f64>) -> f64 {
        self.lambdas.iter().zip(u.iter()).map(|(l, x)| l * x * x).sum::<f64>().sqrt()
    }

    /// `||B^* w||^2 = <BB^* w, w>`.
    pub fn delay_energy(&self, w: &DVector<f64>) -> f64 {
        (&self.delay_op * w).dot(w)
    }

    pub(crate) fn check_dim(&self, st: &State) -> Result<()> {
        for len in [st.u.len(), st.v.len()] {
            if len != self.n() {
                return Err(Error::DimensionMismatch { expected: self.n(), got: len });
            }
        }
        Ok(())
    }
}

fn validate_interval(lo: f64, hi: f64) -> Result<()> {
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidInterval { lo, hi, reason: "endpoints must be finite" });
    }
    if lo < 0.0 || hi > PI {
        return Err(Error::InvalidInterval { lo, hi, reason: "must lie within [0, pi]" });
    }
    if !(lo < hi) {
        return Err(Error::InvalidInterval { lo, hi, reason: "lower endpoint must be below upper endpoint" });
    }
    Ok(())
}

/// `∫_lo^hi cos(m x) dx` for integer `m`.
fn cos_integral(m: i64, lo: f64, hi: f64) -> f64 {
    if m == 0 {
        hi - lo
    } else {
        let m = m as f64;
        ((m * hi).sin() - (m * lo).sin()) / m
    }
}

/// Projection of the indicator of `(lo, hi)` onto the first `n` sine modes:
/// `G_ij = (2/pi) ∫_lo^hi sin(i x) sin(j x) dx`.
pub fn gram_matrix(interval: (f64, f64), n: usize) -> Result<DMatrix<f64>> {
    let (lo, hi) = interval;
    validate_interval(lo, hi)?;
    let mut g = DMatrix::zeros(n, n);
    for i in 1..=n {
        for j in i..=n {
            let (ii, jj) = (i as i64, j as i64);
            let val = (cos_integral(ii - jj, lo, hi) - cos_integral(ii + jj, lo, hi)) / PI;
            g[(i - 1, j - 1)] = val;
            g[(j - 1, i - 1)] = val;
        }
    }
    Ok(g)
}

fn preset(
    lambdas: Vec<f64>,
    a: f64,
    damp_interval: (f64, f64),
    delay_interval: Option<(f64, f64)>,
) -> Result<SpectralSystem> {
    let n = lambdas.len();
    if n == 0 {
        return Err(Error::InvalidParameter { name: "n", reason: "mode count must be positive".into() });
    }
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::InvalidParameter { name: "a", reason: "damping amplitude must be positive".into() });
    }
    let damping = gram_matrix(damp_interval, n)? * a;
    let (delay_op, b) = match delay_interval {
        Some(iv) => (gram_matrix(iv, n)?, 1.0),
        None => (DMatrix::zeros(n, n), 0.0),
    };
    SpectralSystem::new(DVector::from_vec(lambdas), damping, delay_op, b)
}

/// Dirichlet wave operator on `(0, pi)`: `lambda_i = i^2`. A `None` delay
/// interval means the delay region is empty (`BB* = 0`, `b = 0`).
pub fn wave_preset(
    n: usize,
    a: f64,
    damp_interval: (f64, f64),
    delay_interval: Option<(f64, f64)>,
) -> Result<SpectralSystem> {
    let lambdas = (1..=n).map(|i| (i * i) as f64).collect();
    preset(lambdas, a, damp_interval, delay_interval)
}

/// Hinged one-dimensional plate on `(0, pi)`: `lambda_i = i^4`, same sine basis.
pub fn plate_preset(
    n: usize,
    a: f64,
    damp_interval: (f64, f64),
    delay_interval: Option<(f64, f64)>,
) -> Result<SpectralSystem> {
    let lambdas = (1..=n).map(|i| ((i * i) as f64) * ((i * i) as f64)).collect();
    preset(lambdas, a, damp_interval, delay_interval)
}

/// Preset with user-supplied eigenvalues and indicator operators.
pub fn custom_preset(
    lambdas: Vec<f64>,
    a: f64,
    damp_interval: (f64, f64),
    delay_interval: Option<(f64, f64)>,
) -> Result<SpectralSystem> {
    preset(lambdas, a, damp_interval, delay_interval)
}
