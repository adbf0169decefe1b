//! Source terms `grad psi(u)` and their bounding data.
//!
//! The power source `u|u|^beta` is evaluated pseudo-spectrally: modal
//! coefficients are synthesized on a uniform grid of `(0, pi)`, the pointwise
//! nonlinearity is applied, and the result is projected back with composite
//! Simpson weights. `psi` and `grad_psi` share that quadrature, so the
//! discrete gradient is the exact derivative of the discrete potential.

#[allow(unused_imports)] // float math under no_std
use num_traits::Float;
use alloc::format;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::spectral::SpectralSystem;

/// Safety factor applied to the sampled ratio when calibrating `c_h`.
pub const CALIBRATION_SAFETY: f64 = 1.2;
pub const DEFAULT_CALIBRATION_SAMPLES: usize = 10_000;

/// `psi(u) = 1/(beta+2) ∫ |u|^{beta+2}` with `h(r) = c_h r^beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerNonlinearity {
    beta: f64,
    c_h: f64,
    /// `synthesis[(j, i)] = phi_i(x_j)`.
    synthesis: DMatrix<f64>,
    weights: DVector<f64>,
    /// Raw sampled sup of `||grad psi(u)|| / ||A^{1/2}u||^{beta+1}`, if calibrated.
    sampled_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Nonlinearity {
    /// `psi = 0`: the linear model.
    Zero,
    Power(PowerNonlinearity),
}

/// Smallest admissible physical grid for `n` modes (odd, at least `4n + 1`).
pub fn min_grid_size(n: usize) -> usize {
    4 * n + 1
}

/// Default physical grid: `8n + 1` nodes.
pub fn default_grid_size(n: usize) -> usize {
    8 * n + 1
}

impl PowerNonlinearity {
    pub fn new(n: usize, beta: f64, c_h: f64, grid_size: usize) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter { name: "beta", reason: format!("exponent must be positive, got {beta}") });
        }
        if !(c_h > 0.0) || !c_h.is_finite() {
            return Err(Error::InvalidParameter { name: "c_h", reason: format!("must be positive, got {c_h}") });
        }
        if grid_size < min_grid_size(n) || grid_size % 2 == 0 {
            return Err(Error::InvalidParameter {
                name: "grid_size",
                reason: format!("need an odd node count >= {} for {n} modes, got {grid_size}", min_grid_size(n)),
            });
        }
        let intervals = grid_size - 1;
        let h = PI / intervals as f64;
        let norm = (2.0 / PI).sqrt();
        let synthesis = DMatrix::from_fn(grid_size, n, |j, i| norm * (((i + 1) as f64) * (j as f64 * h)).sin());
        let weights = DVector::from_fn(grid_size, |j, _| {
            let w = if j == 0 || j == intervals {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        });
        Ok(Self { beta, c_h, synthesis, weights, sampled_ratio: None })
    }

    /// Builds the nonlinearity and sets `c_h` to `1.2 x` the largest sampled
    /// ratio `||grad psi(u)|| / ||A^{1/2}u||^{beta+1}` over `samples` random
    /// directions. The ratio is scale invariant, so only directions matter.
    pub fn calibrated(sys: &SpectralSystem, beta: f64, grid_size: usize, samples: usize, seed: u64) -> Result<Self> {
        let mut nl = Self::new(sys.n(), beta, 1.0, grid_size)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = sys.n();
        let lambdas = sys.lambdas();
        let mut worst = 0.0f64;
        for s in 0..samples.max(1) {
            let u = match s % 3 {
                // equal energy per mode
                0 => DVector::from_fn(n, |i, _| rng.sample::<f64, _>(StandardNormal) / lambdas[i].sqrt()),
                // low-mode dominated
                1 => DVector::from_fn(n, |i, _| rng.sample::<f64, _>(StandardNormal) / lambdas[i]),
                // a single mode with a random sign
                _ => {
                    let k = rng.random_range(0..n);
                    let mut u = DVector::zeros(n);
                    u[k] = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    u
                }
            };
            let r = sys.elastic_norm(&u);
            if r == 0.0 {
                continue;
            }
            let g = nl.grad_psi(&u).norm();
            worst = worst.max(g / r.powf(beta + 1.0));
        }
        if !(worst > 0.0) {
            return Err(Error::InvalidParameter { name: "c_h", reason: "calibration produced a zero ratio".into() });
        }
        nl.c_h = CALIBRATION_SAFETY * worst;
        nl.sampled_ratio = Some(worst);
        Ok(nl)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn c_h(&self) -> f64 {
        self.c_h
    }

    pub fn grid_size(&self) -> usize {
        self.weights.len()
    }

    pub fn sampled_ratio(&self) -> Option<f64> {
        self.sampled_ratio
    }

    pub fn quadrature_weights(&self) -> &DVector<f64> {
        &self.weights
    }

    /// Mode values on the physical grid, `phi_i(x_j)`.
    pub fn synthesis(&self) -> &DMatrix<f64> {
        &self.synthesis
    }

    pub fn psi(&self, u: &DVector<f64>) -> f64 {
        let ux = &self.synthesis * u;
        let p = self.beta + 2.0;
        ux.iter().zip(self.weights.iter()).map(|(x, w)| w * x.abs().powf(p)).sum::<f64>() / p
    }

    pub fn grad_psi(&self, u: &DVector<f64>) -> DVector<f64> {
        let ux = &self.synthesis * u;
        let weighted = DVector::from_fn(ux.len(), |j, _| {
            let x = ux[j];
            self.weights[j] * x.abs().powf(self.beta) * x
        });
        self.synthesis.tr_mul(&weighted)
    }

    pub fn h_bound(&self, r: f64) -> f64 {
        self.c_h * r.powf(self.beta)
    }

    pub fn lipschitz(&self, r: f64) -> f64 {
        (self.beta + 1.0) * self.c_h * r.powf(self.beta)
    }

    /// Analytic inverse of `h`: `(y / c_h)^{1/beta}`.
    pub fn h_inverse(&self, y: f64) -> f64 {
        (y / self.c_h).powf(1.0 / self.beta)
    }
}

impl Nonlinearity {
    pub fn is_zero(&self) -> bool {
        matches!(self, Nonlinearity::Zero)
    }

    pub fn psi(&self, u: &DVector<f64>) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Power(p) => p.psi(u),
        }
    }

    pub fn grad_psi(&self, u: &DVector<f64>) -> DVector<f64> {
        match self {
            Nonlinearity::Zero => DVector::zeros(u.len()),
            Nonlinearity::Power(p) => p.grad_psi(u),
        }
    }

    pub fn h_bound(&self, r: f64) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Power(p) => p.h_bound(r),
        }
    }

    pub fn lipschitz(&self, r: f64) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Power(p) => p.lipschitz(r),
        }
    }

    /// `h^{-1}(y)`; `None` when `h` is identically zero.
    pub fn h_inverse(&self, y: f64) -> Option<f64> {
        match self {
            Nonlinearity::Zero => None,
            Nonlinearity::Power(p) => Some(p.h_inverse(y)),
        }
    }
}

/// Inverse of a strictly increasing function on `[0, hi]` by bisection.
/// Returns `None` when `y` is not attained on the bracket.
pub fn invert_increasing<F: Fn(f64) -> f64>(f: F, y: f64, mut hi: f64) -> Option<f64> {
    let mut lo = 0.0;
    if f(lo) > y {
        return None;
    }
    let mut grow = 0;
    while f(hi) < y {
        hi *= 2.0;
        grow += 1;
        if grow > 200 {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}
