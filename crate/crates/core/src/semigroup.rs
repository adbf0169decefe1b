//! Measured semigroup constants `(M, omega)` with `||e^{tG}|| <= M e^{-omega t}`
//! for the undelayed linear generator `G = [[0, I], [-A, -CC*]]`.
//!
//! `G` is assembled in coordinates `(A^{1/2}u, v)`, in which the phase-space
//! norm is Euclidean and operator norms are spectral norms.

#[allow(unused_imports)] // float math under no_std
use num_traits::Float;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{expm, spectral_abscissa, spectral_norm};
use crate::spectral::SpectralSystem;

/// `G` in weighted coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    matrix: DMatrix<f64>,
    n: usize,
}

impl GeneratorMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `e^{tG}`.
    pub fn propagator(&self, t: f64) -> DMatrix<f64> {
        expm(&(&self.matrix * t))
    }

    /// Logarithmic norm `max eig((G + G^T)/2)`; `||e^{tG}|| <= e^{mu t}`.
    pub fn log_norm(&self) -> f64 {
        let sym = (&self.matrix + self.matrix.transpose()) * 0.5;
        sym.symmetric_eigenvalues().max()
    }
}

pub fn assemble_generator(sys: &SpectralSystem) -> GeneratorMatrix {
    let n = sys.n();
    let roots: DVector<f64> = sys.lambdas().map(f64::sqrt);
    let mut g = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        g[(i, n + i)] = roots[i];
        g[(n + i, i)] = -roots[i];
    }
    g.view_mut((n, n), (n, n)).copy_from(&(-sys.damping()));
    GeneratorMatrix { matrix: g, n }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayOptions {
    /// `omega = (1 - margin) * (-abscissa)`.
    pub margin: f64,
    /// Initial sample horizon in units of `1 / |abscissa|`.
    pub horizon_factor: f64,
    pub log_samples: usize,
    /// Uniform sample spacing is `resolution / omega`, so the bound between
    /// samples is at most a factor `e^{resolution}` above the samples.
    pub resolution: f64,
    pub max_doublings: usize,
}

impl Default for DecayOptions {
    fn default() -> Self {
        Self { margin: 0.01, horizon_factor: 10.0, log_samples: 1000, resolution: 0.002, max_doublings: 40 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayEstimate {
    pub m: f64,
    pub omega: f64,
    pub abscissa: f64,
    /// `T` with `||e^{TG}|| <= e^{-omega T}`; the bound extends past `T` by
    /// submultiplicativity.
    pub tail_time: f64,
    pub samples: usize,
    /// Largest sampled `||e^{tG}|| e^{omega t}` (before the inter-sample bound).
    pub sampled_peak: f64,
}

impl DecayEstimate {
    pub fn bound(&self, t: f64) -> f64 {
        self.m * (-self.omega * t).exp()
    }
}

pub fn estimate_decay(gen: &GeneratorMatrix) -> Result<DecayEstimate> {
    estimate_decay_with(gen, &DecayOptions::default())
}

/// Estimates `(M, omega)`.
///
/// With `G_w = G + omega I`, `f(t) = ||e^{t G_w}||` is sampled on a uniform
/// grid plus log-spaced times near 0. Between consecutive samples
/// `f(t) <= f(t_i) e^{mu_w (t - t_i)}` with `mu_w` the logarithmic norm of
/// `G_w`, so `M` is the largest such envelope value. Beyond the first `T` with
/// `f(T) <= 1` the bound persists by submultiplicativity.
pub fn estimate_decay_with(gen: &GeneratorMatrix, opts: &DecayOptions) -> Result<DecayEstimate> {
    let g = gen.matrix();
    let dim = g.nrows();
    let abscissa = spectral_abscissa(g);
    let scale = g.amax().max(1.0);
    if !(abscissa < -1e-10 * scale) {
        return Err(Error::NoExponentialDecay { abscissa });
    }
    let omega = (1.0 - opts.margin) * (-abscissa);
    let shifted = g + DMatrix::<f64>::identity(dim, dim) * omega;
    let mu = {
        let sym = (&shifted + shifted.transpose()) * 0.5;
        sym.symmetric_eigenvalues().max().max(0.0)
    };

    let mut tail = opts.horizon_factor / (-abscissa);
    let mut found = false;
    for _ in 0..=opts.max_doublings {
        if spectral_norm(&expm(&(&shifted * tail))) <= 1.0 {
            found = true;
            break;
        }
        tail *= 2.0;
    }
    if !found {
        return Err(Error::TailNotReached { horizon: tail });
    }

    let h = (opts.resolution / omega).min(tail / 16.0);
    let steps = (tail / h).ceil() as usize;
    let h = tail / steps as f64;
    let step_prop = expm(&(&shifted * h));

    // (time, ||e^{t G_w}||), sorted by time
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(steps + opts.log_samples + 1);
    let mut prop = DMatrix::<f64>::identity(dim, dim);
    samples.push((0.0, 1.0));
    for i in 1..=steps {
        prop = &prop * &step_prop;
        samples.push((i as f64 * h, spectral_norm(&prop)));
    }
    if opts.log_samples > 1 {
        let lo = (h * 1e-3).ln();
        let hi = h.ln();
        for i in 0..opts.log_samples {
            let t = (lo + (hi - lo) * i as f64 / (opts.log_samples - 1) as f64).exp();
            samples.push((t, spectral_norm(&expm(&(&shifted * t)))));
        }
    }
    samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal));

    let sampled_peak = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    let mut m = sampled_peak;
    for w in samples.windows(2) {
        m = m.max(w[0].1 * (mu * (w[1].0 - w[0].0)).exp());
    }
    let count = samples.len();
    Ok(DecayEstimate { m: m.max(1.0), omega, abscissa, tail_time: tail, samples: count, sampled_peak })
}

/// Counts sample times where `||e^{tG}|| > M e^{-omega t}` (with relative
/// slack `rel_tol`), using a fresh matrix exponential at every time.
pub fn count_violations(gen: &GeneratorMatrix, est: &DecayEstimate, times: &[f64], rel_tol: f64) -> (usize, f64) {
    let mut violations = 0;
    let mut worst = 0.0f64;
    for &t in times {
        let lhs = spectral_norm(&gen.propagator(t)) * (est.omega * t).exp();
        let ratio = lhs / est.m;
        worst = worst.max(ratio);
        if ratio > 1.0 + rel_tol {
            violations += 1;
        }
    }
    (violations, worst)
}
