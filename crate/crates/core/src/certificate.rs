//! Smallness program and decay envelopes.
//!
//! Given semigroup constants `(M, omega)`, the window budget `K` and an
//! admissible pair `(gamma, omega')`, the program picks the number of delay
//! intervals `N` with
//!
//! ```text
//! C_N = 2 M^2 e^{2 gamma} (1 + K e^{omega tau} b^2)(1 + e^{2 omega tau} K) e^{-(omega - omega') N tau} <= 1,
//! ```
//!
//! then a data radius `rho` small enough that `h(2 Cbar^{1/2}(N tau) rho) < 1/2`
//! and `L(C_rho) < (omega - omega') / (2M)`. Every inequality is kept with its
//! margin so near-failures stay visible.

#[allow(unused_imports)] // float math under no_std
use num_traits::Float;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DVector;

use crate::delay::DelayCoefficient;
use crate::energy::cbar;
use crate::error::{Error, Result};
use crate::history::HistoryDescriptor;
use crate::nonlinearity::Nonlinearity;
use crate::quadrature::CompositeRule;
use crate::spectral::{SpectralSystem, State};

const MAX_HALVINGS: usize = 400;
const MAX_N: u64 = 1 << 40;

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateInputs {
    pub m: f64,
    pub omega: f64,
    pub gamma: f64,
    pub omega_prime: f64,
    /// Window budget `K`.
    pub k_window: f64,
    pub b: f64,
    pub tau: f64,
}

/// One named inequality. `margin >= 0` (or `> 0` when `strict`) means it holds.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub margin: f64,
    pub strict: bool,
}

impl Check {
    fn new(name: &str, margin: f64, strict: bool) -> Self {
        Self { name: name.into(), margin, strict }
    }

    pub fn passed(&self) -> bool {
        if self.strict {
            self.margin > 0.0
        } else {
            self.margin >= 0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCertificate {
    pub m: f64,
    pub omega: f64,
    pub b: f64,
    pub k_window: f64,
    pub gamma: f64,
    pub omega_prime: f64,
    pub tau: f64,
    pub n: u64,
    pub c_n: f64,
    /// `Cbar(N tau)`.
    pub cbar_n: f64,
    /// `h^{-1}(1/2)`; infinite for the zero nonlinearity.
    pub h_inv_half: f64,
    /// `h^{-1}(1/2) / (2 Cbar(N tau))`.
    pub rho_literal: f64,
    /// `h^{-1}(1/2) / (2 Cbar^{1/2}(N tau))`.
    pub rho_sqrt: f64,
    /// Certified radius after the Lipschitz halvings; infinite when unconstrained.
    pub rho: f64,
    pub rho_halvings: u32,
    /// `2 Cbar^{1/2}(N tau) rho`.
    pub c_rho: f64,
    /// `L(C_rho)`.
    pub lipschitz_c_rho: f64,
    /// `(omega - omega') / 2`.
    pub decay_rate: f64,
    /// `omega - omega' - M L(C_rho)`.
    pub general_rate: f64,
    pub rho_unconstrained: bool,
    pub checks: Vec<Check>,
}

impl StabilityCertificate {
    pub fn valid(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }

    /// Whether data of size `data_size` (see [`initial_data_size`]) lies
    /// strictly inside the certified radius.
    pub fn certifies(&self, data_size: f64) -> bool {
        self.valid() && data_size < self.rho
    }
}

/// `C_N` for a given `N`.
pub fn c_n(inp: &CertificateInputs, n: u64) -> f64 {
    let (m, w, tau, kw, b) = (inp.m, inp.omega, inp.tau, inp.k_window, inp.b);
    2.0 * m * m
        * (2.0 * inp.gamma).exp()
        * (1.0 + kw * (w * tau).exp() * b * b)
        * (1.0 + (2.0 * w * tau).exp() * kw)
        * (-(w - inp.omega_prime) * n as f64 * tau).exp()
}

/// Smallest `N >= 1` with `C_N <= 1`.
pub fn minimal_n(inp: &CertificateInputs) -> Result<u64> {
    let rate = (inp.omega - inp.omega_prime) * inp.tau;
    let c1 = c_n(inp, 0);
    let mut n = ((c1.ln() / rate).ceil().max(1.0)).min(MAX_N as f64) as u64;
    while n < MAX_N && c_n(inp, n) > 1.0 {
        n += 1;
    }
    while n > 1 && c_n(inp, n - 1) <= 1.0 {
        n -= 1;
    }
    if c_n(inp, n) > 1.0 {
        return Err(Error::InvalidCertificate(format!("no N up to {MAX_N} makes C_N <= 1")));
    }
    Ok(n)
}

fn validate(inp: &CertificateInputs) -> Result<()> {
    let bad = |name: &str, v: f64| Err(Error::InvalidCertificate(format!("{name} = {v} out of range")));
    if !(inp.m >= 1.0) || !inp.m.is_finite() {
        return bad("M", inp.m);
    }
    if !(inp.omega > 0.0) || !inp.omega.is_finite() {
        return bad("omega", inp.omega);
    }
    if !(inp.gamma >= 0.0) || !inp.gamma.is_finite() {
        return bad("gamma", inp.gamma);
    }
    if !(inp.omega_prime >= 0.0 && inp.omega_prime < inp.omega) {
        return Err(Error::InvalidCertificate(format!(
            "need 0 <= omega' < omega, got omega' = {}, omega = {}",
            inp.omega_prime, inp.omega
        )));
    }
    if !(inp.k_window >= 0.0) || !inp.k_window.is_finite() {
        return bad("K", inp.k_window);
    }
    if !(inp.b >= 0.0) {
        return bad("b", inp.b);
    }
    if !(inp.tau > 0.0) {
        return bad("tau", inp.tau);
    }
    Ok(())
}

/// Runs the smallness program.
///
/// `rho` starts at the smaller of `h^{-1}(1/2) / (2 Cbar(N tau))` and
/// `h^{-1}(1/2) / (2 Cbar^{1/2}(N tau))` and is halved until
/// `L(C_rho) < (omega - omega') / (2M)`. For the zero nonlinearity `rho` is
/// unconstrained and reported as infinite.
pub fn smallness_program(inp: &CertificateInputs, k: &DelayCoefficient, nl: &Nonlinearity) -> Result<StabilityCertificate> {
    validate(inp)?;
    let n = minimal_n(inp)?;
    let cn = c_n(inp, n);
    let cbar_n = cbar(k, inp.b, n as f64 * inp.tau)?;
    let root = cbar_n.sqrt();
    let gap = inp.omega - inp.omega_prime;
    let lipschitz_threshold = gap / (2.0 * inp.m);

    let (h_inv_half, rho_literal, rho_sqrt, rho, halvings, c_rho, lip, unconstrained) = match nl.h_inverse(0.5) {
        None => (f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY, 0u32, f64::INFINITY, 0.0, true),
        Some(hinv) => {
            let rho_literal = hinv / (2.0 * cbar_n);
            let rho_sqrt = hinv / (2.0 * root);
            let mut rho = rho_literal.min(rho_sqrt);
            let mut halvings = 0u32;
            while nl.lipschitz(2.0 * root * rho) >= lipschitz_threshold {
                if halvings as usize >= MAX_HALVINGS {
                    return Err(Error::InvalidCertificate("rho underflowed while enforcing the Lipschitz bound".into()));
                }
                rho *= 0.5;
                halvings += 1;
            }
            let c_rho = 2.0 * root * rho;
            (hinv, rho_literal, rho_sqrt, rho, halvings, c_rho, nl.lipschitz(c_rho), false)
        }
    };

    let decay_rate = 0.5 * gap;
    let general_rate = gap - inp.m * lip;
    let h_margin = if unconstrained { 0.5 } else { 0.5 - nl.h_bound(c_rho) };
    let checks = alloc::vec![
        Check::new("M >= 1", inp.m - 1.0, false),
        Check::new("omega' < omega", gap, true),
        Check::new("C_N <= 1", 1.0 - cn, false),
        Check::new("h(C_rho) < 1/2", h_margin, true),
        Check::new("L(C_rho) < (omega - omega')/(2M)", lipschitz_threshold - lip, true),
        Check::new("L(C_rho) < (omega - omega')/M", gap / inp.m - lip, true),
        Check::new("decay_rate > 0", decay_rate, true),
    ];

    Ok(StabilityCertificate {
        m: inp.m,
        omega: inp.omega,
        b: inp.b,
        k_window: inp.k_window,
        gamma: inp.gamma,
        omega_prime: inp.omega_prime,
        tau: inp.tau,
        n,
        c_n: cn,
        cbar_n,
        h_inv_half,
        rho_literal,
        rho_sqrt,
        rho,
        rho_halvings: halvings,
        c_rho,
        lipschitz_c_rho: lip,
        decay_rate,
        general_rate,
        rho_unconstrained: unconstrained,
        checks,
    })
}

/// Both decay envelopes `prefactor * e^{-rate t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayEnvelope {
    /// `M e^gamma (||U_0||_W + ∫_0^tau e^{omega s} |k(s)| ||f(s - tau)||_W ds)`.
    pub prefactor: f64,
    pub forcing_integral: f64,
    /// `omega - omega' - M L(C_rho)`.
    pub general_rate: f64,
    /// `(omega - omega') / 2`.
    pub working_rate: f64,
}

impl DecayEnvelope {
    pub fn general(&self, t: f64) -> f64 {
        self.prefactor * (-self.general_rate * t).exp()
    }

    pub fn working(&self, t: f64) -> f64 {
        self.prefactor * (-self.working_rate * t).exp()
    }
}

/// `∫_0^tau e^{omega s} |k(s)| f(s) ds`, split at the kinks of `|k|`.
pub fn forcing_integral<F: FnMut(f64) -> f64>(k: &DelayCoefficient, omega: f64, mut f_wnorm: F) -> f64 {
    let tau = k.tau();
    let mut cuts = alloc::vec![0.0];
    cuts.extend(k.kinks().into_iter().filter(|&t| t > 0.0 && t < tau));
    cuts.push(tau);
    CompositeRule::new(16, 8).integrate(&cuts, |s| (omega * s).exp() * k.eval(s).abs() * f_wnorm(s))
}

/// Envelopes for initial data with `||U_0||_W = u0_wnorm` and history forcing
/// norm `f_wnorm(s) = ||B U(s - tau)||_W`, `s in [0, tau]`.
pub fn decay_envelope<F: FnMut(f64) -> f64>(
    cert: &StabilityCertificate,
    u0_wnorm: f64,
    k: &DelayCoefficient,
    f_wnorm: F,
) -> Result<DecayEnvelope> {
    if !cert.valid() {
        let failed: Vec<&str> = cert.failed_checks().map(|c| c.name.as_str()).collect();
        return Err(Error::InvalidCertificate(format!("failed checks: {}", failed.join(", "))));
    }
    let integral = forcing_integral(k, cert.omega, f_wnorm);
    Ok(DecayEnvelope {
        prefactor: cert.m * cert.gamma.exp() * (u0_wnorm + integral),
        forcing_integral: integral,
        general_rate: cert.general_rate,
        working_rate: cert.decay_rate,
    })
}

/// Size of the initial data,
/// `sqrt(||U_0||_W^2 + ∫_0^tau |k(s)| q(s) ds)` with
/// `q = max(||BB^* g||^2, <BB^* g, g>)` evaluated on `g(s - tau)`; the larger
/// of the two history weightings is used so the value bounds both forms of
/// the smallness condition.
pub fn initial_data_size(sys: &SpectralSystem, k: &DelayCoefficient, u0: &DVector<f64>, v0: &DVector<f64>, history: &HistoryDescriptor) -> Result<f64> {
    let st = State::new(u0.clone(), v0.clone())?;
    let w = sys.w_norm(&st)?;
    let tau = k.tau();
    let n = sys.n();
    let mut cuts = alloc::vec![0.0];
    cuts.extend(k.kinks().into_iter().filter(|&t| t > 0.0 && t < tau));
    cuts.push(tau);
    let hist = CompositeRule::new(16, 8).integrate(&cuts, |s| {
        let g = history.eval(s - tau, n);
        let bg = sys.delay_op() * &g;
        k.eval(s).abs() * bg.norm_squared().max(bg.dot(&g))
    });
    Ok((w * w + hist).sqrt())
}

/// `||BB^* g(s - tau)||` for the history descriptor.
pub fn history_forcing_norm(sys: &SpectralSystem, history: &HistoryDescriptor, tau: f64, s: f64) -> f64 {
    (sys.delay_op() * history.eval(s - tau, sys.n())).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::PowerNonlinearity;

    fn inputs(m: f64, omega: f64, tau: f64) -> CertificateInputs {
        CertificateInputs { m, omega, gamma: 0.0, omega_prime: 0.0, k_window: 0.0, b: 1.0, tau }
    }

    #[test]
    fn zero_delay_closed_form_n() {
        for (m, omega, tau) in [(1.0, 0.5, 1.0), (2.3, 0.495, 0.7), (5.0, 0.1, 2.0), (1.7, 3.0, 0.05)] {
            let inp = inputs(m, omega, tau);
            let expected = ((2.0 * m * m).ln() / (omega * tau)).ceil() as u64;
            assert_eq!(minimal_n(&inp).unwrap(), expected.max(1));
            let n = minimal_n(&inp).unwrap();
            assert!(c_n(&inp, n) <= 1.0);
            assert!(n == 1 || c_n(&inp, n - 1) > 1.0);
        }
    }

    #[test]
    fn zero_nonlinearity_is_unconstrained() {
        let k = DelayCoefficient::zero(1.0).unwrap();
        let cert = smallness_program(&inputs(1.5, 0.5, 1.0), &k, &Nonlinearity::Zero).unwrap();
        assert!(cert.rho_unconstrained);
        assert!(cert.rho.is_infinite());
        assert!(cert.valid());
        assert_eq!(cert.lipschitz_c_rho, 0.0);
        assert_eq!(cert.decay_rate, 0.25);
    }

    #[test]
    fn power_nonlinearity_radius() {
        let k = DelayCoefficient::constant(0.05, 1.0).unwrap();
        let nl = Nonlinearity::Power(PowerNonlinearity::new(4, 2.0, 0.6, 33).unwrap());
        let inp = CertificateInputs { m: 1.8, omega: 0.495, gamma: 0.0, omega_prime: 0.15, k_window: 0.05, b: 1.0, tau: 1.0 };
        let cert = smallness_program(&inp, &k, &nl).unwrap();
        assert!(cert.valid(), "{:?}", cert.checks);
        assert!((cert.h_inv_half - (0.5f64 / 0.6).sqrt()).abs() < 1e-15);
        assert!(cert.rho <= cert.rho_literal.min(cert.rho_sqrt));
        assert!(cert.lipschitz_c_rho < (inp.omega - inp.omega_prime) / (2.0 * inp.m));
        // the previous (doubled) radius violated the Lipschitz bound
        if cert.rho_halvings > 0 {
            let prev = 2.0 * cert.c_rho;
            assert!(nl.lipschitz(prev) >= (inp.omega - inp.omega_prime) / (2.0 * inp.m));
        }
    }

    #[test]
    fn larger_window_budget_never_lowers_n() {
        let mut prev = 0;
        for i in 0..40 {
            let mut inp = inputs(1.6, 0.4, 0.8);
            inp.k_window = i as f64 * 0.05;
            let n = minimal_n(&inp).unwrap();
            assert!(n >= prev);
            prev = n;
        }
    }

    #[test]
    fn rejects_omega_prime_at_omega() {
        let mut inp = inputs(1.0, 0.5, 1.0);
        inp.omega_prime = 0.5;
        let k = DelayCoefficient::zero(1.0).unwrap();
        assert!(smallness_program(&inp, &k, &Nonlinearity::Zero).is_err());
    }

    #[test]
    fn envelope_prefactor_constant_coefficient() {
        let k = DelayCoefficient::constant(-0.3, 0.8).unwrap();
        let omega = 0.6;
        let integral = forcing_integral(&k, omega, |_| 2.0);
        let exact = 0.3 * 2.0 * ((omega * 0.8).exp() - 1.0) / omega;
        assert!((integral - exact).abs() < 1e-10);
    }

    #[test]
    fn envelope_without_delay() {
        let k = DelayCoefficient::zero(1.0).unwrap();
        let cert = smallness_program(&inputs(1.5, 0.5, 1.0), &k, &Nonlinearity::Zero).unwrap();
        let env = decay_envelope(&cert, 2.0, &k, |_| 1.0).unwrap();
        assert_eq!(env.forcing_integral, 0.0);
        assert!((env.prefactor - 3.0).abs() < 1e-15);
        assert!((env.general(2.0) - 3.0 * (-1.0f64).exp()).abs() < 1e-15);
    }
}
