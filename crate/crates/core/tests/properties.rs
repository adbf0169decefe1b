use std::f64::consts::PI;

use delaywave_core::certificate::{minimal_n, CertificateInputs};
use delaywave_core::linalg::symmetric_eigenvalues_sorted;
use delaywave_core::nonlinearity::PowerNonlinearity;
use delaywave_core::{gram_matrix, wave_preset, DelayCoefficient, State};
use nalgebra::DVector;
use proptest::prelude::*;

fn coefficient() -> impl Strategy<Value = DelayCoefficient> {
    (prop::collection::vec((0.05f64..2.0, -3.0f64..3.0), 1..10), 0.1f64..3.0).prop_map(|(pieces, tau)| {
        let mut t = 0.0;
        let mut times = vec![0.0];
        let mut values = vec![pieces[0].1];
        for &(dt, v) in &pieces[1..] {
            t += dt;
            times.push(t);
            values.push(v);
        }
        DelayCoefficient::new(times, values, tau).unwrap()
    })
}

fn decaying_coefficient() -> impl Strategy<Value = DelayCoefficient> {
    (coefficient(), 0.05f64..2.0).prop_map(|(k, gap)| {
        let mut times = k.breakpoints().to_vec();
        let mut values = k.values().to_vec();
        times.push(times.last().unwrap() + gap);
        values.push(0.0);
        DelayCoefficient::new(times, values, k.tau()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gram_is_monotone_in_the_interval(n in 1usize..10, a in 0.0f64..1.5, b in 1.6f64..PI, shrink in 0.0f64..0.5) {
        let outer = gram_matrix((a, b), n).unwrap();
        let inner = gram_matrix((a + shrink * (b - a) / 2.0, b - shrink * (b - a) / 2.0), n).unwrap();
        let eig = symmetric_eigenvalues_sorted(&(outer - inner));
        prop_assert!(eig[0] >= -1e-10);
    }

    #[test]
    fn gram_is_additive(n in 1usize..10, a in 0.0f64..1.0, m in 1.0f64..2.0, b in 2.0f64..PI) {
        let whole = gram_matrix((a, b), n).unwrap();
        let parts = gram_matrix((a, m), n).unwrap() + gram_matrix((m, b), n).unwrap();
        prop_assert!((whole - parts).abs().max() < 1e-12);
    }

    #[test]
    fn w_norm_satisfies_parallelogram_law(seed in prop::collection::vec(-1.0f64..1.0, 24)) {
        let sys = wave_preset(6, 1.0, (0.0, 1.0), None).unwrap();
        let st = |o: usize| State::new(DVector::from_row_slice(&seed[o..o + 6]), DVector::from_row_slice(&seed[o + 6..o + 12])).unwrap();
        let (x, y) = (st(0), st(12));
        let sum = State::new(&x.u + &y.u, &x.v + &y.v).unwrap();
        let diff = State::new(&x.u - &y.u, &x.v - &y.v).unwrap();
        let lhs = sys.w_norm(&sum).unwrap().powi(2) + sys.w_norm(&diff).unwrap().powi(2);
        let rhs = 2.0 * (sys.w_norm(&x).unwrap().powi(2) + sys.w_norm(&y).unwrap().powi(2));
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
    }

    #[test]
    fn abs_integral_is_additive(k in coefficient(), a in 0.0f64..3.0, d1 in 0.0f64..4.0, d2 in 0.0f64..4.0) {
        let whole = k.abs_integral(a, a + d1 + d2).unwrap();
        let parts = k.abs_integral(a, a + d1).unwrap() + k.abs_integral(a + d1, a + d1 + d2).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-12 * whole.max(1.0));
    }

    #[test]
    fn window_bound_is_monotone_in_horizon(k in coefficient(), h in 0.0f64..10.0, extra in 0.0f64..5.0) {
        let h = h + k.tau();
        prop_assert!(k.window_bound(h + extra).unwrap() >= k.window_bound(h).unwrap() - 1e-14);
    }

    #[test]
    fn integrals_scale_linearly(k in coefficient(), s in 0.0f64..5.0, t in 0.0f64..8.0) {
        let ks = k.scaled(s);
        let base = k.abs_integral(0.0, t).unwrap();
        prop_assert!((ks.abs_integral(0.0, t).unwrap() - s * base).abs() <= 1e-12 * (s * base).max(1.0));
        let w = k.window_bound(t + k.tau()).unwrap();
        prop_assert!((ks.window_bound(t + k.tau()).unwrap() - s * w).abs() <= 1e-12 * (s * w).max(1.0));
    }

    #[test]
    fn fitted_constants_hold_at_shifted_breakpoints(k in decaying_coefficient(), m in 1.0f64..3.0, omega in 0.5f64..3.0) {
        let fit = k.fit_gamma_omega(m, omega, 1.0, 10.0, 128).unwrap();
        prop_assume!(fit.feasible);
        let tau = k.tau();
        let lhs = |t: f64| m * (omega * tau).exp() * k.abs_integral(tau, t + tau).unwrap();
        let mut probes: Vec<f64> = k.breakpoints().iter().flat_map(|&b| [b, b - tau, b + tau]).filter(|&t| t >= 0.0).collect();
        probes.extend((0..=200).map(|i| i as f64 * 0.1));
        for t in probes {
            prop_assert!(lhs(t) <= fit.gamma + fit.omega_prime * t + 1e-9 * (1.0 + lhs(t)), "t = {}", t);
        }
    }

    #[test]
    fn h_inverse_round_trips(beta in 0.2f64..4.0, c_h in 0.01f64..10.0, y in 1e-6f64..10.0) {
        let p = PowerNonlinearity::new(3, beta, c_h, 13).unwrap();
        prop_assert!((p.h_bound(p.h_inverse(y)) - y).abs() <= 1e-12 * y);
    }

    #[test]
    fn minimal_n_never_decreases_with_k(m in 1.0f64..4.0, omega in 0.1f64..2.0, tau in 0.1f64..2.0, k1 in 0.0f64..0.5, dk in 0.0f64..0.5) {
        let inp = |k| CertificateInputs { m, omega, gamma: 0.0, omega_prime: 0.0, k_window: k, b: 1.0, tau };
        let a = minimal_n(&inp(k1));
        let b = minimal_n(&inp(k1 + dk));
        if let (Ok(a), Ok(b)) = (&a, &b) {
            prop_assert!(b >= a);
        } else {
            prop_assert!(b.is_err());
        }
    }
}
