use std::f64::consts::PI;

use delaywave_core::linalg::expm;
use delaywave_core::nonlinearity::{default_grid_size, PowerNonlinearity};
use delaywave_core::spectral::plate_preset;
use delaywave_core::{
    assemble_generator, estimate_decay, simulate, wave_preset, DelayCoefficient, HistoryDescriptor, Nonlinearity,
    Scenario, SpectralSystem, State,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_with_elastic_norm(rng: &mut ChaCha8Rng, sys: &SpectralSystem, r: f64) -> DVector<f64> {
    let u = DVector::from_fn(sys.n(), |_, _| rng.random_range(-1.0..1.0) / (1.0 + rng.random_range(0.0..3.0)));
    let s = sys.elastic_norm(&u);
    u * (r / s)
}

fn undamped(n: usize) -> SpectralSystem {
    let lambdas = DVector::from_fn(n, |i, _| ((i + 1) * (i + 1)) as f64);
    SpectralSystem::new(lambdas, DMatrix::zeros(n, n), DMatrix::zeros(n, n), 0.0).unwrap()
}

#[test]
fn calibrated_h_bounds_fresh_samples() {
    let sys = wave_preset(6, 1.0, (0.0, PI), None).unwrap();
    for beta in [1.0, 2.0] {
        let p = PowerNonlinearity::calibrated(&sys, beta, default_grid_size(6), 10_000, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let r = rng.random_range(0.01..2.0);
            let u = random_with_elastic_norm(&mut rng, &sys, r);
            assert!(p.grad_psi(&u).norm() <= p.h_bound(r) * r);
        }
    }
}

#[test]
fn lipschitz_bound_holds_inside_the_ball() {
    let sys = wave_preset(6, 1.0, (0.0, PI), None).unwrap();
    let p = PowerNonlinearity::calibrated(&sys, 2.0, default_grid_size(6), 10_000, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let r = rng.random_range(0.01..2.0);
        let (ru, rv) = (r * rng.random_range(0.0..1.0), r * rng.random_range(0.0..1.0));
        let u = random_with_elastic_norm(&mut rng, &sys, ru);
        let v = random_with_elastic_norm(&mut rng, &sys, rv);
        let lhs = (p.grad_psi(&u) - p.grad_psi(&v)).norm();
        assert!(lhs <= p.lipschitz(r) * sys.elastic_norm(&(&u - &v)) * (1.0 + 1e-12));
    }
}

#[test]
fn h_is_increasing() {
    let p = PowerNonlinearity::new(4, 1.5, 0.7, 33).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let a = rng.random_range(0.0..10.0);
        let b = a + rng.random_range(1e-6..1.0);
        assert!(p.h_bound(a) < p.h_bound(b));
        assert!(p.lipschitz(a) < p.lipschitz(b));
    }
}

#[test]
fn plate_linear_limit_matches_matrix_exponential() {
    let n = 3;
    let sys = plate_preset(n, 2.0, (0.5, 2.0), None).unwrap();
    let u0 = DVector::from_fn(n, |i, _| 1.0 / (i + 1) as f64);
    let v0 = DVector::from_fn(n, |i, _| (i as f64 - 1.0) * 0.3);
    let scn = Scenario::new(
        sys.clone(),
        DelayCoefficient::zero(0.5).unwrap(),
        Nonlinearity::Zero,
        u0.clone(),
        v0.clone(),
        HistoryDescriptor::Constant(v0.clone()),
        1e-3,
        2.0,
    )
    .unwrap();
    let rec = simulate(&scn).unwrap();
    let mut gen = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        gen[(i, n + i)] = 1.0;
        gen[(n + i, i)] = -sys.lambdas()[i];
    }
    gen.view_mut((n, n), (n, n)).copy_from(&(-sys.damping()));
    let mut y0 = DVector::zeros(2 * n);
    y0.rows_mut(0, n).copy_from(&u0);
    y0.rows_mut(n, n).copy_from(&v0);
    for idx in [500, 1000, 2000] {
        let y = expm(&(&gen * rec.times[idx])) * &y0;
        let exact = State::new(y.rows(0, n).into_owned(), y.rows(n, n).into_owned()).unwrap();
        let st = &rec.states[idx];
        let d = State::new(&st.u - &exact.u, &st.v - &exact.v).unwrap();
        assert!(sys.w_norm(&d).unwrap() < 1e-8 * sys.w_norm(&exact).unwrap().max(1.0));
    }
}

#[test]
fn undamped_linear_flow_conserves_w_norm() {
    let n = 2;
    let sys = undamped(n);
    let v0 = DVector::from_vec(vec![0.3, -0.2]);
    let t_end = 1000.0 * 2.0 * PI;
    let dt = 1e-3;
    let t_end = (t_end / dt).round() * dt;
    let scn = Scenario::new(
        sys,
        DelayCoefficient::zero(0.1).unwrap(),
        Nonlinearity::Zero,
        DVector::from_vec(vec![1.0, 0.5]),
        v0.clone(),
        HistoryDescriptor::Constant(v0),
        dt,
        t_end,
    )
    .unwrap();
    let rec = simulate(&scn).unwrap();
    let w0 = rec.w_norms[0];
    let drift = rec.w_norms.iter().map(|w| (w / w0 - 1.0).abs()).fold(0.0, f64::max);
    assert!(drift < 1e-6, "drift {drift}");
}

#[test]
fn undamped_power_flow_conserves_energy() {
    let n = 4;
    let sys = undamped(n);
    let nl = Nonlinearity::Power(PowerNonlinearity::new(n, 2.0, 1.0, default_grid_size(n)).unwrap());
    let v0 = DVector::zeros(n);
    let scn = Scenario::new(
        sys,
        DelayCoefficient::zero(0.1).unwrap(),
        nl,
        DVector::from_vec(vec![0.5, 0.2, 0.0, 0.1]),
        v0.clone(),
        HistoryDescriptor::Constant(v0),
        1e-3,
        20.0,
    )
    .unwrap();
    let rec = simulate(&scn).unwrap();
    let e0 = rec.energy[0];
    assert!(rec.energy.iter().all(|e| (e / e0 - 1.0).abs() < 1e-9));
}

#[test]
fn decay_rate_grows_with_full_domain_damping() {
    let mut last = 0.0;
    for i in 1..=20 {
        let a = 0.1 * i as f64;
        let sys = wave_preset(5, a, (0.0, PI), None).unwrap();
        let est = estimate_decay(&assemble_generator(&sys)).unwrap();
        // the critically damped mode is defective, so its eigenvalues carry ~sqrt(eps) error
        assert!((est.omega - 0.99 * a / 2.0).abs() < 1e-7, "a = {a}: omega = {}", est.omega);
        assert!(est.omega >= last);
        last = est.omega;
    }
}
