//! Decay estimate, admissibility fit, smallness program, simulation and checks.

use anyhow::{Context, Result};
use delaywave_core::certificate::{decay_envelope, history_forcing_norm, initial_data_size};
use delaywave_core::energy::{check_energy_growth, check_lower_bound, EnergyGrowthReport, LowerBoundReport};
use delaywave_core::semigroup::DecayEstimate;
use delaywave_core::{
    assemble_generator, estimate_decay, simulate, smallness_program, AdmissibilityFit, CertificateInputs, DecayEnvelope,
    Nonlinearity, PowerNonlinearity, Scenario, StabilityCertificate, TrajectoryRecord,
};
use nalgebra::DVector;

use crate::config::ScenarioConfig;

/// Relative slack allowed between the simulated norm and the envelope.
pub const ENVELOPE_TOLERANCE: f64 = 0.05;
/// Relative slack in the energy growth check.
pub const ENERGY_TOLERANCE: f64 = 0.01;

pub struct Analysis {
    pub nl: Nonlinearity,
    pub horizon: f64,
    pub decay: Option<DecayEstimate>,
    pub fit: Option<AdmissibilityFit>,
    pub k_window: f64,
    pub cert: Option<StabilityCertificate>,
    /// Why no certificate could be formed.
    pub failure: Option<String>,
}

impl Analysis {
    pub fn certificate_valid(&self) -> bool {
        self.cert.as_ref().is_some_and(StabilityCertificate::valid)
    }
}

pub struct EnvelopeRow {
    pub time: f64,
    pub w_norm: f64,
    pub envelope: f64,
    pub ratio: f64,
    pub general_envelope: f64,
    pub general_ratio: f64,
}

pub struct RunResult {
    pub scale: f64,
    pub data_size: f64,
    pub certified: bool,
    pub record: TrajectoryRecord,
    pub envelope: Option<DecayEnvelope>,
    pub rows: Vec<EnvelopeRow>,
    /// Largest `||U||_W / envelope`; 0/0 counts as 0.
    pub max_ratio: f64,
    pub lower: LowerBoundReport,
    pub growth: EnergyGrowthReport,
}

impl RunResult {
    pub fn energy_check_passes(&self) -> bool {
        !self.lower.passes() || self.growth.passes
    }

    pub fn envelope_check_passes(&self) -> bool {
        !self.certified || (!self.record.diverged() && self.max_ratio <= 1.0 + ENVELOPE_TOLERANCE)
    }

    pub fn final_w_norm(&self) -> f64 {
        self.record.w_norms.last().copied().unwrap_or(0.0)
    }
}

pub fn nonlinearity(cfg: &ScenarioConfig) -> Result<Nonlinearity> {
    if cfg.beta == 0.0 {
        return Ok(Nonlinearity::Zero);
    }
    let p = PowerNonlinearity::calibrated(&cfg.sys, cfg.beta, cfg.grid_size, cfg.c_h_samples, cfg.seed)
        .context("calibrating the power nonlinearity")?;
    Ok(Nonlinearity::Power(p))
}

pub fn scenario(cfg: &ScenarioConfig, nl: &Nonlinearity, scale: f64) -> Result<Scenario> {
    let scn = Scenario::new(
        cfg.sys.clone(),
        cfg.k.clone(),
        nl.clone(),
        DVector::from_vec(cfg.u0.clone()),
        DVector::from_vec(cfg.v0.clone()),
        cfg.history_descriptor(),
        cfg.dt,
        cfg.t_end,
    )?
    .with_blowup_ceiling(cfg.blowup_ceiling);
    Ok(scn.scaled(scale))
}

pub fn analyse(cfg: &ScenarioConfig) -> Result<Analysis> {
    let nl = nonlinearity(cfg)?;
    let horizon = cfg.horizon.unwrap_or_else(|| cfg.t_end.max(cfg.k.support_end() + cfg.tau).max(cfg.tau));
    let k_window = cfg.k.window_bound(horizon)?;
    let mut out = Analysis { nl, horizon, decay: None, fit: None, k_window, cert: None, failure: None };

    let est = match estimate_decay(&assemble_generator(&cfg.sys)) {
        Ok(e) => e,
        Err(e) => {
            out.failure = Some(format!("decay estimate: {e}"));
            return Ok(out);
        }
    };
    let fit = cfg.k.fit_gamma_omega(est.m, est.omega, cfg.sys.b(), horizon, cfg.omega_grid)?;
    out.decay = Some(est.clone());
    if !fit.feasible {
        out.failure = Some(format!(
            "k is not admissible: its tail growth rate {} is not below omega = {}",
            fit.tail_slope, est.omega
        ));
        out.fit = Some(fit);
        return Ok(out);
    }
    let inputs = CertificateInputs {
        m: est.m,
        omega: est.omega,
        gamma: fit.gamma,
        omega_prime: fit.omega_prime,
        k_window,
        b: cfg.sys.b(),
        tau: cfg.tau,
    };
    out.fit = Some(fit);
    match smallness_program(&inputs, &cfg.k, &out.nl) {
        Ok(c) => out.cert = Some(c),
        Err(e) => out.failure = Some(format!("smallness program: {e}")),
    }
    Ok(out)
}

pub fn run_scenario(cfg: &ScenarioConfig, analysis: &Analysis, scale: f64) -> Result<RunResult> {
    let scn = scenario(cfg, &analysis.nl, scale)?;
    let data_size = initial_data_size(&scn.sys, &scn.k, &scn.u0, &scn.v0, &scn.history)?;
    let certified = analysis.cert.as_ref().is_some_and(|c| c.certifies(data_size));
    let record = simulate(&scn)?;

    let envelope = match &analysis.cert {
        Some(cert) if cert.valid() => {
            let u0w = scn.sys.w_norm(&scn.initial_state())?;
            let hist = scn.history.clone();
            let sys = scn.sys.clone();
            let tau = cfg.tau;
            Some(decay_envelope(cert, u0w, &scn.k, |s| history_forcing_norm(&sys, &hist, tau, s))?)
        }
        _ => None,
    };
    let ratio = |w: f64, e: f64| if w == 0.0 { 0.0 } else { w / e };
    let rows: Vec<EnvelopeRow> = match &envelope {
        Some(env) => record
            .times
            .iter()
            .zip(&record.w_norms)
            .map(|(&t, &w)| {
                let (e, g) = (env.working(t), env.general(t));
                EnvelopeRow { time: t, w_norm: w, envelope: e, ratio: ratio(w, e), general_envelope: g, general_ratio: ratio(w, g) }
            })
            .collect(),
        None => Vec::new(),
    };
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let lower = check_lower_bound(&record);
    let growth = check_energy_growth(&record, &scn.k, scn.sys.b(), ENERGY_TOLERANCE)?;
    Ok(RunResult { scale, data_size, certified, record, envelope, rows, max_ratio, lower, growth })
}
