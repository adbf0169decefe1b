//! Scenario files, CSV output and the `run` / `certify` / `sweep` drivers.

pub mod config;
pub mod output;
pub mod pipeline;

use std::path::Path;

use anyhow::Result;
use rayon::prelude::*;

pub use config::{parse_config, ScenarioConfig};

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass = 0,
    InputError = 1,
    CheckFailure = 2,
}

pub struct Outcome {
    pub status: Status,
    pub warnings: Vec<String>,
    pub failures: Vec<String>,
}

fn certificate_failures(an: &pipeline::Analysis) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(f) = &an.failure {
        out.push(f.clone());
    }
    if let Some(c) = &an.cert {
        out.extend(c.failed_checks().map(|ch| format!("certificate check `{}` failed (margin {})", ch.name, ch.margin)));
    }
    out
}

fn finish(failures: Vec<String>, warnings: Vec<String>) -> Outcome {
    let status = if failures.is_empty() { Status::Pass } else { Status::CheckFailure };
    Outcome { status, warnings, failures }
}

fn run_warnings(cfg: &ScenarioConfig, res: &pipeline::RunResult, an: &pipeline::Analysis) -> Vec<String> {
    let mut w = Vec::new();
    if let Ok(scn) = pipeline::scenario(cfg, &an.nl, res.scale) {
        w.extend(scn.stability_warning());
    }
    if an.certificate_valid() && !res.certified {
        w.push(format!(
            "scale {}: data not certified (size {} >= rho {}); decay is not guaranteed but may still hold",
            res.scale,
            output::num(res.data_size),
            output::num(an.cert.as_ref().map_or(f64::NAN, |c| c.rho))
        ));
    }
    if res.record.diverged() && !res.certified {
        w.push(format!("scale {}: trajectory diverged", res.scale));
    }
    w
}

fn run_failures(res: &pipeline::RunResult) -> Vec<String> {
    let mut f = Vec::new();
    if !res.energy_check_passes() {
        f.push(format!("scale {}: energy growth bound violated at t = {:?}", res.scale, res.growth.first_failure));
    }
    if !res.envelope_check_passes() {
        f.push(format!(
            "scale {}: certified data but ||U||_W / envelope reached {} (diverged: {})",
            res.scale,
            res.max_ratio,
            res.record.diverged()
        ));
    }
    f
}

/// Certificate only.
pub fn certify(cfg: &ScenarioConfig) -> Result<Outcome> {
    let an = pipeline::analyse(cfg)?;
    output::write_atomic(&cfg.certificate_report, output::certificate_report(cfg, &an, None).as_bytes())?;
    Ok(finish(certificate_failures(&an), Vec::new()))
}

/// Full pipeline at the configured scale.
pub fn run(cfg: &ScenarioConfig) -> Result<Outcome> {
    let an = pipeline::analyse(cfg)?;
    let res = pipeline::run_scenario(cfg, &an, cfg.scale)?;
    output::write_atomic(&cfg.trajectory_csv, &output::trajectory_csv(&res.record)?)?;
    output::write_atomic(&cfg.certificate_report, output::certificate_report(cfg, &an, Some(&res)).as_bytes())?;
    let mut warnings = run_warnings(cfg, &res, &an);
    if res.envelope.is_some() {
        output::write_atomic(&cfg.envelope_csv, &output::envelope_csv(&res)?)?;
    } else {
        warnings.push("no valid certificate; envelope table not written".into());
    }
    let mut failures = certificate_failures(&an);
    failures.extend(run_failures(&res));
    Ok(finish(failures, warnings))
}

/// One scenario per scale, in parallel; rows keep the order of `scales`.
pub fn sweep(cfg: &ScenarioConfig, scales: &[f64], out: Option<&Path>) -> Result<Outcome> {
    let an = pipeline::analyse(cfg)?;
    let results: Vec<pipeline::RunResult> =
        scales.par_iter().map(|&s| pipeline::run_scenario(cfg, &an, s)).collect::<Result<_>>()?;
    let path = out.unwrap_or(&cfg.sweep_csv);
    output::write_atomic(path, &output::sweep_csv(&results)?)?;
    let mut warnings = Vec::new();
    let mut failures = certificate_failures(&an);
    for res in &results {
        warnings.extend(run_warnings(cfg, res, &an));
        failures.extend(run_failures(res));
    }
    warnings.dedup();
    Ok(finish(failures, warnings))
}
