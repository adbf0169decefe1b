//! CSV tables and the key-value certificate report.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use delaywave_core::TrajectoryRecord;

use crate::config::ScenarioConfig;
use crate::pipeline::{Analysis, RunResult, ENERGY_TOLERANCE, ENVELOPE_TOLERANCE};

/// 17 significant digits; `inf`, `-inf`, `nan` for non-finite values.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating a file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn csv_bytes(header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(w.into_inner().context("flushing CSV")?)
}

pub fn trajectory_csv(rec: &TrajectoryRecord) -> Result<Vec<u8>> {
    let n = rec.states.first().map_or(0, |s| s.u.len());
    let mut header: Vec<String> = ["time", "E", "w_norm", "delayed_forcing_norm"].map(String::from).into();
    header.extend((1..=n).map(|i| format!("u_{i}")));
    header.extend((1..=n).map(|i| format!("v_{i}")));
    let rows = (0..rec.len()).map(|i| {
        let mut row = vec![num(rec.times[i]), num(rec.energy[i]), num(rec.w_norms[i]), num(rec.delayed_forcing_norms[i])];
        row.extend(rec.states[i].u.iter().map(|&x| num(x)));
        row.extend(rec.states[i].v.iter().map(|&x| num(x)));
        row
    });
    csv_bytes(header, rows)
}

pub fn envelope_csv(res: &RunResult) -> Result<Vec<u8>> {
    let header = ["time", "w_norm", "envelope", "ratio", "general_envelope", "general_ratio"].map(String::from).into();
    let rows = res
        .rows
        .iter()
        .map(|r| vec![num(r.time), num(r.w_norm), num(r.envelope), num(r.ratio), num(r.general_envelope), num(r.general_ratio)]);
    csv_bytes(header, rows)
}

pub fn sweep_csv(results: &[RunResult]) -> Result<Vec<u8>> {
    let header = ["scale", "data_size", "certified", "max_ratio", "diverged", "final_w_norm", "energy_check"]
        .map(String::from)
        .into();
    let rows = results.iter().map(|r| {
        vec![
            num(r.scale),
            num(r.data_size),
            r.certified.to_string(),
            num(r.max_ratio),
            r.record.diverged().to_string(),
            num(r.final_w_norm()),
            r.energy_check_passes().to_string(),
        ]
    });
    csv_bytes(header, rows)
}

struct Report(String);

impl Report {
    fn kv(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.0, "{key} = {value}");
    }
    fn x(&mut self, key: &str, value: f64) {
        self.kv(key, num(value));
    }
}

fn slug(name: &str) -> String {
    let mut s = String::new();
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            s.push(c.to_ascii_lowercase());
        } else if c == '\'' {
            s.push_str("_prime");
        } else if !s.ends_with('_') {
            s.push('_');
        }
    }
    s.trim_matches('_').to_string()
}

/// Flat `name = value` report; `run` is absent for `certify`.
pub fn certificate_report(cfg: &ScenarioConfig, an: &Analysis, run: Option<&RunResult>) -> String {
    let mut r = Report(String::new());
    r.kv("scenario", cfg.source.display());
    r.kv("n", cfg.n);
    r.x("b", cfg.sys.b());
    r.x("tau", cfg.tau);
    r.x("horizon", an.horizon);
    r.x("k_window", an.k_window);
    match &an.nl {
        delaywave_core::Nonlinearity::Zero => r.kv("nonlinearity", "zero"),
        delaywave_core::Nonlinearity::Power(p) => {
            r.kv("nonlinearity", "power");
            r.x("beta", p.beta());
            r.x("c_h", p.c_h());
            if let Some(s) = p.sampled_ratio() {
                r.x("c_h_sampled_ratio", s);
            }
        }
    }
    if let Some(d) = &an.decay {
        r.x("m", d.m);
        r.x("omega", d.omega);
        r.x("abscissa", d.abscissa);
        r.x("tail_time", d.tail_time);
        r.kv("decay_samples", d.samples);
    }
    if let Some(f) = &an.fit {
        r.kv("k_admissible", f.feasible);
        r.x("tail_slope", f.tail_slope);
        r.x("gamma", f.gamma);
        r.x("omega_prime", f.omega_prime);
        r.x("fit_margin", f.achieved_margin);
    }
    if let Some(c) = &an.cert {
        r.kv("n_steps", c.n);
        r.x("c_n", c.c_n);
        r.x("cbar_n", c.cbar_n);
        r.x("h_inv_half", c.h_inv_half);
        r.x("rho_literal", c.rho_literal);
        r.x("rho_sqrt", c.rho_sqrt);
        r.x("rho", c.rho);
        r.kv("rho_halvings", c.rho_halvings);
        r.kv("rho_unconstrained", c.rho_unconstrained);
        r.x("c_rho", c.c_rho);
        r.x("lipschitz_c_rho", c.lipschitz_c_rho);
        r.x("decay_rate", c.decay_rate);
        r.x("general_rate", c.general_rate);
        for ch in &c.checks {
            let s = slug(&ch.name);
            r.kv(&format!("check.{s}.name"), &ch.name);
            r.x(&format!("check.{s}.margin"), ch.margin);
            r.kv(&format!("check.{s}.passed"), ch.passed());
        }
    }
    r.kv("certificate_valid", an.certificate_valid());
    if let Some(f) = &an.failure {
        r.kv("certificate_failure", f);
    }
    if let Some(res) = run {
        r.x("scale", res.scale);
        r.x("data_size", res.data_size);
        r.kv("data_certified", if res.certified { "certified" } else { "data not certified" });
        if let Some(env) = &res.envelope {
            r.x("envelope_prefactor", env.prefactor);
            r.x("envelope_forcing_integral", env.forcing_integral);
            r.x("max_envelope_ratio", res.max_ratio);
            r.x("envelope_tolerance", ENVELOPE_TOLERANCE);
            r.kv("envelope_check_passed", res.envelope_check_passes());
        }
        r.kv("diverged", res.record.diverged());
        if let delaywave_core::Outcome::Diverged { t } = res.record.outcome {
            r.x("diverged_at", t);
        }
        r.x("final_w_norm", res.final_w_norm());
        r.kv("lower_bound_holds", res.lower.passes());
        r.x("lower_bound_margin", res.lower.worst_full_margin);
        r.kv("energy_growth_passed", res.growth.passes);
        r.x("energy_growth_margin", res.growth.worst_margin);
        r.x("energy_growth_worst_ratio", res.growth.worst_ratio);
        r.x("energy_tolerance", ENERGY_TOLERANCE);
        r.kv("energy_check_passed", res.energy_check_passes());
    }
    r.0
}
