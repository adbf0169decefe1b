//! Flat `key = value` scenario files.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use delaywave_core::history::steps_per_delay;
use delaywave_core::nonlinearity::{default_grid_size, min_grid_size, DEFAULT_CALIBRATION_SAMPLES};
use delaywave_core::spectral::{custom_preset, plate_preset};
use delaywave_core::{wave_preset, DelayCoefficient, HistoryDescriptor, SpectralSystem};
use nalgebra::DVector;

pub const KEYS: &[&str] = &[
    "preset",
    "n",
    "a",
    "damp_interval",
    "delay_interval",
    "lambdas",
    "beta",
    "k_constant",
    "k_csv",
    "tau",
    "dt",
    "t_end",
    "u0",
    "v0",
    "history",
    "scale",
    "seed",
    "c_h_samples",
    "grid_size",
    "blowup_ceiling",
    "horizon",
    "omega_grid",
    "trajectory_csv",
    "certificate_report",
    "envelope_csv",
    "sweep_csv",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Wave,
    Plate,
    Custom,
}

#[derive(Clone, Debug, PartialEq)]
pub enum KSource {
    Constant(f64),
    Csv(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub enum HistoryKind {
    Zero,
    Constant,
    Cosine(f64),
}

#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub source: PathBuf,
    pub preset: Preset,
    pub n: usize,
    pub a: f64,
    pub damp_interval: (f64, f64),
    pub delay_interval: Option<(f64, f64)>,
    pub lambdas: Option<Vec<f64>>,
    pub beta: f64,
    pub k_source: KSource,
    pub tau: f64,
    pub dt: f64,
    pub t_end: f64,
    pub u0: Vec<f64>,
    pub v0: Vec<f64>,
    pub history: HistoryKind,
    pub scale: f64,
    pub seed: u64,
    pub c_h_samples: usize,
    pub grid_size: usize,
    pub blowup_ceiling: f64,
    pub horizon: Option<f64>,
    pub omega_grid: usize,
    pub trajectory_csv: PathBuf,
    pub certificate_report: PathBuf,
    pub envelope_csv: PathBuf,
    pub sweep_csv: PathBuf,
    /// Resolved during validation.
    pub sys: SpectralSystem,
    pub k: DelayCoefficient,
}

/// Every problem found in a scenario file.
#[derive(Debug, Clone)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

struct Entry {
    line: usize,
    value: String,
}

struct Parser<'a> {
    path: &'a Path,
    entries: BTreeMap<String, Entry>,
    errors: Vec<String>,
}

impl Parser<'_> {
    fn err(&mut self, line: Option<usize>, msg: String) {
        let loc = match line {
            Some(l) => format!("{}:{l}", self.path.display()),
            None => self.path.display().to_string(),
        };
        self.errors.push(format!("{loc}: {msg}"));
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line)
    }

    fn raw(&self, key: &str) -> Option<(usize, String)> {
        self.entries.get(key).map(|e| (e.line, e.value.clone()))
    }

    fn parse<T, F>(&mut self, key: &str, f: F) -> Option<T>
    where
        F: FnOnce(&str) -> Result<T, String>,
    {
        let (line, value) = self.raw(key)?;
        match f(&value) {
            Ok(v) => Some(v),
            Err(e) => {
                self.err(Some(line), format!("{key}: {e}"));
                None
            }
        }
    }

    fn real(&mut self, key: &str, default: Option<f64>) -> Option<f64> {
        if !self.entries.contains_key(key) {
            if default.is_none() {
                self.err(None, format!("missing required key `{key}`"));
            }
            return default;
        }
        self.parse(key, parse_real)
    }

    fn positive(&mut self, key: &str, default: Option<f64>) -> Option<f64> {
        let v = self.real(key, default)?;
        if v > 0.0 {
            Some(v)
        } else {
            let line = self.line(key);
            self.err(line, format!("{key} must be positive, got {v}"));
            None
        }
    }

    fn count(&mut self, key: &str, default: Option<usize>) -> Option<usize> {
        if !self.entries.contains_key(key) {
            if default.is_none() {
                self.err(None, format!("missing required key `{key}`"));
            }
            return default;
        }
        self.parse(key, |s| s.trim().parse::<usize>().map_err(|e| format!("expected a non-negative integer ({e})")))
    }

    fn interval(&mut self, key: &str, default: Option<(f64, f64)>) -> Option<Option<(f64, f64)>> {
        if !self.entries.contains_key(key) {
            return Some(default);
        }
        self.parse(key, |s| {
            if s.trim().eq_ignore_ascii_case("none") {
                return Ok(None);
            }
            let parts = parse_list(s)?;
            if parts.len() != 2 {
                return Err(format!("expected `lo, hi`, got {} numbers", parts.len()));
            }
            let (lo, hi) = (parts[0], parts[1]);
            if !(0.0..PI + 1e-12).contains(&lo) || !(lo..=PI + 1e-12).contains(&hi) || lo >= hi {
                return Err(format!("need 0 <= lo < hi <= pi, got ({lo}, {hi})"));
            }
            Ok(Some((lo, hi.min(PI))))
        })
    }

    fn path(&mut self, key: &str, base: &Path, default: String) -> PathBuf {
        match self.raw(key) {
            Some((_, v)) => base.join(v.trim()),
            None => base.join(default),
        }
    }
}

fn parse_real(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let v = match t {
        "pi" => PI,
        _ => match t.strip_prefix("pi/") {
            Some(d) => PI / d.trim().parse::<f64>().map_err(|e| format!("`{t}` is not a number ({e})"))?,
            None => t.parse::<f64>().map_err(|e| format!("`{t}` is not a number ({e})"))?,
        },
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{t}` is not finite"))
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(parse_real).collect()
}

fn split_lines(path: &Path, text: &str) -> (BTreeMap<String, Entry>, Vec<String>) {
    let mut entries = BTreeMap::new();
    let mut errors = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            errors.push(format!("{}:{line}: expected `key = value`", path.display()));
            continue;
        };
        let key = key.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            errors.push(format!("{}:{line}: unknown key `{key}`", path.display()));
            continue;
        }
        if let Some(prev) = entries.get(&key) {
            let prev: &Entry = prev;
            errors.push(format!("{}:{line}: duplicate key `{key}` (first set on line {})", path.display(), prev.line));
            continue;
        }
        entries.insert(key, Entry { line, value: value.trim().to_string() });
    }
    (entries, errors)
}

/// Reads and validates a scenario file, reporting all errors at once.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig, ConfigErrors> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigErrors(vec![format!("{}: cannot read scenario file: {e}", path.display())]))?;
    parse_config_str(path, &text)
}

pub fn parse_config_str(path: &Path, text: &str) -> Result<ScenarioConfig, ConfigErrors> {
    let (entries, errors) = split_lines(path, text);
    let mut p = Parser { path, entries, errors };
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scenario".into());

    let preset = match p.raw("preset") {
        None => Some(Preset::Wave),
        Some((line, v)) => match v.as_str() {
            "wave" => Some(Preset::Wave),
            "plate" => Some(Preset::Plate),
            "custom" => Some(Preset::Custom),
            other => {
                p.err(Some(line), format!("preset must be wave, plate or custom, got `{other}`"));
                None
            }
        },
    };
    let lambdas = if p.entries.contains_key("lambdas") { p.parse("lambdas", parse_list) } else { None };
    let n_default = match (&preset, &lambdas) {
        (Some(Preset::Custom), Some(l)) => Some(l.len()),
        _ => Some(8),
    };
    let mut n = p.count("n", n_default);
    if n == Some(0) {
        let line = p.line("n");
        p.err(line, "n must be at least 1".into());
        n = None;
    }
    match (&preset, &lambdas) {
        (Some(Preset::Custom), None) => p.err(None, "preset = custom requires `lambdas`".into()),
        (Some(Preset::Wave | Preset::Plate), Some(_)) => {
            let line = p.line("lambdas");
            p.err(line, "lambdas is only allowed with preset = custom".into());
        }
        (Some(Preset::Custom), Some(l)) => {
            if let Some(n) = n {
                if l.len() != n {
                    let line = p.line("lambdas");
                    p.err(line, format!("lambdas has {} entries but n = {n}", l.len()));
                }
            }
        }
        _ => {}
    }
    let a = p.real("a", Some(1.0));
    if let Some(a) = a {
        if !(a > 0.0) {
            let line = p.line("a");
            p.err(line, format!("a must be positive, got {a}"));
        }
    }
    let damp_interval = p.interval("damp_interval", Some((0.0, PI)));
    let damp_interval = match damp_interval {
        Some(Some(iv)) => Some(iv),
        Some(None) => {
            let line = p.line("damp_interval");
            p.err(line, "damp_interval cannot be none".into());
            None
        }
        None => None,
    };
    let delay_interval = p.interval("delay_interval", Some((0.0, PI / 2.0)));
    let beta = p.real("beta", Some(0.0));
    if let Some(b) = beta {
        if b < 0.0 {
            let line = p.line("beta");
            p.err(line, format!("beta must be non-negative (0 disables the nonlinearity), got {b}"));
        }
    }
    let tau = p.positive("tau", Some(1.0));
    let dt = p.positive("dt", Some(0.01));
    let t_end = p.real("t_end", Some(10.0));
    if let Some(t) = t_end {
        if t < 0.0 {
            let line = p.line("t_end");
            p.err(line, format!("t_end must be non-negative, got {t}"));
        }
    }
    if let (Some(tau), Some(dt)) = (tau, dt) {
        if let Err(e) = steps_per_delay(tau, dt) {
            let line = p.line("dt").or(p.line("tau"));
            p.err(line, e.to_string());
        }
        if let Some(t_end) = t_end {
            let steps = t_end / dt;
            if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
                let line = p.line("t_end").or(p.line("dt"));
                p.err(line, format!("t_end = {t_end} is not a whole number of steps dt = {dt}"));
            }
        }
    }

    let k_source = match (p.raw("k_constant"), p.raw("k_csv")) {
        (Some(_), Some((line, _))) => {
            p.err(Some(line), "set only one of k_constant and k_csv".into());
            None
        }
        (None, Some((_, v))) => Some(KSource::Csv(base.join(v.trim()))),
        (Some(_), None) => p.parse("k_constant", parse_real).map(KSource::Constant),
        (None, None) => Some(KSource::Constant(0.0)),
    };

    let coeffs = |p: &mut Parser, key: &str, default: Vec<f64>| -> Option<Vec<f64>> {
        if p.entries.contains_key(key) {
            let v = p.parse(key, parse_list)?;
            if let Some(n) = n {
                if v.len() > n {
                    let line = p.line(key);
                    p.err(line, format!("{key} has {} coefficients but n = {n}", v.len()));
                    return None;
                }
            }
            Some(v)
        } else {
            Some(default)
        }
    };
    let u0 = coeffs(&mut p, "u0", vec![1.0]);
    let v0 = coeffs(&mut p, "v0", vec![]);
    let history = match p.raw("history") {
        None => Some(HistoryKind::Constant),
        Some((line, v)) => match v.as_str() {
            "zero" => Some(HistoryKind::Zero),
            "constant" => Some(HistoryKind::Constant),
            other => match other.strip_prefix("cosine:").map(parse_real) {
                Some(Ok(f)) => Some(HistoryKind::Cosine(f)),
                Some(Err(e)) => {
                    p.err(Some(line), format!("history: {e}"));
                    None
                }
                None => {
                    p.err(Some(line), format!("history must be zero, constant or cosine:<freq>, got `{other}`"));
                    None
                }
            },
        },
    };
    if let (Some(HistoryKind::Zero), Some(v0)) = (&history, &v0) {
        if v0.iter().any(|&x| x != 0.0) {
            let line = p.line("history");
            p.err(line, "history = zero requires v0 = 0 (the history must end at v0)".into());
        }
    }
    let scale = p.real("scale", Some(1.0));
    if let Some(s) = scale {
        if s < 0.0 {
            let line = p.line("scale");
            p.err(line, format!("scale must be non-negative, got {s}"));
        }
    }
    let seed = p.count("seed", Some(0)).map(|s| s as u64);
    let c_h_samples = p.count("c_h_samples", Some(DEFAULT_CALIBRATION_SAMPLES));
    let grid_size = match n {
        Some(n) => {
            let g = p.count("grid_size", Some(default_grid_size(n)));
            if let Some(g) = g {
                if g < min_grid_size(n) || g % 2 == 0 {
                    let line = p.line("grid_size");
                    p.err(line, format!("grid_size must be odd and at least {}, got {g}", min_grid_size(n)));
                }
            }
            g
        }
        None => None,
    };
    let blowup_ceiling = p.positive("blowup_ceiling", Some(delaywave_core::integrator::DEFAULT_BLOWUP_CEILING));
    let horizon = if p.entries.contains_key("horizon") { p.positive("horizon", None).map(Some) } else { Some(None) };
    let omega_grid = p.count("omega_grid", Some(delaywave_core::delay::DEFAULT_OMEGA_GRID));
    if omega_grid == Some(0) {
        let line = p.line("omega_grid");
        p.err(line, "omega_grid must be at least 1".into());
    }
    let trajectory_csv = p.path("trajectory_csv", &base, format!("{stem}_trajectory.csv"));
    let certificate_report = p.path("certificate_report", &base, format!("{stem}_certificate.txt"));
    let envelope_csv = p.path("envelope_csv", &base, format!("{stem}_envelope.csv"));
    let sweep_csv = p.path("sweep_csv", &base, format!("{stem}_sweep.csv"));

    // operators, checked with the core constructors
    let sys = match (preset, n, a, damp_interval, delay_interval) {
        (Some(preset), Some(n), Some(a), Some(damp), Some(delay)) if a > 0.0 => {
            let built = match preset {
                Preset::Wave => wave_preset(n, a, damp, delay),
                Preset::Plate => plate_preset(n, a, damp, delay),
                Preset::Custom => match &lambdas {
                    Some(l) if l.len() == n => custom_preset(l.clone(), a, damp, delay),
                    _ => Err(delaywave_core::Error::InvalidParameter { name: "lambdas", reason: "see above".into() }),
                },
            };
            match built {
                Ok(s) => Some(s),
                Err(e) => {
                    if preset != Preset::Custom || lambdas.as_ref().is_some_and(|l| l.len() == n) {
                        let line = p.line("lambdas").or(p.line("preset"));
                        p.err(line, e.to_string());
                    }
                    None
                }
            }
        }
        _ => None,
    };
    let k = match (&k_source, tau) {
        (Some(KSource::Constant(c)), Some(tau)) => match DelayCoefficient::constant(*c, tau) {
            Ok(k) => Some(k),
            Err(e) => {
                let line = p.line("k_constant");
                p.err(line, e.to_string());
                None
            }
        },
        (Some(KSource::Csv(csv)), Some(tau)) => match load_k_csv(csv, tau) {
            Ok(k) => Some(k),
            Err(errs) => {
                let line = p.line("k_csv");
                for e in errs {
                    p.err(line, e);
                }
                None
            }
        },
        _ => None,
    };

    if !p.errors.is_empty() {
        return Err(ConfigErrors(p.errors));
    }
    let n = n.unwrap();
    let pad = |mut v: Vec<f64>| {
        v.resize(n, 0.0);
        v
    };
    Ok(ScenarioConfig {
        source: path.to_path_buf(),
        preset: preset.unwrap(),
        n,
        a: a.unwrap(),
        damp_interval: damp_interval.unwrap(),
        delay_interval: delay_interval.unwrap(),
        lambdas,
        beta: beta.unwrap(),
        k_source: k_source.unwrap(),
        tau: tau.unwrap(),
        dt: dt.unwrap(),
        t_end: t_end.unwrap(),
        u0: pad(u0.unwrap()),
        v0: pad(v0.unwrap()),
        history: history.unwrap(),
        scale: scale.unwrap(),
        seed: seed.unwrap(),
        c_h_samples: c_h_samples.unwrap(),
        grid_size: grid_size.unwrap(),
        blowup_ceiling: blowup_ceiling.unwrap(),
        horizon: horizon.unwrap(),
        omega_grid: omega_grid.unwrap(),
        trajectory_csv,
        certificate_report,
        envelope_csv,
        sweep_csv,
        sys: sys.unwrap(),
        k: k.unwrap(),
    })
}

impl ScenarioConfig {
    pub fn history_descriptor(&self) -> HistoryDescriptor {
        let v0 = DVector::from_vec(self.v0.clone());
        match self.history {
            HistoryKind::Zero => HistoryDescriptor::Zero,
            HistoryKind::Constant => HistoryDescriptor::Constant(v0),
            HistoryKind::Cosine(freq) => HistoryDescriptor::Sinusoid { amplitude: v0, frequency: freq, phase: PI / 2.0 },
        }
    }
}

/// Two-column `time, value` file; a non-numeric first row is taken as a header.
pub fn load_k_csv(path: &Path, tau: f64) -> Result<DelayCoefficient, Vec<String>> {
    let file = std::fs::File::open(path).map_err(|e| vec![format!("cannot open k CSV {}: {e}", path.display())])?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).comment(Some(b'#')).from_reader(file);
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut errors = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                errors.push(format!("{}: {e}", path.display()));
                continue;
            }
        };
        let line = rec.position().map(|p| p.line()).unwrap_or(i as u64 + 1);
        if rec.len() != 2 {
            errors.push(format!("{}:{line}: expected 2 columns, got {}", path.display(), rec.len()));
            continue;
        }
        let t = rec[0].parse::<f64>();
        let v = rec[1].parse::<f64>();
        if i == 0 && t.is_err() {
            continue;
        }
        match (t, v) {
            (Ok(t), Ok(v)) if t.is_finite() && v.is_finite() => {
                if let Some(&prev) = times.last() {
                    if t <= prev {
                        errors.push(format!(
                            "{}:{line}: times must be strictly increasing ({t} after {prev})",
                            path.display()
                        ));
                    }
                } else if t != 0.0 {
                    errors.push(format!("{}:{line}: the first time must be 0, got {t}", path.display()));
                }
                times.push(t);
                values.push(v);
            }
            _ => errors.push(format!("{}:{line}: cannot parse `{}, {}`", path.display(), &rec[0], &rec[1])),
        }
    }
    if times.is_empty() && errors.is_empty() {
        errors.push(format!("{}: no data rows", path.display()));
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    DelayCoefficient::new(times, values, tau).map_err(|e| vec![format!("{}: {e}", path.display())])
}
