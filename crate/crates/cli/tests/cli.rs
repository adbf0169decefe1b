use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use delaywave::config::{parse_config, HistoryKind, KSource, Preset};

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn delaywave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_delaywave")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = "\
preset = wave
n = 4
a = 1
damp_interval = 0, pi
delay_interval = 0, pi/2
tau = 0.5
dt = 0.01
u0 = 1, 0.5
v0 = 0.2
";

fn column(csv_text: &str, name: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| rec.unwrap()[idx].parse().unwrap()).collect()
}

fn report_value(report: &str, key: &str) -> String {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no `{key}` in report"))
        .to_string()
}

#[test]
fn minimal_config_gets_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "min.cfg", "# defaults only\n");
    let cfg = parse_config(&p).unwrap();
    assert_eq!(cfg.preset, Preset::Wave);
    assert_eq!(cfg.n, 8);
    assert_eq!(cfg.beta, 0.0);
    assert_eq!(cfg.k_source, KSource::Constant(0.0));
    assert_eq!(cfg.history, HistoryKind::Constant);
    assert_eq!(cfg.u0.len(), 8);
    assert_eq!(cfg.u0[0], 1.0);
    assert_eq!(cfg.scale, 1.0);
    assert_eq!(cfg.trajectory_csv, dir.path().join("min_trajectory.csv"));
}

#[test]
fn non_integer_steps_per_delay_names_both_values() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "bad.cfg", "tau = 1\ndt = 0.3\nt_end = 3\n");
    let err = parse_config(&p).unwrap_err().to_string();
    assert!(err.contains("bad.cfg:2"), "{err}");
    assert!(err.contains('1') && err.contains("0.3"), "{err}");
}

#[test]
fn negative_beta_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "b.cfg", "beta = -1\n");
    let err = parse_config(&p).unwrap_err().to_string();
    assert!(err.contains("b.cfg:1") && err.contains("beta"), "{err}");
}

#[test]
fn every_error_is_reported_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "many.cfg", "n = 4\nbogus = 1\nbeta = -2\npreset = membrane\ndt = abc\n");
    let errs = parse_config(&p).unwrap_err().0;
    assert_eq!(errs.len(), 4, "{errs:?}");
    assert!(errs[0].contains(":2:") && errs[0].contains("unknown key `bogus`"));
    let all = errs.join("\n");
    assert!(all.contains(":3:") && all.contains(":4:") && all.contains(":5:"), "{all}");
}

#[test]
fn custom_preset_needs_matching_lambdas() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(dir.path(), "c.cfg", "preset = custom\nlambdas = 1, 2.5, 7\n");
    let cfg = parse_config(&ok).unwrap();
    assert_eq!(cfg.n, 3);
    assert_eq!(cfg.sys.lambdas()[1], 2.5);
    let bad = write(dir.path(), "d.cfg", "preset = custom\nn = 4\nlambdas = 1, 2\n");
    assert!(parse_config(&bad).unwrap_err().to_string().contains("lambdas has 2 entries"));
    let unsorted = write(dir.path(), "e.cfg", "preset = custom\nlambdas = 3, 2\n");
    assert!(parse_config(&unsorted).is_err());
}

#[test]
fn k_csv_with_and_without_header() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "k1.csv", "time,value\n0,0.5\n1,-0.5\n2,0\n");
    write(dir.path(), "k2.csv", "0,0.5\n1,-0.5\n2,0\n");
    let a = parse_config(&write(dir.path(), "a.cfg", "k_csv = k1.csv\n")).unwrap();
    let b = parse_config(&write(dir.path(), "b.cfg", "k_csv = k2.csv\n")).unwrap();
    assert_eq!(a.k, b.k);
    assert_eq!(a.k.eval(0.5), 0.0);
    assert_eq!(a.k.eval(1.0), -0.5);
}

#[test]
fn k_csv_times_must_increase() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "k.csv", "0,1\n2,1\n2,0\n");
    let err = parse_config(&write(dir.path(), "a.cfg", "k_csv = k.csv\n")).unwrap_err().to_string();
    assert!(err.contains("k.csv:3") && err.contains("strictly increasing"), "{err}");
}

#[test]
fn missing_k_csv_exits_one_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "a.cfg", "k_csv = nowhere/k.csv\n");
    let out = delaywave(&["run", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("nowhere/k.csv"), "{}", stderr(&out));
}

#[test]
fn linear_undelayed_run_decays_monotonically() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "lin.cfg", &format!("{SMALL}t_end = 5\nk_constant = 0\nscale = 0.1\n"));
    let out = delaywave(&["run", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let traj = fs::read_to_string(dir.path().join("lin_trajectory.csv")).unwrap();
    let header = traj.lines().next().unwrap();
    assert_eq!(header, "time,E,w_norm,delayed_forcing_norm,u_1,u_2,u_3,u_4,v_1,v_2,v_3,v_4");
    let w = column(&traj, "w_norm");
    assert_eq!(w.len(), 501);
    for pair in w.windows(2) {
        assert!(pair[1] <= pair[0] * (1.0 + 1e-12), "{pair:?}");
    }
    assert!(w[500] < 0.5 * w[0]);
    let report = fs::read_to_string(dir.path().join("lin_certificate.txt")).unwrap();
    assert_eq!(report_value(&report, "certificate_valid"), "true");
    assert_eq!(report_value(&report, "rho_unconstrained"), "true");
    let env = fs::read_to_string(dir.path().join("lin_envelope.csv")).unwrap();
    assert!(column(&env, "ratio").iter().all(|&r| r <= 1.05));
}

#[test]
fn report_numbers_match_csv_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "r.cfg", &format!("{SMALL}t_end = 5\nk_constant = 0.05\nbeta = 2\nc_h_samples = 500\nscale = 0.01\n"));
    let out = delaywave(&["run", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = fs::read_to_string(dir.path().join("r_certificate.txt")).unwrap();
    let env = fs::read_to_string(dir.path().join("r_envelope.csv")).unwrap();
    let traj = fs::read_to_string(dir.path().join("r_trajectory.csv")).unwrap();
    let max_ratio: f64 = report_value(&report, "max_envelope_ratio").parse().unwrap();
    let ratios = column(&env, "ratio");
    assert_eq!(max_ratio, ratios.iter().cloned().fold(0.0, f64::max));
    let final_w: f64 = report_value(&report, "final_w_norm").parse().unwrap();
    assert_eq!(final_w, *column(&traj, "w_norm").last().unwrap());
    for line in traj.lines().skip(1).take(3) {
        for field in line.split(',') {
            let mantissa = field.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.len(), 18, "{field}");
        }
    }
    for line in report.lines() {
        assert!(line.contains(" = "), "{line}");
    }
}

#[test]
fn data_above_rho_is_flagged_but_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "big.cfg", &format!("{SMALL}t_end = 5\nk_constant = 0.05\nbeta = 2\nc_h_samples = 500\nscale = 3\n"));
    let out = delaywave(&["run", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stderr(&out).contains("data not certified"));
    let report = fs::read_to_string(dir.path().join("big_certificate.txt")).unwrap();
    assert_eq!(report_value(&report, "data_certified"), "data not certified");
}

#[test]
fn inadmissible_k_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "k.cfg", &format!("{SMALL}k_constant = 5\nt_end = 1\n"));
    let out = delaywave(&["certify", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let report = fs::read_to_string(dir.path().join("k_certificate.txt")).unwrap();
    assert_eq!(report_value(&report, "certificate_valid"), "false");
    assert_eq!(report_value(&report, "k_admissible"), "false");
}

#[test]
fn certify_does_not_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "c.cfg", &format!("{SMALL}t_end = 5\nk_constant = 0.05\n"));
    let out = delaywave(&["certify", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(dir.path().join("c_certificate.txt").exists());
    assert!(!dir.path().join("c_trajectory.csv").exists());
}

#[test]
fn sweep_keeps_order_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "s.cfg", &format!("{SMALL}t_end = 5\nk_constant = 0.05\nbeta = 2\nc_h_samples = 500\n"));
    let p = p.to_str().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert_eq!(delaywave(&["certify", p]).status.code(), Some(0));
    let rho: f64 = report_value(&fs::read_to_string(dir.path().join("s_certificate.txt")).unwrap(), "rho").parse().unwrap();
    let unit = parse_config(Path::new(p)).map(|c| {
        let an = delaywave::pipeline::analyse(&c).unwrap();
        delaywave::pipeline::run_scenario(&c, &an, 1.0).unwrap().data_size
    });
    let top = 0.9 * rho / unit.unwrap();
    let ladder = [top / 10.0, 0.0, top / 100.0, top];
    let scales = ladder.map(|x| x.to_string()).join(",");
    let scales = scales.as_str();
    let out = delaywave(&["sweep", p, "--scales", scales, "--output", a.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    delaywave(&["sweep", p, "--scales", scales, "--output", b.to_str().unwrap()]);
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert_eq!(column(&text, "scale"), ladder.to_vec());
    let ratios = column(&text, "max_ratio");
    assert_eq!(ratios[1], 0.0);
    assert!(ratios.iter().all(|&r| r <= 1.05));
    let mut r = csv::Reader::from_reader(text.as_bytes());
    for rec in r.records() {
        assert_eq!(&rec.unwrap()[2], "true");
    }
}

#[test]
fn run_outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "d.cfg", &format!("{SMALL}k_constant = 0.05\nbeta = 1\nc_h_samples = 300\nscale = 0.01\nt_end = 1\n"));
    delaywave(&["run", p.to_str().unwrap()]);
    let first: Vec<String> = ["d_trajectory.csv", "d_envelope.csv", "d_certificate.txt"]
        .iter()
        .map(|f| fs::read_to_string(dir.path().join(f)).unwrap())
        .collect();
    delaywave(&["run", p.to_str().unwrap()]);
    for (f, before) in ["d_trajectory.csv", "d_envelope.csv", "d_certificate.txt"].iter().zip(first) {
        assert_eq!(fs::read_to_string(dir.path().join(f)).unwrap(), before, "{f}");
    }
}
