use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_biphoton");

struct Run {
    code: i32,
    out: PathBuf,
    stderr: String,
}

impl Run {
    fn summary(&self, file: &str) -> HashMap<String, String> {
        std::fs::read_to_string(self.out.join(file))
            .unwrap()
            .lines()
            .filter_map(|l| l.split_once(": "))
            .map(|(k, v)| (k.to_owned(), v.to_owned()))
            .collect()
    }

    fn value(&self, file: &str, key: &str) -> f64 {
        self.summary(file)[key].parse().unwrap()
    }

    fn csv(&self, file: &str) -> (Vec<String>, Vec<Vec<String>>) {
        let text = std::fs::read_to_string(self.out.join(file)).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap().split(',').map(str::to_owned).collect();
        let rows = lines.map(|l| l.split(',').map(str::to_owned).collect()).collect();
        (header, rows)
    }
}

fn run(dir: &TempDir, name: &str, args: &[&str], config: Option<&str>) -> Run {
    run_env(dir, name, args, config, &[])
}

fn run_env(dir: &TempDir, name: &str, args: &[&str], config: Option<&str>, env: &[(&str, &str)]) -> Run {
    let out = dir.path().join(name);
    let mut cmd = Command::new(BIN);
    cmd.args(args).arg("--out").arg(&out);
    if let Some(text) = config {
        let path = dir.path().join(format!("{name}.json"));
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    for (k, v) in env {
        cmd.env(k, v);
    }
    let output = cmd.output().unwrap();
    Run {
        code: output.status.code().unwrap(),
        out,
        stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
    }
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

// Δθ_p chosen so the matched widths coincide.
const EQUAL_WIDTHS: &str =
    r#"{"schema": 1, "geometry": {"angles": {"delta_theta_p": 8.006407690254357e-4, "delta_theta_l": 0.01, "theta_0": 0.1}}}"#;

#[test]
fn qutrit_reports() {
    let dir = TempDir::new().unwrap();
    let r = run(&dir, "max", &["qutrit"], Some(r#"{"schema": 1, "qutrit": {"amplitudes": [[0,0],[1,0],[0,0]]}}"#));
    assert_eq!(r.code, 0, "{}", r.stderr);
    let (header, rows) = r.csv("qutrit.csv");
    let k = header.iter().position(|h| h == "K").unwrap();
    assert_eq!(num(&rows[0][k]), 2.0);

    let r = run(&dir, "counts", &["qutrit"], Some(r#"{"schema": 1, "qutrit": {"counts": {"n_hh": 640, "n_vv": 360}}}"#));
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!((r.value("qutrit_summary.txt", "lambda_plus") - 0.64).abs() < 1e-15);

    let r = run(&dir, "product", &["qutrit"], Some(r#"{"schema": 1, "qutrit": {"amplitudes": [[1,0],[0,0],[0,0]]}}"#));
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.value("qutrit_summary.txt", "S_r"), 0.0);

    let r = run(&dir, "bad", &["qutrit"], Some(r#"{"schema": 1, "qutrit": {"amplitudes": [[1,0],[1,0],[0,0]]}}"#));
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("expected 1"));
}

#[test]
fn spectrum_reports() {
    let dir = TempDir::new().unwrap();
    let r = run(&dir, "equal", &["spectrum"], Some(EQUAL_WIDTHS));
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!((r.value("spectrum_summary.txt", "K") - 2.0).abs() < 1e-12);
    assert!((r.value("spectrum_summary.txt", "S_r") - 1.0).abs() < 1e-12);

    let r = run(&dir, "default", &["spectrum", "--nmax", "9"], Some(r#"{"schema": 1, "compare_conventions": true}"#));
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!((r.value("spectrum_summary.txt", "K") - 2.100).abs() < 5e-4);
    assert!(r.summary("spectrum_summary.txt").contains_key("K_PaperLiteral"));
    let (header, rows) = r.csv("spectrum.csv");
    assert_eq!(header, ["n", "lambda_n", "lambda_n_over_2"]);
    assert_eq!(rows.len(), 10);
    let (header, _) = r.csv("modes.csv");
    assert_eq!(header.len(), 11);

    let crystal = r#"{"schema": 1, "geometry": {"crystal": {"lambda_p": 4.05e-7, "n_o": 1.6, "n_e": 1.65, "n_0": 1.66, "length": 0.002, "waist": 0.0001}}}"#;
    assert_eq!(run(&dir, "rejected", &["spectrum"], Some(crystal)).code, 3);
}

#[test]
fn svd_check_passes_and_fails_as_configured() {
    let dir = TempDir::new().unwrap();
    let collinear = r#"{"schema": 1, "svd": {"collinear": {"a": 3.0, "b": 1.0, "half_width": 15.0}}}"#;
    let r = run(&dir, "collinear", &["svd-check", "--tol", "1e-6"], Some(collinear));
    assert_eq!(r.code, 0, "{}", r.stderr);
    let (header, rows) = r.csv("svd_spectrum.csv");
    assert_eq!(header, ["k", "lambda_numeric", "lambda_analytic", "rel_err"]);
    assert!(!rows.is_empty());

    let r = run(&dir, "two-peak", &["svd-check"], None);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.value("svd_summary.txt", "paired_mass_fraction") > 0.999);

    let r = run(&dir, "coarse", &["svd-check", "--grid", "64"], None);
    assert_eq!(r.code, 4);
    assert!(r.summary("svd_summary.txt").contains_key("max_abs_err"));
}

#[test]
fn figures_data() {
    let dir = TempDir::new().unwrap();
    let r = run(&dir, "fig", &["figures"], None);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let (_, rows) = r.csv("fig3.csv");
    let mid = rows.iter().find(|row| num(&row[0]) == 0.0).unwrap();
    assert_eq!((num(&mid[1]), num(&mid[2])), (1.0, 1.0));
    assert_eq!(r.value("figures_summary.txt", "fig4_ratio"), 0.53);
    let s = r.summary("figures_summary.txt");
    let pos_neg = num(&s["fig5_mass_theta1_pos_theta2_neg"]);
    let neg_pos = num(&s["fig5_mass_theta1_neg_theta2_pos"]);
    assert!(pos_neg + neg_pos > 1.0 - 1e-12);
}

#[test]
fn pipeline_trace_and_widths() {
    let dir = TempDir::new().unwrap();
    let r = run(&dir, "pipe", &["pipeline", "--grid", "256"], Some(r#"{"schema": 1, "mc_samples": 20000}"#));
    assert_eq!(r.code, 0, "{}", r.stderr);
    let (header, rows) = r.csv("pipeline_trace.csv");
    assert_eq!(&header[..3], ["stage", "term_count", "norm"]);
    assert_eq!(rows.len(), 5);
    for row in &rows {
        assert!((num(&row[2]) - 1.0).abs() < 1e-10);
    }
    let (header, rows) = r.csv("widths.csv");
    assert_eq!(header, ["quadrant", "width_c", "width_s", "R", "K_part"]);
    for row in &rows {
        assert!((num(&row[3]) / num(&row[4]) - 1.0).abs() < 1e-3);
    }
}

#[test]
fn config_and_environment_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run(&dir, "unknown", &["figures"], Some(r#"{"schema": 1, "gird": 3}"#)).code, 2);
    assert_eq!(run(&dir, "schema", &["figures"], Some(r#"{"schema": 7}"#)).code, 2);
    assert_eq!(run_env(&dir, "threads", &["figures"], None, &[("BIPHOTON_THREADS", "zero")]).code, 2);
    assert_eq!(run(&dir, "flag", &["figures", "--convention", "wide"], None).code, 2);
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"schema": 1, "seed": 5, "mc_samples": 20000}"#;
    let one = run_env(&dir, "t1", &["pipeline", "--grid", "128"], Some(cfg), &[("BIPHOTON_THREADS", "1")]);
    let many = run_env(&dir, "t8", &["pipeline", "--grid", "128"], Some(cfg), &[("BIPHOTON_THREADS", "8")]);
    assert_eq!((one.code, many.code), (0, 0));
    let (a, b) = (dir_bytes(&one.out), dir_bytes(&many.out));
    assert_eq!(a, b);
    assert!(a.iter().all(|(_, bytes)| !bytes.contains(&b'\r')));
}
