use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fvem(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fvem"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], out: &Path) -> String {
    let o = fvem(args, out);
    assert!(
        o.status.success(),
        "{args:?} exited {:?}\nstdout:\n{}\nstderr:\n{}",
        o.status.code(),
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const HEADER: &str = "family,scheme,N,h,k,t,err_l2,err_h1,probe,rate_l2,rate_h1,rate_probe,seconds";

#[test]
fn stripes_mesh_is_asymmetric_everywhere() {
    let dir = TempDir::new().unwrap();
    let stdout = ok(&["mesh", "--family", "stripes", "--n", "16"], dir.path());
    assert!(stdout.contains("(all interior)"), "{stdout}");
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["asymmetric"], report["interior"]);
    assert!(dir.path().join("mesh.txt").exists());
    assert!(dir.path().join("config.toml").exists());
}

#[test]
fn symmetric_mesh_has_no_asymmetric_patch() {
    let dir = TempDir::new().unwrap();
    let stdout = ok(&["mesh", "--family", "symmetric", "--n", "8"], dir.path());
    assert!(stdout.lines().any(|l| l == "asymmetric: 0"), "{stdout}");
    assert_eq!(json(&dir.path().join("report.json"))["interior"], 49);
}

#[test]
fn interface_mesh_is_asymmetric_on_the_interface() {
    let dir = TempDir::new().unwrap();
    ok(&["mesh", "--family", "interface", "--j", "4"], dir.path());
    // Count interior vertices on x = 1/4 from the written mesh file.
    let text = fs::read_to_string(dir.path().join("mesh.txt")).unwrap();
    let mut lines = text.lines();
    let nv: usize = lines.next().unwrap().split_whitespace().next().unwrap().parse().unwrap();
    let on_line = lines
        .take(nv)
        .filter(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            let x: f64 = f[0].parse().unwrap();
            f[2] == "0" && (x - 0.25).abs() < 1e-12
        })
        .count();
    assert_eq!(on_line, 15);
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["asymmetric"], on_line);
}

#[test]
fn semidiscrete_solve_reports_errors() {
    let dir = TempDir::new().unwrap();
    ok(&["solve", "--family", "symmetric", "--n", "32", "--data", "smooth", "--t", "0.1"], dir.path());
    let report = json(&dir.path().join("report.json"));
    let e = report["err_l2"].as_f64().unwrap();
    assert!(e > 0.0 && e < 1e-3, "{e}");
    let solution = fs::read_to_string(dir.path().join("solution.txt")).unwrap();
    assert_eq!(solution.lines().count(), 1 + 33 * 33);
}

#[test]
fn step_size_that_does_not_divide_t_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let o = fvem(&["solve", "--scheme", "backward-euler", "--t", "0.1", "--k", "0.03"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = fvem(&["solve", "--scheme", "crank-nicolson", "--t", "0.1", "--k", "0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = fvem(&["solve", "--scheme", "crank-nicolson"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn general_operator_routes_to_the_coefficient_path() {
    let dir = TempDir::new().unwrap();
    let args = ["solve", "--n", "8", "--operator", "general", "--alpha", "2,0,0,1", "--beta", "0.5", "--projection", "l2"];
    ok(&args, dir.path());
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["operator"], "constant");
    assert!(report["err_l2"].is_null());
    let o = fvem(&["solve", "--operator", "general", "--alpha", "2,0,1"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    // alpha = I, beta = 0 keeps the closed form and matches the Laplacian solve.
    let general = TempDir::new().unwrap();
    ok(&["solve", "--n", "8", "--operator", "general"], general.path());
    let laplace = TempDir::new().unwrap();
    ok(&["solve", "--n", "8"], laplace.path());
    let g = json(&general.path().join("report.json"));
    let l = json(&laplace.path().join("report.json"));
    assert_eq!(g["operator"], "general-identity");
    assert_eq!(g["err_l2"], l["err_l2"]);
}

#[test]
fn smooth_convergence_passes_its_rate_gate() {
    let dir = TempDir::new().unwrap();
    let args = ["convergence", "--family", "symmetric", "--data", "smooth", "--scheme", "semidiscrete", "--assert-rate", "1.9"];
    ok(&args, dir.path());
    let csv = fs::read_to_string(dir.path().join("table.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), HEADER);
    assert_eq!(csv.lines().count(), 5);
    let table = json(&dir.path().join("table.json"));
    let first = table[0].as_object().unwrap();
    let keys: Vec<&str> = first.keys().map(String::as_str).collect();
    let mut expected: Vec<&str> = HEADER.split(',').collect();
    expected.sort_unstable();
    let mut keys_sorted = keys.clone();
    keys_sorted.sort_unstable();
    assert_eq!(keys_sorted, expected);
    let summary = json(&dir.path().join("summary.json"));
    assert_eq!(summary["assertion"]["passed"], true);
}

#[test]
fn failed_assertion_exits_with_three() {
    let dir = TempDir::new().unwrap();
    let o = fvem(&["convergence", "--levels", "4,8,16", "--assert-rate", "3"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("l2 rate"));
    assert!(dir.path().join("table.csv").exists());
}

#[test]
fn failed_level_gives_nonzero_exit() {
    let dir = TempDir::new().unwrap();
    let o = fvem(&["convergence", "--family", "stripes", "--levels", "6,8"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let summary = json(&dir.path().join("summary.json"));
    assert_eq!(summary["failed_levels"], 1);
}

#[test]
fn stripes_probe_rate_is_not_two() {
    let dir = TempDir::new().unwrap();
    ok(&["probe", "--family", "stripes", "--t", "0.1", "--assert-rate-max", "1.25"], dir.path());
    let summary = json(&dir.path().join("summary.json"));
    assert!(summary["fitted"]["probe"].as_f64().unwrap() < 1.25);
}

#[test]
fn symmetric_qnorm_decays_at_second_order() {
    let dir = TempDir::new().unwrap();
    ok(&["qnorm", "--family", "symmetric", "--assert-rate", "1.9"], dir.path());
}

#[test]
fn saved_config_reruns_to_identical_csv() {
    let first = TempDir::new().unwrap();
    let args = ["convergence", "--family", "almost-symmetric", "--seed", "5", "--levels", "4,8,16", "--no-timing"];
    ok(&args, first.path());
    let config = first.path().join("config.toml");
    let second = TempDir::new().unwrap();
    ok(&["convergence", "--config", config.to_str().unwrap()], second.path());
    let a = fs::read(first.path().join("table.csv")).unwrap();
    let b = fs::read(second.path().join("table.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(fs::read(&config).unwrap(), fs::read(second.path().join("config.toml")).unwrap());

    // Rows are ordered by level regardless of the worker count.
    let third = TempDir::new().unwrap();
    ok(&["convergence", "--config", config.to_str().unwrap(), "--jobs", "3"], third.path());
    assert_eq!(a, fs::read(third.path().join("table.csv")).unwrap());
}

#[test]
fn flags_override_the_config_file() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("in.toml");
    fs::write(&config, "family = \"stripes\"\nt = 0.2\nlevels = [8, 16]\n").unwrap();
    let out = dir.path().join("out");
    ok(&["mesh", "--config", config.to_str().unwrap(), "--n", "8"], &out);
    let written = fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(written.contains("family = \"stripes\""), "{written}");
    assert!(written.contains("n = 8"), "{written}");

    let out = dir.path().join("out2");
    let o = fvem(&["convergence", "--config", config.to_str().unwrap(), "--t", "0.05", "--no-timing"], &out);
    assert!(o.status.success());
    let written = fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(written.contains("t = 0.05"), "{written}");

    fs::write(&config, "famly = \"stripes\"\n").unwrap();
    assert_eq!(fvem(&["mesh", "--config", config.to_str().unwrap()], &out).status.code(), Some(2));
}

#[test]
fn temporal_sweep_over_step_counts() {
    let dir = TempDir::new().unwrap();
    let args = [
        "convergence", "--n", "8", "--scheme", "crank-nicolson", "--steps-list", "10,20,40", "--t", "0.1",
    ];
    ok(&args, dir.path());
    let summary = json(&dir.path().join("summary.json"));
    assert_eq!(summary["axis"], "time");
    let rate = summary["fitted"]["l2"].as_f64().unwrap();
    assert!((rate - 2.0).abs() < 0.2, "{rate}");
}
