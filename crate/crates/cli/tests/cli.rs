use std::path::Path;
use std::process::{Command, Output};

fn herald(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_herald")).args(args).output().expect("binary runs")
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
}

fn without_wall_time(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    herald_core::harness::strip_csv_column(&text, herald_core::harness::WALL_TIME_COLUMN).unwrap()
}

#[test]
fn step_matches_closed_form() {
    let out = herald(&["step", "--N", "500", "--m", "1", "--p1d", "10", "--mode", "hp-approx"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let p: f64 = column(&text, "p_success")[0].parse().unwrap();
    assert!((p - 0.904).abs() / 0.904 < 0.03, "p = {p}");
}

#[test]
fn exact_mode_has_imperfect_overlap() {
    let out = herald(&["step", "--mode", "hp-exact", "--N", "5", "--m", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let overlap: f64 = column(&text, "overlap_goal")[0].parse().unwrap();
    assert!(overlap < 1.0 && overlap > 0.9);
}

#[test]
fn missing_parameter_exits_with_usage_error() {
    let out = herald(&["step", "--m", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("N") && err.contains("--help"));
}

#[test]
fn bad_flag_value_is_usage_error() {
    assert_eq!(herald(&["step", "--N", "ten"]).status.code(), Some(1));
    assert_eq!(herald(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(herald(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[fixed]\nN = 10\nbogus = 3\n").unwrap();
    let out = herald(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("bogus") && err.contains("line 3"), "{err}");
}

const SWEEP: &str = r#"
task = "step"
variant = "pi-pulse"
mode = "hp-approx"
[fixed]
p1d = 10.0
[[axis]]
name = "m"
values = [1, 2, 4]
[[axis]]
name = "N"
log_range = { from = 50.0, to = 2000.0, points = 4 }
"#;

#[test]
fn sweep_is_deterministic_and_parallel_equals_serial() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(&cfg, SWEEP).unwrap();
    let run = |name: &str, jobs: &str| {
        let path = dir.path().join(name);
        let out = herald(&["sweep", "--config", cfg.to_str().unwrap(), "--jobs", jobs, "--out", path.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        without_wall_time(&path)
    };
    let serial = run("a.csv", "1");
    let again = run("b.csv", "1");
    let parallel = run("c.csv", "4");
    assert_eq!(serial, again);
    assert_eq!(serial, parallel);
    assert_eq!(serial.lines().count(), 13);
    let ms = column(&serial, "m");
    assert_eq!(&ms[..4], &["1", "1", "1", "1"]);
    assert_eq!(ms[4], "2");
}

#[test]
fn sweep_records_failures_per_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(&cfg, "task = \"step\"\n[fixed]\nN = 3\n[[axis]]\nname = \"m\"\nvalues = [1, 9]\n").unwrap();
    let out = herald(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let errors = column(&text, "error");
    assert!(errors[0].is_empty());
    assert!(!errors[1].is_empty());
}

#[test]
fn empty_axis_list_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("one.toml");
    std::fs::write(&cfg, "[fixed]\nN = 50\nm = 1\n").unwrap();
    let out = herald(&["sweep", "--config", cfg.to_str().unwrap(), "--jsonl"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 1);
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[fixed]\nN = 50\nm = 1\np1d = 1.0\n").unwrap();
    let out = herald(&["step", "--config", cfg.to_str().unwrap(), "--p1d", "100"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(column(&text, "p1d")[0], "100.0");
}

#[test]
fn fit_recovers_synthetic_scaling() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let mut text = String::from("N,m,infidelity\n");
    for n in [50.0f64, 100.0, 200.0, 400.0, 800.0] {
        for m in [2.0f64, 3.0] {
            text.push_str(&format!("{n},{m},{}\n", 0.061 * m * (m - 1.0) / (n * n)));
        }
    }
    text.push_str("1600,2,0\n");
    std::fs::write(&data, text).unwrap();
    let out = herald(&["fit", data.to_str().unwrap(), "--model", "power_law", "--normalize-m"]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let a: f64 = column(&stdout, "prefactor")[0].parse().unwrap();
    let b: f64 = column(&stdout, "exponent")[0].parse().unwrap();
    assert!((a - 0.061).abs() < 1e-6 && (b + 2.0).abs() < 1e-6);
    assert!(String::from_utf8(out.stderr).unwrap().contains("warning"));
}

#[test]
fn fit_with_two_points_is_insufficient() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    std::fs::write(&data, "N,infidelity\n10,0.1\n20,0.025\n").unwrap();
    let out = herald(&["fit", data.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("insufficient data"));
}

#[test]
fn compare_lists_every_protocol() {
    let out = herald(&["compare", "--N", "1000", "--m", "3", "--p1d", "100", "--xi", "10000"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(column(&text, "requirement_satisfied").iter().all(|v| v == "true"));
}
