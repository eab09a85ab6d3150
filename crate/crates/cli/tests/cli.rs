use std::path::Path;
use std::process::{Command, Output};

fn runtumble(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_runtumble"))
        .args(args)
        .env("RUNTUMBLE_OUT_DIR", out_dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn simulate_smoke_writes_every_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = runtumble(
        &[
            "simulate",
            "--case",
            "I",
            "--particles",
            "10",
            "--seed",
            "42",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "runs.csv",
        "msd.csv",
        "activity_hist.csv",
        "positions.csv",
        "manifest.toml",
    ] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let manifest = std::fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
    for line in [
        "theta = -0.5",
        "n = 1.1",
        "beta = 2.0",
        "Ta = 200.0",
        "seed = 42",
        "particles = 10",
    ] {
        assert!(manifest.contains(line), "manifest lacks `{line}`");
    }
    let runs = std::fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    assert!(runs.starts_with("run_length_mm\n"));
    let positions = std::fs::read_to_string(dir.path().join("positions.csv")).unwrap();
    assert_eq!(positions.lines().count(), 11);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let args = [
        "simulate",
        "--case",
        "II",
        "--particles",
        "100",
        "--T",
        "50",
        "--seed",
        "3",
    ];
    assert!(runtumble(&args, a.path()).status.success());
    assert!(runtumble(&args, b.path()).status.success());
    let manifest = a.path().join("manifest.toml");
    let from_manifest = [
        "simulate",
        "--config",
        manifest.to_str().unwrap(),
        "--workers",
        "2",
    ];
    assert!(runtumble(&from_manifest, c.path()).status.success());
    for f in ["runs.csv", "msd.csv", "activity_hist.csv", "positions.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        assert_eq!(
            x,
            std::fs::read(b.path().join(f)).unwrap(),
            "{f} differs between reruns"
        );
        assert_eq!(
            x,
            std::fs::read(c.path().join(f)).unwrap(),
            "{f} differs after manifest rerun"
        );
    }
}

#[test]
fn analyze_reads_a_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let sim = [
        "simulate",
        "--case",
        "I",
        "--particles",
        "300",
        "--T",
        "100",
        "--fit-window",
        "10,100",
    ];
    assert!(runtumble(&sim, dir.path()).status.success());
    let o = runtumble(&["analyze", "--json"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let verdict = report["pld"]["classification"].as_str().unwrap();
    assert!(["levywalk", "brownian", "inconclusive"].contains(&verdict));
    assert_eq!(report["msd"]["window"][0], 10.0);
    assert!(dir.path().join("analysis.json").exists());
}

#[test]
fn empty_runs_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let runs = dir.path().join("runs.csv");
    std::fs::write(&runs, "run_length_mm\n").unwrap();
    let o = runtumble(&["analyze", "--runs", runs.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty"));
}

#[test]
fn bad_schema_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let runs = dir.path().join("runs.csv");
    std::fs::write(&runs, "length\n0.1\n").unwrap();
    let o = runtumble(&["analyze", "--runs", runs.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = runtumble(&["simulate", "--particles", "0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sim.particles"));
    let o = runtumble(&["simulate", "--set", "sim.speed=1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn limits_case_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = runtumble(&["limits", "--case", "I"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(
        text.contains("mu                 0.45  (in (0, 1))"),
        "{text}"
    );
    assert!(text.contains("s-interval         (1.25, 1.45)"), "{text}");
    assert!(text.contains("levy-eligible"));
    let o = runtumble(&["limits", "--case", "I", "--json"], dir.path());
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(report["nu"].as_f64().unwrap() > 0.0);
    assert!(report["convention"]
        .as_str()
        .unwrap()
        .contains("nondimensional"));
}

#[test]
fn limits_case_three_names_the_violation() {
    let dir = tempfile::tempdir().unwrap();
    let o = runtumble(&["limits", "--case", "III"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("not-eligible"));
    assert!(text.contains("theta < 1 - n violated"), "{text}");
}

#[test]
fn limits_flags_zero_mu() {
    let dir = tempfile::tempdir().unwrap();
    let o = runtumble(&["limits", "--n", "2", "--beta", "2"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("mu                 0  (OUT OF (0, 1))"));
}

#[test]
fn compare_against_limit_report() {
    let dir = tempfile::tempdir().unwrap();
    let sim = ["simulate", "--case", "I", "--particles", "200", "--T", "50"];
    assert!(runtumble(&sim, dir.path()).status.success());
    let limits = [
        "limits",
        "--case",
        "I",
        "--write-to",
        dir.path().to_str().unwrap(),
    ];
    assert!(runtumble(&limits, dir.path()).status.success());
    let report = dir.path().join("limits.json");
    let o = runtumble(
        &["compare", "--limits", report.to_str().unwrap(), "--json"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let l1 = r["l1"].as_f64().unwrap();
    assert!((0.0..=2.0).contains(&l1));
    assert_eq!(r["time_s"], 50.0);
}

#[test]
fn validate_passes_for_case_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = runtumble(&["validate", "--case", "I"], dir.path());
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
}

#[test]
fn compare_takes_mu_and_time_from_the_run_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let sim = ["simulate", "--case", "I", "--particles", "400", "--T", "40"];
    assert!(runtumble(&sim, dir.path()).status.success());
    let o = runtumble(&["compare", "--fit", "--json"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((r["mu"].as_f64().unwrap() - 0.45).abs() < 1e-12);
    assert_eq!(r["time_s"], 40.0);
    assert!(dir.path().join("compare.json").exists());
}

#[test]
fn closed_stdout_is_not_an_error() {
    use std::process::{Command, Stdio};
    let dir = tempfile::tempdir().unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_runtumble"))
        .args(["limits", "--case", "I", "--json"])
        .current_dir(dir.path())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    drop(child.stdout.take());
    let o = child.wait_with_output().unwrap();
    assert!(!String::from_utf8_lossy(&o.stderr).contains("panicked"));
}
