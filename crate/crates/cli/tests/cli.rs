use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qtomo(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtomo"))
        .args(args)
        .current_dir(cwd)
        .env_remove("QTOMO_OUT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn simulate_then_solve() {
    let dir = tempfile::tempdir().unwrap();
    let o = qtomo(&["simulate", "--state", "ghz", "-k", "3", "-m", "40", "--shots", "exact", "-o", "d.json"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let o = qtomo(&["solve", "-d", "d.json", "-o", "trace.csv"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(report["metrics"]["frob_err_sq"].as_f64().unwrap() < 1e-10);
    let csv = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(csv.starts_with("iter,objective,step_size,frob_err_sq,wall_ms\n"));
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.json", "b.json"] {
        let o = qtomo(&["simulate", "--state", "hadamard", "-k", "3", "-m", "20", "--seed", "11", "-o", name], dir.path());
        assert!(o.status.success());
    }
    let a = fs::read(dir.path().join("a.json")).unwrap();
    let b = fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn baseline_writes_one_trace_per_mu() {
    let dir = tempfile::tempdir().unwrap();
    qtomo(&["simulate", "-k", "3", "-m", "30", "--shots", "256", "-o", "d.json"], dir.path());
    let o = qtomo(
        &["baseline", "-d", "d.json", "--mu", "1/8, 1/3", "--iters", "10", "--out-dir", "out"],
        dir.path(),
    );
    assert!(o.status.success(), "{o:?}");
    let mut names: Vec<_> = fs::read_dir(dir.path().join("out"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["mifgd_0_mu_0.1250.csv", "mifgd_1_mu_0.3333.csv"]);
}

#[test]
fn divergent_baseline_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    qtomo(&["simulate", "-k", "3", "-m", "30", "--shots", "256", "-o", "d.json"], dir.path());
    let o = qtomo(
        &["baseline", "-d", "d.json", "--eta", "50", "--mu", "0.5", "--iters", "50", "--out-dir", "out"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2), "{o:?}");
    assert!(dir.path().join("out/mifgd_0_mu_0.5000.csv").exists());
}

#[test]
fn bound_reports_gamma_series() {
    let dir = tempfile::tempdir().unwrap();
    let lambda = (0.2 / (4.0 * 2f64.sqrt())).to_string();
    let o = qtomo(
        &[
            "bound", "--sigma-1", "1", "--sigma-r", "1", "--lambda", &lambda, "--delta-2r", "0.0125",
            "--delta-3r", "0.0125", "--init-err", "0.1", "--steps", "3", "--gamma-bar", "0.45", "--k", "4",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{o:?}");
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let g0 = v["gamma"]["gammas"][0].as_f64().unwrap();
    assert!((g0 - 0.32595).abs() < 1e-5);
    assert!((v["certificate"].as_f64().unwrap() - 0.4486).abs() < 1e-4);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad_delta = qtomo(&["bound", "--sigma-1", "1", "--sigma-r", "1", "--delta-2r", "1.5", "--delta-3r", "0"], dir.path());
    assert_eq!(bad_delta.status.code(), Some(1));
    let too_many = qtomo(&["simulate", "-k", "2", "-m", "17", "-o", "d.json"], dir.path());
    assert_eq!(too_many.status.code(), Some(1));
    let unknown = qtomo(&["nope"], dir.path());
    assert_eq!(unknown.status.code(), Some(1));
    let missing = qtomo(&["solve", "-d", "missing.json", "-o", "t.csv"], dir.path());
    assert_eq!(missing.status.code(), Some(3));
    let help = qtomo(&["--help"], dir.path());
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn decode_counts_file() {
    let dir = tempfile::tempdir().unwrap();
    let counts = r#"{"k": 2, "shots": 1000, "convention": "std", "measurements": [
        {"label": "ZZ", "counts": {"00": 500, "11": 500}},
        {"label": "XX", "counts": {"00": 250, "01": 250, "10": 250, "11": 250}}
    ]}"#;
    fs::write(dir.path().join("counts.json"), counts).unwrap();
    let o = qtomo(&["decode", "counts.json", "-o", "d.json"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("d.json")).unwrap()).unwrap();
    let scale = (4.0f64 / 2.0).sqrt();
    assert!((v["y"][0].as_f64().unwrap() - scale).abs() < 1e-12);
    assert!(v["y"][1].as_f64().unwrap().abs() < 1e-12);

    fs::write(dir.path().join("bad.json"), r#"{"k": 1, "shots": 1, "measurements": [{"label": "Z", "counts": {"2": 1}}]}"#).unwrap();
    let o = qtomo(&["decode", "bad.json", "-o", "x.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bench_uses_output_root_and_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "state = ghz\nk = 3\nm = 30\nshots = 128\nbaseline_mu = 1/4\nbaseline_iters = 5\nrip_trials = 3\n";
    fs::write(dir.path().join("small.txt"), cfg).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_qtomo"))
        .args(["bench", "small.txt", "--seed", "42"])
        .current_dir(dir.path())
        .env("QTOMO_OUT", "root")
        .output()
        .unwrap();
    assert!(o.status.success(), "{o:?}");
    let summary = fs::read_to_string(dir.path().join("root/small/summary.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(v["seeds"]["ensemble"], 42);
    assert_eq!(v["config"]["seed"], "42");
    assert_eq!(v["baselines"].as_array().unwrap().len(), 1);
}

#[test]
fn rip_probe_reports_delta() {
    let dir = tempfile::tempdir().unwrap();
    let o = qtomo(&["rip-probe", "-k", "3", "-m", "64", "-r", "1", "--trials", "10"], dir.path());
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["delta_hat"].as_f64().unwrap() >= 0.0);
}
