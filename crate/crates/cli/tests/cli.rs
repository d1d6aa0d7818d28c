use accel_admm::engine::{certified_params, SolverVariant};
use accel_admm::problems::scalar_p0;
use serde_json::Value;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    bin_in(Path::new("."), args)
}

fn bin_in(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_accel-admm"))
        .current_dir(cwd)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, value: Value) -> String {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(&value).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

/// Drops wall-clock fields, the only run-to-run difference in a report.
fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.remove("wall_secs");
            m.remove("elapsed_secs");
            m.values_mut().for_each(strip_timing);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

#[test]
fn certified_p0_run_passes_verification() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "p0.json",
        serde_json::json!({
            "problem": {"kind": "scalar_p0"},
            "solvers": [{"variant": "admm_first_ii", "max_outer": 500}],
            "verify": true
        }),
    );
    let out = tmp.path().join("out");
    let o = bin(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    let s = &r["solvers"][0];
    assert_eq!(s["name"], "admm_first_ii");
    assert_eq!(s["report"]["violations"], serde_json::json!([]));
    assert_eq!(s["report"]["status"]["binding"], true);
    assert!(s["rate_fits"]["feasibility"].as_f64().unwrap() < -1.8);

    let csv = fs::read_to_string(out.join("admm_first_ii/trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("k,t_k,feasibility,objective_gap,lagrangian_gap,energy_total,inner_iters")
    );
    assert_eq!(lines.count(), 501);
    assert!(csv.ends_with('\n'));
    let svg = fs::read_to_string(out.join("admm_first_ii/convergence.svg")).unwrap();
    assert!(
        svg.starts_with("<svg")
            && svg.contains("feasibility bound")
            && svg.trim_end().ends_with("</svg>")
    );
}

#[test]
fn doubled_gamma_is_reported_non_binding() {
    let tmp = tempfile::tempdir().unwrap();
    let gamma = certified_params(&scalar_p0::<f64>(), SolverVariant::AdmmFirstII)
        .unwrap()
        .gamma;
    let cfg = write_config(
        tmp.path(),
        "c.json",
        serde_json::json!({
            "problem": {"kind": "scalar_p0"},
            "solvers": [{"variant": "admm_first_ii", "max_outer": 200, "gamma": 2.0 * gamma}],
            "output_dir": "out",
            "verify": true
        }),
    );
    let cwd = tmp.path().join("cwd");
    fs::create_dir(&cwd).unwrap();
    let o = bin_in(&cwd, &["run", "--config", &cfg]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("non-binding"));
    // A relative output_dir resolves against the working directory, not the config.
    let r = report(&cwd.join("out"));
    let status = &r["solvers"][0]["report"]["status"];
    assert_eq!(status["binding"], false);
    assert!(!status["notes"].as_array().unwrap().is_empty());
    assert_eq!(
        r["solvers"][0]["report"]["violations"],
        serde_json::json!([])
    );
}

#[test]
fn config_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = write_config(
        tmp.path(),
        "missing.json",
        serde_json::json!({"problem": "nowhere.json", "solvers": [{"variant": "admm_first_i"}]}),
    );
    let o = bin(&["run", "--config", &missing]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("nowhere.json"));

    let path = tmp.path().join("typo.json");
    fs::write(
        &path,
        "{\n  \"problem\": {\"kind\": \"scalar_p0\"},\n  \"solvers\": [{\"variant\": \"admm_frist_i\"}]\n}\n",
    )
    .unwrap();
    let o = bin(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("admm_frist_i") && err.contains("line 3"),
        "{err}"
    );

    assert_eq!(
        code(&bin(&["run", "--config", &missing, "--emit", "png"])),
        1
    );
    assert_eq!(code(&bin(&["run"])), 1);
}

#[test]
fn problem_files_are_loaded_relative_to_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = scalar_p0::<f64>();
    fs::write(
        tmp.path().join("p0.json"),
        accel_admm::model::problem_to_json(&inst, None).unwrap(),
    )
    .unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        serde_json::json!({
            "problem": "p0.json",
            "solvers": [{"variant": "admm_first_i", "max_outer": 100}],
            "emit": {"svg": false},
            "verify": true
        }),
    );
    let out = tmp.path().join("out");
    let o = bin(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["problem"]["has_reference"], true);
    assert_eq!(r["solvers"][0]["report"]["status"]["binding"], true);
    assert!(!out.join("admm_first_i/convergence.svg").exists());
}

#[test]
fn outputs_are_deterministic_and_report_ignores_emit_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "q.json",
        serde_json::json!({
            "problem": {"kind": "lasso_constrained", "m": 12, "n": 10, "p": 5, "seed": 3},
            "solvers": [
                {"variant": "admm_first_i", "max_outer": 300},
                {"variant": "admm_second_i", "max_outer": 300},
                {"variant": "hybrid_ii_2", "max_outer": 300}
            ]
        }),
    );
    let dirs: Vec<_> = ["a", "b", "c"].iter().map(|d| tmp.path().join(d)).collect();
    for (dir, emit) in dirs.iter().zip(["csv,json,svg", "csv,json", "json"]) {
        let o = bin(&[
            "run",
            "--config",
            &cfg,
            "--out",
            dir.to_str().unwrap(),
            "--emit",
            emit,
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["admm_first_i", "admm_second_i", "hybrid_ii_2"] {
        let a = fs::read(dirs[0].join(name).join("trajectory.csv")).unwrap();
        let b = fs::read(dirs[1].join(name).join("trajectory.csv")).unwrap();
        assert_eq!(a, b, "{name}");
        assert!(!dirs[1].join(name).join("convergence.svg").exists());
        assert!(!dirs[2].join(name).join("trajectory.csv").exists());
    }
    let mut reports: Vec<Value> = dirs.iter().map(|d| report(d)).collect();
    reports.iter_mut().for_each(strip_timing);
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[0], reports[2]);
    let names: Vec<_> = reports[0]["solvers"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["name"].clone())
        .collect();
    assert_eq!(names, ["admm_first_i", "admm_second_i", "hybrid_ii_2"]);
}

#[test]
fn seed_and_filter_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "q.json",
        serde_json::json!({
            "problem": {"kind": "quadratic", "m": 6, "n": 5, "p": 3, "seed": 1},
            "solvers": [
                {"variant": "admm_first_i", "max_outer": 50},
                {"variant": "admm_second_ii", "max_outer": 50}
            ]
        }),
    );
    let run = |dir: &str, extra: &[&str]| {
        let out = tmp.path().join(dir);
        let mut args = vec![
            "run",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--emit",
            "csv",
        ];
        args.extend_from_slice(extra);
        assert_eq!(code(&bin(&args)), 0);
        out
    };
    let base = run("base", &["--filter", "second"]);
    assert!(!base.join("admm_first_i").exists());
    let traj = |d: &Path| fs::read_to_string(d.join("admm_second_ii/trajectory.csv")).unwrap();
    assert_ne!(
        traj(&base),
        traj(&run("seeded", &["--filter", "second", "--seed", "2"]))
    );
    assert_eq!(traj(&base), traj(&run("same", &["--seed", "1"])));
    assert_eq!(
        code(&bin(&["run", "--config", &cfg, "--filter", "nesterov"])),
        1
    );
}

#[test]
fn compare_schedules_reports_admissibility() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "s.json",
        serde_json::json!({
            "problem": {"kind": "scalar_p0"},
            "solvers": [{"variant": "admm_first_i", "max_outer": 300}],
            "schedules": [
                {"rule": "recurrence_exact"},
                {"rule": "min_cap", "a": 1.0},
                {"rule": "sqrt_cap", "a": 1.0},
                {"rule": "linear_shift", "alpha": 3.0, "offset": 1},
                {"rule": "half_k"},
                {"rule": "attouch_cabot", "alpha": 3.0}
            ],
            "tolerance": 1e-3
        }),
    );
    let out = tmp.path().join("out");
    let o = bin(&[
        "compare-schedules",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(out.join("schedules.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    let col = |r: &csv::StringRecord, i: usize| r.get(i).unwrap().to_string();
    for r in &rows {
        assert_eq!(col(r, 1), "true", "basic admissibility of {}", col(r, 0));
    }
    let strong: Vec<String> = rows.iter().map(|r| col(r, 2)).collect();
    assert_eq!(strong, ["false", "true", "true", "false", "false", "false"]);
    for r in &rows[..4] {
        assert!(col(r, 3).parse::<usize>().is_ok(), "{r:?}");
        assert!(col(r, 4).parse::<f64>().unwrap() > 0.0);
    }
    assert!(col(&rows[5], 0).starts_with("attouch_cabot") && col(&rows[5], 5).contains("t < 1"));
    assert!(col(&rows[5], 3).is_empty());

    let none = write_config(
        tmp.path(),
        "n.json",
        serde_json::json!({"problem": {"kind": "scalar_p0"}, "solvers": [{"variant": "admm_first_i"}]}),
    );
    assert_eq!(code(&bin(&["compare-schedules", "--config", &none])), 1);
}

fn verify_summary(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("verify prints JSON")
}

#[test]
fn verify_suite_passes_on_a_pristine_build() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin(&["verify", "--out", tmp.path().to_str().unwrap()]);
    let v = verify_summary(&o);
    assert_eq!(code(&o), 0, "{}", v["failures"]);
    assert_eq!(v["failed"], 0);
    let names: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    for group in [
        "schedule/",
        "energy/",
        "recovery/",
        "reductions/",
        "certificates/",
        "inexact/",
    ] {
        assert!(names.iter().any(|n| n.starts_with(group)), "{group}");
    }
    let saved: Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(saved, v);
}

#[test]
fn verify_filter_restricts_the_suite() {
    let o = bin(&["verify", "--filter", "schedule"]);
    assert_eq!(code(&o), 0);
    let v = verify_summary(&o);
    let checks = v["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks
        .iter()
        .all(|c| c["name"].as_str().unwrap().starts_with("schedule/")));

    let o = bin(&["verify", "--filter", "reductions/fista"]);
    assert_eq!(code(&o), 0);
    assert_eq!(verify_summary(&o)["checks"].as_array().unwrap().len(), 1);
    assert_eq!(code(&bin(&["verify", "--filter", "nothing_matches"])), 1);
}

#[test]
fn verify_catches_an_off_by_one_in_the_dual_step() {
    let o = bin(&[
        "verify",
        "--fault",
        "dual-step-lags-index",
        "--filter",
        "recovery",
    ]);
    assert_eq!(code(&o), 2);
    let v = verify_summary(&o);
    let failures = v["failures"].as_array().unwrap();
    assert!(!failures.is_empty());
    assert!(failures
        .iter()
        .all(|f| f.as_str().unwrap().starts_with("recovery/")));
}
