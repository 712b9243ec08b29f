use std::fs;
use std::path::Path;
use std::process::Command;

fn spinone(args: &[&str], dir: &Path) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_spinone"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn json_file(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn aqa_writes_result() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = spinone(
        &["aqa", "--J", "1", "--D", "0", "--h", "0.2", "--c", "20", "--profile", "log", "--T", "40", "--out", "a.json"],
        dir.path(),
    );
    assert_eq!(code, 0, "{err}");
    let v = json_file(&dir.path().join("a.json"));
    let p = v["p_aqa"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
    for key in ["dt_used", "ground_energy", "degenerate", "runtime_seconds"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["config"]["T_total"], 40.0);

    // the embedded configuration reproduces the run
    let (code, _, _) = spinone(&["aqa", "--config", "a.json", "--out", "b.json"], dir.path());
    assert_eq!(code, 0);
    assert_eq!(json_file(&dir.path().join("b.json"))["p_aqa"], v["p_aqa"]);
}

#[test]
fn aqa_null_problem_is_fully_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = spinone(&["aqa", "--J", "0", "--D", "0", "--h", "0", "--N", "3", "--T", "20"], dir.path());
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v["p_aqa"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(v["degenerate"], true);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(spinone(&["aqa", "--D", "0"], dir.path()).0, 2);
    assert_eq!(spinone(&["aqa", "--J", "x", "--D", "0"], dir.path()).0, 2);
    assert_eq!(spinone(&["aqa", "--J", "1", "--D", "0", "--profile", "cubic"], dir.path()).0, 2);
    assert_eq!(spinone(&["ta", "--J", "1", "--D", "0", "--S", "0"], dir.path()).0, 2);
    assert_eq!(spinone(&["frobnicate"], dir.path()).0, 2);
    assert_eq!(spinone(&["--help"], dir.path()).0, 0);
}

#[test]
fn resource_and_numerical_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(spinone(&["aqa", "--J", "1", "--D", "0", "--N", "13"], dir.path()).0, 4);

    fs::write(
        dir.path().join("strict.json"),
        r#"{"evolution": {"dt": 2.0, "convergence_tol": 1e-15, "max_halvings": 1}}"#,
    )
    .unwrap();
    let (code, _, err) =
        spinone(&["aqa", "--config", "strict.json", "--J", "1", "--D", "0", "--N", "3", "--T", "10"], dir.path());
    assert_eq!(code, 3);
    let payload: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert!(payload["previous_fidelity"].is_number() && payload["last_fidelity"].is_number());
}

#[test]
fn ta_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec!["ta", "--J", "1", "--D", "0", "--h", "0.2", "--c", "20", "--profile", "log", "--S", "1000", "--R", "20", "--seed", "7", "--out", out]
    };
    assert_eq!(spinone(&args("t1.json"), dir.path()).0, 0);
    assert_eq!(spinone(&args("t2.json"), dir.path()).0, 0);
    let a = fs::read_to_string(dir.path().join("t1.json")).unwrap();
    assert_eq!(a, fs::read_to_string(dir.path().join("t2.json")).unwrap());
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["final_energies"].as_array().unwrap().len(), 20);
    assert_eq!(v["seed"], 7);

    let (_, out, _) = spinone(&["ta", "--J", "1", "--D", "0", "--R", "1"], dir.path());
    let p = serde_json::from_str::<serde_json::Value>(&out).unwrap()["p_ta"].as_f64().unwrap();
    assert!(p == 0.0 || p == 1.0);
}

#[test]
fn basins_and_landscape_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = spinone(
        &["basins", "--J", "-2", "--h", "0.2", "--D-min", "-5", "--D-max", "5", "--D-step", "0.5", "--out", "b.csv"],
        dir.path(),
    );
    assert_eq!(code, 0);
    let text = fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert_eq!(text.lines().count(), 22);
    assert!(text.lines().last().unwrap().starts_with("5.0,1,1.0"));
    assert_eq!(json_file(&dir.path().join("b.json"))["config"]["J"], -2.0);

    let (code, _, _) = spinone(&["landscape", "--J", "-2", "--D", "2", "--h", "0.2", "--out", "l.csv"], dir.path());
    assert_eq!(code, 0);
    assert_eq!(fs::read_to_string(dir.path().join("l.csv")).unwrap().lines().count(), 244);
    assert!(dir.path().join("l_envelope.csv").exists());
}

#[test]
fn spectrum_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = spinone(
        &["spectrum", "--J", "-1", "--D", "1", "--N", "3", "--c", "5", "--profile", "linear", "--samples", "60", "--out", "s.csv"],
        dir.path(),
    );
    assert_eq!(code, 0, "{err}");
    assert_eq!(fs::read_to_string(dir.path().join("s.csv")).unwrap().lines().count(), 61);
    let meta = json_file(&dir.path().join("s.json"));
    assert!(meta["min_gap"].as_f64().unwrap() > 0.0);
}

#[test]
fn sweep_resumes_after_interruption() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("grid.json"),
        r#"{"J_range": {"min": -1, "max": 1, "step": 1}, "D_range": {"min": 0, "max": 1, "step": 1},
            "c_list": [5], "profiles": ["sqrt"], "N": 3, "T_total": 10, "S": 40, "R": 3, "base_seed": 5}"#,
    )
    .unwrap();
    let base = ["sweep", "--config", "grid.json", "--out", "s.csv", "--workers", "1"];
    let (code, _, _) = spinone(&[&base[..], &["--max-new", "2"]].concat(), dir.path());
    assert_eq!(code, 0);
    let (code, _, err) = spinone(&[&base[..], &["--resume"]].concat(), dir.path());
    assert_eq!(code, 0);
    assert!(err.contains("4 computed, 2 reused"), "{err}");
    let resumed = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(resumed.lines().count(), 7);

    let (code, _, _) = spinone(&["sweep", "--config", "grid.json", "--out", "fresh.csv"], dir.path());
    assert_eq!(code, 0);
    assert_eq!(resumed, fs::read_to_string(dir.path().join("fresh.csv")).unwrap());
    assert!(dir.path().join("s_summary.csv").exists());

    // the sidecar doubles as a configuration file
    let (code, _, _) = spinone(&["sweep", "--config", "s.json", "--out", "again.csv"], dir.path());
    assert_eq!(code, 0);
    assert_eq!(resumed, fs::read_to_string(dir.path().join("again.csv")).unwrap());
}
