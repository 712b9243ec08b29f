use std::fs;
use std::io::Write;

use spinone::evolve::EvolutionConfig;
use spinone::sweep::*;
use spinone::Profile;

fn small_config() -> SweepConfig {
    SweepConfig {
        j_range: GridRange::new(-1.0, 1.0, 1.0),
        d_range: GridRange::new(-1.0, 1.0, 1.0),
        c_list: vec![1.0, 5.0],
        profiles: vec![Profile::Log, Profile::Linear],
        n: 3,
        t_total: 10.0,
        sweeps: 50,
        restarts: 4,
        base_seed: 11,
        worker_count: 2,
        ..SweepConfig::default()
    }
}

#[test]
fn single_point_record() {
    let cfg = SweepConfig {
        j_range: GridRange::new(1.0, 1.0, 0.2),
        d_range: GridRange::new(0.0, 0.0, 0.2),
        c_list: vec![20.0],
        profiles: vec![Profile::Log],
        t_total: 50.0,
        ..SweepConfig::default()
    };
    let records = run_sweep(&cfg).unwrap();
    assert_eq!(records.len(), 1);
    let r = &records[0];
    assert!((0.0..=1.0).contains(&r.p_aqa) && (0.0..=1.0).contains(&r.p_ta));
    assert_eq!(r.diff, r.p_aqa - r.p_ta);
    assert_eq!(r.hi_fid, r.p_aqa > 0.9);
}

#[test]
fn sweep_is_deterministic_across_worker_counts() {
    let cfg = small_config();
    let a = run_sweep(&cfg).unwrap();
    let b = run_sweep(&SweepConfig { worker_count: 1, ..cfg.clone() }).unwrap();
    assert_eq!(a.len(), cfg.record_count());
    assert_eq!(a, b);
    let summary = sector_summary(&a).unwrap();
    assert_eq!(summary.len(), 4);
    assert!(summary.iter().all(|s| s.boundary.points == 3 && s.easy_plane.points == 3));
}

#[test]
fn interrupted_sweep_resumes_to_identical_store() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config();

    let full = dir.path().join("full.csv");
    let done = run_sweep_with_store(&cfg, &full, &StoreOptions::default()).unwrap();
    assert!(done.complete);
    assert_eq!(done.computed, cfg.record_count());

    let part = dir.path().join("part.csv");
    let first = run_sweep_with_store(&cfg, &part, &StoreOptions { resume: false, max_new: Some(7) }).unwrap();
    assert!(!first.complete);
    assert_eq!(first.records.len(), 7);
    // a write torn mid-record must not poison the store
    fs::OpenOptions::new().append(true).open(&part).unwrap().write_all(b"0.0,1.0,5.0,lo").unwrap();

    let second = run_sweep_with_store(&cfg, &part, &StoreOptions { resume: true, max_new: Some(10) }).unwrap();
    assert_eq!((second.reused, second.computed), (7, 10));
    let third = run_sweep_with_store(&cfg, &part, &StoreOptions { resume: true, max_new: None }).unwrap();
    assert_eq!(third.reused, 17);
    assert_eq!(third.computed, cfg.record_count() - 17);
    assert!(third.complete);

    assert_eq!(fs::read_to_string(&full).unwrap(), fs::read_to_string(&part).unwrap());
    assert_eq!(read_records(&part).unwrap(), done.records);

    let again = run_sweep_with_store(&cfg, &part, &StoreOptions { resume: true, max_new: None }).unwrap();
    assert_eq!(again.computed, 0);

    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(sidecar_path(&full)).unwrap()).unwrap();
    assert_eq!(meta["config"]["base_seed"], 11);
    assert_eq!(meta["complete"], true);
    for key in ["code_version", "prng", "t_floor_convention", "temperature_mapping"] {
        assert!(meta.get(key).is_some(), "{key}");
    }
    let header = fs::read_to_string(&full).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, CSV_HEADER);
}

#[test]
fn failing_points_become_error_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SweepConfig {
        evolution: EvolutionConfig { dt: 2.0, convergence_tol: 1e-15, max_halvings: 1, ..EvolutionConfig::default() },
        ..small_config()
    };
    let path = dir.path().join("bad.csv");
    let out = run_sweep_with_store(&cfg, &path, &StoreOptions::default()).unwrap();
    assert!(out.complete);
    let errors = out.records.iter().filter(|r| r.is_error()).count();
    assert!(errors > 0);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(sidecar_path(&path)).unwrap()).unwrap();
    assert_eq!(meta["errors"].as_array().unwrap().len(), errors);
    assert!(meta["errors"][0]["message"].as_str().unwrap().contains("converge"));
    let summary = sector_summary(&out.records).unwrap();
    assert_eq!(summary.iter().map(|s| s.errors).sum::<usize>(), errors);
}
