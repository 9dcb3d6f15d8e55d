use finsler_core::runner::{emit, parse_experiment, run, suite, Status, SUITES};
use finsler_core::Error;

#[test]
fn bundled_suites_pass() {
    for (name, text) in SUITES {
        let spec = parse_experiment(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let report = run(&spec, None).unwrap();
        assert!(report.passed, "{name}:\n{}", report.summary());
    }
}

#[test]
fn suite_lookup() {
    assert!(suite("bm_conformal").is_some());
    assert!(suite("sprays.toml").is_some());
    assert!(suite("nope").is_none());
}

#[test]
fn sigma_with_y_is_a_config_error() {
    let text = r#"
name = "bad"
dimension = 2
seed = 1
[metrics.m]
family = "minkowski"
[[probes]]
name = "p"
kind = "weyl"
metric = "m"
sigma = "x0 + y1"
"#;
    match parse_experiment(text) {
        Err(Error::Config { path, .. }) => assert!(path.contains("sigma"), "{path}"),
        other => panic!("expected config error, got {other:?}"),
    }
}

#[test]
fn missing_seed_is_a_config_error() {
    let text = "name = \"x\"\ndimension = 2\n";
    match parse_experiment(text) {
        Err(Error::Config { path, .. }) => assert_eq!(path, "seed"),
        other => panic!("expected config error, got {other:?}"),
    }
}

#[test]
fn unknown_key_is_rejected() {
    let text = "name = \"x\"\ndimension = 2\nseed = 1\nbogus = 3\n";
    assert!(matches!(parse_experiment(text), Err(Error::Config { .. })));
}

#[test]
fn empty_probe_list_passes() {
    let spec = parse_experiment("name = \"empty\"\ndimension = 2\nseed = 1\n").unwrap();
    let report = run(&spec, Some(1)).unwrap();
    assert!(report.passed);
    assert!(report.probes.is_empty());
}

#[test]
fn report_round_trips_and_is_deterministic() {
    let spec = parse_experiment(suite("fields").unwrap()).unwrap();
    let a = run(&spec, Some(1)).unwrap();
    let b = run(&spec, Some(4)).unwrap();
    assert_eq!(a.content_json(), b.content_json());
    let back: finsler_core::runner::Report = serde_json::from_str(&a.to_json()).unwrap();
    assert_eq!(back.content_json(), a.content_json());
}

#[test]
fn seed_override_changes_hash_free_content() {
    let spec = parse_experiment(suite("fields").unwrap()).unwrap();
    let a = run(&spec, Some(2)).unwrap();
    let b = run(&spec.clone().with_seed(99), Some(2)).unwrap();
    assert_eq!(b.seed, 99);
    assert_ne!(a.content_json(), b.content_json());
}

#[test]
fn emit_writes_report_summary_and_csv() {
    let spec = parse_experiment(suite("geodesics").unwrap()).unwrap();
    let report = run(&spec, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = emit(&report, dir.path()).unwrap();
    assert!(dir.path().join("report.json").exists());
    assert!(dir.path().join("summary.txt").exists());
    let csv: Vec<_> = written.iter().filter(|p| p.extension().is_some_and(|e| e == "csv")).collect();
    assert!(!csv.is_empty());
    let text = std::fs::read_to_string(csv[0]).unwrap();
    assert!(text.starts_with("t,x0,x1,y0,y1,L"), "{}", &text[..40.min(text.len())]);
    assert!(report.probes.iter().all(|p| p.status == Status::Pass));
}
