use logcov::bundle::ModelBundle;
use logcov::data::{LabeledDataset, SplitProtocol};
use logcov::encoder::EncodingCache;
use logcov::harness::synthetic::{generate, generate_range, SyntheticConfig};
use logcov::harness::{
    evaluate_bundle, render_report, run_experiment_on, ExperimentConfig, ExperimentOutcome, ExperimentReport,
    ReportFormat,
};
use logcov::Error;

fn small_data() -> LabeledDataset {
    generate(&SyntheticConfig { per_class: 20, joints: 5, ..SyntheticConfig::default() }).unwrap()
}

fn small_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        fc_size_grid: vec![4, 8],
        c_reg_grid: vec![0.1, 1.0],
        cv_folds: 3,
        seed: 11,
        ..ExperimentConfig::default()
    };
    cfg.train.cg_max_iters = 40;
    cfg
}

fn run(data: &LabeledDataset, cfg: &ExperimentConfig) -> ExperimentOutcome {
    run_experiment_on(data, cfg, &EncodingCache::in_memory()).unwrap()
}

#[test]
fn full_pipeline_report_is_consistent() {
    let data = small_data();
    let out = run(&data, &small_config());
    let r = &out.report;
    assert_eq!(r.n_train + r.n_test, data.len());
    assert_eq!(r.grid.len(), 4);
    assert!(r.grid.iter().all(|e| e.fold_accuracies.len() == 3 && e.error.is_none()));
    assert_eq!(r.test_reads_before_final, 0);
    assert!(!r.partial);

    // the selection maximizes validation accuracy with ties toward small models
    let sel = r.selected.as_ref().unwrap();
    let best = r.grid.iter().filter_map(|e| e.mean_accuracy).fold(f64::NEG_INFINITY, f64::max);
    let first_best = r.grid.iter().filter(|e| e.mean_accuracy == Some(best)).min_by(|a, b| {
        a.fc_size.cmp(&b.fc_size).then(a.c_reg.total_cmp(&b.c_reg))
    });
    assert_eq!((sel.fc_size, sel.c_reg), (first_best.unwrap().fc_size, first_best.unwrap().c_reg));

    let cm = r.confusion.as_ref().unwrap();
    let row_sums: Vec<usize> = cm.iter().map(|row| row.iter().sum()).collect();
    assert_eq!(row_sums.iter().sum::<usize>(), r.n_test);
    let diag: usize = (0..cm.len()).map(|i| cm[i][i]).sum();
    assert!((diag as f64 / r.n_test as f64 - r.test_accuracy.unwrap()).abs() < 1e-12);
    assert!(r.test_accuracy.unwrap() >= 0.9, "{:?}", r.test_accuracy);
}

#[test]
fn seeded_runs_are_identical() {
    let data = small_data();
    let cfg = small_config();
    let a = run(&data, &cfg);
    let b = run(&data, &cfg);
    assert_eq!(a.report.without_timings(), b.report.without_timings());
    assert_eq!(a.bundle.to_json(), b.bundle.to_json());
}

#[test]
fn thread_count_does_not_change_results() {
    let data = small_data();
    let cfg = small_config();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| run(&data, &cfg));
    let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| run(&data, &cfg));
    assert_eq!(single.report.without_timings(), many.report.without_timings());
    assert_eq!(single.bundle.to_json(), many.bundle.to_json());
}

#[test]
fn size_one_grid_skips_the_search() {
    let cfg = ExperimentConfig { fc_size_grid: vec![6], c_reg_grid: vec![1.0], ..small_config() };
    let out = run(&small_data(), &cfg);
    assert!(out.report.grid.is_empty());
    let sel = out.report.selected.unwrap();
    assert_eq!((sel.fc_size, sel.c_reg, sel.validation_accuracy), (6, 1.0, None));
    assert!(out.report.test_accuracy.is_some());
}

#[test]
fn report_json_roundtrip() {
    let out = run(&small_data(), &small_config());
    let text = render_report(&out.report, ReportFormat::Json);
    let back = ExperimentReport::from_json(text.as_bytes(), "r.json".as_ref()).unwrap();
    assert_eq!(back, out.report);

    let table = render_report(&out.report, ReportFormat::TextTable);
    assert!(table.starts_with("Method"));
    let csv = render_report(&out.report, ReportFormat::Csv);
    assert_eq!(csv.lines().count(), 1 + 4 + 2);
}

#[test]
fn bundle_reproduces_the_reported_test_accuracy() {
    let data = small_data();
    let cfg = small_config();
    let out = run(&data, &cfg);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    out.bundle.save(&path).unwrap();
    let loaded = ModelBundle::load(&path).unwrap();
    assert_eq!(loaded, out.bundle);
    let eval = evaluate_bundle(&loaded, &data, Some(&cfg.protocol), None).unwrap();
    assert_eq!(eval.test_accuracy, out.report.test_accuracy);
    assert_eq!(eval.confusion, out.report.confusion);
}

#[test]
fn bundle_rejects_other_versions_and_wrong_joint_counts() {
    let cfg = ExperimentConfig { fc_size_grid: vec![4], c_reg_grid: vec![1.0], ..small_config() };
    let out = run(&small_data(), &cfg);
    let mut value: serde_json::Value = serde_json::from_slice(&out.bundle.to_json()).unwrap();
    value["format_version"] = serde_json::json!(99);
    let err = ModelBundle::from_json(value.to_string().as_bytes(), "m.json".as_ref()).unwrap_err();
    assert!(matches!(err, Error::VersionMismatch { .. }), "{err:?}");
    value.as_object_mut().unwrap().remove("format_version");
    let err = ModelBundle::from_json(value.to_string().as_bytes(), "m.json".as_ref()).unwrap_err();
    assert!(matches!(err, Error::VersionMismatch { .. }), "{err:?}");

    let other = generate_range(&SyntheticConfig { joints: 7, ..SyntheticConfig::default() }, 0, 2).unwrap();
    match out.bundle.predict(&other, None) {
        Err(Error::JointCount { expected: 5, actual: 7 }) => {}
        other => panic!("expected JointCount, got {other:?}"),
    }
}

#[test]
fn bad_protocols_fail_cleanly() {
    let data = small_data();
    let cfg = ExperimentConfig {
        protocol: SplitProtocol::BySubject { test_subjects: vec![42] },
        ..small_config()
    };
    assert!(matches!(
        run_experiment_on(&data, &cfg, &EncodingCache::in_memory()),
        Err(Error::UnknownSubject(42))
    ));
    let bad = ExperimentConfig { c_reg_grid: vec![], ..small_config() };
    assert!(matches!(run_experiment_on(&data, &bad, &EncodingCache::in_memory()), Err(Error::Config(_))));
}
