mod common;

use clm::metrics::EvalReport;
use clm::{ingest, run_eval, run_train, PipelineError, RunConfig, Split};
use common::{write_dataset, FAST_CONFIG};

fn config() -> RunConfig {
    RunConfig::from_json(FAST_CONFIG).unwrap()
}

#[test]
fn train_then_eval_on_held_out_split() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), &["h", "v"], 7, 64);
    let manifest = ingest(dir.path()).unwrap();
    let (model, train_report) = run_train(&manifest, &config()).unwrap();
    assert_eq!(train_report.total, 8);
    assert_eq!(train_report.accuracy, 1.0);
    assert!(!train_report.objective_trajectory.is_empty());
    assert_eq!(train_report.objective_trajectory.len(), model.model.trajectory.len());

    let report = run_eval(&model, &manifest).unwrap();
    assert_eq!(report.total, 6);
    let rows: Vec<usize> = report.confusion.iter().map(|r| r.iter().sum()).collect();
    assert_eq!(rows, [3, 3]);
    let diag: usize = (0..2).map(|c| report.confusion[c][c]).sum();
    assert_eq!(report.accuracy, diag as f64 / 6.0);
    assert_eq!(report.accuracy, 1.0);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), &["h", "v"], 6, 64);
    let manifest = ingest(dir.path()).unwrap();
    let (m1, r1) = run_train(&manifest, &config()).unwrap();
    let (m2, r2) = run_train(&manifest, &config()).unwrap();
    assert_eq!(m1.encode(), m2.encode());
    assert_eq!(r1.to_json(), r2.to_json());
    assert_eq!(run_eval(&m1, &manifest).unwrap().to_json(), run_eval(&m2, &manifest).unwrap().to_json());
}

#[test]
fn stage_timings_add_up_to_the_total() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), &["h", "v"], 6, 64);
    let manifest = ingest(dir.path()).unwrap();
    let (model, report) = run_train(&manifest, &config()).unwrap();
    for t in [&report.timings, &run_eval(&model, &manifest).unwrap().timings] {
        let (sum, total) = (t.stage_sum().as_secs_f64(), t.total.as_secs_f64());
        assert!(sum <= total && sum >= 0.98 * total, "stages {sum} s, total {total} s");
    }
    assert!(report.to_string().contains("features"));
}

#[test]
fn model_classes_are_matched_by_name() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), &["h", "v"], 6, 64);
    let (model, _) = run_train(&ingest(dir.path()).unwrap(), &config()).unwrap();

    let other = tempfile::tempdir().unwrap();
    write_dataset(other.path(), &["h", "w"], 6, 64);
    let err = run_eval(&model, &ingest(other.path()).unwrap()).unwrap_err();
    assert!(matches!(err, PipelineError::Config(_)), "{err}");
}

#[test]
fn unsplit_dataset_trains_and_evaluates_on_everything() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), &["h", "v"], 3, 64);
    let cfg = RunConfig {
        train_per_class: None,
        ..config()
    };
    let manifest = ingest(dir.path()).unwrap();
    assert_eq!(manifest.entries_in(Split::Test).len(), 6);
    let (model, report) = run_train(&manifest, &cfg).unwrap();
    assert_eq!(report.total, 6);
    assert_eq!(run_eval(&model, &manifest).unwrap().total, 6);
}

#[test]
fn single_class_training_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), &["h"], 6, 64);
    let err = run_train(&ingest(dir.path()).unwrap(), &config()).unwrap_err();
    assert!(matches!(err, PipelineError::Core { .. }), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn report_examples() {
    let classes = vec!["a".to_string(), "b".to_string()];
    let right = EvalReport::new(classes.clone(), &[0, 1, 1], &[0, 1, 1], &[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.2, 0.9]]);
    assert_eq!(right.accuracy, 1.0);
    assert_eq!(right.confusion, [[1, 0], [0, 2]]);

    let wrong = EvalReport::new(classes.clone(), &[0, 1], &[1, 0], &[vec![0.0, 1.0], vec![1.0, 0.0]]);
    assert_eq!(wrong.accuracy, 0.0);

    // Class-1 scores 0.9 and 0.8 on the two class-1 items, 0.7 on the other.
    let ranked = EvalReport::new(
        classes,
        &[0, 0, 1],
        &[0, 0, 1],
        &[vec![0.9, 0.1], vec![0.8, 0.2], vec![0.7, 0.3]],
    );
    assert_eq!(ranked.per_class_ap[0], 1.0);
}
