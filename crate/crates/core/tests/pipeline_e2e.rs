mod support;

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use summgcn::labels::make_folds;
use summgcn::pipeline::{
    load_graph, prepare, run_experiment, ExperimentConfig, Metric, ModelKind, CSV_HEADER,
};
use summgcn::summary::SummaryMethod;

fn write_kg(dir: &Path, per_type: usize) -> std::path::PathBuf {
    let path = dir.join("kg.nt");
    std::fs::write(
        &path,
        support::synthetic_kg(&mut ChaCha8Rng::seed_from_u64(3), per_type),
    )
    .unwrap();
    path
}

fn config(dataset: &Path, out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        dataset: dataset.to_path_buf(),
        out: out.to_path_buf(),
        folds: 3,
        epochs: 10,
        summary_epochs: 30,
        seed: 11,
        ..ExperimentConfig::default()
    }
}

#[test]
fn synthetic_run_writes_consistent_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_kg(dir.path(), 40);
    let cfg = config(&data, &dir.path().join("run"));
    let res = run_experiment(&cfg).unwrap();

    let csv = std::fs::read_to_string(cfg.out.join("results.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some(CSV_HEADER));
    assert_eq!(csv, res.csv());
    for f in [
        "summary.txt",
        "transfer_report.txt",
        "accuracy.svg",
        "loss.svg",
    ] {
        assert!(cfg.out.join(f).exists(), "{f}");
    }
    assert!(!cfg.out.join("FAILED").exists());

    for fold in 0..3 {
        for (model, last) in [
            (ModelKind::Summary, 30),
            (ModelKind::Transfer, 10),
            (ModelKind::Baseline, 10),
        ] {
            let epochs: Vec<usize> = res
                .records
                .iter()
                .filter(|r| r.fold == fold && r.model == model)
                .map(|r| r.epoch)
                .collect();
            assert_eq!(
                epochs,
                (0..=last).collect::<Vec<_>>(),
                "fold {fold} {model}"
            );
        }
    }
    assert!(res.records.iter().all(|r| r.ms == 0));
    assert_eq!(res.reports.len(), 3);
    for r in &res.reports {
        assert_eq!(r.transferred_nodes + r.unmapped_nodes, res.original_nodes);
    }
    // the typed structure is visible to the summary, so transfer starts ahead
    let t0 = res
        .stat(ModelKind::Transfer, 0, Metric::SubsetAccuracy)
        .mean;
    let b0 = res
        .stat(ModelKind::Baseline, 0, Metric::SubsetAccuracy)
        .mean;
    assert!(t0 > b0 + 0.1, "transfer {t0} baseline {b0}");
}

#[test]
fn identical_configs_give_identical_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_kg(dir.path(), 25);
    let a = run_experiment(&config(&data, &dir.path().join("a"))).unwrap();
    let b = run_experiment(&config(&data, &dir.path().join("b"))).unwrap();
    let read = |d: &str| std::fs::read(dir.path().join(d).join("results.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_eq!(a.summary_text(), b.summary_text());
}

#[test]
fn zero_epochs_records_only_the_initial_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_kg(dir.path(), 20);
    let cfg = ExperimentConfig {
        epochs: 0,
        ..config(&data, &dir.path().join("run"))
    };
    let res = run_experiment(&cfg).unwrap();
    assert!(res
        .records
        .iter()
        .filter(|r| r.model != ModelKind::Summary)
        .all(|r| r.epoch == 0));
    assert_eq!(
        res.records
            .iter()
            .filter(|r| r.model == ModelKind::Transfer)
            .count(),
        3
    );
}

#[test]
fn shared_summary_and_other_methods_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_kg(dir.path(), 15);
    for (i, method) in [
        SummaryMethod::InputOutput,
        SummaryMethod::IncomingAttributes,
        SummaryMethod::Bisimulation { k: 2 },
    ]
    .into_iter()
    .enumerate()
    {
        let cfg = ExperimentConfig {
            summary_method: method,
            per_fold_summary: i != 0,
            drop_literals: i == 2,
            record_time: i == 1,
            epochs: 3,
            ..config(&data, &dir.path().join(format!("m{i}")))
        };
        let res = run_experiment(&cfg).unwrap();
        assert!(!res.records.is_empty());
        assert_eq!(cfg.out.join("timings.txt").exists(), cfg.record_time);
    }
}

#[test]
fn drop_literals_leaves_literals_unmapped() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_kg(dir.path(), 15);
    let raw = load_graph(&data).unwrap();
    let p = prepare(&raw, SummaryMethod::Attributes, true);
    let unmapped = p.partition_of.iter().filter(|x| x.is_none()).count();
    let literals = p
        .dataset
        .graph
        .nodes()
        .iter()
        .filter(|n| n.kind == summgcn::graph::NodeKind::Literal)
        .count();
    assert!(literals > 0);
    assert_eq!(unmapped, literals);
}

#[test]
fn missing_dataset_leaves_a_failed_marker() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&dir.path().join("absent.nt"), &dir.path().join("run"));
    let err = run_experiment(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    let marker = std::fs::read_to_string(cfg.out.join("FAILED")).unwrap();
    assert!(marker.contains("parse"));
}

#[test]
fn folds_keep_test_rows_out_of_training() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_kg(dir.path(), 20);
    let p = prepare(
        &load_graph(&data).unwrap(),
        SummaryMethod::Attributes,
        false,
    );
    let labeled = p.labels.masked_rows();
    let folds = make_folds(&labeled, 5, 2).unwrap();
    let mut tested: Vec<usize> = Vec::new();
    for f in &folds {
        assert!(f.test.iter().all(|v| !f.train.contains(v)));
        assert_eq!(f.train.len() + f.test.len(), labeled.len());
        tested.extend(&f.test);
    }
    tested.sort();
    assert_eq!(tested, labeled);
}
