use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_skewlearn"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes a small synthetic CSV and returns its path.
fn synth(dir: &Path, rows: usize) -> PathBuf {
    let path = dir.join("data.csv");
    let out = run(&[
        "synth",
        "--rows",
        &rows.to_string(),
        "--seed",
        "3",
        "--out",
        s(&path),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["synth", "--rows"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);

    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 300);
    let model = dir.path().join("m.json");
    let out = run(&[
        "train",
        "--model",
        "svm",
        "--data",
        s(&data),
        "--out",
        s(&model),
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("svm"));
    let out = run(&[
        "train",
        "--model",
        "lr",
        "--data",
        s(&data),
        "--out",
        s(&model),
        "--class-weight",
        "heavy",
    ]);
    assert_eq!(code(&out), 1);
    assert!(!model.exists());
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = run(&[
        "ingest",
        "--in",
        s(&missing),
        "--schema-out",
        s(&dir.path().join("s.json")),
    ]);
    assert_eq!(code(&out), 2);

    let data = synth(dir.path(), 300);
    let out = run(&[
        "ingest",
        "--in",
        s(&data),
        "--target",
        "NoSuchColumn",
        "--schema-out",
        s(&dir.path().join("s.json")),
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("NoSuchColumn"));

    let bad = dir.path().join("bad_grid.json");
    fs::write(&bad, "{ not json").unwrap();
    let out = run(&[
        "gridsearch",
        "--grid",
        s(&bad),
        "--data",
        s(&data),
        "--out",
        s(dir.path()),
    ]);
    assert_ne!(code(&out), 0);
}

#[test]
fn training_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 400);
    let config = dir.path().join("mlp.json");
    fs::write(
        &config,
        r#"{"hidden_layers": [16], "learning_rate": 1e300, "batch_size": 16, "epochs": 5}"#,
    )
    .unwrap();
    let out = run(&[
        "train",
        "--model",
        "mlp",
        "--config",
        s(&config),
        "--data",
        s(&data),
        "--out",
        s(&dir.path().join("m.json")),
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn ingest_train_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 1500);
    let schema = dir.path().join("schema.json");
    let out = run(&["ingest", "--in", s(&data), "--schema-out", s(&schema)]);
    assert_eq!(code(&out), 0);
    let summary = String::from_utf8_lossy(&out.stdout);
    assert!(summary.contains("num_missing") && summary.contains("NbClaimsTot"));
    assert!(schema.exists());

    for model in ["lr", "dt", "gbt"] {
        let path = dir.path().join(format!("{model}.json"));
        let out = run(&[
            "train",
            "--model",
            model,
            "--data",
            s(&data),
            "--out",
            s(&path),
            "--smote",
            "--seed",
            "2",
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

        let csv = dir.path().join(format!("{model}_eval.csv"));
        assert_eq!(
            code(&run(&[
                "evaluate",
                "--model",
                s(&path),
                "--data",
                s(&data),
                "--report",
                s(&csv)
            ])),
            0
        );
        let text = fs::read_to_string(&csv).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "accuracy,f1,precision,recall,auc,auprc,gini,threshold,tp,fp,fn,tn"
        );
        let values: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        assert_eq!(values[8] + values[9] + values[10] + values[11], 1500.0);

        let json_path = dir.path().join(format!("{model}_eval.json"));
        let out = run(&[
            "evaluate",
            "--model",
            s(&path),
            "--data",
            s(&data),
            "--report",
            s(&json_path),
            "--threshold",
            "0.3",
        ]);
        assert_eq!(code(&out), 0);
        let v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
        assert_eq!(v["model"], model);
        assert_eq!(v["evaluation"]["threshold"], 0.3);
    }
}

#[test]
fn gridsearch_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 800);
    let grid = dir.path().join("grid.json");
    fs::write(
        &grid,
        r#"{"version": 1, "model": "dt", "max_depth": [2, 4, 6]}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("cv");
    let out = run(&[
        "gridsearch",
        "--grid",
        s(&grid),
        "--data",
        s(&data),
        "--folds",
        "3",
        "--scoring",
        "auc",
        "--smote",
        "--out",
        s(&out_dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("best auc"));
    let csv = fs::read_to_string(out_dir.join("cv_results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 3);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("cv_summary.json")).unwrap())
            .unwrap();
    assert!(summary.is_object());
}

#[test]
fn benchmark_and_leakage_demo_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 1200);
    let bench = |out: &Path| {
        let o = run(&[
            "benchmark",
            "--data",
            s(&data),
            "--stages",
            "1,3",
            "--models",
            "lr,dt",
            "--grids",
            "reduced",
            "--folds",
            "3",
            "--seed",
            "5",
            "--out",
            s(out),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    bench(&a);
    bench(&b);
    for name in [
        "metrics.csv",
        "report.json",
        "best_params_stage3.json",
        "confusion_stage3_dt.svg",
    ] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    assert_eq!(
        fs::read_to_string(a.join("metrics.csv"))
            .unwrap()
            .lines()
            .count(),
        5
    );

    let leak = |out: &Path| {
        let o = run(&[
            "leakage-demo",
            "--data",
            s(&data),
            "--seed",
            "4",
            "--out",
            s(out),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        fs::read_to_string(out).unwrap()
    };
    let first = leak(&dir.path().join("l1.json"));
    assert_eq!(first, leak(&dir.path().join("l2.json")));
    let v: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert!(
        v["leaky"]["metrics"]["recall"].as_f64().unwrap()
            > v["correct"]["metrics"]["recall"].as_f64().unwrap()
    );
}

#[test]
fn bad_stage_list_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 200);
    let out = run(&[
        "benchmark",
        "--data",
        s(&data),
        "--stages",
        "1,7",
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert_eq!(code(&out), 1);
}
