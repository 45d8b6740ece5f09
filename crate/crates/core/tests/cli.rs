use std::path::Path;

use hpnn::cli::dispatch_to;

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = dispatch_to(std::iter::once("hpnn").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const CONFIG: &str = r#"{
  "network": {
    "input_height": 16, "input_width": 16, "classes": 3,
    "pyramidal": [{"sublayers": 2, "field": 4}, {"sublayers": 2, "field": 2}],
    "dense": [{"units": 3}]
  },
  "train": {"learning_rate": 0.05, "batch_size": 4, "max_epochs": 6, "patience": 3, "seed": 5}
}
"#;

/// A small corpus and config in a fresh directory.
fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let (code, out, err) = run(&[
        "synth", "--classes", "3", "--subjects", "10", "--per-subject", "2", "--size", "20", "--out", p(&corpus), "--seed", "3",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("seed: 3") && out.contains("images: 60"), "{out}");
    std::fs::write(dir.path().join("config.json"), CONFIG).unwrap();
    dir
}

fn cv(dir: &Path, out_name: &str) -> String {
    let (code, out, err) = run(&[
        "cv",
        "--config",
        p(&dir.join("config.json")),
        "--index",
        p(&dir.join("corpus/index.csv")),
        "--out",
        p(&dir.join(out_name)),
    ]);
    assert_eq!(code, 0, "{err}");
    out
}

fn accuracy_from_eval_csv(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().find_map(|l| l.strip_prefix("accuracy,")).unwrap().to_string()
}

#[test]
fn cv_then_eval_reproduces_trial_accuracies() {
    let ws = workspace();
    let dir = ws.path();
    let printed = cv(dir, "cv");
    assert!(printed.starts_with("seed: 5\n"));
    assert!(printed.contains("recognition rate: "));
    let summary = std::fs::read_to_string(dir.join("cv/summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert_eq!(summary.lines().next(), Some("trial,test_acc"));
    assert_eq!(rows.len(), 10);
    for row in rows {
        let (trial, acc) = row.split_once(',').unwrap();
        let t: usize = trial.parse().unwrap();
        let eval_dir = dir.join(format!("eval_{t}"));
        let (code, out, err) = run(&[
            "eval",
            "--model",
            p(&dir.join(format!("cv/trial_{t:02}.hpnn"))),
            "--index",
            p(&dir.join("corpus/index.csv")),
            "--fold-plan",
            p(&dir.join("cv/fold_plan.csv")),
            "--fold",
            trial,
            "--out",
            p(&eval_dir),
        ]);
        assert_eq!(code, 0, "{err}");
        assert!(out.contains("accuracy: "));
        assert_eq!(accuracy_from_eval_csv(&eval_dir.join("eval.csv")), acc, "trial {t}");
    }
}

#[test]
fn blur_sweep_at_size_one_equals_eval() {
    let ws = workspace();
    let dir = ws.path();
    cv(dir, "cv");
    let index = dir.join("corpus/index.csv");
    let (code, out, err) = run(&["blur-sweep", "--models", p(&dir.join("cv")), "--index", p(&index), "--sizes", "1,3"]);
    assert_eq!(code, 0, "{err}");
    let row1 = out.lines().find(|l| l.starts_with("1,")).unwrap();
    let summary = std::fs::read_to_string(dir.join("cv/summary.csv")).unwrap();
    let accs: Vec<f64> = summary.lines().skip(1).map(|l| l.split_once(',').unwrap().1.parse().unwrap()).collect();
    let (mean, std) = hpnn::experiment::mean_std(&accs);
    assert_eq!(row1, format!("1,{mean},{std}"));

    // Single model on one fold.
    let model = dir.join("cv/trial_03.hpnn");
    let plan = dir.join("cv/fold_plan.csv");
    let (code, out, _) = run(&[
        "blur-sweep", "--model", p(&model), "--index", p(&index), "--sizes", "1", "--fold-plan", p(&plan), "--fold", "3",
    ]);
    assert_eq!(code, 0);
    let line = out.lines().find(|l| l.starts_with("1,")).unwrap();
    assert_eq!(line, format!("1,{},0", accs[3]));
}

#[test]
fn blur_sweep_default_sizes() {
    let ws = workspace();
    let dir = ws.path();
    cv(dir, "cv");
    let (code, out, err) = run(&[
        "blur-sweep", "--models", p(&dir.join("cv")), "--index", p(&dir.join("corpus/index.csv")), "--out", p(&dir.join("blur")),
    ]);
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(dir.join("blur/blur_sweep.csv")).unwrap();
    let sizes: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(sizes, ["3", "6", "9", "12", "15"]);
    assert!(csv.starts_with("filter_size,mean_acc,std_acc\n"));
    assert!(out.starts_with("seed: none"));
}

#[test]
fn repeated_cv_runs_are_byte_identical() {
    let ws = workspace();
    let dir = ws.path();
    cv(dir, "a");
    cv(dir, "b");
    let mut names: Vec<String> = std::fs::read_dir(dir.join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names.len(), 3 + 2 * 10);
    for name in names {
        let a = std::fs::read(dir.join("a").join(&name)).unwrap();
        let b = std::fs::read(dir.join("b").join(&name)).unwrap();
        assert!(a == b, "{name} differs");
    }
}

#[test]
fn train_writes_model_and_history() {
    let ws = workspace();
    let dir = ws.path();
    let (code, out, err) = run(&[
        "train", "--config", p(&dir.join("config.json")), "--index", p(&dir.join("corpus/index.csv")), "--out",
        p(&dir.join("t")), "--seed", "17",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("seed: 17\n"));
    assert!(hpnn::serialize::load_model(dir.join("t/model.hpnn")).is_ok());
    let history = std::fs::read_to_string(dir.join("t/history.csv")).unwrap();
    assert!(history.starts_with("epoch,train_loss,train_acc,val_acc\n"));
}

#[test]
fn params_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    std::fs::write(&config, CONFIG).unwrap();
    let (code, out, _) = run(&["params", "--config", p(&config)]);
    assert_eq!(code, 0);
    // 2·256 + 2·16; 2·2·16 + 2·4; 3·8 + 3
    let expected = "layer,weights,biases,total\npyramidal1,512,32,544\npyramidal2,64,8,72\ndense1,24,3,27\ntotal parameters: 643\n";
    assert!(out.ends_with(expected), "{out}");
}

#[test]
fn gradcheck_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let small = dir.path().join("small.json");
    std::fs::write(&small, CONFIG).unwrap();
    let (code, out, _) = run(&["gradcheck", "--config", p(&small), "--seed", "8"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("seed: 8") && out.contains("max relative error:") && out.ends_with("ok\n"));

    let big = dir.path().join("big.json");
    std::fs::write(
        &big,
        r#"{"network": {"input_height": 96, "input_width": 96, "classes": 2,
            "pyramidal": [{"sublayers": 8, "field": 4}], "dense": [{"units": 2}]}}"#,
    )
    .unwrap();
    let (code, _, err) = run(&["gradcheck", "--config", p(&big)]);
    assert_eq!(code, 2);
    assert!(err.contains("50000"), "{err}");
}

#[test]
fn usage_and_data_errors() {
    let (code, _, err) = run(&["cv", "--index", "x.csv"]);
    assert_eq!(code, 1);
    assert!(err.contains("--config"));
    let (code, _, err) = run(&["synth", "--classes", "three"]);
    assert_eq!(code, 1);
    assert!(err.contains("--classes"));
    let (code, _, _) = run(&["frobnicate"]);
    assert_eq!(code, 1);
    let (code, _, err) = run(&["params", "--config", "/nonexistent/c.json"]);
    assert_eq!(code, 2);
    assert!(err.contains("/nonexistent/c.json"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"network": {"input_height": 12, "input_width": 12, "classes": 2,
            "pyramidal": [{"sublayers": 1, "field": 3, "overlap": 1}], "dense": [{"units": 2}]}}"#,
    )
    .unwrap();
    let (code, _, err) = run(&["params", "--config", p(&bad)]);
    assert_eq!(code, 2);
    assert!(err.to_lowercase().contains("geometry"), "{err}");
}

fn config_path(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

#[test]
fn shipped_configs_validate() {
    for name in ["hpnn_96.json", "pyranet_96.json", "synth_32.json", "gradcheck.json"] {
        let (code, _, err) = run(&["params", "--config", config_path(name).to_str().unwrap()]);
        assert_eq!(code, 0, "{name}: {err}");
    }
}

#[test]
fn ninety_six_pixel_hpnn_has_113520_parameters() {
    let (_, out, _) = run(&["params", "--config", config_path("hpnn_96.json").to_str().unwrap()]);
    assert!(out.ends_with("total parameters: 113520\n"), "{out}");
}

#[test]
fn shipped_gradcheck_config_passes() {
    let (code, out, _) = run(&["gradcheck", "--config", config_path("gradcheck.json").to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");
}
