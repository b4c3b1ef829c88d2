use std::path::Path;
use std::process::{Command, Output};

use homkernel::data::read_dataset;
use homkernel::evaluation::Evaluation;
use homkernel::mmd::load_predictions;
use homkernel::Label;
use homkernel_cli::WeightsFile;

fn homk(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homk"))
        .args(args)
        .arg("--output")
        .arg(dir)
        .output()
        .expect("spawn homk")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = homk(dir, args);
    assert!(
        out.status.success(),
        "homk {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn accuracy(path: &Path) -> f64 {
    Evaluation::from_predictions(&load_predictions(path).unwrap()).accuracy()
}

#[test]
fn generate_writes_both_sets_and_is_repeatable() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("nested/out");
    ok(&dir, &["generate"]);
    let train = read_dataset(dir.join("train.csv")).unwrap();
    let test = read_dataset(dir.join("test.csv")).unwrap();
    assert_eq!((train.len(), test.len()), (1000, 1000));
    assert_eq!(train.count(Label::P), 500);
    let first = std::fs::read(dir.join("train.csv")).unwrap();
    ok(&dir, &["generate"]);
    assert_eq!(std::fs::read(dir.join("train.csv")).unwrap(), first);
}

#[test]
fn zero_iterations_keep_initial_weights() {
    let tmp = tempfile::tempdir().unwrap();
    ok(tmp.path(), &["generate"]);
    ok(tmp.path(), &["train", "--iterations", "0"]);
    let w = WeightsFile::load(tmp.path().join("weights.csv")).unwrap();
    assert_eq!(w.initial, w.last);
    assert_eq!(w.initial, w.best);
    assert!(w.initial.iter().all(|v| (0.5..1.5).contains(v)));
}

#[test]
fn train_reports_mmd_and_trace_is_seed_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    ok(tmp.path(), &["generate"]);
    let stdout = ok(tmp.path(), &["train", "--seed", "3"]);
    let final_mmd: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("final MMD "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(final_mmd >= 1.9, "{stdout}");
    let trace = std::fs::read(tmp.path().join("trace.csv")).unwrap();
    ok(tmp.path(), &["train", "--seed", "3"]);
    assert_eq!(std::fs::read(tmp.path().join("trace.csv")).unwrap(), trace);
    let text = String::from_utf8(trace).unwrap();
    assert_eq!(text.lines().count(), 1002);
    assert!(text.starts_with("iter,cost,w_0,w_1,w_2\n"));
}

#[test]
fn full_pipeline_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["generate"]);
    ok(d, &["train"]);

    ok(d, &["dip", "--untrained"]);
    ok(d, &["dip"]);
    let curve = |name: &str| -> Vec<(f64, f64)> {
        std::fs::read_to_string(d.join(name))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| {
                let (a, b) = l.split_once(',').unwrap();
                (a.parse().unwrap(), b.parse().unwrap())
            })
            .collect()
    };
    let untrained = curve("dip_untrained.csv");
    let trained = curve("dip.csv");
    assert_eq!(untrained.len(), 201);
    let at_zero = untrained.iter().find(|(dt, _)| *dt == 0.0).unwrap().1;
    assert!(at_zero < 0.1);
    assert!(trained.iter().all(|&(_, cc)| cc > 0.9));

    // single-mean before training labels everything alike
    ok(d, &["classify", "--untrained", "--single-mean"]);
    assert!((accuracy(&d.join("predictions_untrained.csv")) - 0.5).abs() < 0.05);
    ok(d, &["classify"]);
    let exact = accuracy(&d.join("predictions.csv"));
    assert!(exact >= 0.95);

    let report = ok(d, &["report"]);
    assert!(report.contains("== untrained") && report.contains("== trained"));
    for sub in ["trained", "untrained"] {
        let conf = std::fs::read_to_string(d.join("report").join(sub).join("confusion.csv")).unwrap();
        assert!(conf.starts_with("predicted,true,count,percent\n"));
        let scores = std::fs::read_to_string(d.join("report").join(sub).join("scores.csv")).unwrap();
        assert_eq!(scores.lines().count(), 1001);
    }
    let before = std::fs::read(d.join("report/trained/confusion.csv")).unwrap();
    ok(d, &["report"]);
    assert_eq!(std::fs::read(d.join("report/trained/confusion.csv")).unwrap(), before);

    ok(d, &["classify", "--shots", "100000"]);
    assert!((accuracy(&d.join("predictions.csv")) - exact).abs() <= 0.02);
}

#[test]
fn point_dip_and_empty_input() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["generate"]);
    ok(d, &["train", "--iterations", "50"]);
    let out = ok(d, &["dip", "--pair", "point", "--point", "-4,0.2", "--against", "P"]);
    assert!(out.contains("min CC"));

    let empty = d.join("empty.csv");
    std::fs::write(&empty, "F1,F2,label\n").unwrap();
    ok(d, &["classify", "--input", empty.to_str().unwrap()]);
    let text = std::fs::read_to_string(d.join("predictions.csv")).unwrap();
    assert_eq!(text, "x1,x2,score,label,true_label\n");
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let code = |args: &[&str]| homk(d, args).status.code().unwrap();

    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["bogus"]), 1);
    assert_eq!(code(&["train", "--iterations", "many"]), 1);
    assert_eq!(code(&["dip", "--pair", "point"]), 1);

    // nothing generated yet
    assert_eq!(code(&["train"]), 2);
    assert_eq!(code(&["report"]), 2);

    let bad = d.join("bad.json");
    std::fs::write(&bad, r#"{"mode_order": 4}"#).unwrap();
    assert_eq!(code(&["generate", "--config", bad.to_str().unwrap()]), 3);
    std::fs::write(&bad, r#"{"no_such_key": 1}"#).unwrap();
    assert_eq!(code(&["generate", "--config", bad.to_str().unwrap()]), 2);

    ok(d, &["generate"]);
    std::fs::write(d.join("train.csv"), "F1,F2,label\n1,2,X\n").unwrap();
    assert_eq!(code(&["train"]), 2);
}

#[test]
fn config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cfg = d.join("cfg.json");
    std::fs::write(&cfg, r#"{"points_per_blob": 10, "iterations": 7, "seed": 5}"#).unwrap();
    let c = cfg.to_str().unwrap();
    ok(d, &["generate", "--config", c]);
    assert_eq!(read_dataset(d.join("train.csv")).unwrap().len(), 40);
    ok(d, &["train", "--config", c, "--iterations", "3"]);
    let trace = std::fs::read_to_string(d.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 5);
}

#[test]
fn documented_config_matches_defaults() {
    let text = r#"{
      "output": "out", "centers": [[4, 0.2], [-4, -0.2], [4, -0.5], [-4, 0.5]],
      "sigma": 0.08, "points_per_blob": 250, "grouping": ["P", "P", "Q", "Q"],
      "data_seed": 1, "test_seed": 2, "feature_map": "polynomial2",
      "mode_order": 3, "t_max": 12.0, "grid_points": 4001,
      "iterations": 1000, "fd_step": 0.0001, "seed": 0,
      "shots": null, "shot_seed": 0,
      "delay_min": -5.0, "delay_max": 5.0, "delay_steps": 201
    }"#;
    let cfg = homkernel_cli::ExperimentConfig::from_json(text).unwrap();
    assert_eq!(cfg, homkernel_cli::ExperimentConfig::default());
    let round = serde_json::to_string(&cfg).unwrap();
    assert_eq!(homkernel_cli::ExperimentConfig::from_json(&round).unwrap(), cfg);
}
