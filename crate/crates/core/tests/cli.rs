mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn freqhar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freqhar"))
        .args(args)
        .env_remove(freqhar::data::source::DATA_ROOT_ENV)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> PathBuf {
    let out = freqhar(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    PathBuf::from(String::from_utf8(out.stdout).unwrap().trim())
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn train_then_eval_bench_export() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("runs");
    let train = run_ok(&["train", "--dataset", "syn-a", "--epochs", "3", "--out", s(&out)]);
    let name = train.file_name().unwrap().to_str().unwrap().to_string();
    assert!(name.starts_with("train-") && name.len() == "train-".len() + 8);
    for f in ["config.json", "checkpoint.json", "report.json", "timing.json", "split.json"] {
        assert!(train.join(f).is_file(), "{f}");
    }
    assert_eq!(std::fs::read_to_string(out.join("LATEST")).unwrap().trim(), name);

    let eval = run_ok(&["eval", "--target", "syn-b", "--out", s(&out)]);
    let result: serde_json::Value = serde_json::from_slice(&read(&eval.join("eval.json"))).unwrap();
    assert!(result["accuracy"].as_f64().is_some());
    assert_eq!(result["source"], "syn-a");

    // the prediction log reproduces the reported accuracy and confusion
    let log = freqhar::analysis::read_prediction_log(&eval.join("predictions.csv")).unwrap();
    let (truth, pred): (Vec<usize>, Vec<usize>) = log.into_iter().unzip();
    let again = freqhar::analysis::metrics_from_labels(&truth, &pred, 4, "syn-a", "syn-b").unwrap();
    assert_eq!(result["accuracy"].as_f64().unwrap(), again.accuracy);
    assert_eq!(serde_json::to_value(&again.confusion).unwrap(), result["confusion"]);

    let bench = run_ok(&["bench", "--runs", "10", "--out", s(&out)]);
    let cost: serde_json::Value = serde_json::from_slice(&read(&bench.join("cost.json"))).unwrap();
    assert_eq!(cost["param_count"], 25_220);
    assert_eq!(cost["latency"]["timings"].as_array().unwrap().len(), 10);

    let attn = run_ok(&["export-attn", "--dataset", "syn-c", "--window-index", "3", "--out", s(&out)]);
    let csv = std::fs::read_to_string(attn.join("attention.csv")).unwrap();
    assert!(csv.starts_with("query,Ax,Ay,Az,Gx,Gy,Gz"));
    let zeros = csv
        .lines()
        .skip(1)
        .flat_map(|l| l.split(',').skip(1).map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .filter(|&v| v == 0.0)
        .count();
    assert_eq!(zeros, 12);

    let in_domain = run_ok(&["eval", "--target", "syn-a", "--out", s(&out)]);
    let r: serde_json::Value = serde_json::from_slice(&read(&in_domain.join("eval.json"))).unwrap();
    let split: serde_json::Value = serde_json::from_slice(&read(&train.join("split.json"))).unwrap();
    assert_eq!(r["windows"].as_u64().unwrap() as usize, split["test"].as_array().unwrap().len());
}

#[test]
fn rerun_from_saved_config_is_bitwise_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("runs");
    let first = run_ok(&["train", "--dataset", "syn-b", "--epochs", "2", "--seed", "5", "--out", s(&out)]);
    let copy = tmp.path().join("config.json");
    std::fs::copy(first.join("config.json"), &copy).unwrap();
    let checkpoint = read(&first.join("checkpoint.json"));
    let report = read(&first.join("report.json"));
    std::fs::remove_dir_all(&first).unwrap();
    let second = run_ok(&["train", "--config", s(&copy)]);
    assert_eq!(first, second);
    assert_eq!(checkpoint, read(&second.join("checkpoint.json")));
    assert_eq!(report, read(&second.join("report.json")));
}

#[test]
fn source_target_matrix_writes_one_result_per_pair() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("runs");
    let domains = ["syn-a", "syn-b", "syn-c", "syn-d"];
    let mut results = Vec::new();
    for src in domains {
        let train = run_ok(&["train", "--dataset", src, "--epochs", "1", "--out", s(&out)]);
        let ckpt = train.join("checkpoint.json");
        for tgt in domains.iter().filter(|t| **t != src) {
            let eval = run_ok(&["eval", "--checkpoint", s(&ckpt), "--target", tgt, "--out", s(&out)]);
            results.push(eval.join("eval.json"));
        }
    }
    results.sort();
    results.dedup();
    assert_eq!(results.len(), 12);
    assert!(results.iter().all(|p| p.is_file()));
}

#[test]
fn analyze_shift_writes_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = run_ok(&["analyze-shift", "--dataset", "syn-a", "--target", "syn-a", "--out", s(tmp.path())]);
    let report: serde_json::Value = serde_json::from_slice(&read(&dir.join("shift.json"))).unwrap();
    for c in report["channels"].as_array().unwrap() {
        for rep in ["time", "amplitude", "phase"] {
            assert_eq!(c[rep]["emd"], 0.0);
        }
    }
    let other = run_ok(&["analyze-shift", "--dataset", "syn-a", "--target", "syn-c", "--bins", "50", "--out", s(tmp.path())]);
    let csv = std::fs::read_to_string(other.join("shift.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn prepare_is_byte_identical_on_rerun() {
    let tmp = tempfile::tempdir().unwrap();
    let raw = tmp.path().join("raw");
    common::write_uci(&raw, &common::recordings(2, 30.0, 8));
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run_ok(&["prepare", "--dataset", "uci", "--in", s(&raw), "--out", s(&a)]);
    run_ok(&["prepare", "--dataset", "uci", "--in", s(&raw), "--out", s(&b)]);
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.iter().any(|n| n == "index.json"));
    assert!(names.iter().any(|n| n == "manifest.json"));
    for n in &names {
        assert_eq!(read(&a.join(n)), read(&b.join(n)), "{n:?}");
    }
    // the prepared directory trains directly
    let out = tmp.path().join("runs");
    run_ok(&["train", "--dataset", "uci", "--in", s(&a), "--epochs", "1", "--out", s(&out)]);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = freqhar(&["eval", "--target", "syn-a", "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("checkpoint not found"));

    let out = freqhar(&["prepare", "--dataset", "wisdm", "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(freqhar(&["frobnicate"]).status.code(), Some(2));
    let out = freqhar(&["train", "--dataset", "syn-a", "--attention-mode", "temporal", "--mask-mode", "selective"]);
    assert_eq!(out.status.code(), Some(2));

    let out = freqhar(&["train", "--dataset", "uci", "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FREQHAR_DATA_ROOT"));
    assert_eq!(freqhar(&["--help"]).status.code(), Some(0));
}
