use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn mfcpd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfcpd")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = mfcpd(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn err(args: &[&str]) -> String {
    let out = mfcpd(args);
    assert!(!out.status.success(), "{args:?} should fail");
    String::from_utf8(out.stderr).unwrap()
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn simulate_writes_rows_columns_and_labels() {
    let dir = TempDir::new().unwrap();
    let cases = [("single-cp1d", 800, 1, 1), ("single-cp2d", 800, 2, 1), ("scale-doubling", 2000, 1, 3)];
    for (generator, rows, cols, labels) in cases {
        let data = path(&dir, &format!("{generator}.csv"));
        ok(&["simulate", "--generator", generator, "--seed", "4", "--output", s(&data)]);
        let text = fs::read_to_string(&data).unwrap();
        assert_eq!(text.lines().count(), rows);
        assert!(text.lines().all(|l| l.split(',').count() == cols));
        let label_text = fs::read_to_string(data.with_extension("labels")).unwrap();
        assert_eq!(label_text.lines().count(), labels);
    }
    let labels = fs::read_to_string(path(&dir, "scale-doubling.labels")).unwrap();
    assert_eq!(labels.lines().collect::<Vec<_>>(), ["500", "1000", "1500"]);
}

#[test]
fn simulate_detect_evaluate_round_trip() {
    let dir = TempDir::new().unwrap();
    let data = path(&dir, "x.csv");
    let det = path(&dir, "det.json");
    let series = path(&dir, "series.csv");
    let report = path(&dir, "eval.json");
    let curve = path(&dir, "curve.csv");
    ok(&["simulate", "--generator", "single-cp1d", "--seed", "11", "--output", s(&data)]);
    ok(&["detect", "--input", s(&data), "--test", "wqt", "--window", "100", "--output", s(&det), "--series-output", s(&series)]);
    let d = json(&det);
    assert_eq!(d["series_offset"], 100);
    assert_eq!(d["bias"], 0.166);
    assert!(!d["change_points"].as_array().unwrap().is_empty());
    let rows = fs::read_to_string(&series).unwrap();
    assert_eq!(rows.lines().next(), Some("t,raw,processed"));
    assert_eq!(rows.lines().count(), 1 + 800 - 200 + 1);
    let labels = data.with_extension("labels");
    ok(&[
        "evaluate", "--predictions", s(&det), "--labels", s(&labels), "--epsilon", "100",
        "--output", s(&report), "--curve", s(&curve),
    ]);
    let r = json(&report);
    let au = r["au_prc"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&au));
    let c = &r["counts"];
    assert_eq!(c["tp"].as_u64().unwrap() + c["fn"].as_u64().unwrap(), 1);
    assert!(fs::read_to_string(&curve).unwrap().starts_with("threshold,precision,recall,f1,tp,fp,fn\n"));
}

#[test]
fn detect_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let data = path(&dir, "x.csv");
    ok(&["simulate", "--generator", "single-cp2d", "--seed", "2", "--output", s(&data)]);
    let args = ["detect", "--input", s(&data), "--test", "swqt", "--projections", "16", "--window", "80", "--seed", "9"];
    let a = ok(&args);
    assert_eq!(a, ok(&args));
    let other_seed = ok(&["detect", "--input", s(&data), "--test", "swqt", "--projections", "16", "--window", "80", "--seed", "10"]);
    assert_ne!(a, other_seed);
}

#[test]
fn constant_input_gives_no_detections() {
    let dir = TempDir::new().unwrap();
    let data = path(&dir, "c.csv");
    fs::write(&data, "2.5\n".repeat(300)).unwrap();
    for test in ["ks", "w1dt", "wqt", "swqt", "mmd2"] {
        for mode in ["--filtered", "--unfiltered"] {
            let d: Value = serde_json::from_str(&ok(&["detect", "--input", s(&data), "--test", test, "--window", "40", mode])).unwrap();
            assert_eq!(d["change_points"].as_array().unwrap().len(), 0, "{test} {mode}");
        }
    }
}

#[test]
fn malformed_input_reports_line_and_category() {
    let dir = TempDir::new().unwrap();
    let data = path(&dir, "bad.csv");
    fs::write(&data, "1.0,2.0\n3.0,4.0\n5.0,oops\n").unwrap();
    let msg = err(&["detect", "--input", s(&data), "--window", "1"]);
    assert!(msg.starts_with("error: parse: "), "{msg}");
    assert!(msg.contains("bad.csv:3:"), "{msg}");
    assert_eq!(msg.lines().count(), 1);

    fs::write(&data, "1.0,2.0\n3.0\n").unwrap();
    assert!(err(&["detect", "--input", s(&data), "--window", "1"]).contains(":2:"));

    fs::write(&data, "1\n2\n3\n").unwrap();
    let short = err(&["detect", "--input", s(&data), "--window", "2"]);
    assert!(short.starts_with("error: short-sequence: "), "{short}");
}

#[test]
fn missing_labels_file_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    let pred = path(&dir, "p.csv");
    fs::write(&pred, "10,0.5\n").unwrap();
    let msg = err(&["evaluate", "--predictions", s(&pred), "--labels", s(&path(&dir, "none.labels")), "--epsilon", "5"]);
    assert!(msg.starts_with("error: io: "), "{msg}");
    assert!(err(&["evaluate", "--bogus"]).starts_with("error: usage: "));
}

#[test]
fn perfect_predictions_score_one() {
    let dir = TempDir::new().unwrap();
    let pred = path(&dir, "p.csv");
    let labels = path(&dir, "t.labels");
    fs::write(&pred, "100,0.9\n300,0.8\n").unwrap();
    fs::write(&labels, "100\n300\n").unwrap();
    let r: Value = serde_json::from_str(&ok(&["evaluate", "--predictions", s(&pred), "--labels", s(&labels), "--epsilon", "0"])).unwrap();
    assert_eq!(r["au_prc"], 1.0);
    assert_eq!(r["best_f1"], 1.0);
    assert_eq!(r["precision"], 1.0);
    assert_eq!(r["recall"], 1.0);
}

#[test]
fn empty_predictions_anchor_at_the_sentinel() {
    let dir = TempDir::new().unwrap();
    let pred = path(&dir, "p.csv");
    let labels = path(&dir, "t.labels");
    let curve = path(&dir, "curve.csv");
    fs::write(&pred, "").unwrap();
    fs::write(&labels, "100\n").unwrap();
    let r: Value = serde_json::from_str(&ok(&[
        "evaluate", "--predictions", s(&pred), "--labels", s(&labels), "--epsilon", "10", "--curve", s(&curve),
    ]))
    .unwrap();
    assert_eq!(r["precision"], 1.0);
    assert_eq!(r["recall"], 0.0);
    assert_eq!(r["au_prc"], 0.0);
    let rows = fs::read_to_string(&curve).unwrap();
    assert_eq!(rows.lines().nth(1), Some("inf,1,0,0,0,0,1"));
}

fn taps(out: &str) -> Vec<(i64, f64)> {
    out.lines()
        .skip(1)
        .map(|l| {
            let (t, h) = l.split_once(',').unwrap();
            (t.parse().unwrap(), h.parse().unwrap())
        })
        .collect()
}

#[test]
fn filter_taps_are_symmetric_and_related() {
    let out = ok(&["filter-shape", "--test", "ks", "--window", "4"]);
    assert!(out.starts_with("t,h\n"));
    let ks = taps(&out);
    assert_eq!(ks.len(), 9);
    assert_eq!(ks.first().unwrap().0, -4);
    for i in 0..9 {
        assert_eq!(ks[i].1, ks[8 - i].1);
    }
    let wqt = taps(&ok(&["filter-shape", "--test", "wqt", "--window", "4"]));
    for (k, w) in ks.iter().zip(&wqt) {
        assert_eq!(k.0, w.0);
        assert_eq!(k.1 * k.1, w.1);
    }
}

#[test]
fn empirical_curve_has_one_row_per_grid_point() {
    let dir = TempDir::new().unwrap();
    let curve = path(&dir, "curve.csv");
    ok(&["filter-shape", "--test", "mmd2", "--window", "30", "--empirical", "--reps", "40", "--curve-output", s(&curve)]);
    let text = fs::read_to_string(&curve).unwrap();
    assert_eq!(text.lines().next(), Some("pi,mean,std_error,asymptote,ratio,expected"));
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn detect_uses_the_requested_threshold() {
    let dir = TempDir::new().unwrap();
    let data = path(&dir, "x.csv");
    ok(&["simulate", "--generator", "single-cp1d", "--seed", "1", "--output", s(&data)]);
    let all: Value = serde_json::from_str(&ok(&["detect", "--input", s(&data), "--test", "ks", "--window", "150"])).unwrap();
    let scores: Vec<f64> = all["change_points"].as_array().unwrap().iter().map(|c| c["score"].as_f64().unwrap()).collect();
    let top = scores.iter().cloned().fold(f64::MIN, f64::max);
    let only: Value = serde_json::from_str(&ok(&[
        "detect", "--input", s(&data), "--test", "ks", "--window", "150", "--threshold", &(top - 1e-12).to_string(),
    ]))
    .unwrap();
    assert_eq!(only["change_points"].as_array().unwrap().len(), 1);
    assert_eq!(only["change_points"][0]["score"], top);
}

#[test]
fn replay_reproduces_saved_runs() {
    let dir = TempDir::new().unwrap();
    let data = path(&dir, "x.csv");
    let record = path(&dir, "sim.json");
    ok(&["simulate", "--generator", "alternating", "--segments", "3", "--seed", "6", "--output", s(&data), "--save-config", s(&record)]);
    let first = fs::read(&data).unwrap();
    fs::remove_file(&data).unwrap();
    ok(&["replay", s(&record)]);
    assert_eq!(first, fs::read(&data).unwrap());

    let det = path(&dir, "det.json");
    let det_record = path(&dir, "det-record.json");
    ok(&["detect", "--input", s(&data), "--test", "mmd2", "--window", "60", "--unfiltered", "--delta", "30", "--output", s(&det), "--save-config", s(&det_record)]);
    let before = fs::read(&det).unwrap();
    fs::remove_file(&det).unwrap();
    ok(&["replay", s(&det_record)]);
    assert_eq!(before, fs::read(&det).unwrap());
    assert_eq!(json(&det_record)["command"], "detect");
}

#[test]
fn experiment_mode_reports_cells() {
    let out = ok(&["evaluate", "--experiment", "table3", "--window", "60", "--sequences", "2", "--projections", "8"]);
    let r: Value = serde_json::from_str(&out).unwrap();
    let cells = r["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 4);
    assert!(cells.iter().all(|c| c["epsilon"] == 60 && c["sequences"] == 2));
}
