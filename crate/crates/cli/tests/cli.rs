use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn curvreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvreg")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = curvreg(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn path_edges(n: usize) -> String {
    (1..n).map(|i| format!("{} {}\n", i - 1, i)).collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json_lines(p: &Path) -> Vec<Value> {
    fs::read_to_string(p).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn train_writes_an_embedding_of_the_right_shape() {
    let tmp = TempDir::new().unwrap();
    let edges = write(tmp.path(), "path20.edges", &path_edges(20));
    let out = tmp.path().join("run");
    ok(&["train", "--edges", s(&edges), "--method", "le", "--reg", "s", "--dim", "2", "--lambda", "0.1", "--t", "3", "--seed", "7", "--out", s(&out)]);
    let text = fs::read_to_string(out.join("embedding.txt")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("20 2"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().all(|r| r.split_whitespace().count() == 2));
    assert_eq!(fs::read_to_string(out.join("embedding.ids")).unwrap().lines().count(), 20);

    let trace = json_lines(&out.join("trace.jsonl"));
    assert_eq!(trace[0]["type"], "run_config");
    assert_eq!(trace[0]["config"]["train_config"]["dim"], 2);
    assert!(trace.iter().any(|r| r["type"] == "epoch" && r["phase"] == "phase1_omega"));
    let meta: Value = serde_json::from_str(&fs::read_to_string(out.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["run_config"]["model"]["seed"], 7);
    assert!(meta["path_cache_hash"].is_u64());
    assert_eq!(meta["graph"]["nodes"], 20);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let edges = write(tmp.path(), "g.edges", &path_edges(15));
    let out = tmp.path().join("run");
    let args = ["train", "--edges", s(&edges), "--method", "deepwalk", "--reg", "a", "--dim", "4", "--seed", "3", "--out", s(&out)];
    ok(&args);
    let first: Vec<Vec<u8>> = ["embedding.txt", "embedding.ids", "trace.jsonl", "meta.json"].iter().map(|f| fs::read(out.join(f)).unwrap()).collect();
    ok(&args);
    let second: Vec<Vec<u8>> = ["embedding.txt", "embedding.ids", "trace.jsonl", "meta.json"].iter().map(|f| fs::read(out.join(f)).unwrap()).collect();
    assert_eq!(first, second);
}

#[test]
fn full_regularizer_on_a_large_graph_points_to_sampling() {
    let tmp = TempDir::new().unwrap();
    let edges = write(tmp.path(), "big.edges", &path_edges(5000));
    let out = curvreg(&["train", "--edges", s(&edges), "--reg", "c", "--method", "le", "--out", s(&tmp.path().join("o"))]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--reg s"), "{err}");
}

#[test]
fn errors_exit_nonzero() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("nope.edges");
    let out = curvreg(&["train", "--edges", s(&missing), "--out", s(tmp.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.edges"));
    let bad = write(tmp.path(), "bad.edges", "1 2 3\n");
    assert!(!curvreg(&["train", "--edges", s(&bad), "--out", s(tmp.path())]).status.success());
}

#[test]
fn node_classification_on_one_hot_embedding() {
    let tmp = TempDir::new().unwrap();
    let n = 30;
    let edges = write(tmp.path(), "g.edges", &path_edges(n));
    let labels = write(tmp.path(), "g.labels", &(0..n).map(|v| format!("{v} c{}\n", v % 3)).collect::<String>());
    let mut emb = format!("{n} 3\n");
    for v in 0..n {
        let row: Vec<&str> = (0..3).map(|c| if v % 3 == c { "1" } else { "0" }).collect();
        emb.push_str(&row.join(" "));
        emb.push('\n');
    }
    let emb_path = write(tmp.path(), "onehot.txt", &emb);
    write(tmp.path(), "onehot.ids", &(0..n).map(|v| format!("{v}\n")).collect::<String>());
    let out = tmp.path().join("nc");
    ok(&["eval-nc", "--edges", s(&edges), "--labels", s(&labels), "--embedding", s(&emb_path), "--out", s(&out)]);
    let rec = &json_lines(&out.join("report.jsonl"))[0];
    assert_eq!(rec["report"]["value"], 1.0);
    assert_eq!(rec["report"]["splits"].as_array().unwrap().len(), 10);
    assert_eq!(rec["report"]["std_dev"], 0.0);
    let csv = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains("node_classification,accuracy,1,0,10"), "{csv}");
}

#[test]
fn link_prediction_echoes_the_removal_fraction() {
    let tmp = TempDir::new().unwrap();
    let edges = write(tmp.path(), "g.edges", &format!("{}0 29\n0 15\n5 20\n", path_edges(30)));
    let out = tmp.path().join("lp");
    ok(&["eval-lp", "--edges", s(&edges), "--method", "mf", "--dim", "4", "--removal", "0.4", "--out", s(&out)]);
    let rec = &json_lines(&out.join("report.jsonl"))[0];
    assert_eq!(rec["options"]["removal_frac"], 0.4);
    assert_eq!(rec["report"]["metric"], "map");
    let v = rec["report"]["value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&v));
    assert_eq!(rec["report"]["test_pairs"], serde_json::json!([12, 12]));
}

#[test]
fn distortion_of_a_straight_line_is_one() {
    let tmp = TempDir::new().unwrap();
    let edges = write(tmp.path(), "g.edges", &path_edges(10));
    let emb = write(tmp.path(), "line.txt", &format!("10 2\n{}", (0..10).map(|i| format!("{} {}\n", i, 2 * i)).collect::<String>()));
    let report: Value = serde_json::from_str(&ok(&["distortion", "--edges", s(&edges), "--embedding", s(&emb)])).unwrap();
    assert!((report["distortion"]["rho"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(report["distortion"]["mode"], "all");
    assert_eq!(report["condition_pass_fraction"], 1.0);
}

#[test]
fn distortion_of_the_right_angle_matches_the_hand_value() {
    let tmp = TempDir::new().unwrap();
    let edges = write(tmp.path(), "g.edges", "0 1\n1 2\n");
    let emb = write(tmp.path(), "corner.txt", "3 2\n0 0\n1 0\n1 1\n");
    let report: Value = serde_json::from_str(&ok(&["distortion", "--edges", s(&edges), "--embedding", s(&emb)])).unwrap();
    let expected = (4.0 + 2.0 * 2f64.sqrt()) / 6.0;
    assert!((report["distortion"]["rho"].as_f64().unwrap() - expected).abs() < 1e-12);
}

#[test]
fn distortion_samples_pairs_on_large_graphs() {
    let tmp = TempDir::new().unwrap();
    let n = 3100;
    let edges = write(tmp.path(), "g.edges", &path_edges(n));
    let emb = write(tmp.path(), "line.txt", &format!("{n} 2\n{}", (0..n).map(|i| format!("{i} 0\n")).collect::<String>()));
    let report: Value = serde_json::from_str(&ok(&["distortion", "--edges", s(&edges), "--embedding", s(&emb), "--sample-size", "8"])).unwrap();
    assert_eq!(report["distortion"]["mode"], "explicit");
    assert_eq!(report["pair_sampling"]["pairs"], 3100 * 100);
}

#[test]
fn case_study_reports_both_variants() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("cs");
    ok(&["case-study", "--graph", "two-cluster", "--nodes", "40", "--pairs", "120", "--method", "mf", "--dim", "8", "--seed", "1", "--out", s(&out)]);
    let recs = json_lines(&out.join("case_study.jsonl"));
    let rho = |v: &str| recs.iter().find(|r| r["type"] == "rho" && r["variant"] == v).unwrap()["rho"].as_f64().unwrap();
    assert!(rho("regularized") < rho("baseline"), "{} vs {}", rho("regularized"), rho("baseline"));
    let csv = fs::read_to_string(out.join("scatter.csv")).unwrap();
    for variant in ["baseline", "regularized"] {
        assert_eq!(csv.lines().filter(|l| l.contains(&format!(",{variant},"))).count(), 120);
    }
}

#[test]
fn path_cache_is_reused() {
    let tmp = TempDir::new().unwrap();
    let edges = write(tmp.path(), "g.edges", &format!("{}0 9\n3 7\n", path_edges(12)));
    let cache = tmp.path().join("paths.bin");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let base = ["train", "--edges", s(&edges), "--method", "mf", "--dim", "4", "--path-cache", s(&cache)];
    ok(&[&base[..], &["--out", s(&a)]].concat());
    assert!(cache.exists());
    ok(&[&base[..], &["--out", s(&b)]].concat());
    assert_eq!(fs::read(a.join("embedding.txt")).unwrap(), fs::read(b.join("embedding.txt")).unwrap());
}
