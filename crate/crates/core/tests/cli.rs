mod common;

use std::path::Path;
use std::process::{Command, Output};

use chillax::data::{read_examples, write_jsonl};
use chillax::experiment::DegradeManifest;
use chillax::synth::{balanced_tree, chain};
use chillax::{depth_pmf, DepthModel, LabeledExample};
use common::{example, tv};
use tempfile::TempDir;

fn chillax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chillax"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = chillax(args);
    assert!(
        out.status.success(),
        "chillax {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_leaf_data(dir: &Path, tree: &chillax::Hierarchy, n: usize) -> (String, String) {
    let h_path = dir.join("h.tsv");
    std::fs::write(&h_path, tree.to_edge_list()).unwrap();
    let leaves = tree.leaves();
    let ds: Vec<LabeledExample> = (0..n)
        .map(|i| {
            example(
                format!("e{i}"),
                tree.name(leaves[i % leaves.len()]),
                vec![i as f64],
            )
        })
        .collect();
    let d_path = dir.join("train.jsonl");
    write_jsonl(&d_path, &ds).unwrap();
    (p(&h_path).to_string(), p(&d_path).to_string())
}

fn manifest(out: &Path) -> DegradeManifest {
    let text = std::fs::read_to_string(chillax::experiment::sidecar(out, "manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn degrade_benchmark_keeps_labels() {
    let dir = TempDir::new().unwrap();
    let (h, train) = write_leaf_data(dir.path(), &balanced_tree(&[2, 2]).unwrap(), 40);
    let out = dir.path().join("out.jsonl");
    ok(&[
        "degrade",
        "--hierarchy",
        &h,
        "--train",
        &train,
        "--model",
        "benchmark",
        "--out",
        p(&out),
    ]);
    assert_eq!(read_examples(&out).unwrap(), read_examples(&train).unwrap());
    let m = manifest(&out);
    assert_eq!((m.examples, m.confused, m.imprecise), (40, 0, 0));
    let depths = std::fs::read_to_string(chillax::experiment::sidecar(&out, "depths.csv")).unwrap();
    assert_eq!(depths, "depth,count\n0,0\n1,0\n2,40\n");
}

#[test]
fn degrade_geometric_depths_follow_the_pmf() {
    let dir = TempDir::new().unwrap();
    let h = chain(6);
    let n = 100_000;
    let (h_path, train) = write_leaf_data(dir.path(), &h, n);
    let out = dir.path().join("geo.jsonl");
    ok(&[
        "degrade",
        "--hierarchy",
        &h_path,
        "--train",
        &train,
        "--model",
        "geometric",
        "--q",
        "0.5",
        "--seed",
        "3",
        "--out",
        p(&out),
    ]);
    let m = manifest(&out);
    let hist: Vec<f64> = m
        .depth_counts
        .iter()
        .map(|&c| c as f64 / n as f64)
        .collect();
    let pmf = depth_pmf(&DepthModel::Geometric { q: 0.5, shift: 0 }, 6).unwrap();
    assert!(tv(&hist, &pmf) <= 0.01);
}

#[test]
fn degrade_inaccuracy_count_is_exact() {
    let dir = TempDir::new().unwrap();
    let (h, train) = write_leaf_data(dir.path(), &balanced_tree(&[3, 3]).unwrap(), 1234);
    let out = dir.path().join("wrong.jsonl");
    ok(&[
        "degrade",
        "--hierarchy",
        &h,
        "--train",
        &train,
        "--model",
        "benchmark",
        "--inaccuracy",
        "0.1",
        "--out",
        p(&out),
    ]);
    let m = manifest(&out);
    assert_eq!(m.confused, 123);
    let before = read_examples(&train).unwrap();
    let after = read_examples(&out).unwrap();
    assert_eq!(
        before
            .iter()
            .zip(&after)
            .filter(|(a, b)| a.label != b.label)
            .count(),
        123
    );
}

fn experiment(out: &Path, extra: &[&str]) -> String {
    let mut args = vec![
        "experiment",
        "--steps",
        "200",
        "--t0",
        "200",
        "--seeds",
        "0,1,2",
        "--out",
        p(out),
    ];
    args.extend_from_slice(extra);
    ok(&args)
}

#[test]
fn experiment_rows_and_determinism() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let extra = [
        "--method",
        "chillax,leaves-only",
        "--model",
        "poisson",
        "--lambda",
        "1",
        "--ks",
        "2",
    ];
    let first = experiment(&a, &extra);
    let second = experiment(&b, &extra);
    assert_eq!(first, second);
    let file = std::fs::read(a.join("results.csv")).unwrap();
    assert_eq!(file, std::fs::read(b.join("results.csv")).unwrap());
    assert_eq!(file, first.as_bytes());

    let lines: Vec<&str> = first.lines().collect();
    assert_eq!(
        lines[0],
        "method,seed,top1,top2,mean_lca_depth,n_mispredicted"
    );
    assert_eq!(lines.len(), 1 + 6 + 2);
    assert_eq!(
        lines.iter().filter(|l| l.contains(",aggregate,")).count(),
        2
    );
    assert!(lines[1].starts_with("chillax,0,"));
    assert!(lines[4].starts_with("leaves-only,0,"));
}

#[test]
fn baselines_match_under_benchmark() {
    let dir = TempDir::new().unwrap();
    let csv = experiment(
        &dir.path().join("x"),
        &["--method", "leaves-only,random-leaf"],
    );
    let aggregates: Vec<&str> = csv
        .lines()
        .filter(|l| l.contains(",aggregate,"))
        .map(|l| l.split_once(",aggregate,").unwrap().1)
        .collect();
    assert_eq!(aggregates.len(), 2);
    assert_eq!(aggregates[0], aggregates[1]);
}

#[test]
fn train_then_eval() {
    let dir = TempDir::new().unwrap();
    ok(&[
        "synth",
        "--branching",
        "2,2",
        "--train-per-leaf",
        "30",
        "--val-per-leaf",
        "10",
        "--out",
        p(dir.path()),
    ]);
    let h = dir.path().join("hierarchy.tsv");
    let ckpt = dir.path().join("model.json");
    ok(&[
        "train",
        "--hierarchy",
        p(&h),
        "--train",
        p(&dir.path().join("train.jsonl")),
        "--steps",
        "100",
        "--t0",
        "100",
        "--out",
        p(&ckpt),
    ]);
    let report = ok(&[
        "eval",
        "--hierarchy",
        p(&h),
        "--val",
        p(&dir.path().join("val.jsonl")),
        "--checkpoint",
        p(&ckpt),
        "--ks",
        "2",
    ]);
    let metrics: Vec<&str> = report
        .lines()
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(
        metrics,
        [
            "metric",
            "top1",
            "top2",
            "mean_mispred_lca_depth",
            "n_examples",
            "n_mispredicted"
        ]
    );
    assert!(report.contains("n_examples,40\n"));

    // a checkpoint is bound to its hierarchy
    let other = dir.path().join("other.tsv");
    std::fs::write(&other, "x\tR\ny\tR\n").unwrap();
    let out = chillax(&[
        "eval",
        "--hierarchy",
        p(&other),
        "--val",
        p(&dir.path().join("val.jsonl")),
        "--checkpoint",
        p(&ckpt),
    ]);
    assert!(!out.status.success());
}

#[test]
fn textdepth_histograms() {
    let dir = TempDir::new().unwrap();
    let h_path = dir.path().join("h.tsv");
    std::fs::write(&h_path, chain(6).to_edge_list()).unwrap();
    let lex = dir.path().join("lex.tsv");
    std::fs::write(&lex, "bird\td1\nsparrow\td5\n").unwrap();

    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let out = dir.path().join("empty_out");
    ok(&[
        "textdepth",
        "--hierarchy",
        p(&h_path),
        "--lexicon",
        p(&lex),
        "--records",
        p(&empty),
        "--out",
        p(&out),
    ]);
    assert_eq!(
        std::fs::read_to_string(out.join("histogram.csv")).unwrap(),
        "field,depth,count\n"
    );

    let records = dir.path().join("records.jsonl");
    std::fs::write(
        &records,
        r#"{"id":"r1","fields":{"caption":"Two sparrows and a bird"}}"#.to_string() + "\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    ok(&[
        "textdepth",
        "--hierarchy",
        p(&h_path),
        "--lexicon",
        p(&lex),
        "--records",
        p(&records),
        "--out",
        p(&out),
    ]);
    let text = std::fs::read_to_string(out.join("histogram_caption.csv")).unwrap();
    assert!(text.contains("caption,5,1\n"));
    assert_eq!(text.lines().filter(|l| l.ends_with(",1")).count(), 1);
}

#[test]
fn schedule_dump_prints_every_step() {
    let text = ok(&[
        "schedule-dump",
        "--preset",
        "nabirds",
        "--steps-per-epoch",
        "2",
    ]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "step,lr");
    assert_eq!(lines.len(), 1 + 162);
    assert_eq!(lines[1], "0,1e-2");
    assert_eq!(lines[3], "2,3e-3");
}

#[test]
fn errors_are_json_lines() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("cyclic.tsv");
    std::fs::write(&bad, "A\tB\nB\tA\n").unwrap();
    let out = chillax(&[
        "degrade",
        "--hierarchy",
        p(&bad),
        "--train",
        p(&bad),
        "--out",
        p(&dir.path().join("o.jsonl")),
    ]);
    assert!(!out.status.success());
    let line: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(line["error"], "CycleDetected");
    assert!(line["message"].is_string());

    let missing = chillax(&[
        "degrade",
        "--hierarchy",
        "/nonexistent/h.tsv",
        "--train",
        "x",
        "--out",
        "y",
    ]);
    assert!(!missing.status.success());
    let line: serde_json::Value = serde_json::from_slice(&missing.stderr).unwrap();
    assert_eq!(line["error"], "IoError");
}
