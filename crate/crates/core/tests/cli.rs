use std::path::Path;
use std::process::{Command, Output};

use docclust::synth::{generate_vectors, BlobSpec};
use docclust::{write_dataset, Dataset};
use serde_json::Value;

fn docclust(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_docclust"))
        .args(args)
        .current_dir(cwd)
        .env_remove("DOCCLUST_THREADS")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn synth_then_kmeans_recovers_blobs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(docclust(&["--seed", "5", "synth", "--out", "blobs"], d).status.success());
    let out = docclust(&["cluster", "--input", "blobs", "--alg", "kmeans", "--k", "4", "--out", "p.json"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&d.join("p.json.report.json"));
    assert_eq!(report["ari"], 1.0);
    assert_eq!(report["pc"], 4);
    let manifest = json(&d.join("p.json.run.json"));
    assert_eq!(manifest["command"]["cluster"]["algo"]["max_iter"], 300);
    assert_eq!(manifest["resolved"]["config"]["k"], 4);
}

#[test]
fn unknown_flag_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = docclust(&["cluster", "--no-such-flag"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(docclust(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn evaluate_without_labels_leaves_external_metrics_null() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (x, _) = generate_vectors(&BlobSpec::new(3, 20, 8, 15.0, 2)).unwrap();
    write_dataset(&Dataset::from_vectors(&x, None).unwrap(), &d.join("unlabelled")).unwrap();
    let ok = |args: &[&str]| {
        let out = docclust(args, d);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    ok(&["cluster", "--input", "unlabelled", "--alg", "kmeans", "--k", "3", "--out", "p.json"]);
    ok(&["evaluate", "--input", "unlabelled", "--partition", "p.json", "--out", "e.json"]);
    let report = json(&d.join("e.json"));
    for key in ["ari", "nmi", "hs", "cs"] {
        assert!(report[key].is_null(), "{key} should be null");
    }
    assert!(report["ss"].as_f64().unwrap() > 0.5);
}

#[test]
fn missing_input_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = docclust(&["cluster", "--input", "absent", "--alg", "kmeans", "--k", "2", "--out", "p.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_algorithm_parameter_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(docclust(&["synth", "--out", "blobs"], d).status.success());
    let out = docclust(&["cluster", "--input", "blobs", "--alg", "dbscan", "--out", "p.json"], d);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn identical_runs_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(docclust(&["--seed", "9", "synth", "--noise-frac", "0.1", "--out", "blobs"], d).status.success());
    for name in ["a.json", "b.json"] {
        let out = docclust(&["--seed", "9", "tune", "--input", "blobs", "--alg", "hdbscan", "--out", name], d);
        assert!(out.status.success());
    }
    let a = std::fs::read(d.join("a.json")).unwrap();
    let b = std::fs::read(d.join("b.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn project_pages_then_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ok = |args: &[&str]| {
        let out = docclust(args, d);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    };
    ok(&["synth", "--dim", "16", "--tokens", "4", "--text-rows", "2", "--out", "tok"]);
    ok(&["project", "--input", "tok", "--strategy", "hybrid", "--out", "hyb"]);
    let manifest = json(&d.join("hyb/manifest.json"));
    assert_eq!(manifest["dim"], 18);
    ok(&["project", "--input", "tok", "--strategy", "mean", "--pca-dim", "5", "--out", "pca"]);
    assert_eq!(json(&d.join("pca/manifest.json"))["dim"], 5);
    ok(&["aggregate-pages", "--input", "pca", "--out", "docs"]);
    ok(&["--threads", "2", "cluster", "--input", "docs", "--alg", "kmeans", "--oracle-k", "4", "--out", "p.json", "--csv", "t.csv"]);
    let csv = std::fs::read_to_string(d.join("t.csv")).unwrap();
    assert!(csv.starts_with("model,algorithm,ARI,NMI,HS,CS,SS,PC,%Noise\n"));
}

#[test]
fn consolidate_and_align_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ok = |args: &[&str]| {
        let out = docclust(args, d);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    };
    ok(&["--seed", "11", "synth", "--out", "blobs"]);
    ok(&["--seed", "11", "cluster", "--input", "blobs", "--alg", "kmeans", "--k", "8", "--out", "over.json"]);
    ok(&["--seed", "11", "consolidate", "--input", "blobs", "--partition", "over.json", "--method", "agglomerate", "--out", "c.json"]);
    let part = json(&d.join("c.json"));
    assert_eq!(part["n_clusters"], 4);

    let (x, _) = generate_vectors(&BlobSpec::new(2, 30, 4, 6.0, 1)).unwrap();
    let mut ds = Dataset::from_vectors(&x, None).unwrap();
    for (i, item) in ds.items.iter_mut().enumerate() {
        item.language = Some(if i % 2 == 0 { "en" } else { "de" }.into());
    }
    write_dataset(&ds, &d.join("multi")).unwrap();
    ok(&["align", "--input", "multi", "--reference", "en", "--out", "aligned", "--stats-out", "stats.json"]);
    assert_eq!(json(&d.join("stats.json")).as_array().unwrap().len(), 2);
    let bad = docclust(&["align", "--input", "multi", "--reference", "fr", "--out", "x"], d);
    assert_eq!(bad.status.code(), Some(1));
}
