use std::path::Path;
use std::process::{Command, Output};

fn specround(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specround"))
        .args(args)
        .env("SPECROUND_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Vec<u8> {
    let out = specround(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gen_then_cluster_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("pts.csv");
    ok(&[
        "gen",
        "--preset",
        "ideal-a",
        "--seed",
        "3",
        "--out",
        p(&pts),
    ]);
    let a = ok(&["cluster", "--points", p(&pts), "--seed", "1"]);
    let b = ok(&["cluster", "--points", p(&pts), "--seed", "1"]);
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["k"], 4);
    assert_eq!(v["metrics"]["rand_index"], 1.0);
    assert_eq!(v["assignment"].as_array().unwrap().len(), 390);
    assert_eq!(a.iter().filter(|&&c| c == b'\n').count(), 1);
}

#[test]
fn record_replays() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("pts.csv");
    let rec = dir.path().join("run.json");
    let res = dir.path().join("res.json");
    ok(&[
        "gen",
        "--preset",
        "ideal-c",
        "--seed",
        "2",
        "--out",
        p(&pts),
    ]);
    ok(&[
        "cluster",
        "--points",
        p(&pts),
        "--similarity-fn",
        "knn:3",
        "--record",
        p(&rec),
        "--out",
        p(&res),
    ]);
    let record: serde_json::Value = serde_json::from_slice(&std::fs::read(&rec).unwrap()).unwrap();
    assert_eq!(record["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(record["params"]["similarity_fn"], "knn:3");
    ok(&["replay", "--record", p(&rec)]);

    let eval = ok(&["eval", "--pred", p(&res), "--truth", p(&pts)]);
    let m: serde_json::Value = serde_json::from_slice(&eval).unwrap();
    assert_eq!(m["vi"], 0.0);

    std::fs::write(&pts, "0,0\n1,1\n").unwrap();
    let out = specround(&["replay", "--record", p(&rec)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(specround(&["cluster"]).status.code(), Some(2));
    assert_eq!(
        specround(&["cluster", "--preset", "ideal-a", "--points", "x.csv"])
            .status
            .code(),
        Some(2)
    );
    let bad_delta = specround(&["cluster", "--preset", "ideal-a", "--delta", "1.0"]);
    assert_eq!(bad_delta.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_delta.stderr).contains("delta"));
    assert_eq!(
        specround(&["cluster", "--preset", "ideal-a", "--method", "kmeans"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        specround(&["cluster", "--points", "/nonexistent/p.csv"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn empty_sweep_grid_gives_header_only() {
    let out = ok(&[
        "sweep", "--preset", "ideal-a", "--axis", "delta", "--grid", "",
    ]);
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.trim(), "axis,value,rand_index,vi,q,k");
}

#[test]
fn sweep_over_delta() {
    let out = ok(&[
        "sweep", "--preset", "ideal-b", "--axis", "delta", "--grid", "0.05,0.2",
    ]);
    let text = String::from_utf8(out).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(
        rows.iter().all(|r| r.split(',').nth(2) == Some("1")),
        "{text}"
    );
}

#[test]
fn kmeans_on_similarity_file() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("s.csv");
    let mut rows = Vec::new();
    for i in 0..8 {
        let row: Vec<&str> = (0..8)
            .map(|j| {
                if i != j && (i < 4) == (j < 4) {
                    "1"
                } else {
                    "0"
                }
            })
            .collect();
        rows.push(row.join(","));
    }
    std::fs::write(&sim, rows.join("\n")).unwrap();
    let out = ok(&[
        "cluster",
        "--similarity",
        p(&sim),
        "--method",
        "kmeans",
        "--k",
        "2",
        "--K",
        "2",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(v["q"], serde_json::Value::Null);
    assert_eq!(v["assignment"], serde_json::json!([0, 0, 0, 0, 1, 1, 1, 1]));
}

#[test]
fn svg_outputs_are_written() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "cluster",
        "--preset",
        "ideal-a",
        "--K",
        "12",
        "--svg",
        p(dir.path()),
    ]);
    let names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(
        names.iter().filter(|n| n.ends_with(".svg")).count() >= 3,
        "{names:?}"
    );
}
