use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const DISJOINT: &str = r#"{
    "budget": 1,
    "components": ["e1", "e2"],
    "monitoring_sets": {"v1": ["e1"], "v2": ["e2"]},
    "nodes": ["v1", "v2"],
    "weights": {"e1": 1.0, "e2": 0.5}
}"#;

// E_v1 = {e1, e2}, E_v2 = {e2, e3}; one cheap component at each end.
const OVERLAP: &str = r#"{
    "budget": 1,
    "components": ["e1", "e2", "e3"],
    "monitoring_sets": {"v1": ["e1", "e2"], "v2": ["e2", "e3"]},
    "nodes": ["v1", "v2"],
    "weights": {"e1": 0.2, "e2": 0.2, "e3": 1.0}
}"#;

// Two nodes are needed to watch e1 and e4; everything else is at most 0.4.
const FOCUSED: &str = r#"{
    "budget": 1,
    "components": ["e1", "e2", "e3", "e4", "e5", "e6", "e7"],
    "monitoring_sets": {
        "v1": ["e1", "e2"],
        "v2": ["e2", "e3"],
        "v3": ["e3", "e4", "e5", "e6", "e7"],
        "v4": ["e5"]
    },
    "nodes": ["v1", "v2", "v3", "v4"],
    "weights": {"e1": 1, "e2": 0.4, "e3": 0.4, "e4": 1, "e5": 0.3, "e6": 0.2, "e7": 0.4}
}"#;

fn sensorgame(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sensorgame"))
        .args(args)
        .env_remove("SENSORGAME_NODE_LIMIT")
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    reader.records().map(|r| r.unwrap()).collect()
}

fn stdout_rows(out: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let body = reader.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    (header, body)
}

#[test]
fn exact_on_a_disjoint_instance_matches_the_closed_form() {
    let dir = TempDir::new().unwrap();
    let doc = write(&dir, "pair.json", DISJOINT);
    let out = sensorgame(&["solve-exact", &doc]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, body) = stdout_rows(&out);
    assert_eq!(header, ["instance_id", "n", "m", "b1", "solver", "value", "eps", "iters", "seconds"]);
    assert_eq!(body.len(), 1);
    assert_eq!(&body[0][..5], ["pair", "2", "2", "1", "exact"]);
    let value: f64 = body[0][5].parse().unwrap();
    assert!((value - 1.0 / 3.0).abs() < 1e-9);

    let out = sensorgame(&["solve-disjoint", &doc]);
    let (_, body) = stdout_rows(&out);
    let closed: f64 = body[0][5].parse().unwrap();
    assert!((closed - value).abs() < 1e-9);
}

#[test]
fn cover_row_carries_the_certificate() {
    let dir = TempDir::new().unwrap();
    let doc = write(&dir, "overlap.json", OVERLAP);
    let out = sensorgame(&["solve-cover", &doc]);
    assert!(out.status.success());
    let (_, body) = stdout_rows(&out);
    let value: f64 = body[0][5].parse().unwrap();
    let eps: f64 = body[0][6].parse().unwrap();
    // two-node cover, packing {e1, e3}, weights in [0.2, 1]
    let eps1 = 1.0 * 0.2 * (2.0 - 2.0) / (2.0 * 2.0);
    let eps2 = (1.0 - 0.2) * (2.0 - 1.0) / 2.0;
    assert!((eps - (eps1 + eps2)).abs() < 1e-12);
    assert!((value - 0.5).abs() < 1e-12);
}

#[test]
fn single_sensor_and_focused_solvers_run() {
    let dir = TempDir::new().unwrap();
    let doc = write(&dir, "overlap.json", OVERLAP);
    let out = sensorgame(&["solve-single", &doc]);
    assert!(out.status.success());
    let (_, body) = stdout_rows(&out);
    assert_eq!(body[0][4], "single");

    // a one-node focus class leaves too small a criticality gap
    let out = sensorgame(&["solve-focused", &doc, "--focus", "e3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not apply"));

    let focused = write(&dir, "focused.json", FOCUSED);
    let out = sensorgame(&["solve-focused", &focused, "--focus", "e1,e4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, body) = stdout_rows(&out);
    let eps: f64 = body[0][6].parse().unwrap();
    assert!(eps.abs() < 1e-12, "two-node focus with a two-component packing, got {eps}");
    let value: f64 = body[0][5].parse().unwrap();
    assert!((value - 0.5).abs() < 1e-12);
    let out = sensorgame(&["solve-focused", &focused]);
    assert!(out.status.success());

    let out = sensorgame(&["solve-focused", &doc, "--focus", "nope"]);
    assert!(!out.status.success());
}

#[test]
fn generator_is_seed_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let out = sensorgame(&["gen", "--kind", "random-dag", "--n", "40", "--seed", "9", "-o", path.to_str().unwrap()]);
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let out = sensorgame(&["gen", "--kind", "random-dag", "--n", "40", "--seed", "10"]);
    assert_ne!(out.stdout, std::fs::read(&a).unwrap());
}

#[test]
fn colgen_trace_on_a_flow_network_is_non_increasing() {
    let dir = TempDir::new().unwrap();
    let doc = dir.path().join("dag.json");
    let trace = dir.path().join("trace.csv");
    let out = sensorgame(&["gen", "--kind", "random-dag", "--n", "200", "--seed", "3", "-o", doc.to_str().unwrap()]);
    assert!(out.status.success());
    let out = sensorgame(&[
        "solve-colgen",
        doc.to_str().unwrap(),
        "--budget",
        "2",
        "--max-iters",
        "500",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_path(&trace).unwrap();
    assert_eq!(
        reader.headers().unwrap(),
        vec!["iteration", "master_value", "reduced_cost", "entering", "seconds", "d"]
    );
    let records = rows(&trace);
    assert!(records.len() > 1);
    let values: Vec<f64> = records.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{values:?}");
    let d: Vec<f64> = records.iter().map(|r| r[5].parse().unwrap()).collect();
    assert!(d.iter().all(|&x| x >= 1.0 - 1e-9));
    assert!((d.last().unwrap() - 1.0).abs() < 1e-6);
    assert!(records.last().unwrap()[3].is_empty());
}

#[test]
fn oracle_value_fills_the_ratio_column() {
    let dir = TempDir::new().unwrap();
    let doc = write(&dir, "overlap.json", OVERLAP);
    let trace = dir.path().join("t.csv");
    let out = sensorgame(&["solve-exact", &doc]);
    let (_, body) = stdout_rows(&out);
    let value = body[0][5].clone();
    let out = sensorgame(&["solve-colgen", &doc, "--oracle-value", &value, "--trace", trace.to_str().unwrap()]);
    assert!(out.status.success());
    for r in rows(&trace) {
        let d: f64 = r[5].parse().unwrap();
        assert!(d >= 1.0 - 1e-9);
    }
}

#[test]
fn records_append_under_a_single_header() {
    let dir = TempDir::new().unwrap();
    let doc = write(&dir, "pair.json", DISJOINT);
    let csv_path = dir.path().join("runs.csv");
    let csv_arg = csv_path.to_str().unwrap();
    for solver in ["solve-exact", "solve-disjoint", "solve-cover", "solve-colgen"] {
        let out = sensorgame(&[solver, &doc, "--out", csv_arg]);
        assert!(out.status.success(), "{solver}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty());
    }
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(text.lines().next().unwrap(), "instance_id,n,m,b1,solver,value,eps,iters,seconds");
    assert_eq!(text.lines().filter(|l| l.starts_with("instance_id")).count(), 1);
    let solvers: Vec<String> = rows(&csv_path).iter().map(|r| r[4].to_string()).collect();
    assert_eq!(solvers, ["exact", "disjoint", "cover", "colgen"]);
}

#[test]
fn resource_errors_exit_nonzero() {
    let dir = TempDir::new().unwrap();
    let doc = dir.path().join("big.json");
    sensorgame(&["gen", "--kind", "random-dag", "--n", "200", "--seed", "1", "-o", doc.to_str().unwrap()]);
    let out = sensorgame(&["solve-exact", doc.to_str().unwrap(), "--budget", "5"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("limit"));

    let doc = dir.path().join("sparse.json");
    sensorgame(&[
        "gen", "--n", "40", "--m", "60", "--seed", "1", "--density", "0.1", "-o", doc.to_str().unwrap(),
    ]);
    let out = Command::new(env!("CARGO_BIN_EXE_sensorgame"))
        .args(["solve-cover", doc.to_str().unwrap(), "--budget", "2"])
        .env("SENSORGAME_NODE_LIMIT", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn invalid_documents_are_rejected() {
    let dir = TempDir::new().unwrap();
    let doc = write(&dir, "bad.json", &DISJOINT.replace("0.5", "0"));
    let out = sensorgame(&["solve-exact", &doc]);
    assert_eq!(out.status.code(), Some(1));
    let out = sensorgame(&["solve-disjoint", &write(&dir, "o.json", OVERLAP)]);
    assert!(!out.status.success());
}

#[test]
fn bench_writes_records_and_traces() {
    let dir = TempDir::new().unwrap();
    let csv_path = dir.path().join("bench.csv");
    let traces = dir.path().join("traces");
    let out = sensorgame(&[
        "bench",
        "--kind",
        "random-bipartite",
        "--n",
        "8",
        "--m",
        "10",
        "--runs",
        "2",
        "--budgets",
        "1,2",
        "--solvers",
        "exact,colgen",
        "--out",
        csv_path.to_str().unwrap(),
        "--trace-dir",
        traces.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let records = rows(&csv_path);
    assert_eq!(records.len(), 8);
    for pair in records.chunks(2) {
        let exact: f64 = pair[0][5].parse().unwrap();
        let colgen: f64 = pair[1][5].parse().unwrap();
        assert!((exact - colgen).abs() < 1e-6);
    }
    assert_eq!(std::fs::read_dir(&traces).unwrap().count(), 4);
}
