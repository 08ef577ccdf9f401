use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_hourglass");

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

fn hourglass(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("HOURGLASS_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = hourglass(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"topology": {"kind": "torus", "nu": 1, "half_width": 5, "k_e": 9}}"#).unwrap();
    let out = hourglass(&["simulate", "-c", p(&cfg), "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(&cfg, "{ not json").unwrap();
    assert_eq!(hourglass(&["traps", "-c", p(&cfg)]).status.code(), Some(2));
}

#[test]
fn missing_file_exits_4() {
    let out = hourglass(&["simulate", "-c", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/config.json"));
}

#[test]
fn learning_constants_out_of_range_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let pats = dir.path().join("patterns.json");
    std::fs::write(&pats, "[[1,1,-1,-1],[-1,-1,1,1]]").unwrap();
    let out = hourglass(&["learn", "-p", p(&pats), "--a", "1", "--A", "0.7", "--B", "0.6", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulate_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = configs().join("blocks_p2k2.json");
    for d in [&a, &b] {
        ok(&["simulate", "-c", p(&cfg), "--horizon", "3000", "--seed", "5", "--out", p(d.path())]);
    }
    for f in ["frequencies.csv", "report.json", "pattern.json", "pattern.txt"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs between identical runs");
    }
    let csv = std::fs::read_to_string(a.path().join("frequencies.csv")).unwrap();
    assert!(csv.starts_with("# config_hash="));
    assert!(csv.lines().nth(1).unwrap() == "# seed=5");
}

#[test]
fn block_simulation_falls_into_a_trap() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["simulate", "-c", p(&configs().join("blocks_p2k2.json")), "--out", p(dir.path())]);
    let r = read_json(&dir.path().join("report.json"));
    assert_eq!(r["heuristic"]["verdict"], "transient");
    assert_eq!(r["inductive"]["verdict"], "transient");
    assert_eq!(r["inductive"]["silent_set_is_trap"], true);
    let matched = &r["matched_trap"];
    assert!(matched["index"].as_u64().unwrap() >= 1);
    assert_eq!(matched["sites"], r["heuristic"]["silent"]);
}

#[test]
fn weak_ring_keeps_every_site_active() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["simulate", "-c", p(&configs().join("ring10.json")), "--out", p(dir.path())]);
    let r = read_json(&dir.path().join("report.json"));
    assert_eq!(r["heuristic"]["verdict"], "ergodic");
    assert_eq!(r["heuristic"]["silent"].as_array().unwrap().len(), 0);
    assert_eq!(r["inductive"]["verdict"], "ergodic");
    assert!(r["matched_trap"].is_null());
}

#[test]
fn three_pairs_give_eight_patterns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p3.json");
    std::fs::write(
        &cfg,
        r#"{"topology": {"kind": "blocks", "p": 3, "k": 1, "pairing": [[1, 2], [3, 4], [5, 6]], "allow_trivial": true},
            "connections": {"kind": "blocks", "a": 1.0, "b": 0.5, "c": 2.0}}"#,
    )
    .unwrap();
    ok(&["traps", "-c", p(&cfg), "--out", p(dir.path())]);
    let t = read_json(&dir.path().join("traps.json"));
    assert_eq!(t["count"], 8);
    assert_eq!(t["brute_force"]["agrees"], true);
    assert_eq!(read_json(&dir.path().join("patterns.json")).as_array().unwrap().len(), 8);
}

#[test]
fn learned_network_stores_its_patterns() {
    let dir = tempfile::tempdir().unwrap();
    let pats = dir.path().join("patterns.json");
    // Two pairs of two-site blocks: {0,1}|{2,3} and {4,5}|{6,7}.
    let family = [[1, 1, -1, -1, 1, 1, -1, -1], [1, 1, -1, -1, -1, -1, 1, 1], [-1, -1, 1, 1, 1, 1, -1, -1], [-1, -1, 1, 1, -1, -1, 1, 1]];
    std::fs::write(&pats, serde_json::to_string(&family).unwrap()).unwrap();
    ok(&["learn", "-p", p(&pats), "--a", "1", "--A", "0.6", "--B", "0.7", "--out", p(dir.path())]);
    let report = read_json(&dir.path().join("learn_report.json"));
    assert_eq!(report["verify_storage"], true);
    assert_eq!(report["family"]["valid"], true);

    let traps_dir = dir.path().join("traps");
    ok(&["traps", "-c", p(&dir.path().join("learned_config.json")), "--out", p(&traps_dir)]);
    let mut found: Vec<Vec<i64>> = serde_json::from_value(read_json(&traps_dir.join("patterns.json"))).unwrap();
    let mut stored: Vec<Vec<i64>> = family.iter().map(|r| r.to_vec()).collect();
    found.sort();
    stored.sort();
    assert_eq!(found, stored);
}

#[test]
fn empty_sweep_grid_writes_headers_only() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("sweep.json");
    std::fs::write(
        &spec,
        r#"{"base": {"topology": {"kind": "torus", "nu": 1, "half_width": 5, "k_e": 2},
                     "connections": {"kind": "torus", "w_i": 0.3, "w_e": 0.0}},
            "w_i": [], "w_e": [0.0], "replications": 2}"#,
    )
    .unwrap();
    ok(&["sweep", "-c", p(&spec), "--out", p(dir.path())]);
    let runs = std::fs::read_to_string(dir.path().join("sweep_runs.csv")).unwrap();
    let data: Vec<&str> = runs.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data, vec!["w_I,w_E,replication,transient"]);
    let summary = read_json(&dir.path().join("sweep_summary.json"));
    assert!(summary["slope"].is_null());
}

#[test]
fn balance_reports_a_small_residual() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["balance", "-c", p(&configs().join("ring10_balance.json")), "--out", p(dir.path())]);
    let b = read_json(&dir.path().join("balance.json"));
    let residual = b["balance"]["residual"].as_f64().unwrap();
    assert!(residual.abs() < 0.02, "residual {residual}");
}

#[test]
fn oversized_trap_search_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("torus.json");
    std::fs::write(
        &cfg,
        r#"{"topology": {"kind": "torus", "nu": 2, "half_width": 3, "k_e": 2},
            "connections": {"kind": "torus", "w_i": 0.7, "w_e": 0.0}}"#,
    )
    .unwrap();
    let out = hourglass(&["traps", "-c", p(&cfg), "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
