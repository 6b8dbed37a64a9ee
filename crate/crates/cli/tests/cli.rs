use std::path::Path;
use std::process::{Command, Output};

fn secnet(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_secnet"))
        .current_dir(dir)
        .env_remove("SECNET_WORKERS")
        .args(args)
        .output()
        .expect("run secnet")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = secnet(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn graph(dir: &Path) {
    ok(dir, &["generate", "--kind", "er", "--n", "8", "--edges", "12", "--seed", "7", "--out", "g"]);
}

#[test]
fn generate_writes_graph_metrics_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["generate", "--kind", "pa", "--n", "50", "--edges", "263", "--power", "1", "--seed", "3", "--out", "pa"]);
    let g = secnet::Graph::from_json(&read(&d.join("pa"), "graph.json")).unwrap();
    assert_eq!((g.n(), g.n_edges(), g.component_count()), (50, 263, 1));
    let m: serde_json::Value = serde_json::from_str(&read(&d.join("pa"), "metrics.json")).unwrap();
    assert_eq!(m["n_edges"], 263);
    let manifest: serde_json::Value = serde_json::from_str(&read(&d.join("pa"), "manifest.json")).unwrap();
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["command"], "generate");

    ok(d, &["generate", "--kind", "lat", "--n", "10", "--density", "0.5", "--format", "edgelist", "--out", "lat"]);
    let g = secnet::Graph::from_edge_list(&read(&d.join("lat"), "graph.txt"), Some(10)).unwrap();
    assert_eq!(g.n_edges(), 23);
}

#[test]
fn missing_seed_is_drawn_and_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["generate", "--kind", "er", "--n", "12", "--edges", "20", "--out", "a"]);
    let m: serde_json::Value = serde_json::from_str(&read(&d.join("a"), "manifest.json")).unwrap();
    let seed = m["seed"].as_u64().expect("seed recorded");
    ok(d, &["generate", "--kind", "er", "--n", "12", "--edges", "20", "--seed", &seed.to_string(), "--out", "b"]);
    assert_eq!(read(&d.join("a"), "graph.json"), read(&d.join("b"), "graph.json"));
}

#[test]
fn distinct_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    graph(d);
    let code = |args: &[&str]| secnet(d, args).status.code().unwrap();
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["exact", "--graph", "absent.json", "--e", "0.1", "--c", "0.1"]), 3);
    assert_eq!(code(&["generate", "--kind", "lat", "--n", "5", "--edges", "3"]), 4);
    assert_eq!(code(&["exact", "--graph", "g/graph.json", "--e", "1.5", "--c", "0.1"]), 4);
    assert_eq!(code(&["rare", "--graph", "g/graph.json", "--e", "0.1", "--c", "0.1"]), 2, "--method is required");
    let capped = [
        "rare", "--graph", "g/graph.json", "--e", "0.05", "--c", "0.2", "--gens", "50", "--method", "split",
        "--successes", "20", "--work-cap", "20", "--seed", "1", "--out", "x",
    ];
    assert_eq!(code(&capped), 5);
    std::fs::write(d.join("blocker"), "").unwrap();
    assert_eq!(code(&["generate", "--kind", "er", "--n", "6", "--edges", "7", "--out", "blocker/sub"]), 6);
}

#[test]
fn exact_and_meanfield_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    graph(d);
    ok(d, &["exact", "--graph", "g/graph.json", "--e", "0.25", "--c", "0.05", "--gens", "100", "--qsd", "--out", "ex"]);
    let horizon = read(&d.join("ex"), "horizon.csv");
    assert!(horizon.starts_with("t,p_extinct,p_persist,mean_occ,cond_mean_occ\n0,0,1,8,8\n"));
    assert_eq!(horizon.lines().count(), 102);
    assert!(!horizon.contains('\r'));
    assert!(read(&d.join("ex"), "qsd.csv").lines().count() == 256);

    ok(d, &["meanfield", "--graph", "g/graph.json", "--e", "0", "--c", "0.1", "--gens", "10", "--out", "mf"]);
    let p: Vec<String> = read(&d.join("mf"), "meanfield.csv").lines().skip(1).map(|l| l.rsplit(',').next().unwrap().into()).collect();
    assert_eq!(p.len(), 11 * 8);
    assert!(p.iter().all(|v| v == "1"));
}

#[test]
fn rare_event_methods_and_replay() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    graph(d);
    for (method, extra) in [("is", vec!["--trajectories", "500"]), ("split", vec!["--successes", "20"]), ("ips", vec!["--particles", "50"])] {
        let out = format!("r-{method}");
        let mut args = vec!["rare", "--graph", "g/graph.json", "--e", "0.2", "--c", "0.1", "--gens", "30", "--method", method];
        args.extend(extra);
        args.extend(["--seed", "5", "--out", &out]);
        ok(d, &args);
        let est: serde_json::Value = serde_json::from_str(&read(&d.join(&out), "estimate.json")).unwrap();
        let v = est["value"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&v), "{method}: {v}");
        assert!(d.join(&out).join("diagnostics.csv").exists());

        let again = format!("{out}-again");
        ok(d, &["replay", "--manifest", &format!("{out}/manifest.json"), "--workers", "3", "--out", &again]);
        assert_eq!(read(&d.join(&out), "estimate.json"), read(&d.join(&again), "estimate.json"), "{method}");
    }
}

#[test]
fn replay_detects_changed_graph() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    graph(d);
    ok(d, &["simulate", "--graph", "g/graph.json", "--e", "0.3", "--c", "0.1", "--gens", "5", "--reps", "100", "--out", "s"]);
    ok(d, &["generate", "--kind", "er", "--n", "8", "--edges", "12", "--seed", "8", "--out", "g"]);
    let out = secnet(d, &["replay", "--manifest", "s/manifest.json", "--out", "s2"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn experiment_replay_is_byte_identical_across_workers() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let design = r#"{"name": "mini", "n": 14, "n_gen": 20,
        "topologies": [{"kind": "er"}, {"kind": "pa", "power": 3.0}],
        "density": {"fractions": [0.3]}, "e": [0.2, 0.6], "c": {"values": [0.05]},
        "replicates": 2, "estimator": {"n_reps": 300}}"#;
    std::fs::write(d.join("design.json"), design).unwrap();
    ok(d, &["experiment", "--design", "design.json", "--anova", "--workers", "1", "--out", "a"]);
    ok(d, &["replay", "--manifest", "a/manifest.json", "--workers", "8", "--out", "b"]);
    for f in ["results.csv", "summary.csv", "anova_persistence.csv", "design.json"] {
        assert_eq!(read(&d.join("a"), f), read(&d.join("b"), f), "{f}");
    }
    let rows = read(&d.join("a"), "results.csv");
    assert_eq!(rows.lines().count(), 1 + 2 * 2 * 2);

    // the env override feeds the same code path
    let out = Command::new(env!("CARGO_BIN_EXE_secnet"))
        .current_dir(d)
        .env("SECNET_WORKERS", "2")
        .args(["replay", "--manifest", "a/manifest.json", "--out", "c"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let m: serde_json::Value = serde_json::from_str(&read(&d.join("c"), "manifest.json")).unwrap();
    assert_eq!(m["workers"], 2);
    assert_eq!(rows, read(&d.join("c"), "results.csv"));
}

#[test]
fn preset_row_count() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    // n = 10 is solved exactly, so the full grid is quick
    ok(d, &["experiment", "--preset", "table1-n10", "--seed", "2", "--out", "t1"]);
    assert_eq!(read(&d.join("t1"), "results.csv").lines().count(), 1 + 1350);
    let bad = secnet(d, &["experiment", "--preset", "table9"]);
    assert_eq!(bad.status.code(), Some(4));
}
