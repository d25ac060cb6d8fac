use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn toba(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toba")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, augment: &str) -> String {
    let path = dir.join("exp.json");
    fs::write(
        &path,
        format!(
            r#"{{
                "name": "tiny",
                "dataset": {{"kind": "sbm", "graph_seed": 3, "params": {{
                    "block_sizes": [60, 60, 60], "p_intra": 0.08, "p_inter": 0.005,
                    "d": 8, "feature_shift": 1.0, "noise_sigma": 1.0}}}},
                "imbalance": {{"kind": "step", "ir": 10, "base_per_class": 10, "val_per_class": 10}},
                "method": {{"augment": "{augment}"}},
                "train": {{"epochs": 20, "hidden": 16}},
                "seeds": [7]
            }}"#
        ),
    )
    .unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_writes_results_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "toba_t");
    let out = dir.path().join("out");
    let o = toba(&[
        "run",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--seeds",
        "3",
        "--override",
        "train.granularity=5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("vanilla+toba_t (3 runs)"));

    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "dataset,method,ir,seed,bacc,macro_f1,disparity,runtime_ms,virtual_edge_ratio,epochs_run"
    );
    let seeds: Vec<&str> = lines.map(|l| l.split(',').nth(3).unwrap()).collect();
    assert_eq!(seeds, ["1", "2", "3"]);

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["train"]["granularity"], 5);
    assert_eq!(summary["runs"], 3);
    assert!(out.join("history/seed_2.csv").exists());
}

#[test]
fn granularity_prints_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "toba_p");
    let o = toba(&[
        "granularity",
        "--config",
        &cfg,
        "--values",
        "1,10,20",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 4);
    let table: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("granularity.json")).unwrap())
            .unwrap();
    let calls: Vec<u64> = table
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["invocations"].as_u64().unwrap())
        .collect();
    assert_eq!(calls, [20, 2, 1]);
}

#[test]
fn diagnose_reads_graph_and_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.json");
    fs::write(
        &graph,
        r#"{"n": 6, "d": 1, "m": 2,
            "edges": [[0, 1], [1, 2], [2, 3], [3, 4], [4, 5]],
            "x": [[0.0], [0.1], [0.2], [1.0], [1.1], [1.2]],
            "y": [0, 0, 0, 1, 1, 1],
            "train": [0, 5], "val": [], "test": [1, 2, 3, 4]}"#,
    )
    .unwrap();
    let probs = dir.path().join("p.json");
    fs::write(
        &probs,
        r#"{"probs": [[0.9, 0.1], [0.8, 0.2], [0.4, 0.6], [0.3, 0.7], [0.2, 0.8], [0.1, 0.9]]}"#,
    )
    .unwrap();
    let out = dir.path().join("bins");
    let o = toba(&[
        "diagnose",
        "--graph",
        graph.to_str().unwrap(),
        "--probs",
        probs.to_str().unwrap(),
        "--windows",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let metrics: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    // test nodes 1, 2 (class 0) and 3, 4 (class 1); node 2 is wrong
    assert_eq!(metrics["bacc"], 0.75);
    for f in ["heterophily.csv", "risk.csv", "distance.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let hetero = fs::read_to_string(out.join("heterophily.csv")).unwrap();
    assert_eq!(hetero.lines().count(), 3);
}

#[test]
fn errors_exit_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let o = toba(&["run", "--config", missing.to_str().unwrap(), "--out", "x"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("error:"));

    let cfg = write_config(dir.path(), "none");
    let o = toba(&["run", "--config", &cfg, "--out", "x", "--override", "train.lr=0"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("lr"));

    let o = toba(&["granularity", "--config", &cfg]);
    assert!(!o.status.success(), "vanilla has nothing to sweep");

    let o = toba(&["run", "--config", &cfg]);
    assert!(!o.status.success(), "--out is required");
}
