//! End-to-end tests of the `cdaglab` binary.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdaglab"))
        .args(args)
        .env("CDAGLAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn build_dot() {
    let dot = stdout(&["build", "--arch", "unirnn", "--len", "4", "--format", "dot"]);
    assert!(dot.starts_with("digraph cdag {"));
    for edge in [
        "n_0_1 -> n_1_1",
        "n_1_1 -> n_2_1",
        "n_0_3 -> n_2_1",
        "n_2_1 -> n_3_1",
        "n_0_4 -> n_3_1",
    ] {
        assert!(dot.contains(edge), "{edge}");
    }
    assert!(dot.contains("n_3_1 [label=\"3:1\", class=\"sink\""));
}

#[test]
fn build_json() {
    let text = stdout(&[
        "build",
        "--arch",
        "transformer",
        "--len",
        "7",
        "--blocks",
        "2",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["nodes"].as_array().unwrap().len(), 22);
    assert_eq!(v["num_tokens"], 7);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["build", "--arch", "unirnn"]).status.code(), Some(2));
    assert_eq!(
        run(&["build", "--arch", "nonsense", "--len", "3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["analyze", "--arch", "example1", "--c", "-1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn analyze_tables() {
    let t = stdout(&[
        "analyze",
        "--arch",
        "balancedtree",
        "--len",
        "8",
        "--c",
        "2",
        "--format",
        "csv",
    ]);
    let rows: Vec<&str> = t.lines().skip(1).collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.contains(",8,1/8,")));

    let t = stdout(&[
        "analyze", "--arch", "example1", "--c", "2", "--format", "csv",
    ]);
    let rows: Vec<Vec<&str>> = t.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0][2], "1/7");
    assert_eq!(rows[2][2], "2/7");

    let t = stdout(&["analyze", "--arch", "example1", "--c", "3/2", "--symbolic"]);
    assert!(t.contains("delta(c) c^3"));
    assert!(t.contains("beta(c) c/(2c + 3)"));
}

#[test]
fn compare_sweep() {
    let t = stdout(&[
        "compare", "--arch", "unirnn", "--len", "4..12", "--c", "2", "--format", "csv",
    ]);
    let rows: Vec<&str> = t.lines().skip(1).collect();
    assert_eq!(rows.len(), 9);
    assert!(rows[0].starts_with("\"unirnn(L=4)\",2,8,8,true,4/11,8/23,false"));
}

#[test]
fn perturb_reports_no_violations() {
    let t = stdout(&[
        "perturb", "--arch", "unirnn", "--len", "6", "--trials", "10000", "--seed", "7",
    ]);
    let v: serde_json::Value = serde_json::from_str(&t).unwrap();
    assert_eq!(v["summary"]["violations"], 0);
    assert_eq!(v["summary"]["trials"], 10000);
    let csv = stdout(&[
        "perturb", "--arch", "birnn", "--len", "5", "--trials", "50", "--format", "csv",
    ]);
    assert_eq!(
        csv,
        stdout(&["perturb", "--arch", "birnn", "--len", "5", "--trials", "50", "--format", "csv"])
    );
    assert_eq!(csv.lines().count(), 51);
}

#[test]
fn parts_and_export() {
    let t = stdout(&["parts", "--arch", "parts-left"]);
    let v: serde_json::Value = serde_json::from_str(&t).unwrap();
    assert!(v
        .as_array()
        .unwrap()
        .iter()
        .any(|p| p["part_a"] == serde_json::json!([3, 4])
            && p["part_b"] == serde_json::json!([5, 6])));

    let dir = std::env::temp_dir().join(format!("cdaglab-export-{}", std::process::id()));
    stdout(&["export", "--dir", dir.to_str().unwrap()]);
    let json = dir.join("example2.json");
    let back = stdout(&["build", "--cdag", json.to_str().unwrap()]);
    assert_eq!(back, std::fs::read_to_string(&json).unwrap());
    assert!(dir.join("example1.dot").exists());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn suite_subset() {
    let out = run(&["suite", "--only", "1", "11"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("PASS [1]"));
    assert!(text.contains("PASS [11]"));
    let failing = run(&["suite", "--only", "6"]);
    assert_eq!(failing.status.code(), Some(1));
}
