use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nspforge"))
        .args(args)
        .env_remove("NSPFORGE_LOG")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn path(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn example_4_maximum_is_6() {
    let inst = data("example4.wcsp");
    let out = run(&["solve", "bnb", "--in", path(&inst), "--sense", "max", "--nc", "--gac"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["cost"], "6");
    assert_eq!(v["status"], "optimal");
    assert_eq!(v["domain_sizes"], serde_json::json!([2, 2]));
}

#[test]
fn all_optima_lists_both_rosters() {
    let inst = data("example4.wcsp");
    let out = run(&["solve", "bnb", "--in", path(&inst), "--sense", "max", "--all-optima"]);
    let alts = json(&out)["alternatives"].as_array().unwrap().clone();
    assert_eq!(alts.len(), 2);
    assert!(alts.contains(&serde_json::json!(["0110", "1001"])));
    assert!(alts.contains(&serde_json::json!(["1001", "0110"])));
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("Usage"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["solve", "bnb", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["solve", "sls", "--in", "x.wcsp"]).status.code(), Some(1), "seed is required");
    assert_eq!(run(&["solve", "bnb", "--in", "/no/such/file"]).status.code(), Some(1));
}

#[test]
fn malformed_instance_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.wcsp");
    std::fs::write(&bad, "[meta]\nn=two\n").unwrap();
    let out = run(&["solve", "dfs", "--in", path(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.wcsp"));
}

#[test]
fn infeasible_exits_two_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("tight.wcsp");
    // one nurse, two slots that each need somebody, only one-shift patterns
    std::fs::write(
        &inst,
        "[meta]\nn=1 days=1 shifts=2 y=0\n[coverage]\n1/1\n1/1\n[limits]\nnurse_1 2 1\n[costs]\n1 1\n[domain]\n10\n01\n",
    )
    .unwrap();
    let out = run(&["solve", "bnb", "--in", path(&inst)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["status"], "infeasible");
}

#[test]
fn sls_is_byte_identical() {
    let inst = data("example4.wcsp");
    let args = ["solve", "sls", "--in", path(&inst), "--sense", "max", "--seed", "11", "--init", "random"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("rules.json");
    let out = run(&[
        "--out",
        path(&target),
        "mine",
        "rules",
        "--in",
        path(&data("table1.txt")),
        "--min-support",
        "2",
        "--min-confidence",
        "0.6",
        "--shape",
        "single",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(v["universe"].as_array().unwrap().len(), 5);
    assert!(!v["rules"].as_array().unwrap().is_empty());
}

#[test]
fn mined_rules_feed_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let rules = dir.path().join("rules.json");
    let csv = dir.path().join("sim.csv");
    run(&[
        "--out",
        path(&rules),
        "mine",
        "rules",
        "--in",
        path(&data("table1.txt")),
        "--min-support",
        "2",
        "--min-confidence",
        "3/5",
    ]);
    let out = run(&[
        "mine",
        "simulate",
        "--patterns",
        path(&rules),
        "--instance",
        path(&data("table8.inst")),
        "--seed",
        "5",
        "--schedule-out",
        path(&csv),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let rows = v["schedule"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    // nobody exceeds h = 5, so late slots may stay short
    assert!(rows.iter().all(|r| r.as_str().unwrap().matches('1').count() <= 5));
    for w in v["warnings"].as_array().unwrap() {
        assert_eq!(w["kind"], "under_covered");
    }
    let report = run(&["eval", "report", "--input", path(&csv), "--generated", path(&csv)]);
    assert_eq!(json(&report)["frobenius"], 0.0);
}

#[test]
fn huim_reports_both_phases() {
    let out = run(&["mine", "huim", "--in", path(&data("tables2_3.csv")), "--min-utility", "15"]);
    let v = json(&out);
    assert_eq!(v["phase1"].as_array().unwrap().len(), 19);
    assert_eq!(v["phase2"].as_array().unwrap().len(), 14);
}

#[test]
fn bayes_train_then_predict() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let out = run(&[
        "--out",
        path(&model),
        "bayes",
        "train",
        "--in",
        path(&data("table5.csv")),
        "--target-col",
        "Shift4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&[
        "bayes",
        "predict",
        "--model",
        path(&model),
        "--in",
        path(&data("table6.csv")),
        "--truth-col",
        "Shift4",
    ]);
    let v = json(&out);
    let labels: Vec<&str> = v["predictions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["label"].as_str().unwrap())
        .collect();
    assert_eq!(labels, ["N3", "N3", "N2", "N4", "N2", "N3"]);
    assert_eq!(v["report"]["accuracy"], "2/3");
}

#[test]
fn bayes_simulation_feeds_report() {
    let dir = tempfile::tempdir().unwrap();
    let sims = dir.path().join("sims.json");
    let hist = [path(&data("week_a.csv")).to_string(), path(&data("week_b.csv")).to_string()];
    let args = [
        "bayes", "simulate", "--history", &hist[0], &hist[1], "--count", "4", "--seed", "2",
    ];
    let a = run(&args);
    assert_eq!(a.stdout, run(&args).stdout);
    std::fs::write(&sims, &a.stdout).unwrap();
    let out = run(&[
        "eval",
        "report",
        "--input",
        &hist[0],
        "--generated",
        path(&sims),
        "--aggregation",
        "max",
    ]);
    let v = json(&out);
    assert_eq!(v["distances"].as_array().unwrap().len(), 4);
    assert_eq!(v["settings"]["aggregation"], "max");
}

#[test]
fn learned_model_round_trips_through_solve() {
    let dir = tempfile::tempdir().unwrap();
    let wcsp = dir.path().join("learned.wcsp");
    let out = run(&[
        "learn",
        "csp",
        "--in",
        path(&data("week_a.csv")),
        path(&data("week_b.csv")),
        "--costs",
        "1,2,3",
        "--wcsp-out",
        path(&wcsp),
        "--streaming",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let learned = json(&out);
    assert!(learned["domain_size"].as_u64().unwrap() > 0);
    let solved = run(&["solve", "bnb", "--in", path(&wcsp)]);
    assert_eq!(solved.status.code(), Some(0), "{}", String::from_utf8_lossy(&solved.stderr));
    assert_eq!(json(&solved)["status"], "optimal");
}

#[test]
fn nmf_completes_partial_matrix() {
    let out = run(&[
        "learn",
        "nmf",
        "--in",
        path(&data("table12.csv")),
        "--rank",
        "3",
        "--seed",
        "1",
        "--restarts",
        "3",
        "--partial",
        path(&data("table12_partial.csv")),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["w"].as_array().unwrap().len(), 5);
    assert_eq!(v["h"].as_array().unwrap().len(), 3);
    assert_eq!(v["prediction"]["status"], "filled");
    assert_eq!(v["prediction"]["distance"], 0.0);
}

#[test]
fn eval_fn_between_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let shifted = dir.path().join("m.csv");
    let text = std::fs::read_to_string(data("table12.csv")).unwrap();
    std::fs::write(&shifted, text.replacen("2,1,1,3", "2,1,1,6", 1)).unwrap();
    let out = run(&["eval", "fn", "--a", path(&data("table12.csv")), "--b", path(&shifted)]);
    assert_eq!(json(&out)["frobenius"], 3.0);
}
