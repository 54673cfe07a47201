//! End-to-end tests of the `cogwyn` binary: output shape, exit codes,
//! determinism and plan round trips.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn cogwyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cogwyn")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}\nstderr: {}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cogwyn-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn asymmetric_mg_example() {
    let out = cogwyn(&["mg", "--topology", "asym", "--K", "7", "--tl", "2", "--tr", "1", "--rl", "2", "--rr", "1"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!((v["lower"].as_u64(), v["upper"].as_u64(), v["exact"].as_bool()), (Some(6), Some(6), Some(true)));
}

#[test]
fn symmetric_mg_drops_at_the_root() {
    let base = ["mg", "--K", "7", "--tl", "1", "--tr", "1", "--rl", "1", "--rr", "1", "--alpha"];
    let at = |a: &str| {
        let mut args = base.to_vec();
        args.push(a);
        json(&cogwyn(&args))
    };
    assert_eq!(at("0.3")["lower"], 6);
    let v = at("root:3:1");
    assert_eq!((v["lower"].as_u64(), v["upper"].as_u64()), (Some(5), Some(5)));
}

#[test]
fn roots_of_u3() {
    let out = cogwyn(&["roots", "--p", "3"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let roots = v["roots"].as_array().unwrap();
    assert_eq!(roots.len(), 2);
    for (r, sign) in roots.iter().zip([-1.0, 1.0]) {
        assert!((r["alpha"].as_f64().unwrap() - sign * 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(r["multiplicity"], 1);
    }
}

#[test]
fn converse_asym_example() {
    let out = cogwyn(&[
        "converse", "--family", "asym", "--K", "10", "--tl", "1", "--tr", "0", "--rl", "1", "--rr", "0", "--alpha", "0.7",
        "--trials", "100",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!(v["max_abs_error"].as_f64().unwrap() < 1e-9);
    assert_eq!(v["bound"], 8);
    assert_eq!(v["trials"], 100);
    assert_eq!(v["entropy_ok"], true);
}

#[test]
fn converse_ub2_and_entropy_at_a_root() {
    let inst = ["--K", "7", "--tl", "1", "--tr", "1", "--rl", "1", "--rr", "1", "--alpha", "root:3:1"];
    let mut args = vec!["converse", "--family", "ub2"];
    args.extend(inst);
    let out = cogwyn(&args);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["bound"], 5);
    let mut args = vec!["entropy", "--family", "ub1"];
    args.extend(inst);
    let out = cogwyn(&args);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["nonsingular"], true);
}

#[test]
fn invalid_input_exits_with_two() {
    assert_eq!(code(&cogwyn(&["mg", "--K", "7", "--alpha", "abc"])), 2);
    assert_eq!(code(&cogwyn(&["mg", "--K", "7", "--alpha", "0"])), 2);
    assert_eq!(code(&cogwyn(&["mg", "--K", "7", "--no-such-flag"])), 2);
    assert_eq!(code(&cogwyn(&["roots", "--p", "3", "--K", "4"])), 2);
    let out = cogwyn(&["converse", "--family", "ub2", "--K", "7", "--tl", "1", "--tr", "1", "--rl", "1", "--rr", "1", "--alpha", "0.3"]);
    assert_eq!(code(&out), 2);
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("u_3"));
}

#[test]
fn structural_failure_exits_with_one() {
    // The tail round of the second upper bound needs the longer tail of the
    // prose threshold; under the statement threshold the construction fails.
    let out = cogwyn(&[
        "converse", "--family", "ub2", "--threshold-rule", "statement", "--K", "10", "--tl", "1", "--tr", "1", "--rl", "1",
        "--rr", "1", "--alpha", "root:3:1",
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn plan_round_trips_through_certify() {
    let out = cogwyn(&["plan", "--K", "11", "--tl", "1", "--tr", "0", "--rl", "1", "--rr", "1", "--alpha", "0.6"]);
    assert_eq!(code(&out), 0);
    let plan = json(&out);
    let path = scratch("plan.json");
    std::fs::write(&path, &out.stdout).unwrap();
    let out = cogwyn(&["certify", "--plan", path.to_str().unwrap(), "--alpha", "0.6"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&out);
    assert_eq!(rep["pass"], true);
    assert_eq!(rep["certified_dof"], plan["claimed_dof"]);

    let mut tampered = plan.clone();
    tampered["claimed_dof"] = Value::from(plan["claimed_dof"].as_u64().unwrap() + 1);
    let bad = scratch("tampered.json");
    std::fs::write(&bad, serde_json::to_vec(&tampered).unwrap()).unwrap();
    let out = cogwyn(&["certify", "--plan", bad.to_str().unwrap(), "--alpha", "0.6"]);
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["failure"]["check"], "dof_sum");
}

#[test]
fn simulate_emits_the_rate_csv_deterministically() {
    let args = ["simulate", "--K", "7", "--tl", "1", "--tr", "1", "--rl", "1", "--rr", "1", "--alpha", "0.3"];
    let a = cogwyn(&args);
    let b = cogwyn(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "P,sum_rate_nats,plan_id");
    assert_eq!(lines.len(), 13);
    assert!(String::from_utf8_lossy(&a.stderr).contains("slope"));
}

#[test]
fn random_gain_simulation_is_seeded() {
    let args = ["simulate", "--K", "9", "--tl", "1", "--rr", "1", "--random-gains", "--seed", "5", "--format", "json"];
    let a = cogwyn(&args);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, cogwyn(&args).stdout);
}

#[test]
fn offset_csv_increases_towards_the_root() {
    let out = cogwyn(&["offset"]);
    assert_eq!(code(&out), 0);
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(rdr.headers().unwrap(), vec!["alpha", "offset_proxy"]);
    let ys: Vec<f64> = rdr.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
    assert_eq!(ys.len(), 10);
    assert!(ys.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn sweep_rows_keep_their_order_for_any_job_count() {
    let spec = scratch("sweep.json");
    std::fs::write(
        &spec,
        r#"{"K":[5,8,13],"tl":[0,1],"tr":[1],"rl":[0,1],"rr":[1],"alpha":[0.4,"root:3:1"],"checks":["mg","certify","converse"],"trials":5}"#,
    )
    .unwrap();
    let one = Command::new(env!("CARGO_BIN_EXE_cogwyn"))
        .args(["sweep", "--spec", spec.to_str().unwrap()])
        .env("COGWYN_JOBS", "1")
        .output()
        .unwrap();
    let four = cogwyn(&["sweep", "--spec", spec.to_str().unwrap(), "--jobs", "4"]);
    assert_eq!(code(&one), 0, "{}", String::from_utf8_lossy(&one.stdout));
    assert_eq!(one.stdout, four.stdout);
    let mut rdr = csv::Reader::from_reader(one.stdout.as_slice());
    let idx: Vec<usize> = rdr.records().map(|r| r.unwrap()[0].parse().unwrap()).collect();
    assert_eq!(idx, (0..24).collect::<Vec<_>>());
}

#[test]
fn random_check_and_its_negative_control() {
    let out = cogwyn(&["random-check", "--K", "20", "--trials", "20", "--seed", "3"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["failures"], 0);
    let out = cogwyn(&["random-check", "--K", "20", "--alpha", "root:3:1"]);
    assert_eq!(code(&out), 1);
    let v = json(&out);
    let min = v["examples"].as_array().unwrap().iter().map(|e| e["size"].as_u64().unwrap()).min();
    assert_eq!(min, Some(3));
}

#[test]
fn table_format_is_aligned_text() {
    let out = cogwyn(&["bounds", "--K", "9", "--tl", "1", "--rl", "1", "--rr", "1", "--alpha", "0.5", "--format", "table"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("label"));
    assert!(text.lines().any(|l| l.starts_with("UB1")));
}
