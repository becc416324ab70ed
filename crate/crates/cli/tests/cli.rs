use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pgcon(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pgcon"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("run pgcon")
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn write_problem(dir: &Path, text: &str) -> String {
    let path = dir.join("problem.json");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn analytic_instance_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(
        dir.path(),
        r#"{"kind": "analytic", "instance": "L1-LIN-1"}"#,
    );
    let out = dir.path().join("out");
    let o = pgcon(&["solve", "--problem", &problem], &out);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let r = report(&out);
    assert_eq!(r["report"]["status"], "KktPoint");
    let ledger = fs::read_to_string(out.join("ledger.csv")).unwrap();
    assert!(ledger.lines().count() > 1);
}

#[test]
fn infeasible_instance_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(
        dir.path(),
        r#"{"kind": "analytic", "instance": "INFEAS-1"}"#,
    );
    let out = dir.path().join("out");
    let o = pgcon(&["solve", "--problem", &problem], &out);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(report(&out)["report"]["status"], "InfeasibleStationary");
}

#[test]
fn quadratic_file_solves() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(
        dir.path(),
        r#"{
            "kind": "quadratic",
            "hessian": [[1, 0], [0, 1]],
            "linear": [-2, 0],
            "equalities": { "matrix": [[1, 1]], "rhs": [1] },
            "lower": [0, 0],
            "upper": ["inf", "inf"],
            "l1_weights": [0, 0.5]
        }"#,
    );
    let out = dir.path().join("out");
    let o = pgcon(&["solve", "--problem", &problem], &out);
    assert_eq!(o.status.code(), Some(0));
    let x = report(&out)["report"]["x"].clone();
    let x: Vec<f64> = serde_json::from_value(x).unwrap();
    assert!((x[0] - 1.0).abs() < 1e-6 && x[1].abs() < 1e-6, "{x:?}");
}

#[test]
fn iteration_limit_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(
        dir.path(),
        r#"{"kind": "analytic", "instance": "CIRCLE-1"}"#,
    );
    let out = dir.path().join("out");
    let o = pgcon(&["solve", "--problem", &problem, "--max-iter", "1"], &out);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(report(&out)["report"]["status"], "MaxIter");
}

#[test]
fn invalid_config_exits_64_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(
        dir.path(),
        r#"{"kind": "analytic", "instance": "L1-LIN-1"}"#,
    );
    let out = dir.path().join("out");
    let o = pgcon(&["solve", "--problem", &problem, "--set", "xi=1.5"], &out);
    assert_eq!(o.status.code(), Some(64));
    assert!(report(&out)["error"].as_str().unwrap().contains("xi"));
}

#[test]
fn malformed_problem_and_usage_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(dir.path(), r#"{"kind": "cubic"}"#);
    let out = dir.path().join("out");
    assert_eq!(
        pgcon(&["solve", "--problem", &problem], &out).status.code(),
        Some(64)
    );
    assert_eq!(pgcon(&["solve"], &out).status.code(), Some(64));
    let o = pgcon(
        &["solve", "--problem", &problem, "--alpha-rule", "max"],
        &out,
    );
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn scca_writes_result_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = pgcon(
        &[
            "scca", "--n", "40", "--lambda", "1e-2", "--seed", "1", "--seed", "2",
        ],
        &out,
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "instance,n,m,lambda,seed,status,iters,time_s,chi,c_norm,rho_xy,sr_x,sr_y,sr,sl,voc_x,voc_y"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    assert!(
        rows[0].starts_with("scca-n40-lambda1e-2,82,2,"),
        "{}",
        rows[0]
    );
    assert!(out.join("ledger-seed1.csv").exists() && out.join("ledger-seed2.csv").exists());
}

#[test]
fn corpus_check_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_pgcon"))
        .args(["corpus-check", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(report(&out)["passed"], true);
}

#[test]
fn corpus_bench_meets_expectations() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = pgcon(&["bench", "--suite", "corpus"], &out);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
    assert!(out.join("results.csv").exists());
    let profile = fs::read_to_string(out.join("profile.csv")).unwrap();
    assert!(profile.lines().count() > 10);
}
