mod common;

use std::process::Command;

use common::network;

fn crnflux(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_crnflux")).args(args).output().unwrap()
}

fn stdout(o: &std::process::Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_body(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#')).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn fluxes_contain_one_over_twenty_one() {
    let o = crnflux(&["fluxes", &network("tri.crn"), "--omega", "1"]);
    assert!(o.status.success());
    let rows = csv_body(&stdout(&o));
    assert_eq!(rows[0], ["record", "cycle_id", "s", "states", "labels", "omega"]);
    let row = rows.iter().find(|r| r[0] == "cycle" && r[1] == "0-1-2").unwrap();
    let w: f64 = row[5].parse().unwrap();
    assert!((w - 1.0 / 21.0).abs() < 1e-15);
    assert_eq!((row[3].as_str(), row[4].as_str()), ("0 1 2", "1+ 2+ 3+"));
}

#[test]
fn classes_report_ln_eight() {
    let o = crnflux(&["classes", &network("tri.crn")]);
    assert!(o.status.success());
    let text = stdout(&o);
    let aff = text.split("# section=affinities\n").nth(1).unwrap();
    let rows = csv_body(aff);
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[1][0].as_str(), rows[1][1].as_str()), ("1 1 1", "-1 -1 -1"));
    let dg: f64 = rows[1][5].parse().unwrap();
    assert!((dg - 8f64.ln()).abs() < 1e-12);
}

#[test]
fn validation_failure_exits_one_and_names_the_pair() {
    let o = crnflux(&["validate", &network("duplicate.crn"), "--faithful"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("reactions 1 and 2"));
}

#[test]
fn runtime_errors_exit_two_with_one_json_line() {
    let dir = tempfile::tempdir().unwrap();
    let open = dir.path().join("open.crn");
    std::fs::write(&open, "species internal A\nreaction r: 0 <-> A ; kf=1 kr=1\n").unwrap();
    let o = crnflux(&["fluxes", open.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(v["error"], "unbounded_state_space");

    let o = crnflux(&["fluxes", &network("tri.crn"), "--max-cycles", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"], "cycle_budget_exceeded");
}

#[test]
fn bad_flags_are_rejected_before_work() {
    let o = crnflux(&["simulate", &network("tri.crn"), "--t-end", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
}

#[test]
fn header_records_resolved_config() {
    let o = crnflux(&["simulate", &network("tri.crn"), "--seed", "5", "--t-end", "100"]);
    let text = stdout(&o);
    assert!(text.contains("rng=ChaCha8 seed=5"));
    assert!(text.contains("omega=1.0000000000000000e0"));
}

#[test]
fn out_flag_and_json_format() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("limit.json");
    let o = crnflux(&["limit", &network("tri.crn"), "--format", "json", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["config"]["command"], "limit");
    assert_eq!(v["result"]["classes"]["classes"].as_array().unwrap().len(), 3);
}

#[test]
fn beta_file_changes_the_limit() {
    let dir = tempfile::tempdir().unwrap();
    let beta = dir.path().join("beta.json");
    std::fs::write(
        &beta,
        r#"[{"state":[1,0,0],"beta":[2,1,1]},{"state":[0,1,0],"beta":[1,2,1]},{"state":[0,0,1],"beta":[1,1,2]}]"#,
    )
    .unwrap();
    let o = crnflux(&["limit", &network("tri.crn"), "--beta", beta.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for row in csv_body(&stdout(&o)).iter().skip(1) {
        let rel: f64 = row[4].parse().unwrap();
        assert!(rel < 1e-12);
    }
}

#[test]
fn sweep_rows_are_in_v_order() {
    let o = crnflux(&["sweep", &network("tri.crn"), "--x-mode", "conc", "--v-list", "10,1000,100", "--parallel", "3"]);
    assert!(o.status.success());
    let vs: Vec<f64> = csv_body(&stdout(&o)).iter().skip(1).map(|r| r[0].parse().unwrap()).collect();
    let mut distinct = vs.clone();
    distinct.dedup();
    assert_eq!(distinct, vec![10.0, 1000.0, 100.0]);
}

#[test]
fn trajectory_export() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.jsonl");
    let o = crnflux(&["simulate", &network("tri.crn"), "--t-end", "5", "--trajectory", path.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(path).unwrap();
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["state"], 0);
}
