use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtheta")).args(args).output().expect("spawn qtheta")
}

fn json_out(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn verify_registered_identity() {
    let o = run(&["verify", "E016R"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json_out(&o);
    assert_eq!(r["status"], "pass");
    assert_eq!(r["window"], 10);
    assert_eq!(r["order"], 40);
    assert!(r["cells_checked"].as_u64().unwrap() > 0);
    assert!(r.get("first_mismatch").is_none());
}

#[test]
fn printed_q_exponential_relation_fails() {
    let o = run(&["verify", "E016"]);
    assert_eq!(o.status.code(), Some(1));
    let r = json_out(&o);
    assert_eq!(r["status"], "fail");
    assert_eq!(r["first_mismatch"]["cell"], serde_json::json!([1]));
}

#[test]
fn corrupted_coefficient_is_reported() {
    let o = run(&["verify", "E025", "--order", "3", "--corrupt"]);
    assert_eq!(o.status.code(), Some(1));
    let r = json_out(&o);
    assert_eq!(r["status"], "fail");
    assert!(r["first_mismatch"]["cell"].is_array());
    assert!(r["first_mismatch"]["u_exponent"].is_i64());
}

#[test]
fn verify_equation_file() {
    let o = run(&["verify", &data("theta_shift.json"), "--window", "4", "--order", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json_out(&o)["cells_checked"], 9);
}

#[test]
fn reports_are_byte_identical() {
    let a = run(&["verify", "E023", "--window", "2", "--order", "6"]);
    let b = run(&["verify", "E023", "--window", "2", "--order", "6"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn theta_jacobi_table() {
    let o = run(&["theta", &data("jacobi.json"), "--window", "8", "--order", "80"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json_out(&o);
    assert_eq!(r["dim"], 1);
    let coeffs = r["basis"][0]["coeffs"].as_array().unwrap();
    assert_eq!(coeffs.len(), 17);
    for c in coeffs {
        let n = c[0][0].as_i64().unwrap();
        // q^{n^2} is u^{2 n^2}
        assert_eq!(c[1]["terms"], serde_json::json!([[2 * n * n, ["1"]]]));
    }
}

#[test]
fn compose_and_small_group() {
    let dir = std::env::temp_dir().join(format!("qtheta-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let sq = dir.join("square.json");
    // the compose report is itself a valid multiplier input
    let o = run(&["compose", &data("jacobi.json"), &data("jacobi.json"), "--out", sq.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));

    let out = dir.join("group.json");
    let o = run(&["small-group", sq.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r["order"], 2);
    assert_eq!(r["commutant_dim"], 1);
    assert_eq!(r["duality_nondegenerate"], true);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn act_on_level_two() {
    let o = run(&["act", &data("level2_shift.json"), &data("level2.json"), "--order", "8", "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json_out(&o);
    assert_eq!(r["status"], "pass");
    assert_eq!(r["matrix"][0][0]["terms"], serde_json::json!([]));
    assert_eq!(r["matrix"][1][0]["terms"], serde_json::json!([[0, ["1"]]]));
}

#[test]
fn element_outside_normalizer() {
    let o = run(&["act", &data("level2_shift.json"), &data("jacobi.json")]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json_out(&o)["status"], "fail");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "E999"]).status.code(), Some(2));
    assert_eq!(run(&["theta", "/nonexistent/m.json"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "E012", "--window", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "E012", "--jobs", "0"]).status.code(), Some(2));
}
