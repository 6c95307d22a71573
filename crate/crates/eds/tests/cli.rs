//! Integration tests for the command-line driver: exit codes, report schema,
//! and determinism of machine-format output.

use std::path::PathBuf;
use std::process::{Command, Output};

fn system(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("systems").join(name)
}

fn eds(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eds"))
        .args(args)
        .output()
        .expect("spawn eds binary")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(out)).expect("machine output is valid JSON")
}

#[test]
fn close_verified_exits_zero_with_certificates() {
    for file in ["gkdv.eds", "ch.eds"] {
        let out = eds(&["close", system(file).to_str().unwrap(), "--format", "machine"]);
        assert_eq!(out.status.code(), Some(0), "close {} stderr: {}", file, String::from_utf8_lossy(&out.stderr));
        let v = json(&out);
        assert_eq!(v["verdict"], "verified");
        let certs = v["certificates"].as_array().unwrap();
        assert_eq!(certs.len(), 3, "one certificate per generator");
        for c in certs {
            assert!(c["multipliers"].as_array().unwrap().len() == 3);
            assert_eq!(c["residual"], "0");
        }
    }
}

#[test]
fn section_eliminate_reports_single_pde() {
    let out = eds(&["section", system("gkdv.eds").to_str().unwrap(), "--eliminate", "--format", "machine"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let residuals = v["residuals"].as_array().unwrap();
    assert_eq!(residuals.len(), 1);
    assert_eq!(residuals[0]["name"], "pde");
    let pde = residuals[0]["value"].as_str().unwrap();
    assert!(pde.contains("u_t"), "eliminated PDE mentions u_t: {}", pde);
    assert!(pde.contains("u_xxx"), "eliminated PDE mentions u_xxx: {}", pde);
}

#[test]
fn prolong_flat_connection_exits_zero() {
    let out = eds(&["prolong", system("gkdv.eds").to_str().unwrap(), "--connection", "case_i"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("Verified"), "{}", text);
}

#[test]
fn prolong_extract_without_case_is_ambiguous() {
    let out = eds(&["prolong", system("gkdv.eds").to_str().unwrap(), "--connection", "family", "--extract"]);
    assert_eq!(out.status.code(), Some(3), "undecided exponent comparison exits 3");
}

#[test]
fn prolong_extract_with_case_reports_constraints() {
    let out = eds(&[
        "prolong",
        system("gkdv.eds").to_str().unwrap(),
        "--connection",
        "family",
        "--extract",
        "--assume-case",
        "i",
        "--format",
        "machine",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let cs = v["constraints"].as_array().unwrap();
    assert_eq!(cs.len(), 7, "seven power groups in the generic case");
    let exponents: Vec<&str> = cs.iter().map(|c| c["exponent"].as_str().unwrap()).collect();
    assert!(exponents.contains(&"0"));
    assert!(exponents.contains(&"m"));
    assert!(exponents.contains(&"n"));
}

#[test]
fn assume_flag_substitutes_for_a_named_case() {
    // the same disequalities as case i, passed on the command line
    let clauses = [
        "n - 1 != 0",
        "n + 1 != 0",
        "n + 2 != 0",
        "2*n + 1 != 0",
        "2*n + 2 != 0",
        "m - 1 != 0",
        "m - n != 0",
        "m - n - 1 != 0",
        "m - n - 2 != 0",
        "m - 2*n - 1 != 0",
        "m - 2*n - 2 != 0",
    ];
    let mut args = vec![
        "prolong".to_string(),
        system("gkdv.eds").to_str().unwrap().to_string(),
        "--connection".to_string(),
        "family".to_string(),
        "--extract".to_string(),
        "--format".to_string(),
        "machine".to_string(),
    ];
    for c in clauses {
        args.push("--assume".to_string());
        args.push(c.to_string());
    }
    let argrefs: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
    let out = eds(&argrefs);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["constraints"].as_array().unwrap().len(), 7);
}

#[test]
fn audit_reports_violation_triple_and_exits_one() {
    let out = eds(&["audit", system("gkdv.eds").to_str().unwrap(), "--table", "case_iii", "--format", "machine"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["verdict"], "failed");
    let violations = v["violations"].as_array().unwrap();
    assert_eq!(violations.len(), 1);
    assert_eq!(violations[0]["triple"], serde_json::json!(["X1", "X2", "X7"]));
}

#[test]
fn audit_consistent_table_exits_zero() {
    for table in ["case_iv", "case_vi"] {
        let out = eds(&["audit", system("gkdv.eds").to_str().unwrap(), "--table", table]);
        assert_eq!(out.status.code(), Some(0), "table {}", table);
    }
}

#[test]
fn conserve_exits_zero_on_both_systems() {
    for file in ["gkdv.eds", "ch.eds"] {
        let out = eds(&["conserve", system(file).to_str().unwrap(), "--candidate", "c1", "--format", "machine"]);
        assert_eq!(out.status.code(), Some(0), "conserve {}", file);
        let v = json(&out);
        for r in v["residuals"].as_array().unwrap() {
            assert_eq!(r["value"], "0");
        }
    }
}

#[test]
fn backlund_symbolic_and_numeric_checks_pass() {
    let out = eds(&[
        "backlund",
        system("gkdv.eds").to_str().unwrap(),
        "--system",
        "b1",
        "--n",
        "1",
        "--m",
        "2",
        "--gamma",
        "6",
        "--alpha",
        "0",
        "--format",
        "machine",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["verdict"], "verified");
    let numeric = &v["numeric"];
    assert_eq!(numeric["pass"], true);
    assert_eq!(numeric["seed"], 42);
    assert!(numeric["worst_residual"].as_f64().unwrap() < 1e-9);
    let residuals = v["residuals"].as_array().unwrap();
    let remainder = residuals.iter().find(|r| r["name"] == "remainder").unwrap();
    assert_eq!(remainder["value"], "0");
}

#[test]
fn machine_output_is_deterministic() {
    let args = ["close", "--format", "machine"];
    let file = system("gkdv.eds");
    let run = || stdout(&eds(&[args[0], file.to_str().unwrap(), args[1], args[2]]));
    assert_eq!(run(), run());
}

#[test]
fn usage_errors_exit_two() {
    let ok = system("gkdv.eds");
    let cases: Vec<Vec<&str>> = vec![
        vec!["close", "/nonexistent/file.eds"],
        vec!["prolong", ok.to_str().unwrap(), "--connection", "no_such_connection"],
        vec!["audit", ok.to_str().unwrap(), "--table", "no_such_table"],
        vec!["conserve", ok.to_str().unwrap(), "--candidate", "no_such_candidate"],
        vec!["backlund", ok.to_str().unwrap(), "--system", "no_such_system"],
    ];
    for args in cases {
        let out = eds(&args);
        assert_eq!(out.status.code(), Some(2), "args: {:?}", args);
        assert!(!out.stderr.is_empty(), "diagnostic goes to stderr: {:?}", args);
    }
    // clap usage errors also exit 2
    let out = eds(&["close"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_source_exits_two() {
    let dir = std::env::temp_dir().join("eds-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.eds");
    std::fs::write(&bad, "system broken\nform alpha1 = du /\\\n").unwrap();
    let out = eds(&["close", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(err.contains("parse error"), "stderr: {}", err);
}
