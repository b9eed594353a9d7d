use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn entsum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entsum"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "{e}\nstdout: {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn file(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn metrics_on_three_points() {
    let dir = TempDir::new().unwrap();
    let a = file(&dir, "a.set", "{\"group\":\"Z\",\"D\":1}\n[0]\n[1]\n[2]\n");
    let out = entsum(&["metrics", s(&a), "--d-star"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["energy"], 19);
    assert!((v["sigma_comb"].as_f64().unwrap() - 5.0 / 3.0).abs() < 1e-11);
    assert!((v["sigma_ent"].as_f64().unwrap() - 1.52859).abs() < 1e-4);
    assert!(v["d_star"]["value"].as_f64().is_some());
}

#[test]
fn json_out_writes_the_same_report() {
    let dir = TempDir::new().unwrap();
    let a = file(&dir, "a.set", "{\"group\":\"F2\",\"D\":2}\n[0,0]\n[0,1]\n[1,0]\n");
    let dest = dir.path().join("r.json");
    let out = entsum(&["--json-out", s(&dest), "metrics", s(&a)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written = std::fs::read(&dest).unwrap();
    assert_eq!(written, entsum(&["metrics", s(&a)]).stdout);
}

#[test]
fn couple_feasible_and_infeasible() {
    let dir = TempDir::new().unwrap();
    let u = file(&dir, "u.dist", r#"{"group":"Zmod","moduli":[3],"mass":[[0,0.3333333333333333],[1,0.3333333333333333],[2,0.3333333333333334]]}"#);
    let zero = file(&dir, "z.dist", r#"{"group":"Zmod","moduli":[3],"mass":[[0,1.0]]}"#);
    let one = file(&dir, "o.dist", r#"{"group":"Zmod","moduli":[3],"mass":[[1,1.0]]}"#);

    let out = entsum(&["couple", "--p1", s(&u), "--p2", s(&u), "--p3", s(&zero)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["status"], "feasible");

    // X = Y = 0 forces X − Y = 0.
    let out = entsum(&["couple", "--p1", s(&zero), "--p2", s(&zero), "--p3", s(&one)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["status"], "infeasible");
    assert!(v["certificate"]["pairing"].as_f64().unwrap() < 0.0);
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["holds"] == true));
}

#[test]
fn extract_localize_and_audit() {
    let dir = TempDir::new().unwrap();
    let x = file(&dir, "x.set", "{\"group\":\"Z\",\"D\":1}\n[0]\n[1]\n");
    let out = entsum(&["extract", "--x", s(&x), "--y", s(&x)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["s"]["elems"], serde_json::json!([[0], [1]]));

    let h = file(&dir, "h.set", "{\"group\":\"F2\",\"D\":2}\n[0,0]\n[1,0]\n");
    let out = entsum(&["localize", "--x", s(&h), "--y", s(&h)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["status"], "found");

    let four = file(&dir, "f.set", "{\"group\":\"Z\",\"D\":1}\n[0]\n[1]\n[2]\n[3]\n");
    let out = entsum(&["audit-projection", "--x1", s(&four), "--x2", s(&four), "--pi", "mod2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["inequality_holds"], true);
    assert_eq!(v["identity_holds"], true);

    let out = entsum(&["audit-projection", "--x1", s(&four), "--x2", s(&four), "--pi", "double|mod2"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn pfr_oracle_modes() {
    let dir = TempDir::new().unwrap();
    let x = file(&dir, "x.set", "{\"group\":\"F2\",\"D\":3}\n[0,0,0]\n[0,0,1]\n[0,1,0]\n");
    let out = entsum(&["pfr-oracle", "--x", s(&x)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["rank"].as_u64().unwrap() <= 3);
    let out = entsum(&["pfr-oracle", "--x", s(&x), "--y", s(&x)]);
    assert!(json(&out)["d_y"].is_number());
    let out = entsum(&["pfr-oracle", "--x", s(&x), "--cover"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["cover"].is_object());
}

#[test]
fn decompose_with_verification() {
    let dir = TempDir::new().unwrap();
    let a = file(&dir, "a.set", "{\"group\":\"Z\",\"D\":2}\n[0,0]\n[0,1]\n[1,0]\n[1,1]\n[2,0]\n");
    let b = file(&dir, "b.set", "{\"group\":\"Z\",\"D\":2}\n[0,0]\n[1,1]\n[2,2]\n");
    let cfg = file(&dir, "cfg.json", r#"{"eps0": 0.02}"#);
    for algo in ["skew", "dim", "pfr"] {
        let out = entsum(&[
            "decompose", "--algo", algo, "--a", s(&a), "--b", s(&b), "--config", s(&cfg), "--verify",
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let v = json(&out);
        assert_eq!(v["algo"], algo);
        assert!(v["trace"].as_array().unwrap().len() >= 1);
        let checks = v["verification"].as_array().unwrap();
        assert!(checks.iter().all(|c| c["holds"] == true), "{checks:?}");
    }
}

#[test]
fn fuzz_is_byte_identical() {
    let args = ["--seed", "1", "fuzz", "--trials", "10", "--suites", "triangle,renyi"];
    let a = entsum(&args);
    let b = entsum(&[&args[..], &["--threads", "3"]].concat());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["seed"], 1);
    let suites = v["suites"].as_array().unwrap();
    assert_eq!(suites.len(), 2);
    assert!(suites.iter().all(|s| s["failures"] == 0));
}

#[test]
fn errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let dup = file(&dir, "d.set", "{\"group\":\"Z\",\"D\":1}\n[0]\n[0]\n");
    let out = entsum(&["metrics", s(&dup)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let short = file(&dir, "m.dist", r#"{"group":"Z","D":1,"mass":[[0,0.5],[1,0.4]]}"#);
    assert_eq!(entsum(&["metrics", s(&short)]).status.code(), Some(1));
    assert_eq!(entsum(&["metrics", "/nonexistent/file"]).status.code(), Some(1));
    assert_eq!(entsum(&["decompose", "--algo", "nope"]).status.code(), Some(1));
    assert_eq!(entsum(&["fuzz", "--suites", "bogus"]).status.code(), Some(1));
    assert_eq!(entsum(&["--help"]).status.code(), Some(0));
}

#[test]
fn a_violated_bound_exits_with_two() {
    // With the size constant forced far below its valid value the reported
    // loss exceeds the bound.
    let dir = TempDir::new().unwrap();
    let a = file(&dir, "a.set", "{\"group\":\"Z\",\"D\":2}\n[0,0]\n[0,1]\n[1,0]\n[1,1]\n[2,0]\n[5,7]\n");
    let cfg = file(&dir, "c.json", r#"{"c1": 1e-9}"#);
    let out = entsum(&["decompose", "--algo", "dim", "--a", s(&a), "--b", s(&a), "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["size_ok"], false);

    let out = entsum(&["--tolerance", "-1", "metrics", s(&a)]);
    assert_eq!(out.status.code(), Some(1));
}
