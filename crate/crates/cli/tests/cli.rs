use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

struct Run {
    code: i32,
    bytes: Vec<u8>,
    report: Value,
    stderr: String,
}

fn run(dir: &TempDir, tag: &str, args: &[&str]) -> Run {
    let out = dir.path().join(format!("{tag}.json"));
    let o = Command::new(env!("CARGO_BIN_EXE_hypereg"))
        .args(args)
        .arg("--output")
        .arg(&out)
        .output()
        .expect("binary runs");
    let bytes = std::fs::read(&out).unwrap_or_default();
    let report = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    Run { code: o.status.code().unwrap_or(-1), bytes, report, stderr: String::from_utf8_lossy(&o.stderr).into_owned() }
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn cert<'a>(r: &'a Value, name: &str) -> &'a Value {
    r["certificates"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap_or_else(|| panic!("no {name}"))
}

#[test]
fn all_ones_triangle_has_density_one() {
    let dir = TempDir::new().unwrap();
    let r = run(&dir, "count", &["count", "--input", path(&fixture("triangle_ones.json"))]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.report["details"]["density"], 1.0);
    assert_eq!(r.report["exitCode"], 0);
    assert_eq!(cert(&r.report, "density")["oracleMode"], "exact");
}

#[test]
fn parity_cut_norm_is_a_quarter() {
    let dir = TempDir::new().unwrap();
    let r = run(&dir, "cut", &["cutnorm", "--input", path(&fixture("parity.json"))]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let c = cert(&r.report, "cutNorm[1,2]");
    assert_eq!(c["achieved"], 0.25);
    let faces = c["witness"]["cell"]["faces"].as_array().unwrap();
    assert_eq!(faces.len(), 2);
    // A×B with |A| = |B| = 1 or its complement pattern; either way one atom per side.
    for f in faces {
        assert_eq!(f["atoms"].as_array().unwrap().len(), 1);
    }
}

#[test]
fn bad_probabilities_name_the_space() {
    let dir = TempDir::new().unwrap();
    let r = run(&dir, "bad", &["count", "--input", path(&fixture("bad_probs.json"))]);
    assert_eq!(r.code, 2);
    assert_eq!(r.report["status"], "input-error");
    assert!(r.report["error"].as_str().unwrap().contains("space 2"), "{}", r.report["error"]);
}

#[test]
fn malformed_instances_exit_two() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("unknown", r#"{"spaces":[{"probs":[1]}],"edges":[[1]],"extra":1}"#),
        ("vertex", r#"{"spaces":[{"probs":[1]},{"probs":[1]}],"edges":[[1,3]],"functions":{"1,3":[[1]]}}"#),
        ("missing", r#"{"spaces":[{"probs":[1]},{"probs":[1]}],"edges":[[1,2]],"functions":{}}"#),
        ("shape", r#"{"spaces":[{"probs":[0.5,0.5]},{"probs":[1]}],"edges":[[1,2]],"functions":{"1,2":[[1],[1],[1]]}}"#),
        ("key", r#"{"spaces":[{"probs":[1]},{"probs":[1]}],"edges":[[1,2]],"functions":{"1,2":[[1]],"2,3":[[1]]}}"#),
        ("json", "{"),
    ];
    for (tag, text) in cases {
        let file = dir.path().join(format!("{tag}-in.json"));
        std::fs::write(&file, text).unwrap();
        let r = run(&dir, tag, &["count", "--input", path(&file)]);
        assert_eq!(r.code, 2, "{tag}: {}", r.stderr);
    }
}

#[test]
fn probabilities_are_renormalized_within_tolerance() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("near.json");
    std::fs::write(&file, r#"{"spaces":[{"probs":[0.5,0.5000000001]},{"probs":[1]}],"edges":[[1,2]],"functions":{"2,1":[[2],[2]]}}"#).unwrap();
    let r = run(&dir, "near", &["count", "--input", path(&file)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let d = r.report["details"]["density"].as_f64().unwrap();
    assert!((d - 2.0).abs() < 1e-12);
}

#[test]
fn violations_and_budgets_have_their_codes() {
    let dir = TempDir::new().unwrap();
    let parity = fixture("parity.json");
    let r = run(&dir, "thr", &["cutnorm", "--input", path(&parity), "--delta-threshold", "0.1"]);
    assert_eq!(r.code, 1);
    assert!(!cert(&r.report, "uniform[1,2]")["holds"].as_bool().unwrap());
    let r = run(&dir, "sampled", &["cutnorm", "--input", path(&parity), "--mode", "sampled"]);
    assert_eq!(r.code, 2);
    let sparse = fixture("triangle_sparse.json");
    let r = run(&dir, "budget", &["cutnorm", "--input", path(&sparse), "--budget", "4"]);
    assert_eq!(r.code, 3);
    assert_eq!(r.report["status"], "budget-exhausted");
    let r = run(&dir, "greedy", &["cutnorm", "--input", path(&sparse), "--budget", "4", "--mode", "greedy"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(cert(&r.report, "cutNorm[1,2]")["oracleMode"], "greedy");
}

#[test]
fn cyclic_majorant_of_a_sparse_set_is_flagged() {
    let dir = TempDir::new().unwrap();
    let r = run(&dir, "dense", &["check-pseudo", "--k", "3", "--n", "5", "--density", "1"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(cert(&r.report, "P1")["oracleMode"], "exact");
    let r = run(&dir, "sparse", &["check-pseudo", "--k", "3", "--n", "5", "--density", "0.6"]);
    assert_eq!(r.code, 1);
    assert!(!r.report["certificates"].as_array().unwrap().iter().all(|c| c["holds"] == true));
}

#[test]
fn removal_on_a_triangle_free_instance() {
    let dir = TempDir::new().unwrap();
    let r = run(&dir, "rem", &["remove", "--input", path(&fixture("triangle_sparse.json"))]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(cert(&r.report, "emptyIntersection")["achieved"], 0.0);
    for key in ["1,2", "1,3", "2,3"] {
        for t in ["t1", "t2", "t3"] {
            let c = cert(&r.report, &format!("{t}[{key}]"));
            assert!(c["achieved"].as_f64().unwrap() <= 0.2 / 3.0 + 1e-12);
        }
    }
}

/// Every subcommand, as run by the determinism and verify tests.
fn every_stage() -> Vec<(&'static str, Vec<String>, Option<PathBuf>)> {
    let ones = fixture("triangle_ones.json");
    let sparse = fixture("triangle_sparse.json");
    let parity = fixture("parity.json");
    let with = |args: &[&str], inst: &Path| {
        let mut v: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        v.extend(["--input".to_string(), path(inst).to_string()]);
        v
    };
    let bare = |args: &[&str]| args.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    vec![
        ("cutnorm", with(&["cutnorm"], &parity), Some(parity.clone())),
        ("cutnorm-greedy", with(&["cutnorm", "--mode", "greedy", "--edge", "2,3"], &sparse), Some(sparse.clone())),
        ("decompose", with(&["decompose"], &sparse), Some(sparse.clone())),
        ("check-pseudo", with(&["check-pseudo"], &ones), Some(ones.clone())),
        ("check-pseudo-direct", with(&["check-pseudo", "--direct"], &ones), Some(ones.clone())),
        ("check-pseudo-cyclic", bare(&["check-pseudo", "--k", "3", "--n", "7", "--density", "0.6", "--budget", "2000"]), None),
        ("count", with(&["count"], &sparse), Some(sparse.clone())),
        ("remove", with(&["remove"], &sparse), Some(sparse.clone())),
        ("zn-demo", bare(&["zn-demo", "--check", "--budget", "4000"]), None),
        ("schedule", bare(&["schedule", "--c", "2", "--p", "3"]), None),
    ]
}

#[test]
fn report_bodies_are_identical_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    for (tag, args, _) in every_stage() {
        let mut first: Option<Vec<u8>> = None;
        for threads in ["1", "2", "8"] {
            let mut a: Vec<&str> = args.iter().map(String::as_str).collect();
            a.extend(["--seed", "5", "--threads", threads, "--no-meta"]);
            let r = run(&dir, &format!("{tag}-{threads}"), &a);
            assert!(!r.bytes.is_empty(), "{tag}: no report ({})", r.stderr);
            assert!(r.report.get("meta").is_none());
            match &first {
                None => first = Some(r.bytes),
                Some(b) => assert!(*b == r.bytes, "{tag}: report differs at {threads} threads"),
            }
        }
    }
}

#[test]
fn meta_is_present_unless_suppressed() {
    let dir = TempDir::new().unwrap();
    let r = run(&dir, "meta", &["schedule", "--threads", "2"]);
    assert_eq!(r.report["meta"]["threads"], 2);
}

#[test]
fn reports_verify_from_their_witnesses() {
    let dir = TempDir::new().unwrap();
    for (tag, args, inst) in every_stage() {
        let a: Vec<&str> = args.iter().map(String::as_str).collect();
        let r = run(&dir, tag, &a);
        assert!(!r.bytes.is_empty(), "{tag}: {}", r.stderr);
        let report = dir.path().join(format!("{tag}.json"));
        let mut v = vec!["verify", "--report", path(&report)];
        if let Some(i) = &inst {
            v.extend(["--input", path(i)]);
        }
        let check = run(&dir, &format!("{tag}-verify"), &v);
        assert_eq!(check.code, 0, "{tag}: {}", check.report);
        assert_eq!(check.report["details"]["originalExitCode"], r.report["exitCode"]);
    }
}

#[test]
fn tampered_reports_fail_verification() {
    let dir = TempDir::new().unwrap();
    let parity = fixture("parity.json");
    let r = run(&dir, "p", &["cutnorm", "--input", path(&parity)]);
    let mut report = r.report.clone();
    report["certificates"][0]["achieved"] = 0.3.into();
    let bad = dir.path().join("tampered.json");
    std::fs::write(&bad, serde_json::to_vec(&report).unwrap()).unwrap();
    let v = run(&dir, "pv", &["verify", "--report", path(&bad), "--input", path(&parity)]);
    assert_eq!(v.code, 1);

    let mut report = r.report;
    report["inputs"]["seed"] = 99.into();
    std::fs::write(&bad, serde_json::to_vec(&report).unwrap()).unwrap();
    let v = run(&dir, "pd", &["verify", "--report", path(&bad), "--input", path(&parity)]);
    assert_eq!(v.code, 1);
    assert!(!cert(&v.report, "inputsDigest")["holds"].as_bool().unwrap());
}
