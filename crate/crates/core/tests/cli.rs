use std::fs;
use std::process::Command;

use k0group::k0ring::K0Element;

fn k0(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_k0group"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn data(rel: &str) -> String {
    format!("{}/data/{rel}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn ring_text_and_json() {
    let g = data("groups/skip7.json");
    let (code, text, _) = k0(&["ring", "--group", &g]);
    assert_eq!(code, 0);
    assert!(text.contains("q = 3"));
    let (code, json, _) = k0(&["ring", "--group", &g, "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["q"], 3);
    assert_eq!(v["certificate"]["evidence"]["kind"], "exact-gcd");
    assert_eq!(
        v["certificate"]["evidence"]["gcd_trace"],
        serde_json::json!([6])
    );

    let (_, text, _) = k0(&["ring", "--group", &data("groups/skip3.json")]);
    assert!(text.contains("Fermat prime missing from S: 3"));
    let (_, text, _) = k0(&["ring", "--group", &data("groups/s235.json")]);
    assert!(text.contains("trivial") && text.contains("finitely many primes"));
}

#[test]
fn eval_formats_agree() {
    let g = data("groups/skip7.json");
    for (formula, shown) in [
        ("0 < x0 and x0 < 1", "2 + 0*X (mod 3)"),
        ("0 < x0", "0 + 1*X (mod 3)"),
        ("x0 = x0", "1 + 2*X (mod 3)"),
    ] {
        let (code, text, _) = k0(&["eval", "--group", &g, formula]);
        assert_eq!((code, text.trim()), (0, shown));
        let (_, json, _) = k0(&["--format", "json", "eval", "--group", &g, formula]);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let el: K0Element = serde_json::from_value(v["value"].clone()).unwrap();
        assert_eq!(el.to_string(), shown);
    }
}

#[test]
fn eval_from_file_with_trace() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.txt");
    fs::write(&f, "div(7, x0) and x0 > 0\n").unwrap();
    let g = data("groups/skip7.json");
    let (code, text, _) = k0(&[
        "eval",
        "--group",
        &g,
        "--file",
        f.to_str().unwrap(),
        "--trace",
    ]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("L = 7"));
    let (_, json, _) = k0(&[
        "eval",
        "--group",
        &g,
        "--file",
        f.to_str().unwrap(),
        "--trace",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["trace"]["L"], 7);
}

#[test]
fn exit_codes() {
    let g = data("groups/skip7.json");
    assert_eq!(k0(&["eval", "--group", &g, "0 < "]).0, 2);
    assert_eq!(
        k0(&["eval", "--group", "/no/such/group.json", "x0 > 0"]).0,
        2
    );
    assert_eq!(k0(&["eval", "--group", &g, "exists x1 (x0 < x1)"]).0, 2);
    assert_eq!(
        k0(&["eval", "--group", &g, "--max-tuples", "3", "div(7, x0)"]).0,
        3
    );
    assert_eq!(
        k0(&["eval", "--group", &g, "--max-tuples", "0", "x0 > 0"]).0,
        2
    );
    assert_eq!(k0(&["witness", "3", "3"]).0, 2);
    assert_eq!(k0(&["witness", "7", "3", "--bound", "40"]).0, 3);
    assert_eq!(k0(&["check", "--suite", "/no/such/suite.json"]).0, 2);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("g.json");
    fs::write(&bad, r#"{"divisible": {"kind": "finite", "primes": []}}"#).unwrap();
    let (code, _, err) = k0(&["ring", "--group", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(!err.is_empty());
}

#[test]
fn witness_output() {
    let (code, text, _) = k0(&["witness", "7", "3"]);
    assert_eq!(code, 0);
    assert!(text.contains("Q ≡ 20 (mod 21); smallest prime 41"));
    let (_, json, _) = k0(&["witness", "2", "3", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["prime"], 5);
}

#[test]
fn check_suites() {
    let small = |mutation: &str| {
        format!(
            r#"{{"version": 1, "seed": 3, {mutation}
               "groups": [{{"divisible": {{"kind": "cofinite", "primes": [7]}}}}],
               "trials": {{"additivity": 10, "multiplicativity": 10, "bijection": 5,
                          "fact_div": 50, "decomposition": 5, "decomposition_points": 40,
                          "unary_table": 10, "ring_laws": 20}}}}"#
        )
    };
    let dir = tempfile::tempdir().unwrap();
    let ok = dir.path().join("ok.json");
    fs::write(&ok, small("")).unwrap();
    let (code, text, _) = k0(&["check", "--suite", ok.to_str().unwrap()]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("all checks passed"));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, small(r#""mutation": "corrupt-ring","#)).unwrap();
    assert_eq!(k0(&["check", "--suite", bad.to_str().unwrap()]).0, 1);
    assert_eq!(
        k0(&[
            "check",
            "--suite",
            ok.to_str().unwrap(),
            "--mutation",
            "corrupt-ring"
        ])
        .0,
        1
    );

    let (code, json, _) = k0(&["check", "--suite", ok.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["groups"][0]["q"], 3);
}

#[test]
fn bundled_suite_parses() {
    let cfg = k0group::harness::SuiteConfig::load(data("suites/default.json")).unwrap();
    assert_eq!(cfg.groups.len(), 3);
    let corrupt = k0group::harness::SuiteConfig::load(data("suites/corrupt.json")).unwrap();
    assert!(corrupt.mutation.is_some());
}
