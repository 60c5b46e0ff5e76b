use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tamecusp"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn enumerate_lists_eight_pairs() {
    let (code, out, _) = run(&["enumerate", "--p", "3", "--f", "1", "--n", "2", "--level", "1", "--M", "1"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["count"], 8);
    assert_eq!(v["pairs"].as_array().unwrap().len(), 8);
    let (_, csv, _) = run(&["enumerate", "--p", "3", "--n", "2", "--format", "csv"]);
    assert_eq!(csv.lines().count(), 9);
}

#[test]
fn verify_commands_exit_zero_on_pass() {
    let (code, out, _) = run(&["verify-converse", "--p", "3", "--f", "1", "--n", "2", "--M", "4"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["violations"], Value::Array(vec![]));
    assert_eq!(v["verdict"], "PASS");
    assert!(v["timing"]["elapsed_ms"].is_u64());
    let (code, _, _) = run(&["verify-gauss", "--p", "3", "--f", "1", "--n", "2", "--e", "1", "--chi-level", "1"]);
    assert_eq!(code, 0);
    let (code, _, _) = run(&["verify-stability", "--p", "7", "--n", "3", "--chi-level", "1"]);
    assert_eq!(code, 0);
    let (code, out, _) = run(&["verify-field-separation", "--p", "5", "--n", "3"]);
    assert_eq!(code, 0);
    assert!(out.contains("SKIPPED"));
}

#[test]
fn corrupted_fingerprint_exits_one() {
    let (code, out, _) = run(&["verify-converse", "--p", "3", "--n", "2", "--M", "4", "--corrupt-pair", "0:0"]);
    assert_eq!(code, 1);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["violations"].as_array().unwrap().len(), 1);
}

#[test]
fn usage_and_precondition_errors_exit_two() {
    for args in [
        vec!["verify-converse", "--p", "4", "--n", "2"],
        vec!["verify-converse", "--p", "3", "--bogus"],
        vec!["enumerate", "--p", "3", "--n", "2", "--level", "2"],
        vec!["enumerate", "--p", "3", "--n", "3"],
        vec!["verify-stability", "--p", "7", "--n", "2", "--chi-level", "1"],
        vec!["verify-gauss", "--p", "3", "--n", "3", "--e", "3", "--chi-level", "2", "--budget", "1"],
        vec!["verify-gauss", "--p", "3", "--n", "2", "--chi-level", "1"],
        vec!["verify-converse", "--p", "3", "--psi-unit", "3"],
        vec!["nonsense"],
    ] {
        let (code, out, err) = run(&args);
        assert_eq!(code, 2, "{args:?}: {out} {err}");
        assert!(!err.is_empty());
    }
}

#[test]
fn reports_identical_across_thread_counts() {
    for args in [
        vec!["verify-converse", "--p", "5", "--n", "2", "--M", "2"],
        vec!["verify-field-separation", "--p", "7", "--n", "2", "--samples", "25", "--seed", "3"],
        vec!["verify-stability", "--p", "7", "--n", "3", "--chi-level", "1"],
        vec!["verify-gauss", "--p", "3", "--n", "2", "--e", "2", "--chi-level", "1"],
    ] {
        let mut outs = Vec::new();
        for t in ["1", "3"] {
            let mut a = args.clone();
            a.extend(["--threads", t, "--no-timing"]);
            let (code, out, _) = run(&a);
            assert_eq!(code, 0);
            outs.push(out);
        }
        assert_eq!(outs[0], outs[1], "{args:?}");
    }
}

#[test]
fn epsilon_csv_flattens_cyclotomics() {
    let (code, out, _) = run(&["epsilon", "--p", "3", "--n", "2", "--format", "csv"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert!(lines.next().unwrap().ends_with("exponent,constant,constant_sqrt_q"));
    let row = lines.next().unwrap();
    // constant is ±1 at q = 3, level 1, so the √q part is zero
    assert!(row.ends_with(",1:1,1:0") || row.ends_with(",1:-1,1:0"), "{row}");
    let (code, out, _) = run(&["epsilon", "--p", "5", "--chi-level", "1"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["count"], 16);
}

#[test]
fn out_path_and_show() {
    let dir = std::env::temp_dir().join(format!("tamecusp-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let report = dir.join("r.json");
    let (code, out, _) = run(&["verify-converse", "--p", "3", "--n", "2", "--out", report.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let (code, shown, _) = run(&["show", report.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(shown.contains("converse: PASS (0 violations)"));

    let (_, listing, _) = run(&["enumerate", "--p", "3", "--n", "2"]);
    let v: Value = serde_json::from_str(&listing).unwrap();
    let pair_file = dir.join("pair.json");
    std::fs::write(&pair_file, serde_json::to_string(&v["pairs"][0]).unwrap()).unwrap();
    let (code, shown, err) = run(&["show", pair_file.to_str().unwrap(), "--p", "3"]);
    assert_eq!(code, 0, "{err}");
    assert!(shown.contains("of degree 2 over F"));
    std::fs::remove_dir_all(&dir).unwrap();
}
