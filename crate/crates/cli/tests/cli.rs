use std::path::Path;
use std::process::{Command, Output};

use semiclass::io::{read_spread_set, write_spread_set, MatrixWitnessFile};
use semiclass::spreadset::{desarguesian, first_twisted_field};
use semiclass::CodeParams;
use serde_json::Value;

fn semiclass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semiclass")).args(args).env_remove("SEMICLASS_THREADS").output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_field_files(dir: &Path) -> (String, String) {
    let p = CodeParams::new(2, 2, 4).unwrap();
    let field = dir.join("field.json");
    let twisted = dir.join("twisted.json");
    write_spread_set(&field, &desarguesian(&p).unwrap()).unwrap();
    write_spread_set(&twisted, &first_twisted_field(&p, 2).unwrap()).unwrap();
    (field.to_str().unwrap().into(), twisted.to_str().unwrap().into())
}

#[test]
fn usage_errors_exit_with_2() {
    assert_eq!(semiclass(&[]).status.code(), Some(2));
    assert_eq!(semiclass(&["classify", "--q", "x"]).status.code(), Some(2));
    assert_eq!(semiclass(&["--help"]).status.code(), Some(0));
}

#[test]
fn one_ranks_of_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let (field, _) = write_field_files(dir.path());
    let out = semiclass(&["invariants", "--input", &field, "--m", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["ranks"], serde_json::json!({ "0": 1, "8": 255 }));
    assert_eq!(v["rank_multiset"], "0:1;8:255");
}

#[test]
fn direct_and_fast_ranks_agree() {
    let dir = tempfile::tempdir().unwrap();
    let (_, twisted) = write_field_files(dir.path());
    let fast = json(&semiclass(&["invariants", "--input", &twisted, "--m", "2"]));
    let direct = json(&semiclass(&["invariants", "--input", &twisted, "--m", "2", "--direct"]));
    assert_eq!(fast["ranks"], direct["ranks"]);
}

#[test]
fn equivalence_exit_codes_and_witness() {
    let dir = tempfile::tempdir().unwrap();
    let (field, twisted) = write_field_files(dir.path());
    let witness = dir.path().join("w.json");
    let out = semiclass(&["equiv", "--a", &twisted, "--b", &twisted, "--emit-witness", witness.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["equivalent"], true);
    let file: MatrixWitnessFile = serde_json::from_str(&std::fs::read_to_string(&witness).unwrap()).unwrap();
    let c = read_spread_set(Path::new(&twisted)).unwrap();
    assert!(file.to_witness().unwrap().verify(&c, &c).unwrap());

    let out = semiclass(&["equiv", "--a", &field, "--b", &twisted]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["equivalent"], false);

    let missing = dir.path().join("missing.json");
    assert_eq!(semiclass(&["equiv", "--a", &field, "--b", missing.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn verify_lemmas_reports_corruption() {
    let ok = semiclass(&["verify-lemmas", "--trials", "5"]);
    assert_eq!(ok.status.code(), Some(0));
    let bad = semiclass(&["verify-lemmas", "--trials", "5", "--corrupt-phibar"]);
    assert_eq!(bad.status.code(), Some(1));
    let report = json(&bad);
    let failing: Vec<&Value> =
        report["properties"].as_array().unwrap().iter().filter(|p| p["failures"].as_u64().unwrap() > 0).collect();
    assert!(failing.iter().all(|p| p["counterexample"].is_string()));
    assert!(!failing.is_empty());
}

#[test]
fn classify_writes_results_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let ckpt = dir.path().join("ckpt.json");
    let args = ["classify", "--q", "2", "--n", "2", "--s", "2", "--out", out_dir.to_str().unwrap(), "--checkpoint", ckpt.to_str().unwrap()];
    let out = semiclass(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&out);
    assert_eq!(summary["classes"], 2);
    for i in 1..=2 {
        let c = read_spread_set(&out_dir.join(format!("class_{i:04}.json"))).unwrap();
        assert!(c.is_semifield_code());
        assert_eq!(c.dim(), 4);
    }
    let stats = std::fs::read_to_string(out_dir.join("stats.csv")).unwrap();
    assert_eq!(stats.lines().count(), 5);
    let inv = std::fs::read_to_string(out_dir.join("invariants.csv")).unwrap();
    assert_eq!(inv.lines().count(), 3);

    let resumed = semiclass(&[&args[..], &["--resume"]].concat());
    assert_eq!(resumed.status.code(), Some(0));
    assert_eq!(json(&resumed)["classes"], 2);
}

#[test]
fn classify_options_agree() {
    let dir = tempfile::tempdir().unwrap();
    let run = |extra: &[&str]| {
        let out_dir = dir.path().join(extra.join("_"));
        let mut args = vec!["classify", "--q", "2", "--n", "2", "--s", "2", "--out", out_dir.to_str().unwrap()];
        args.extend_from_slice(extra);
        json(&semiclass(&args))["classes"].clone()
    };
    let base = run(&[]);
    assert_eq!(base, 2);
    for extra in [&["--no-invariants"][..], &["--no-refine", "--key-steps", "all"], &["--identity-seed"]] {
        assert_eq!(run(extra), base, "{extra:?}");
    }
}
