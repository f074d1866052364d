use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;
use slalom::corpus;
use slalom::scales::ScaleSeq;

fn slalom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slalom"))
        .args(args)
        .output()
        .expect("spawn")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn lines(o: &Output) -> Vec<Value> {
    stdout(o)
        .lines()
        .map(|l| serde_json::from_str(l).expect("json line"))
        .collect()
}

fn write_json(dir: &Path, name: &str, v: &impl serde::Serialize) -> String {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn covernum_exact_prints_three() {
    let o = slalom(&["covernum", "--f", "3,3", "--g", "2,2", "--exact"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "3\n");
}

#[test]
fn covernum_bounds_without_exact() {
    let o = slalom(&["covernum", "--f", "3,3", "--g", "2,2"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "lower 3\nupper 4\n");
}

#[test]
fn reduce_allfn_passes_condition_c() {
    let o = slalom(&["reduce", "--system", "allfn", "--n", "2", "--blocks", "2", "--check-c"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(lines(&o).iter().all(|l| l["pass"] == true));
}

#[test]
fn reduce_literal_fails_with_exit_one() {
    let o = slalom(&[
        "reduce",
        "--system",
        "allfn-literal",
        "--n",
        "2",
        "--blocks",
        "3",
        "--check-c",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(lines(&o).iter().any(|l| l["pass"] == false));
}

#[test]
fn demo_t1_passes() {
    let o = slalom(&["demo", "--scale", "T1"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let ls = lines(&o);
    assert!(ls.len() > 10);
    assert!(ls.iter().all(|l| l["pass"] == true));
}

#[test]
fn demo_is_byte_identical() {
    let a = slalom(&["--seed", "11", "demo", "--instances", "5"]);
    let b = slalom(&["--seed", "11", "demo", "--instances", "5"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(slalom(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(slalom(&["covernum", "--f", "3"]).status.code(), Some(2));
    assert_eq!(slalom(&["demo", "--scale", "nope"]).status.code(), Some(2));
    assert_eq!(slalom(&["covernum", "--f", "3,3", "--g", "2"]).status.code(), Some(2));
}

#[test]
fn condition_validate_from_file_and_stdin() {
    let dir = tempfile::tempdir().unwrap();
    let good = r#"{"depth":2,"coords":{"a":{"triple":{"f":[4,16],"g":[2,2],"h":[2,2]},"nodes":[[],[0],[1],[0,0],[0,1],[0,2],[0,3],[1,0],[1,1],[1,2],[1,3]]}}}"#;
    let bad = r#"{"depth":2,"coords":{"a":{"triple":{"f":[4,16],"g":[2,2],"h":[2,2]},"nodes":[[],[0],[1],[0,0],[0,1],[1,0],[1,1]]}}}"#;
    let gp = dir.path().join("good.json");
    std::fs::write(&gp, good).unwrap();
    let o = slalom(&["condition", "validate", "--file", gp.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));

    let mut child = Command::new(env!("CARGO_BIN_EXE_slalom"))
        .args(["condition", "validate", "--file", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(bad.as_bytes()).unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("split-norm"));
}

#[test]
fn condition_unreadable_file_is_usage_error() {
    let o = slalom(&["condition", "validate", "--file", "/nonexistent/c.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn game_transcript_fuses() {
    for sp in ["minimal", "thinning", "widening"] {
        let o = slalom(&["--seed", "3", "game", "play", "--rounds", "5", "--spendthrift", sp]);
        assert!(o.status.success(), "{sp}: {}", stdout(&o));
        assert!(
            lines(&o)
                .iter()
                .any(|l| l["check"] == "fused-valid" && l["pass"] == true),
            "{sp}"
        );
    }
}

#[test]
fn extract_from_files() {
    let scale = ScaleSeq::preset("T2").unwrap();
    let inst = corpus::random_extraction_instance(&mut corpus::rng(21), &scale, 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let c = write_json(dir.path(), "c.json", &inst.condition);
    let n = write_json(dir.path(), "n.json", &inst.name);
    let x = write_json(dir.path(), "xi.json", &inst.xi);
    let a: Vec<String> = inst.a.iter().map(|id| id.to_string()).collect();
    let mut args = vec!["extract", "--condition", &c, "--name", &n, "--xi", &x];
    let joined = a.join(",");
    if !a.is_empty() {
        args.extend(["--A", &joined]);
    }
    let o = slalom(&args);
    assert!(o.status.success(), "{}", stdout(&o));
}

#[test]
fn norm_table_and_completeness() {
    let o = slalom(&["norm", "--g", "2,2", "--h", "2,2", "--f", "8,16"]);
    assert!(o.status.success());
    let o = slalom(&["norm", "--g", "4", "--h", "2", "--complete", "2,1", "--size", "12"]);
    assert!(o.status.success(), "{}", stdout(&o));
}

#[test]
fn scale_and_triple_generators() {
    assert!(slalom(&["scale", "--scale", "T2"]).status.success());
    assert!(
        slalom(&["triple", "--scale", "BLASS", "--generate", "blass", "--path", "0,1"])
            .status
            .success()
    );
    assert!(slalom(&["triple", "--scale", "SQ", "--generate", "square"])
        .status
        .success());
}
