use std::process::Command;

use rlz::driver::*;
use serde_json::Value;

fn rlz(args: &[&str]) -> CliOutput {
    dispatch(std::iter::once("rlz").chain(args.iter().copied()))
}

fn binary(args: &[&str], fuel_env: Option<&str>) -> (i32, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rlz"));
    cmd.args(args).env_remove("RLZ_FUEL");
    if let Some(f) = fuel_env {
        cmd.env("RLZ_FUEL", f);
    }
    let out = cmd.output().expect("run rlz");
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn k_is_realized() {
    let (code, out) = binary(&["verify", "--calculus", "st", "--type", "#a -> #b -> #a", "--term", "\\x.\\y.x"], None);
    assert_eq!(code, 0);
    assert!(out.contains("realized"), "{out}");
}

#[test]
fn omega_runs_out_of_fuel() {
    let (code, _) = binary(&["reduce", "--calculus", "st", "--strategy", "wh", "--fuel", "5", "(\\x. x x)(\\x. x x)"], None);
    assert_eq!(code, 3);
}

#[test]
fn identity_is_stuck_at_an_eigenvariable() {
    let (code, out) = binary(&["verify", "--calculus", "st", "--type", "#a", "--term", "\\x.x"], None);
    assert_eq!(code, 1);
    assert!(out.contains("stuck at: ver(#a, \\x. x)"), "{out}");
}

#[test]
fn fuel_comes_from_the_environment() {
    let omega = ["reduce", "(\\x. x x)(\\x. x x)"];
    let (code, out) = binary(&omega, Some("7"));
    assert_eq!(code, 3);
    assert!(out.contains("after 7 steps"), "{out}");
    let (_, out) = binary(&["reduce", "--fuel", "3", "(\\x. x x)(\\x. x x)"], Some("7"));
    assert!(out.contains("after 3 steps"), "{out}");
}

#[test]
fn usage_errors() {
    assert_eq!(rlz(&["verify", "--type", "#a"]).code, 2);
    assert_eq!(rlz(&["verify", "--type", "#a ->", "--term", "x"]).code, 2);
    assert_eq!(rlz(&["--calculus", "coc", "parse", "x"]).code, 2);
    assert_eq!(rlz(&["suite", "nope"]).code, 2);
    let out = rlz(&["verify", "--calculus", "f", "--type", "a -> a", "--term", "\\x. x"]);
    assert_eq!(out.code, 2, "free type variables need --close-tvars");
    assert_eq!(rlz(&["verify", "--calculus", "f", "--type", "a -> a", "--term", "\\x. x", "--close-tvars"]).code, 0);
}

#[test]
fn verify_json_is_a_trace_then_a_verdict() {
    let out = rlz(&["--json", "verify", "--calculus", "f", "--type", "#a -> #b -> forall c. (#a -> #b -> c) -> c", "--term", "\\x.\\y. /\\c. \\k. k x y"]);
    assert_eq!(out.code, 0);
    let lines: Vec<Value> = out.stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[0]["strategy"], "wh");
    assert_eq!(lines[1]["step"], 1);
    assert_eq!(lines[lines.len() - 2]["outcome"], "StarReached");
    let verdict = &lines[lines.len() - 1];
    assert_eq!(verdict["verdict"], "realized");
    assert_eq!(verdict["steps"].as_u64().unwrap() as usize, lines.len() - 3);
}

#[test]
fn trace_file_matches_json_output() {
    let path = std::env::temp_dir().join(format!("rlz-trace-{}.jsonl", std::process::id()));
    let p = path.to_str().unwrap();
    let out = rlz(&["reduce", "--trace", p, "--strategy", "lo", "(\\x. \\y. x) ((\\z. z) w)"]);
    assert_eq!(out.code, 0);
    let written = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(written, rlz(&["--json", "reduce", "--strategy", "lo", "(\\x. \\y. x) ((\\z. z) w)"]).stdout);
    assert_eq!(written.lines().count(), 4);
}

#[test]
fn json_output_is_byte_identical_across_runs() {
    let runs: [&[&str]; 6] = [
        &["--json", "--seed", "9", "gen", "typed", "--calculus", "fw"],
        &["--json", "--seed", "9", "gen", "metaterm", "--calculus", "f"],
        &["--json", "--seed", "4", "reduce", "--strategy", "random", "(\\x. x x) ((\\y. y) (\\z. (\\w. w) z))"],
        &["--json", "--seed", "3", "suite", "soundness", "--calculus", "f", "--cases", "40"],
        &["--json", "--seed", "3", "suite", "diamond", "--calculus", "f", "--cases", "40"],
        &["--json", "extract", "--calculus", "f", "--type", "(forall c. (#a -> #b -> c) -> c) -> #a", "--term", "\\p. p [#a] (\\x.\\y. x)"],
    ];
    for args in runs {
        let first = binary(args, None);
        assert_eq!(first.0, 0, "{args:?}");
        assert_eq!(binary(args, None), first, "{args:?}");
    }
}

#[test]
fn extract_reports_normal_form_and_size() {
    let out = rlz(&["--json", "extract", "--type", "#a -> #b -> #a", "--term", "(\\f. f) (\\x.\\y.x)"]);
    assert_eq!(out.code, 0);
    let v: Value = serde_json::from_str(out.stdout.trim()).unwrap();
    assert_eq!(v["normal_form"], "\\x. \\y. x");
    assert!(v["derivation"]["rule"].is_string());
    assert!(v["proof_size"].as_u64().unwrap() > 0);
    assert_eq!(rlz(&["extract", "--type", "#a -> #b", "--term", "\\x.x"]).code, 1);
}

#[test]
fn check_and_parse() {
    assert_eq!(rlz(&["check", "--type", "#a -> #a", "--term", "\\x.x"]).code, 0);
    assert_eq!(rlz(&["check", "--type", "#a -> #b", "--term", "\\x.x"]).code, 1);
    let out = rlz(&["parse", "--calculus", "fw", "--as", "type", "forall P:Prop -> Prop. P #a -> P #b"]);
    assert_eq!(out.stdout.trim(), "forall P:Prop -> Prop. P #a -> P #b");
    assert_eq!(rlz(&["parse", "--as", "kind", "--calculus", "fw", "(Prop -> Prop) -> Prop"]).code, 0);
}

#[test]
fn shipped_corpus_revalidates() {
    let out = rlz(&["corpus"]);
    assert_eq!(out.code, 0, "{}", out.stdout);
    let entries = load_corpus(&[default_corpus_dir()]).unwrap();
    let names: Vec<&str> = entries.iter().map(|e| e.name.as_str()).collect();
    for required in [
        "k-axiom",
        "s-axiom",
        "conjunction-intro",
        "conjunction-elim-first",
        "leibniz-symmetry",
        "generator-implication",
        "generator-type-variable",
        "wrong-projection",
        "identity-against-eigenvariable",
        "identity-against-distinct-eigenvariables",
    ] {
        assert!(names.contains(&required), "missing corpus entry {required}");
    }
    for e in &entries {
        let o = e.run(1_000_000);
        assert!(o.ok, "{o}");
    }
}

#[test]
fn corpus_failures_are_reported() {
    let dir = std::env::temp_dir().join(format!("rlz-corpus-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("bad.rlz"), "name: bad\nlevel: st\ntype: #a\nterm: \\x.x\nexpect: realized\n").unwrap();
    let out = rlz(&["corpus", dir.to_str().unwrap()]);
    std::fs::remove_dir_all(&dir).unwrap();
    assert_eq!(out.code, 1);
    assert!(out.stdout.contains("FAIL bad: stuck"), "{}", out.stdout);
}
