//! Acceptance run: one PASS/FAIL line per criterion. Exits nonzero when any
//! criterion fails.

use std::time::{Duration, Instant};

use rlz::driver::*;
use rlz::syntax::*;
use rlz::verify::{realizes, Verdict};
use serde_json::Value;

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn cfg(level: Level) -> GenConfig {
    GenConfig::new(level, SEED)
}

fn all_pass(r: &Report, cases: usize) -> bool {
    r.pass == cases && r.fail == 0 && r.inconclusive == 0
}

fn summary(r: &Report) -> String {
    let mut s = format!("{} {}: {}/{} pass, {} fail, {} inconclusive", r.suite, r.level, r.pass, r.cases, r.fail, r.inconclusive);
    if let Some(f) = &r.first_failure {
        s.push_str(&format!(" [first failure case {} seed {}: {}]", f.case, f.seed, f.message));
    }
    s
}

/// Runs `rlz --json verify` and returns (verdict, weak-head steps, elapsed).
fn cli_verify(level: &str, ty: &str, term: &str) -> (String, u64, Duration) {
    let start = Instant::now();
    let out = dispatch(["rlz", "--json", "verify", "--calculus", level, "--type", ty, "--term", term]);
    let elapsed = start.elapsed();
    let last: Value = out.stdout.lines().last().and_then(|l| serde_json::from_str(l).ok()).unwrap_or(Value::Null);
    (last["verdict"].as_str().unwrap_or("error").to_string(), last["steps"].as_u64().unwrap_or(u64::MAX), elapsed)
}

fn worked_examples() -> Outcome {
    let examples = [
        ("K", "st", "#a -> #b -> #a", "\\x.\\y.x"),
        ("S", "st", "(#a -> #b -> #c) -> (#a -> #b) -> #a -> #c", "\\x.\\y.\\z. x z (y z)"),
        ("conj-intro", "f", "#a -> #b -> forall c. (#a -> #b -> c) -> c", "\\x.\\y. /\\c. \\k. k x y"),
        ("conj-elim", "f", "(forall c. (#a -> #b -> c) -> c) -> #a", "\\p. p [#a] (\\x.\\y. x)"),
        (
            "leibniz-sym",
            "fw",
            "(forall P:Prop -> Prop. P #a -> P #b) -> (forall P:Prop -> Prop. P #b -> P #a)",
            "\\e. /\\P:Prop -> Prop. \\x. e [\\c:Prop. P c -> P #a] (\\y. y) x",
        ),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, level, ty, term) in examples {
        let (verdict, steps, elapsed) = cli_verify(level, ty, term);
        pass &= verdict == "realized" && steps < 200 && elapsed < Duration::from_secs(1);
        parts.push(format!("{name} {verdict} in {steps} steps, {:.1} ms", elapsed.as_secs_f64() * 1e3));
    }
    outcome(pass, parts.join("; "))
}

fn sweep(suite: SuiteName, levels: &[Level], cases: usize, depth: usize) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for &l in levels {
        let r = run(suite, &cfg(l).with_depth(depth), cases);
        pass &= all_pass(&r, cases);
        parts.push(summary(&r));
    }
    outcome(pass, parts.join("; "))
}

fn soundness() -> Outcome {
    let start = Instant::now();
    let mut o = sweep(SuiteName::Soundness, &[Level::ST, Level::F, Level::FOmega], 500, 6);
    let elapsed = start.elapsed();
    o.pass &= elapsed < Duration::from_secs(60);
    o.detail.push_str(&format!("; depth 6, {:.2} s total", elapsed.as_secs_f64()));
    o
}

fn consistency() -> Outcome {
    let r = run(SuiteName::Consistency, &cfg(Level::ST), 1000);
    // Fuel exhaustion and stuck runs both count as "not realized".
    outcome(r.fail == 0 && r.pass == 1000, format!("{} (0 realized required)", summary(&r)))
}

fn weighted_identity() -> Outcome {
    let mut constructed = 0;
    let mut failures = 0;
    let mut first = None;
    let mut i = 0u64;
    while constructed < 200 && i < 2000 {
        let c = cfg(Level::F).with_seed(sub_seed(SEED ^ 0x5757, i));
        match weighted_identity_case(&c) {
            CaseResult::Pass => constructed += 1,
            CaseResult::Fail { message, .. } => {
                constructed += 1;
                failures += 1;
                first.get_or_insert(message);
            }
            CaseResult::Inconclusive(_) => {}
        }
        i += 1;
    }
    let mut detail = format!("{constructed} instances from {i} seeds, {failures} violations");
    if let Some(m) = first {
        detail.push_str(&format!(" [first: {m}]"));
    }
    outcome(constructed == 200 && failures == 0, detail)
}

fn extraction() -> Outcome {
    let mut o = sweep(SuiteName::Extraction, &[Level::ST, Level::F], 300, 4);
    let w = weighted_identity();
    o.pass &= w.pass;
    o.detail.push_str(&format!("; weighted identity: {}", w.detail));
    o
}

/// Closed beta-normal pure terms of height at most `h`, where variables have
/// height 0 and each abstraction or application adds one to the highest child.
fn normal_terms(h: usize, scope: usize) -> Vec<Tm> {
    let mut out = neutral_terms(h, scope);
    if h > 0 {
        out.extend(normal_terms(h - 1, scope + 1).into_iter().map(|b| Term::lam("x", b)));
    }
    out
}

fn neutral_terms(h: usize, scope: usize) -> Vec<Tm> {
    let mut out: Vec<Tm> = (0..scope).map(Term::var).collect();
    if h > 0 {
        let args = normal_terms(h - 1, scope);
        for f in neutral_terms(h - 1, scope) {
            for a in &args {
                out.push(Term::app(f.clone(), a.clone()));
            }
        }
    }
    out
}

fn unique_identity_realizer() -> Outcome {
    let candidates = normal_terms(4, 0);
    let ctx = KindCtx::new().with_eig("a", Kind::Prop);
    let a_to_a = Type::arrow(Type::eig("a"), Type::eig("a"));
    let identity = Term::lam("x", Term::var(0));
    let mut realized = Vec::new();
    let mut exhausted = 0;
    for m in &candidates {
        match realizes(Level::ST, &ctx, &TypeEnv::new(), &a_to_a, m, 100_000) {
            Ok(Verdict::Realized(_)) => realized.push(m.clone()),
            Ok(Verdict::FuelExhausted(_)) => exhausted += 1,
            Ok(Verdict::Stuck { .. }) => {}
            Err(e) => return outcome(false, format!("{}: {e}", print_term(m))),
        }
    }
    let printed: Vec<String> = realized.iter().map(print_term).collect();
    outcome(
        realized == vec![identity] && exhausted == 0,
        format!("{} closed normal terms of height <= 4, realizers: [{}], {exhausted} undecided", candidates.len(), printed.join(", ")),
    )
}

type Check = Box<dyn Fn() -> Outcome>;

fn main() {
    let criteria: Vec<(&str, Check)> = vec![
        ("worked examples realized", Box::new(worked_examples)),
        ("generator correctness", Box::new(|| sweep(SuiteName::Correctness, &[Level::ST, Level::F, Level::FOmega], 200, 4))),
        ("soundness", Box::new(soundness)),
        ("consistency", Box::new(consistency)),
        ("weak-head determinism", Box::new(|| sweep(SuiteName::Determinism, &[Level::ST], 1000, 4))),
        ("weak-head subcommutativity", Box::new(|| sweep(SuiteName::Subcommutativity, &[Level::F], 500, 4))),
        ("diamond via complete development", Box::new(|| sweep(SuiteName::Diamond, &[Level::F], 500, 4))),
        ("standardization, empirical", Box::new(|| sweep(SuiteName::Standardization, &[Level::F], 200, 4))),
        ("standardization, witnessed", Box::new(|| sweep(SuiteName::Intersection, &[Level::F], 100, 4))),
        ("extraction round trip", Box::new(extraction)),
        ("identity is the unique realizer of #a -> #a", Box::new(unique_identity_realizer)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        failed += usize::from(!o.pass);
        println!(
            "{} criterion {:>2} ({name}): {} [{:.2} s]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
