//! Property suites over generated instances. Cases run in parallel; each
//! case derives its own seed from the configured one, so reports do not
//! depend on scheduling.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use super::gen::*;
use crate::extract::{beta_normalize, extract};
use crate::intersect::*;
use crate::reduction::*;
use crate::syntax::*;
use crate::typecheck::{check, KindStack};
use crate::verify::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SuiteName {
    Determinism,
    Subcommutativity,
    Diamond,
    Standardization,
    Soundness,
    Consistency,
    Universality,
    Extraction,
    Intersection,
    Correctness,
}

impl SuiteName {
    pub const ALL: [SuiteName; 10] = [
        SuiteName::Determinism,
        SuiteName::Subcommutativity,
        SuiteName::Diamond,
        SuiteName::Standardization,
        SuiteName::Soundness,
        SuiteName::Consistency,
        SuiteName::Universality,
        SuiteName::Extraction,
        SuiteName::Intersection,
        SuiteName::Correctness,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SuiteName::Determinism => "determinism",
            SuiteName::Subcommutativity => "subcommutativity",
            SuiteName::Diamond => "diamond",
            SuiteName::Standardization => "standardization",
            SuiteName::Soundness => "soundness",
            SuiteName::Consistency => "consistency",
            SuiteName::Universality => "universality",
            SuiteName::Extraction => "extraction",
            SuiteName::Intersection => "intersection",
            SuiteName::Correctness => "correctness",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SuiteError {
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
}

impl FromStr for SuiteName {
    type Err = SuiteError;

    fn from_str(s: &str) -> Result<SuiteName, SuiteError> {
        SuiteName::ALL.into_iter().find(|n| n.as_str() == s).ok_or_else(|| SuiteError::UnknownSuite(s.into()))
    }
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CaseResult {
    Pass,
    Fail { message: String, witness: Option<String> },
    Inconclusive(String),
}

fn fail(message: impl Into<String>, witness: Option<&Tm>) -> CaseResult {
    CaseResult::Fail { message: message.into(), witness: witness.map(print_term) }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub case: usize,
    pub seed: u64,
    pub message: String,
    /// The failing instance after shrinking, when the suite has one.
    pub witness: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub suite: SuiteName,
    pub level: Level,
    pub cases: usize,
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
    pub first_failure: Option<Failure>,
}

impl Report {
    pub fn ok(&self) -> bool {
        self.fail == 0
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "suite": self.suite.as_str(),
            "level": self.level.tag(),
            "cases": self.cases,
            "pass": self.pass,
            "fail": self.fail,
            "inconclusive": self.inconclusive,
        });
        if let Some(f) = &self.first_failure {
            v["first_failure"] = json!({"case": f.case, "seed": f.seed, "message": f.message, "witness": f.witness});
        }
        v
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({}): {} cases, {} pass, {} fail, {} inconclusive",
            self.suite, self.level, self.cases, self.pass, self.fail, self.inconclusive
        )?;
        if let Some(x) = &self.first_failure {
            write!(f, "\nfirst failure: case {} (seed {}): {}", x.case, x.seed, x.message)?;
            if let Some(w) = &x.witness {
                write!(f, "\n  witness: {w}")?;
            }
        }
        Ok(())
    }
}

const WORKER_STACK: usize = 256 << 20;

pub fn run_suite(name: &str, cfg: &GenConfig, cases: usize) -> Result<Report, SuiteError> {
    Ok(run(name.parse()?, cfg, cases))
}

pub fn run(suite: SuiteName, cfg: &GenConfig, cases: usize) -> Report {
    let work = || -> Vec<(usize, u64, CaseResult)> {
        (0..cases)
            .into_par_iter()
            .map(|i| {
                let seed = sub_seed(cfg.seed, i as u64);
                (i, seed, run_case(suite, &cfg.with_seed(seed)))
            })
            .collect()
    };
    // Diverging cases build very deep terms.
    let results = match rayon::ThreadPoolBuilder::new().stack_size(WORKER_STACK).build() {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    };
    let mut r = Report {
        suite,
        level: cfg.level,
        cases,
        pass: 0,
        fail: 0,
        inconclusive: 0,
        first_failure: None,
    };
    for (case, seed, res) in results {
        match res {
            CaseResult::Pass => r.pass += 1,
            CaseResult::Inconclusive(_) => r.inconclusive += 1,
            CaseResult::Fail { message, witness } => {
                r.fail += 1;
                if r.first_failure.is_none() {
                    r.first_failure = Some(Failure { case, seed, message, witness });
                }
            }
        }
    }
    r
}

/// One case of `suite`, fully determined by `cfg`.
pub fn run_case(suite: SuiteName, cfg: &GenConfig) -> CaseResult {
    match suite {
        SuiteName::Determinism => determinism_case(cfg),
        SuiteName::Subcommutativity => subcommutativity_case(cfg),
        SuiteName::Diamond => diamond_case(cfg),
        SuiteName::Standardization => standardization_case(cfg),
        SuiteName::Soundness => soundness_case(cfg),
        SuiteName::Consistency => consistency_case(cfg),
        SuiteName::Universality => universality_case(cfg),
        SuiteName::Extraction => extraction_case(cfg),
        SuiteName::Intersection => intersection_case(cfg),
        SuiteName::Correctness => correctness_case(cfg),
    }
}

// ---------------------------------------------------------------------------
// Shrinking

/// Child-index paths of all metaterm subterms, root first.
pub fn positions(t: &Tm) -> Vec<Vec<u8>> {
    fn go(t: &Tm, path: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        out.push(path.clone());
        for i in 0..2u8 {
            if let Some(c) = child(t, i, &mut KindStack::default()) {
                path.push(i);
                go(c, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(t, &mut Vec::new(), &mut out);
    out
}

/// Greedily replaces subterms by `star`, a free variable, or one of their
/// binder-free children while `still_fails` holds.
pub fn shrink(t: &Tm, still_fails: impl Fn(&Tm) -> bool) -> Tm {
    let mut cur = t.clone();
    let mut rounds = 0;
    'outer: while rounds < 200 {
        rounds += 1;
        for p in positions(&cur) {
            let sub = subterm_at(&cur, &Position(p.clone()), &mut KindStack::default()).unwrap().clone();
            let mut cands = vec![Term::star(), Term::free("x")];
            match &*sub {
                Term::App(f, a) | Term::Guard(f, a) => cands.extend([f.clone(), a.clone()]),
                Term::TyApp(f, _) | Term::Verif(_, f) | Term::Annot(f, _) => cands.push(f.clone()),
                _ => {}
            }
            for c in cands {
                if c.size() >= sub.size() {
                    continue;
                }
                let next = replace_at(&cur, &p, c);
                if still_fails(&next) {
                    cur = next;
                    continue 'outer;
                }
            }
        }
        break;
    }
    cur
}

// ---------------------------------------------------------------------------
// Reduction properties

fn determinism_case(cfg: &GenConfig) -> CaseResult {
    let m = gen_metaterm(cfg);
    let bad = |t: &Tm| wh_redexes(cfg.level, t).len() > 1;
    if bad(&m) {
        let w = shrink(&m, bad);
        return fail(format!("{} weak-head redexes", wh_redexes(cfg.level, &m).len()), Some(&w));
    }
    CaseResult::Pass
}

fn one_step_closure(red: &mut Reducer, t: &Tm) -> HashSet<Tm> {
    let mut out: HashSet<Tm> = red.wh_redexes(t).into_iter().filter_map(|(p, _)| red.step_at(t, &p)).map(|s| s.after).collect();
    out.insert(t.clone());
    out
}

/// The first pair of weak-head steps from `m` that does not join within
/// one step on each side.
fn unjoinable(level: Level, m: &Tm) -> Option<(Position, Position)> {
    let mut red = Reducer::new(level, default_ctx(m));
    let steps: Vec<Step> = red.wh_redexes(m).into_iter().filter_map(|(p, _)| red.step_at(m, &p)).collect();
    for (i, s1) in steps.iter().enumerate() {
        for s2 in &steps[i + 1..] {
            let a = one_step_closure(&mut red, &s1.after);
            let b = one_step_closure(&mut red, &s2.after);
            if a.is_disjoint(&b) {
                return Some((s1.position.clone(), s2.position.clone()));
            }
        }
    }
    None
}

fn subcommutativity_case(cfg: &GenConfig) -> CaseResult {
    let shape = Shape { redex_rich: true, ..Shape::default() };
    for j in 0..256 {
        let m = gen_metaterm_shaped(&cfg.with_seed(sub_seed(cfg.seed, j)), shape);
        if wh_redexes(cfg.level, &m).len() < 2 {
            continue;
        }
        return match unjoinable(cfg.level, &m) {
            None => CaseResult::Pass,
            Some((p, q)) => {
                let w = shrink(&m, |t| unjoinable(cfg.level, t).is_some());
                fail(format!("steps at {p} and {q} do not join"), Some(&w))
            }
        };
    }
    CaseResult::Inconclusive("no metaterm with two weak-head redexes found".into())
}

const REDUCT_CAP: usize = 50_000;

fn diamond_violation(m: &Tm) -> Result<Option<Position>, TooManyReducts> {
    let Ok(c) = complete_development(Level::F, m) else { return Ok(None) };
    let mut red = Reducer::new(Level::F, default_ctx(m));
    for (p, _) in red.redexes(m) {
        let Some(s) = red.step_at(m, &p) else { continue };
        if !par_reduces(&s.after, &c, REDUCT_CAP)? {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

fn diamond_case(cfg: &GenConfig) -> CaseResult {
    let cfg = GenConfig { level: Level::F, ..cfg.clone() };
    let m = gen_metaterm(&cfg);
    match diamond_violation(&m) {
        Ok(None) => CaseResult::Pass,
        Ok(Some(p)) => {
            let w = shrink(&m, |t| matches!(diamond_violation(t), Ok(Some(_))));
            fail(format!("the reduct at {p} does not simultaneously reduce to the complete development"), Some(&w))
        }
        Err(e) => CaseResult::Inconclusive(e.to_string()),
    }
}

/// A closed F metaterm together with a recorded random-strategy trace that
/// reaches `star` within `cfg.fuel` steps. Half of the candidates are
/// verification targets of generated judgments.
pub fn star_candidate(cfg: &GenConfig) -> Option<Trace> {
    for j in 0..64 {
        let seed = sub_seed(cfg.seed, 1000 + j);
        let c = GenConfig { level: Level::F, ..cfg.with_seed(seed) };
        let m = if j % 2 == 0 {
            let Ok(jd) = gen_typed_term(&c) else { continue };
            let cl = close_tvars(&jd.ctx, &jd.env, &jd.ty, &strip_annotations(&jd.term));
            let Ok(t) = build_target(Level::F, &cl.ctx, &cl.env, &cl.ty, &cl.term) else { continue };
            t
        } else {
            let t = gen_metaterm_shaped(&c, Shape { redex_rich: true, closed: true, ..Shape::default() });
            if !FreeNames::of_term(&t).terms.is_empty() {
                continue;
            }
            t
        };
        // The seeded run is repeated with recording only once it succeeds.
        let red = Reducer::new(Level::F, default_ctx(&m));
        if red.clone().reduce(&m, Strategy::Random(seed), cfg.fuel).outcome == Outcome::StarReached {
            return Some(red.recording(true).reduce(&m, Strategy::Random(seed), cfg.fuel));
        }
    }
    None
}

fn standardization_case(cfg: &GenConfig) -> CaseResult {
    let Some(tr) = star_candidate(cfg) else {
        return CaseResult::Inconclusive("no metaterm reaching star under the random strategy".into());
    };
    let m = &tr.initial;
    let wh = Reducer::new(Level::F, default_ctx(m)).reduce(m, Strategy::WeakHead, 4 * cfg.fuel);
    if wh.outcome == Outcome::StarReached {
        CaseResult::Pass
    } else {
        fail(format!("weak-head reduction ends {:?} after {} steps", wh.outcome, wh.step_count), Some(m))
    }
}

// ---------------------------------------------------------------------------
// Realizability properties

fn soundness_case(cfg: &GenConfig) -> CaseResult {
    let j = match gen_typed_term(cfg) {
        Ok(j) => j,
        Err(e) => return CaseResult::Inconclusive(e.to_string()),
    };
    let opts = VerifyOptions { close_free_tvars: true, record: false };
    let run = |t: &Tm| realizes_with(cfg.level, &j.ctx, &j.env, &j.ty, t, cfg.fuel, opts);
    match run(&j.term) {
        Ok(Verdict::Realized(_)) => CaseResult::Pass,
        Ok(Verdict::FuelExhausted(_)) => CaseResult::Inconclusive("fuel exhausted".into()),
        Ok(Verdict::Stuck { final_term, .. }) => {
            let still = |t: &Tm| {
                check(cfg.level, &j.ctx, &j.env, t, &j.ty).is_ok() && matches!(run(t), Ok(Verdict::Stuck { .. }))
            };
            let w = shrink(&j.term, still);
            fail(format!("stuck at {} for type {} in {}", print_term(&final_term), print_type(&j.ty), j.env), Some(&w))
        }
        Err(e) => fail(e.to_string(), Some(&j.term)),
    }
}

fn consistency_case(cfg: &GenConfig) -> CaseResult {
    let cfg = GenConfig { level: Level::ST, ..cfg.clone() };
    let m = gen_metaterm_shaped(&cfg, Shape { pure: true, closed: true, redex_rich: false });
    let ctx = KindCtx::new().with_eig("a", Kind::Prop);
    match realizes(Level::ST, &ctx, &TypeEnv::new(), &Type::eig("a"), &m, cfg.fuel) {
        Ok(Verdict::Realized(_)) => fail("a pure closed metaterm realizes a bare eigenvariable", Some(&m)),
        Ok(_) => CaseResult::Pass,
        Err(e) => fail(e.to_string(), Some(&m)),
    }
}

/// A closed realizer of `a`: a generated term of that type under a random
/// environment, closed by its generative substitution; `gen(a)` when none
/// is found.
fn realizer_of(cfg: &GenConfig, a: &Ty) -> Tm {
    let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ctx = KindCtx::new();
    let env = TypeEnv::from_entries(vec![(name("w"), Type::eig(["a", "b", "c"][r.gen_range(0..3)]))]);
    let goal = GenConfig { max_depth: 3, ..cfg.clone() };
    for k in 0..8 {
        let c = goal.with_seed(sub_seed(cfg.seed, k));
        if let Ok(j) = gen_typed_term_in(&c, &ctx, &env) {
            if j.ty == *a {
                return gen_subst(Level::ST, &j.env).apply(&strip_annotations(&j.term));
            }
        }
    }
    if r.gen_bool(0.5) {
        Term::app(Term::lam("y", Term::var(0)), Term::gen(a.clone()))
    } else {
        Term::gen(a.clone())
    }
}

fn universality_case(cfg: &GenConfig) -> CaseResult {
    let cfg = GenConfig { level: Level::ST, ..cfg.clone() };
    let j = match gen_typed_term(&cfg) {
        Ok(j) => j,
        Err(e) => return CaseResult::Inconclusive(e.to_string()),
    };
    let sigma = Substitution(
        j.env
            .entries()
            .iter()
            .enumerate()
            .map(|(i, (x, a))| (x.clone(), realizer_of(&cfg.with_seed(sub_seed(cfg.seed, 50 + i as u64)), a)))
            .collect(),
    );
    let m = Term::verif(j.ty.clone(), strip_annotations(&j.term));
    match universality_check(&j.env, &sigma, &m, cfg.fuel) {
        Ok(Universality::Confirmed) => CaseResult::Pass,
        Ok(Universality::Inconclusive { .. }) => CaseResult::Inconclusive("fuel exhausted".into()),
        Ok(Universality::CounterexampleCandidate { stuck }) => {
            fail(format!("stuck at {} under the chosen realizers", print_term(&stuck)), Some(&m))
        }
        Err(e) => CaseResult::Inconclusive(e.to_string()),
    }
}

fn correctness_case(cfg: &GenConfig) -> CaseResult {
    let (ctx, a) = gen_closed_type(cfg);
    match correctness_check_in(cfg.level, &ctx, &a, cfg.fuel) {
        Ok(Verdict::Realized(_)) => CaseResult::Pass,
        Ok(Verdict::FuelExhausted(_)) => CaseResult::Inconclusive("fuel exhausted".into()),
        Ok(Verdict::Stuck { final_term, .. }) => {
            fail(format!("gen({}) is stuck at {}", print_type(&a), print_term(&final_term)), None)
        }
        Err(e) => fail(format!("{}: {e}", print_type(&a)), None),
    }
}

// ---------------------------------------------------------------------------
// Extraction and intersection types

fn extraction_case(cfg: &GenConfig) -> CaseResult {
    let j = match gen_typed_term(cfg) {
        Ok(j) => j,
        Err(e) => return CaseResult::Inconclusive(e.to_string()),
    };
    let x = match extract(cfg.level, &j.ctx, &j.env, &j.ty, &j.term, cfg.fuel) {
        Ok(x) => x,
        Err(e) => return fail(format!("{e}: {} : {}", print_term(&j.term), print_type(&j.ty)), Some(&j.term)),
    };
    let d = &x.derivation;
    if let Err(e) = d.validate() {
        return fail(format!("derivation does not re-validate: {e}"), Some(&j.term));
    }
    let nf = match beta_normalize(&strip_annotations(&j.term), cfg.fuel) {
        Ok(nf) => nf,
        Err(e) => return CaseResult::Inconclusive(e.to_string()),
    };
    let nf = if cfg.level == Level::FOmega { canonicalize(&nf) } else { nf };
    if d.term != nf {
        return fail(format!("subject {} is not the normal form {}", print_term(&d.term), print_term(&nf)), Some(&j.term));
    }
    if d.ty != j.ty || d.env != j.env {
        return fail(format!("conclusion type {} differs from {}", print_type(&d.ty), print_type(&j.ty)), Some(&j.term));
    }
    CaseResult::Pass
}

/// Splits the derivation of a trace's initial term at a random closed
/// subterm and substitutes it back, checking the weighted size identity.
pub fn weighted_identity_case(cfg: &GenConfig) -> CaseResult {
    let Some(tr) = star_candidate(cfg) else {
        return CaseResult::Inconclusive("no metaterm reaching star under the random strategy".into());
    };
    let d = match derive_from_trace(&tr) {
        Ok(d) => d,
        Err(e) => return fail(e.to_string(), Some(&tr.initial)),
    };
    weighted_identity_on(&d, cfg.seed)
}

pub fn weighted_identity_on(d: &LinDerivation, seed: u64) -> CaseResult {
    let m = &d.term;
    let ps: Vec<Vec<u8>> = positions(m)
        .into_iter()
        .filter(|p| is_locally_closed(subterm_at(m, &Position(p.clone()), &mut KindStack::default()).unwrap()))
        .collect();
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let p = &ps[r.gen_range(0..ps.len())];
    let n = subterm_at(m, &Position(p.clone()), &mut KindStack::default()).unwrap().clone();
    let x = fresh_name("x", |c| FreeNames::of_term(m).contains_any(&name(c)));
    let body = replace_at(m, p, Term::free_name(&x));
    let (phi, psi) = match anti_subst_lderiv(d, &body, &x, &n) {
        Ok(v) => v,
        Err(e) => return fail(format!("anti-substitution at {}: {e}", Position(p.clone())), Some(m)),
    };
    for part in [&phi, &psi] {
        if let Err(e) = validate_lderiv(part) {
            return fail(format!("anti-substitution at {} is invalid: {e}", Position(p.clone())), Some(m));
        }
    }
    let out = match subst_lderiv(&phi, &x, &psi) {
        Ok(o) => o,
        Err(e) => return fail(e.to_string(), Some(m)),
    };
    let uses = phi.env.get(&x).len();
    if let Err(e) = validate_lderiv(&out) {
        return fail(format!("substituted derivation is invalid: {e}"), Some(m));
    }
    if out.size() + uses != phi.size() + psi.size() {
        return fail(
            format!("size {} but {} - {uses} + {} expected", out.size(), phi.size(), psi.size()),
            Some(m),
        );
    }
    if out.term != d.term || out.env != d.env || out.concl != d.concl {
        return fail("the substituted derivation has a different conclusion", Some(m));
    }
    CaseResult::Pass
}

/// Derives a typing of the initial term from a random-strategy trace to
/// `star` and replays weak-head reduction through subject reduction.
pub fn witnessed_standardization(tr: &Trace, fuel: u64) -> Result<Vec<usize>, String> {
    let d = derive_from_trace(tr).map_err(|e| e.to_string())?;
    validate_lderiv(&d)?;
    let replay = replay_weak_head(&d, fuel).map_err(|e| e.to_string())?;
    if let Some(w) = replay.sizes.windows(2).find(|w| w[0] <= w[1]) {
        return Err(format!("size did not decrease: {} then {}", w[0], w[1]));
    }
    if replay.last != LinDerivation::star() {
        return Err(format!("replay stopped at {}", print_term(&replay.last.term)));
    }
    Ok(replay.sizes)
}

fn intersection_case(cfg: &GenConfig) -> CaseResult {
    let Some(tr) = star_candidate(cfg) else {
        return CaseResult::Inconclusive("no metaterm reaching star under the random strategy".into());
    };
    if let Err(e) = witnessed_standardization(&tr, 4 * cfg.fuel) {
        return fail(e, Some(&tr.initial));
    }
    match derive_from_trace(&tr) {
        Ok(d) => weighted_identity_on(&d, cfg.seed),
        Err(e) => fail(e.to_string(), Some(&tr.initial)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in SuiteName::ALL {
            assert_eq!(s.as_str().parse::<SuiteName>().unwrap(), s);
        }
        assert_eq!(run_suite("nope", &GenConfig::new(Level::ST, 0), 1), Err(SuiteError::UnknownSuite("nope".into())));
    }

    #[test]
    fn shrinking_keeps_the_failure() {
        let m = parse_term("seq(ver(#a -> #b, (\\x. x) y), star)", Level::F).unwrap();
        let bad = |t: &Tm| wh_redexes(Level::F, t).len() > 1;
        let w = shrink(&m, bad);
        assert!(bad(&w));
        assert!(w.size() <= m.size());
    }

    #[test]
    fn small_runs() {
        let cfg = GenConfig { fuel: 20_000, ..GenConfig::new(Level::F, 11) };
        for s in SuiteName::ALL {
            let cfg = if matches!(s, SuiteName::Determinism | SuiteName::Consistency | SuiteName::Universality) {
                GenConfig { level: Level::ST, ..cfg.clone() }
            } else {
                cfg.clone()
            };
            let r = run(s, &cfg, 12);
            assert!(r.ok(), "{r}");
            assert_eq!(run(s, &cfg, 12), r);
        }
    }
}
