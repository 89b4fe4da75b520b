//! Running verifiers against candidate realizers: generative substitutions,
//! the realizability check, the generator self-test and the universality
//! property.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{json, Value};
use thiserror::Error;

use crate::reduction::*;
use crate::syntax::*;
use crate::typecheck::{check_prop, env_well_formed, well_kinded, KindError};

#[derive(Clone, Debug)]
pub enum Verdict {
    Realized(Trace),
    Stuck { final_term: Tm, trace: Trace },
    FuelExhausted(Trace),
}

impl Verdict {
    fn from_trace(trace: Trace) -> Verdict {
        match trace.outcome {
            Outcome::StarReached => Verdict::Realized(trace),
            Outcome::Normal => Verdict::Stuck { final_term: trace.final_term.clone(), trace },
            Outcome::FuelExhausted => Verdict::FuelExhausted(trace),
        }
    }

    pub fn trace(&self) -> &Trace {
        match self {
            Verdict::Realized(t) | Verdict::FuelExhausted(t) | Verdict::Stuck { trace: t, .. } => t,
        }
    }

    pub fn is_realized(&self) -> bool {
        matches!(self, Verdict::Realized(_))
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Verdict::Realized(_) => "realized",
            Verdict::Stuck { .. } => "stuck",
            Verdict::FuelExhausted(_) => "fuel",
        }
    }

    pub fn to_json(&self) -> Value {
        json!({"verdict": self.tag(), "steps": self.trace().step_count})
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Kind(#[from] KindError),
    #[error(transparent)]
    Level(#[from] ReductionError),
    #[error("ill-formed environment: {0}")]
    IllFormedEnv(String),
    #[error("free type variables {0:?}: close them with fresh eigenvariables first")]
    FreeTypeVariables(Vec<String>),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}

/// σ: a finite map from term variables to metaterms.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution(pub BTreeMap<Name, Tm>);

impl Substitution {
    pub fn apply(&self, t: &Tm) -> Tm {
        let mut s = FreeSubst::default();
        for (x, n) in &self.0 {
            s.terms.insert(x.clone(), n.clone());
        }
        subst_term(t, &s)
    }

    pub fn get(&self, x: &str) -> Option<&Tm> {
        self.0.get(x)
    }
}

/// The generative substitution `x ↦ gen(A)` for `x : A` in Γ. At ST the
/// generators are unfolded.
pub fn gen_subst(level: Level, env: &TypeEnv) -> Substitution {
    Substitution(
        env.entries()
            .iter()
            .map(|(x, a)| (x.clone(), if level == Level::ST { st_gen(a) } else { Term::gen(a.clone()) }))
            .collect(),
    )
}

#[derive(Clone, Copy, Debug, Default)]
pub struct VerifyOptions {
    /// Replace free type variables by fresh eigenvariables instead of
    /// rejecting them.
    pub close_free_tvars: bool,
    /// Record every step in the verdict's trace.
    pub record: bool,
}

/// A judgment with free type variables replaced by eigenvariables.
#[derive(Clone, Debug)]
pub struct Closed {
    pub ctx: KindCtx,
    pub env: TypeEnv,
    pub ty: Ty,
    pub term: Tm,
    /// `(type variable, eigenvariable)` pairs.
    pub renaming: Vec<(Name, Name)>,
}

/// Replaces the free type variables of `env`, `a` and `m` by fresh
/// eigenvariables of the same kind (`Prop` when undeclared).
pub fn close_tvars(ctx: &KindCtx, env: &TypeEnv, a: &Ty, m: &Tm) -> Closed {
    let mut names = env.free_names();
    names.add_type(a);
    names.add_term(m);
    let mut ctx = ctx.clone();
    let mut s = FreeSubst::default();
    let mut renaming = Vec::new();
    for v in &names.types {
        let e = fresh_name(v, |n| names.eigs.contains(n) || ctx.eigs.contains_key(n));
        let k = ctx.tyvars.remove(v).unwrap_or(Kind::Prop);
        ctx.eigs.insert(e.clone(), k);
        s.types.insert(v.clone(), Arc::new(Type::Eig(e.clone())));
        renaming.push((v.clone(), e));
    }
    Closed {
        ctx,
        env: env.map_types(|t| subst_type(t, &s)),
        ty: subst_type(a, &s),
        term: subst_term(m, &s),
        renaming,
    }
}

fn prepare(
    level: Level,
    ctx: &KindCtx,
    env: &TypeEnv,
    a: &Ty,
    m: &Tm,
    opts: VerifyOptions,
) -> Result<(KindCtx, Tm), VerifyError> {
    let m = strip_annotations(m);
    let mut names = env.free_names();
    names.add_type(a);
    names.add_term(&m);
    let (ctx, env, a, m) = if names.types.is_empty() {
        (ctx.clone(), env.clone(), a.clone(), m)
    } else if opts.close_free_tvars {
        let c = close_tvars(ctx, env, a, &m);
        (c.ctx, c.env, c.ty, c.term)
    } else {
        return Err(VerifyError::FreeTypeVariables(names.types.iter().map(|n| n.to_string()).collect()));
    };
    Ok((ctx.clone(), build_target(level, &ctx, &env, &a, &m)?))
}

/// `ver(A, M{Γ})`, elaborated at ST and kind-checked and canonical at Fω.
pub fn build_target(level: Level, ctx: &KindCtx, env: &TypeEnv, a: &Ty, m: &Tm) -> Result<Tm, VerifyError> {
    match level {
        Level::ST => {
            let m = expand_st(m)?;
            expand_st(&Term::verif(a.clone(), Term::star()))?;
            for (_, t) in env.entries() {
                expand_st(&Term::gen(t.clone()))?;
            }
            Ok(st_ver(a, gen_subst(level, env).apply(&m)))
        }
        Level::F => Ok(Term::verif(a.clone(), gen_subst(level, env).apply(m))),
        Level::FOmega => {
            let a = normalize_type(a);
            let env = env.map_types(normalize_type);
            check_prop(ctx, &a)?;
            if !env_well_formed(ctx, &env)? {
                return Err(VerifyError::IllFormedEnv(env.to_string()));
            }
            let m = canonicalize(m);
            well_kinded(ctx, &m)?;
            Ok(Term::verif(a, gen_subst(level, &env).apply(&m)))
        }
    }
}

/// Runs `ver(A, M{Γ})` under weak-head reduction.
pub fn realizes(level: Level, ctx: &KindCtx, env: &TypeEnv, a: &Ty, m: &Tm, fuel: u64) -> Result<Verdict, VerifyError> {
    realizes_with(level, ctx, env, a, m, fuel, VerifyOptions::default())
}

pub fn realizes_with(
    level: Level,
    ctx: &KindCtx,
    env: &TypeEnv,
    a: &Ty,
    m: &Tm,
    fuel: u64,
    opts: VerifyOptions,
) -> Result<Verdict, VerifyError> {
    let (ctx, target) = prepare(level, ctx, env, a, m, opts)?;
    let trace = Reducer::new(level, ctx).recording(opts.record).reduce(&target, Strategy::WeakHead, fuel);
    Ok(Verdict::from_trace(trace))
}

/// Verifies `gen(A)` against `A`. Free type variables are kept, so a
/// verifier at a bare type variable is stuck.
pub fn correctness_check(level: Level, a: &Ty, fuel: u64) -> Result<Verdict, VerifyError> {
    let mut ctx = KindCtx::new();
    ctx.declare_missing(&FreeNames::of_type(a));
    correctness_check_in(level, &ctx, a, fuel)
}

pub fn correctness_check_in(level: Level, ctx: &KindCtx, a: &Ty, fuel: u64) -> Result<Verdict, VerifyError> {
    let target = build_target(level, ctx, &TypeEnv::new(), a, &Term::gen(a.clone()))?;
    let trace = Reducer::new(level, ctx.clone()).reduce(&target, Strategy::WeakHead, fuel);
    Ok(Verdict::from_trace(trace))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Universality {
    Confirmed,
    /// The run under σ got stuck although the preconditions hold.
    CounterexampleCandidate { stuck: Tm },
    Inconclusive { fuel: u64 },
}

/// Checks that a metaterm reaching `star` under the generative substitution
/// also reaches it under any substitution compatible with Γ.
pub fn universality_check(env: &TypeEnv, sigma: &Substitution, m: &Tm, fuel: u64) -> Result<Universality, VerifyError> {
    let level = Level::ST;
    let m = expand_st(&strip_annotations(m))?;
    let mut ctx = KindCtx::new();
    ctx.declare_missing(&env.free_names());
    ctx.declare_missing(&FreeNames::of_term(&m));
    for (x, a) in env.entries() {
        let Some(n) = sigma.get(x) else {
            return Err(VerifyError::PreconditionViolated(format!("σ does not map `{x}`")));
        };
        match realizes(level, &ctx, &TypeEnv::new(), a, n, fuel)? {
            Verdict::Realized(_) => {}
            Verdict::FuelExhausted(_) => return Ok(Universality::Inconclusive { fuel }),
            Verdict::Stuck { final_term, .. } => {
                return Err(VerifyError::PreconditionViolated(format!(
                    "σ({x}) does not realize {}: stuck at {}",
                    print_type(a),
                    print_term(&final_term)
                )))
            }
        }
    }
    let run = |t: &Tm| Reducer::new(level, ctx.clone()).reduce(t, Strategy::WeakHead, fuel);
    let generic = run(&gen_subst(level, env).apply(&m));
    match generic.outcome {
        Outcome::StarReached => {}
        Outcome::FuelExhausted => return Ok(Universality::Inconclusive { fuel }),
        Outcome::Normal => {
            return Err(VerifyError::PreconditionViolated(format!(
                "the metaterm is stuck under the generative substitution at {}",
                print_term(&generic.final_term)
            )))
        }
    }
    let sigma_st = Substitution(
        sigma.0.iter().map(|(x, n)| Ok((x.clone(), expand_st(n)?))).collect::<Result<_, VerifyError>>()?,
    );
    let tr = run(&sigma_st.apply(&m));
    Ok(match tr.outcome {
        Outcome::StarReached => Universality::Confirmed,
        Outcome::FuelExhausted => Universality::Inconclusive { fuel },
        Outcome::Normal => Universality::CounterexampleCandidate { stuck: tr.final_term },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FUEL: u64 = 1_000_000;

    fn st(s: &str) -> Tm {
        parse_term(s, Level::ST).unwrap()
    }

    fn sty(s: &str) -> Ty {
        parse_type(s, Level::ST).unwrap()
    }

    #[test]
    fn generative_substitution() {
        let env = TypeEnv::from_entries(vec![(name("x"), sty("#a")), (name("y"), sty("#b"))]);
        let r = gen_subst(Level::F, &env).apply(&st("(\\x. x y y) x"));
        assert_eq!(print_term(&r), "(\\x. x gen(#b) gen(#b)) gen(#a)");
        assert_eq!(gen_subst(Level::F, &TypeEnv::new()).apply(&st("z")), st("z"));
        assert_eq!(gen_subst(Level::F, &env).apply(&st("z")), st("z"));
    }

    #[test]
    fn k_and_its_mirror() {
        let ctx = KindCtx::new();
        let env = TypeEnv::new();
        let v = realizes(Level::ST, &ctx, &env, &sty("#a -> #b -> #a"), &st("\\x. \\y. x"), FUEL).unwrap();
        assert!(v.is_realized());
        let v = realizes(Level::ST, &ctx, &env, &sty("#a -> #b -> #a"), &st("\\x. \\y. y"), FUEL).unwrap();
        match v {
            Verdict::Stuck { final_term, .. } => assert_eq!(print_term(&final_term), "ver(#a, gen(#b))"),
            other => panic!("expected stuck, got {}", other.tag()),
        }
    }

    #[test]
    fn correctness_examples() {
        let v = correctness_check(Level::ST, &sty("#a"), FUEL).unwrap();
        assert!(v.is_realized());
        assert_eq!(v.trace().step_count, 1);
        assert!(correctness_check(Level::ST, &sty("#a -> #b"), FUEL).unwrap().is_realized());
        let a = parse_type("a", Level::F).unwrap();
        assert!(matches!(correctness_check(Level::F, &a, FUEL).unwrap(), Verdict::Stuck { .. }));
    }

    #[test]
    fn free_type_variables_are_rejected_unless_closed() {
        let a = parse_type("a -> a", Level::F).unwrap();
        let m = parse_term("\\x. x", Level::F).unwrap();
        let r = realizes(Level::F, &KindCtx::new(), &TypeEnv::new(), &a, &m, FUEL);
        assert!(matches!(r, Err(VerifyError::FreeTypeVariables(_))));
        let opts = VerifyOptions { close_free_tvars: true, record: false };
        let v = realizes_with(Level::F, &KindCtx::new(), &TypeEnv::new(), &a, &m, FUEL, opts).unwrap();
        assert!(v.is_realized());
    }

    #[test]
    fn universality_examples() {
        let env = TypeEnv::from_entries(vec![(name("y"), sty("#b"))]);
        let m = st("ver(#b, y)");
        let mut sigma = Substitution::default();
        sigma.0.insert(name("y"), st("gen(#b)"));
        assert_eq!(universality_check(&env, &sigma, &m, FUEL).unwrap(), Universality::Confirmed);
        sigma.0.insert(name("y"), st("seq(star, gen(#b))"));
        assert_eq!(universality_check(&env, &sigma, &m, FUEL).unwrap(), Universality::Confirmed);
        sigma.0.insert(name("y"), st("\\x. x"));
        assert!(matches!(universality_check(&env, &sigma, &m, FUEL), Err(VerifyError::PreconditionViolated(_))));
    }
}
