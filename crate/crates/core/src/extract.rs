//! Typing derivations recovered from realizers: input matching, the proof
//! size of normal terms, beta-normalization under fuel, and the
//! reconstruction that follows the completeness argument.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde_json::{json, Value};
use thiserror::Error;

use crate::syntax::*;
use crate::typecheck::{Side, TypingDerivation, TypingRule};
use crate::verify::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("not a realizer: {0}")]
    NotRealizer(String),
    #[error("the metaterm is not pure")]
    NotPure,
    #[error("the term is not in beta-normal form")]
    NotNormal,
    #[error("fuel exhausted")]
    FuelExhausted,
    #[error("internal contradiction: {0}")]
    InternalContradiction(String),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

/// Argument types and residual type of a spine matched against a type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchResult {
    pub arg_types: Vec<Ty>,
    pub residual: Ty,
}

fn norm_at(level: Level, a: &Ty) -> Ty {
    if level == Level::FOmega {
        normalize_type(a)
    } else {
        a.clone()
    }
}

/// `A ⊳ I⃗ ⇒ B⃗ ; A'`. A term input consumes an arrow and records its domain;
/// a type input consumes a quantifier, records itself and instantiates.
pub fn match_inputs(level: Level, a: &Ty, inputs: &[Input]) -> Option<MatchResult> {
    let mut cur = norm_at(level, a);
    let mut arg_types = Vec::with_capacity(inputs.len());
    for i in inputs {
        cur = match (i, &*cur) {
            (Input::TermInput(_), Type::Arrow(b, c)) => {
                arg_types.push(b.clone());
                c.clone()
            }
            (Input::TypeInput(b), Type::ForAll(_, _, body)) => {
                arg_types.push(b.clone());
                norm_at(level, &ty_instantiate(body, b))
            }
            _ => return None,
        };
    }
    Some(MatchResult { arg_types, residual: cur })
}

/// No term or type beta-redex anywhere.
pub fn is_beta_normal(t: &Tm) -> bool {
    match &**t {
        Term::App(f, a) => !matches!(&**f, Term::Lam(..)) && is_beta_normal(f) && is_beta_normal(a),
        Term::TyApp(f, _) => !matches!(&**f, Term::TyLam(..)) && is_beta_normal(f),
        Term::Lam(_, b) | Term::TyLam(_, _, b) | Term::Annot(b, _) => is_beta_normal(b),
        _ => true,
    }
}

fn names_of(env: &TypeEnv, t: &Tm, a: &Ty) -> BTreeSet<Name> {
    let mut n = env.free_names();
    n.add_term(t);
    n.add_type(a);
    let mut s: BTreeSet<Name> = n.terms.into_iter().collect();
    s.extend(n.types);
    s.extend(n.eigs);
    s.extend(env.entries().iter().map(|(x, _)| x.clone()));
    s
}

/// The proof size of a normal term with respect to Γ and A.
pub fn proof_size(level: Level, env: &TypeEnv, nf: &Tm, a: &Ty) -> Result<usize, ExtractError> {
    let nf = strip_annotations(nf);
    if !nf.is_pure() {
        return Err(ExtractError::NotPure);
    }
    if !is_beta_normal(&nf) {
        return Err(ExtractError::NotNormal);
    }
    let mut used = names_of(env, &nf, a);
    Ok(sig(level, env, &nf, &norm_at(level, a), &mut used))
}

fn sig(level: Level, env: &TypeEnv, t: &Tm, a: &Ty, used: &mut BTreeSet<Name>) -> usize {
    match (&**t, &**a) {
        (Term::Lam(h, b), Type::Arrow(dom, cod)) => {
            let x = fresh_in(h.as_str(), used);
            sig(level, &env.extended(x.clone(), dom.clone()), &open(b, &x), cod, used)
        }
        (Term::TyLam(h, _, b), Type::ForAll(_, _, tb)) => {
            let v = fresh_in(h.as_str(), used);
            sig(level, env, &open_ty(b, &v), &norm_at(level, &ty_open(tb, &v)), used)
        }
        (Term::Lam(..) | Term::TyLam(..), _) => 0,
        _ => {
            let (head, inputs) = term_spine(t);
            let Term::Free(x) = &*head else { return 0 };
            let Some(b) = env.lookup(x) else { return 0 };
            let Some(m) = match_inputs(level, b, &inputs) else { return 0 };
            let mut total = a.size().min(m.residual.size());
            for (i, bi) in inputs.iter().zip(&m.arg_types) {
                if let Input::TermInput(n) = i {
                    total += sig(level, env, n, bi, used);
                }
            }
            total
        }
    }
}

fn fresh_in(base: &str, used: &mut BTreeSet<Name>) -> Name {
    let n = fresh_name(base, |c| used.contains(c));
    used.insert(n.clone());
    n
}

fn spend(budget: &mut u64) -> Result<(), ExtractError> {
    if *budget == 0 {
        return Err(ExtractError::FuelExhausted);
    }
    *budget -= 1;
    Ok(())
}

/// Normal-order beta-normalization (term and type redexes) within `fuel`
/// contractions. Pseudo-redexes such as a term abstraction applied to a type
/// are left in place.
pub fn beta_normalize(m: &Tm, fuel: u64) -> Result<Tm, ExtractError> {
    let mut budget = fuel;
    beta_nf(m, &mut budget)
}

fn beta_nf(m: &Tm, budget: &mut u64) -> Result<Tm, ExtractError> {
    let m = strip_annotations(m);
    if !m.is_pure() {
        return Err(ExtractError::NotPure);
    }
    nf(&m, budget)
}

fn nf(m: &Tm, budget: &mut u64) -> Result<Tm, ExtractError> {
    let (mut head, mut inputs) = term_spine(m);
    let mut next = 0;
    loop {
        let reduced = match (&*head, inputs.get(next)) {
            (Term::Lam(_, b), Some(Input::TermInput(n))) => instantiate(b, n),
            (Term::TyLam(_, _, b), Some(Input::TypeInput(c))) => instantiate_ty(b, c),
            _ => break,
        };
        spend(budget)?;
        next += 1;
        let (h, more) = term_spine(&reduced);
        head = h;
        if !more.is_empty() {
            inputs.splice(next..next, more);
        }
    }
    let head = match &*head {
        Term::Lam(h, b) => Arc::new(Term::Lam(h.clone(), nf(b, budget)?)),
        Term::TyLam(h, k, b) => Arc::new(Term::TyLam(h.clone(), k.clone(), nf(b, budget)?)),
        _ => head,
    };
    let mut rest = Vec::with_capacity(inputs.len() - next);
    for i in &inputs[next..] {
        rest.push(match i {
            Input::TermInput(n) => Input::TermInput(nf(n, budget)?),
            Input::TypeInput(c) => Input::TypeInput(c.clone()),
        });
    }
    Ok(rebuild_spine(head, &rest))
}

/// A successful extraction.
#[derive(Clone, Debug)]
pub struct Extraction {
    /// The beta-normal form of the realizer, which is the derivation's subject.
    pub normal_form: Tm,
    pub derivation: TypingDerivation,
    /// The eta-long term the reconstruction builds before transport to the
    /// normal form.
    pub eta_long: Tm,
    pub proof_size: usize,
}

impl Extraction {
    pub fn to_json(&self) -> Value {
        json!({
            "normal_form": print_term(&self.normal_form),
            "derivation": self.derivation.to_json(),
            "proof_size": self.proof_size,
            "eta_long": print_term(&self.eta_long),
        })
    }
}

struct Session {
    level: Level,
    budget: u64,
    used: BTreeSet<Name>,
}

/// Rewrites every node of a derivation.
fn map_deriv(
    d: &TypingDerivation,
    tm: &dyn Fn(&Tm) -> Tm,
    ty: &dyn Fn(&Ty) -> Ty,
    cx: &dyn Fn(&KindCtx) -> KindCtx,
    env: &dyn Fn(&TypeEnv) -> TypeEnv,
) -> TypingDerivation {
    TypingDerivation {
        level: d.level,
        ctx: cx(&d.ctx),
        env: env(&d.env),
        term: tm(&d.term),
        ty: ty(&d.ty),
        rule: d.rule,
        premises: d.premises.iter().map(|p| map_deriv(p, tm, ty, cx, env)).collect(),
        side: match &d.side {
            Side::Instance(c) => Side::Instance(ty(c)),
            s => s.clone(),
        },
    }
}

fn eig_to_tyvar_deriv(d: &TypingDerivation, e: &Name, v: &Name) -> TypingDerivation {
    map_deriv(
        d,
        &|t| eig_to_tyvar_tm(t, e, v),
        &|a| eig_to_tyvar_ty(a, e, v),
        &|c| {
            let mut c = c.clone();
            if let Some(k) = c.eigs.remove(e) {
                c.tyvars.insert(v.clone(), k);
            }
            c
        },
        &|g| g.map_types(|a| eig_to_tyvar_ty(a, e, v)),
    )
}

fn drop_var(d: &TypingDerivation, x: &Name) -> TypingDerivation {
    map_deriv(d, &|t| t.clone(), &|a| a.clone(), &|c| c.clone(), &|g| g.without(x))
}

fn drop_eig(d: &TypingDerivation, e: &Name) -> TypingDerivation {
    map_deriv(
        d,
        &|t| t.clone(),
        &|a| a.clone(),
        &|c| {
            let mut c = c.clone();
            c.eigs.remove(e);
            c
        },
        &|g| g.clone(),
    )
}

fn contradiction<T>(what: String) -> Result<T, ExtractError> {
    Err(ExtractError::InternalContradiction(what))
}

impl Session {
    #[allow(clippy::too_many_arguments)]
    fn node(
        &self,
        ctx: &KindCtx,
        env: &TypeEnv,
        term: Tm,
        ty: Ty,
        rule: TypingRule,
        premises: Vec<TypingDerivation>,
        side: Side,
    ) -> TypingDerivation {
        TypingDerivation { level: self.level, ctx: ctx.clone(), env: env.clone(), term, ty, rule, premises, side }
    }

    /// Var node, with a conversion when Γ stores a non-canonical type.
    fn var(&self, ctx: &KindCtx, env: &TypeEnv, x: &Name, b: &Ty) -> TypingDerivation {
        let t = Term::free_name(x);
        let d = self.node(ctx, env, t.clone(), b.clone(), TypingRule::Var, vec![], Side::None);
        let bn = norm_at(self.level, b);
        if bn != *b {
            return self.node(ctx, env, t, bn, TypingRule::Conv, vec![d], Side::BetaEqual);
        }
        d
    }

    fn fresh_eig(&mut self, base: &str) -> Name {
        fresh_in(base, &mut self.used)
    }

    /// Requires `ver(A, M{Γ})` to reach `star`, charging the shared budget.
    fn require_realized(&mut self, ctx: &KindCtx, env: &TypeEnv, a: &Ty, m: &Tm) -> Result<(), ExtractError> {
        let v = realizes(self.level, ctx, env, a, m, self.budget)?;
        self.budget = self.budget.saturating_sub(v.trace().step_count);
        match v {
            Verdict::Realized(_) => Ok(()),
            Verdict::FuelExhausted(_) => Err(ExtractError::FuelExhausted),
            Verdict::Stuck { final_term, .. } => contradiction(format!(
                "argument {} of a matched spine does not realize {}: stuck at {}",
                print_term(m),
                print_type(a),
                print_term(&final_term)
            )),
        }
    }

    /// Derivation of `Γ ⊢ m : a` for a beta-normal realizer `m` of the
    /// canonical type `a`, together with the eta-long reconstruction.
    fn go(&mut self, ctx: &KindCtx, env: &TypeEnv, m: &Tm, a: &Ty) -> Result<(TypingDerivation, Tm), ExtractError> {
        match &**a {
            Type::Arrow(dom, cod) => {
                let hint = match &**m {
                    Term::Lam(h, _) => h.as_str().to_string(),
                    _ => "x".to_string(),
                };
                let x = fresh_in(&hint, &mut self.used);
                let env2 = env.extended(x.clone(), dom.clone());
                match &**m {
                    Term::Lam(h, b) => {
                        let (d, eta) = self.go(ctx, &env2, &open(b, &x), cod)?;
                        let term = Arc::new(Term::Lam(h.clone(), close(&d.term, &x)));
                        let eta = Arc::new(Term::Lam(h.clone(), close(&eta, &x)));
                        let d = self.node(ctx, env, term, a.clone(), TypingRule::AbsIntro, vec![d], Side::TermBinder(x));
                        Ok((d, eta))
                    }
                    Term::TyLam(..) => contradiction(format!("type abstraction {} realizes an implication", print_term(m))),
                    _ => {
                        let (d, eta) = self.go(ctx, &env2, &Term::app(m.clone(), Term::free_name(&x)), cod)?;
                        if d.rule != TypingRule::AppElim || d.premises[0].ty != *a {
                            return contradiction(format!("eta-expansion of {} is not an application", print_term(m)));
                        }
                        let inner = drop_var(&d.premises[0], &x);
                        let eta = Term::lam(&x, close(&eta, &x));
                        Ok((inner, eta))
                    }
                }
            }
            Type::ForAll(h, k, body) => {
                let hint = match &**m {
                    Term::TyLam(h, _, _) => h.as_str().to_string(),
                    _ => h.as_str().to_string(),
                };
                let e = self.fresh_eig(&hint);
                let ctx2 = ctx.clone().with_eig(&e, k.clone());
                let eig: Ty = Arc::new(Type::Eig(e.clone()));
                let body_e = norm_at(self.level, &ty_instantiate(body, &eig));
                let v = fresh_in(&hint, &mut self.used);
                match &**m {
                    Term::TyLam(mh, mk, b) => {
                        if mk != k {
                            return contradiction(format!("type abstraction {} has the wrong kind", print_term(m)));
                        }
                        let (d, eta) = self.go(&ctx2, env, &instantiate_ty(b, &eig), &body_e)?;
                        let d = eig_to_tyvar_deriv(&d, &e, &v);
                        let term = Arc::new(Term::TyLam(mh.clone(), k.clone(), close_ty(&d.term, &v)));
                        let eta = Arc::new(Term::TyLam(mh.clone(), k.clone(), close_ty(&eig_to_tyvar_tm(&eta, &e, &v), &v)));
                        let d = self.node(ctx, env, term, a.clone(), TypingRule::AllIntro, vec![d], Side::TypeBinder(v));
                        Ok((d, eta))
                    }
                    Term::Lam(..) => contradiction(format!("abstraction {} realizes a quantifier", print_term(m))),
                    _ => {
                        let (d, eta) = self.go(&ctx2, env, &Term::ty_app(m.clone(), eig.clone()), &body_e)?;
                        if d.rule != TypingRule::AllElim || d.premises[0].ty != *a {
                            return contradiction(format!("eta-expansion of {} is not a type application", print_term(m)));
                        }
                        let inner = drop_eig(&d.premises[0], &e);
                        let eta = Arc::new(Term::TyLam(h.clone(), k.clone(), close_ty(&eig_to_tyvar_tm(&eta, &e, &v), &v)));
                        Ok((inner, eta))
                    }
                }
            }
            _ if a.is_eig_headed() => self.atomic(ctx, env, m, a),
            _ => contradiction(format!("verifier at the non-eigenvariable atom {} succeeded", print_type(a))),
        }
    }

    fn atomic(&mut self, ctx: &KindCtx, env: &TypeEnv, m: &Tm, a: &Ty) -> Result<(TypingDerivation, Tm), ExtractError> {
        let (head, inputs) = term_spine(m);
        let x = match &*head {
            Term::Free(x) => x.clone(),
            _ => return contradiction(format!("realizer {} of {} is not variable-headed", print_term(m), print_type(a))),
        };
        let Some(b) = env.lookup(&x).cloned() else {
            return contradiction(format!("head `{x}` is not in the environment"));
        };
        let Some(mr) = match_inputs(self.level, &b, &inputs) else {
            return contradiction(format!("type {} of `{x}` does not match its inputs", print_type(&b)));
        };
        if mr.residual != *a {
            return contradiction(format!("residual {} differs from {}", print_type(&mr.residual), print_type(a)));
        }
        let mut d = self.var(ctx, env, &x, &b);
        let mut eta = Term::free_name(&x);
        for (i, bi) in inputs.iter().zip(&mr.arg_types) {
            let (Type::ForAll(_, _, body) | Type::Arrow(_, body)) = &*d.ty.clone() else {
                return contradiction("spine type lost its shape".into());
            };
            match i {
                Input::TermInput(n) => {
                    self.require_realized(ctx, env, bi, n)?;
                    let (dn, en) = self.go(ctx, env, n, bi)?;
                    let term = Term::app(d.term.clone(), dn.term.clone());
                    d = self.node(ctx, env, term, body.clone(), TypingRule::AppElim, vec![d, dn], Side::None);
                    eta = Term::app(eta, en);
                }
                Input::TypeInput(c) => {
                    let ty = norm_at(self.level, &ty_instantiate(body, c));
                    let term = Term::ty_app(d.term.clone(), c.clone());
                    d = self.node(ctx, env, term, ty, TypingRule::AllElim, vec![d], Side::Instance(c.clone()));
                    eta = Term::ty_app(eta, c.clone());
                }
            }
        }
        Ok((d, eta))
    }
}

/// Recovers `Γ ⊢ βnf(m) : A` from a realizer `m` of `A`. Free type
/// variables are replaced by eigenvariables for the run and restored in the
/// result. Every verifier run and beta step is charged to `fuel`.
pub fn extract(level: Level, ctx: &KindCtx, env: &TypeEnv, a: &Ty, m: &Tm, fuel: u64) -> Result<Extraction, ExtractError> {
    let m = strip_annotations(m);
    if !m.is_pure() {
        return Err(ExtractError::NotPure);
    }
    let m = if level == Level::FOmega { canonicalize(&m) } else { m };
    let closed = close_tvars(ctx, env, a, &m);
    let mut s = Session { level, budget: fuel, used: names_of(env, &m, a) };
    s.used.extend(ctx.tyvars.keys().cloned());
    s.used.extend(ctx.eigs.keys().cloned());
    s.used.extend(closed.renaming.iter().map(|(_, e)| e.clone()));

    let v = realizes(level, &closed.ctx, &closed.env, &closed.ty, &closed.term, s.budget)?;
    s.budget = s.budget.saturating_sub(v.trace().step_count);
    match v {
        Verdict::Realized(_) => {}
        Verdict::FuelExhausted(_) => return Err(ExtractError::FuelExhausted),
        Verdict::Stuck { final_term, .. } => {
            return Err(ExtractError::NotRealizer(format!("verification is stuck at {}", print_term(&final_term))))
        }
    }
    let nf = beta_nf(&closed.term, &mut s.budget)?;
    let an = norm_at(level, &closed.ty);
    let (mut d, mut eta) = s.go(&closed.ctx, &closed.env, &nf, &an)?;
    let size = sig(level, &closed.env, &nf, &an, &mut s.used.clone());
    if an != closed.ty {
        let term = d.term.clone();
        d = s.node(&closed.ctx, &closed.env, term, closed.ty.clone(), TypingRule::Conv, vec![d], Side::BetaEqual);
    }
    let mut nf = nf;
    for (v, e) in &closed.renaming {
        d = eig_to_tyvar_deriv(&d, e, v);
        eta = eig_to_tyvar_tm(&eta, e, v);
        nf = eig_to_tyvar_tm(&nf, e, v);
    }
    if d.term != nf {
        return contradiction("derivation subject differs from the normal form".into());
    }
    Ok(Extraction { normal_form: nf, derivation: d, eta_long: eta, proof_size: size })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::typecheck::check;

    const FUEL: u64 = 1_000_000;

    fn ty(s: &str, level: Level) -> Ty {
        parse_type(s, level).unwrap()
    }

    fn tm(s: &str, level: Level) -> Tm {
        parse_term(s, level).unwrap()
    }

    #[test]
    fn matching() {
        let a = ty("forall a. (a -> a) -> a", Level::F);
        let b = ty("#b", Level::F);
        let r = match_inputs(Level::F, &a, &[Input::TypeInput(b.clone()), Input::TermInput(tm("m", Level::F))]).unwrap();
        assert_eq!(r.arg_types, vec![b.clone(), ty("#b -> #b", Level::F)]);
        assert_eq!(r.residual, b);
        let r = match_inputs(Level::F, &a, &[]).unwrap();
        assert!(r.arg_types.is_empty() && r.residual == a);
        assert_eq!(match_inputs(Level::F, &ty("#a -> #b", Level::F), &[Input::TypeInput(b)]), None);
    }

    #[test]
    fn sizes() {
        let a = ty("#a", Level::ST);
        let env = TypeEnv::from_entries(vec![(name("x"), a.clone())]);
        assert_eq!(proof_size(Level::ST, &env, &tm("x", Level::ST), &a).unwrap(), 1);
        let id = tm("\\x. x", Level::ST);
        assert_eq!(proof_size(Level::ST, &TypeEnv::new(), &id, &ty("#a -> #a", Level::ST)).unwrap(), 1);
        assert_eq!(proof_size(Level::ST, &TypeEnv::new(), &id, &a).unwrap(), 0);
        let redex = tm("(\\x. x) y", Level::ST);
        assert_eq!(proof_size(Level::ST, &env, &redex, &a), Err(ExtractError::NotNormal));
    }

    #[test]
    fn normalization() {
        let r = beta_normalize(&tm("(\\x. x)(\\y. y)", Level::ST), 100).unwrap();
        assert_eq!(r, tm("\\y. y", Level::ST));
        assert_eq!(beta_normalize(&tm("\\x. x", Level::ST), 100).unwrap(), tm("\\x. x", Level::ST));
        let omega = tm("(\\x. x x)(\\x. x x)", Level::ST);
        assert_eq!(beta_normalize(&omega, 1000), Err(ExtractError::FuelExhausted));
        let pseudo = tm("(\\x. x) [#a] ((/\\a. \\y. y) [#b] z)", Level::F);
        assert_eq!(print_term(&beta_normalize(&pseudo, 100).unwrap()), "(\\x. x) [#a] z");
    }

    #[test]
    fn k_combinator() {
        let a = ty("#a -> #b -> #a", Level::ST);
        let m = tm("\\x. \\y. x", Level::ST);
        let e = extract(Level::ST, &KindCtx::new(), &TypeEnv::new(), &a, &m, FUEL).unwrap();
        e.derivation.validate().unwrap();
        assert_eq!(e.derivation.term, m);
        assert_eq!(e.derivation.ty, a);
        assert!(check(Level::ST, &KindCtx::new(), &TypeEnv::new(), &m, &a).is_ok());
    }

    #[test]
    fn errors() {
        let a = ty("#a -> #a", Level::ST);
        let g = tm("\\x. seq(star, x)", Level::ST);
        assert_eq!(extract(Level::ST, &KindCtx::new(), &TypeEnv::new(), &a, &g, FUEL).unwrap_err(), ExtractError::NotPure);
        let r = extract(Level::ST, &KindCtx::new(), &TypeEnv::new(), &ty("#a -> #b", Level::ST), &tm("\\x. x", Level::ST), FUEL);
        assert!(matches!(r, Err(ExtractError::NotRealizer(_))));
    }

    #[test]
    fn eta_short_subjects() {
        let env = TypeEnv::from_entries(vec![(name("f"), ty("(#a -> #b) -> #c", Level::ST))]);
        let a = ty("(#a -> #b) -> #c", Level::ST);
        let e = extract(Level::ST, &KindCtx::new(), &env, &a, &tm("f", Level::ST), FUEL).unwrap();
        e.derivation.validate().unwrap();
        assert_eq!(print_term(&e.normal_form), "f");
        assert_eq!(print_term(&e.eta_long), "\\x. f (\\x1. x x1)");

        let p = ty("forall a. a -> a", Level::F);
        let env = TypeEnv::from_entries(vec![(name("p"), p.clone())]);
        let e = extract(Level::F, &KindCtx::new(), &env, &p, &tm("p", Level::F), FUEL).unwrap();
        e.derivation.validate().unwrap();
        assert_eq!(e.derivation.term, tm("p", Level::F));
    }

    #[test]
    fn conjunction_and_free_tvars() {
        let a = ty("#a -> #b -> forall c. (#a -> #b -> c) -> c", Level::F);
        let m = tm("(\\u. u) (\\x. \\y. /\\c. \\f. f x y)", Level::F);
        let e = extract(Level::F, &KindCtx::new(), &TypeEnv::new(), &a, &m, FUEL).unwrap();
        e.derivation.validate().unwrap();
        assert_eq!(e.normal_form, tm("\\x. \\y. /\\c. \\f. f x y", Level::F));
        let a = ty("b -> b", Level::F);
        let e = extract(Level::F, &KindCtx::new(), &TypeEnv::new(), &a, &tm("\\x. x", Level::F), FUEL).unwrap();
        e.derivation.validate().unwrap();
        assert_eq!(e.derivation.ty, a);
    }
}
