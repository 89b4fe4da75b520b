//! Typing derivations for λ→, System F and Fω, produced by a bidirectional
//! checker. Derivations are locally nameless: binders crossed by an
//! introduction rule are opened with a fresh name recorded in `side`.

use std::fmt;
use std::sync::Arc;

use serde_json::{json, Value};
use thiserror::Error;

use super::kinding::*;
use crate::syntax::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TypingRule {
    Var,
    AbsIntro,
    AppElim,
    AllIntro,
    AllElim,
    Conv,
}

impl TypingRule {
    pub fn as_str(self) -> &'static str {
        match self {
            TypingRule::Var => "Var",
            TypingRule::AbsIntro => "AbsIntro",
            TypingRule::AppElim => "AppElim",
            TypingRule::AllIntro => "AllIntro",
            TypingRule::AllElim => "AllElim",
            TypingRule::Conv => "Conv",
        }
    }
}

/// Side conditions of a node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Side {
    None,
    /// The term variable introduced by `AbsIntro`.
    TermBinder(Name),
    /// The type variable introduced by `AllIntro`; it is not free in Γ.
    TypeBinder(Name),
    /// The instantiating type of `AllElim`.
    Instance(Ty),
    /// `Conv`: the premise's type is β-equal to the conclusion's.
    BetaEqual,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypingDerivation {
    pub level: Level,
    pub ctx: KindCtx,
    pub env: TypeEnv,
    /// The pure, annotation-free subject.
    pub term: Tm,
    pub ty: Ty,
    pub rule: TypingRule,
    pub premises: Vec<TypingDerivation>,
    pub side: Side,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("cannot synthesize a type for `{0}`; annotate it")]
    NotSynthesizable(String),
    #[error("argument mismatch: `{head}` has type {found}, which does not accept {what}")]
    ArgMismatch { head: String, found: String, what: String },
    #[error("type mismatch: expected {expected}, found {found}")]
    Mismatch { expected: String, found: String },
    #[error("`{term}` cannot have type {expected}")]
    WrongForm { term: String, expected: String },
    #[error("the term is not pure")]
    NotPure,
    #[error("ill-formed environment: {0}")]
    IllFormedEnv(String),
    #[error(transparent)]
    Kind(#[from] KindError),
    #[error("invalid derivation: {0}")]
    Invalid(String),
}

/// A failure with the path of the offending subterm (child indices from the
/// root, printed like `/0/1`).
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("at {path}: {reason}")]
pub struct CheckFailure {
    pub path: String,
    pub reason: TypeError,
}

pub type CheckResult = Result<TypingDerivation, CheckFailure>;

fn render_path(path: &[usize]) -> String {
    if path.is_empty() {
        "/".into()
    } else {
        path.iter().map(|i| format!("/{i}")).collect()
    }
}

struct Checker<'a> {
    level: Level,
    path: &'a mut Vec<usize>,
}

impl Checker<'_> {
    fn fail<T>(&self, reason: TypeError) -> Result<T, CheckFailure> {
        Err(CheckFailure { path: render_path(self.path), reason })
    }

    fn at<T>(&mut self, i: usize, f: impl FnOnce(&mut Self) -> T) -> T {
        self.path.push(i);
        let r = f(self);
        self.path.pop();
        r
    }

    fn norm(&self, a: &Ty) -> Ty {
        if self.level == Level::FOmega {
            normalize_type(a)
        } else {
            a.clone()
        }
    }

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

    fn check(&mut self, ctx: &KindCtx, env: &TypeEnv, t: &Tm, a: &Ty) -> CheckResult {
        let an = self.norm(a);
        if an != *a {
            let d = self.check(ctx, env, t, &an)?;
            let term = d.term.clone();
            return Ok(self.node(ctx, env, term, a.clone(), TypingRule::Conv, vec![d], Side::BetaEqual));
        }
        match (&**t, &**a) {
            (Term::Lam(h, body), Type::Arrow(dom, cod)) => {
                let x = fresh_name(h.as_str(), |n| env.contains(n) || term_has_free(body, &name(n)));
                let opened = open(body, &x);
                let env2 = env.extended(x.clone(), dom.clone());
                let d = self.at(0, |c| c.check(ctx, &env2, &opened, cod))?;
                let term = Arc::new(Term::Lam(h.clone(), close(&d.term, &x)));
                Ok(self.node(ctx, env, term, a.clone(), TypingRule::AbsIntro, vec![d], Side::TermBinder(x)))
            }
            (Term::TyLam(h, k, body), Type::ForAll(_, k2, tb)) => {
                if k != k2 {
                    return self.fail(TypeError::WrongForm { term: print_term(t), expected: print_type(a) });
                }
                let taken = |n: &str| {
                    ctx.contains(n)
                        || env.free_names().contains_any(&name(n))
                        || FreeNames::of_term(t).contains_any(&name(n))
                        || FreeNames::of_type(a).contains_any(&name(n))
                };
                let v = fresh_name(h.as_str(), taken);
                let ctx2 = ctx.clone().with_tyvar(&v, k.clone());
                let opened = open_ty(body, &v);
                let tb2 = ty_open(tb, &v);
                let d = self.at(0, |c| c.check(&ctx2, env, &opened, &tb2))?;
                let term = Arc::new(Term::TyLam(h.clone(), k.clone(), close_ty(&d.term, &v)));
                Ok(self.node(ctx, env, term, a.clone(), TypingRule::AllIntro, vec![d], Side::TypeBinder(v)))
            }
            (Term::Lam(..), _) | (Term::TyLam(..), _) => {
                self.fail(TypeError::WrongForm { term: print_term(t), expected: print_type(a) })
            }
            _ => {
                let d = self.synth(ctx, env, t)?;
                if d.ty == *a {
                    Ok(d)
                } else if self.level == Level::FOmega && normalize_type(&d.ty) == *a {
                    let term = d.term.clone();
                    Ok(self.node(ctx, env, term, a.clone(), TypingRule::Conv, vec![d], Side::BetaEqual))
                } else {
                    self.fail(TypeError::Mismatch { expected: print_type(a), found: print_type(&d.ty) })
                }
            }
        }
    }

    /// Synthesizes a derivation whose type is canonical at Fω.
    fn synth(&mut self, ctx: &KindCtx, env: &TypeEnv, t: &Tm) -> CheckResult {
        match &**t {
            Term::Free(x) => match env.lookup(x) {
                Some(a) => {
                    let d = self.node(ctx, env, t.clone(), a.clone(), TypingRule::Var, vec![], Side::None);
                    let an = self.norm(a);
                    if an != *a {
                        return Ok(self.node(ctx, env, t.clone(), an, TypingRule::Conv, vec![d], Side::BetaEqual));
                    }
                    Ok(d)
                }
                None => self.fail(TypeError::UnboundVariable(x.to_string())),
            },
            Term::Var(_) => self.fail(TypeError::Invalid("dangling bound variable".into())),
            Term::Annot(m, a) => {
                if self.level == Level::FOmega {
                    if let Err(e) = check_prop(ctx, a) {
                        return self.fail(e.into());
                    }
                }
                let an = self.norm(a);
                self.at(0, |c| c.check(ctx, env, m, &an))
            }
            Term::App(f, arg) => {
                let df = self.at(0, |c| c.synth(ctx, env, f))?;
                match &*df.ty.clone() {
                    Type::Arrow(dom, cod) => {
                        let da = self.at(1, |c| c.check(ctx, env, arg, dom))?;
                        let term = Term::app(df.term.clone(), da.term.clone());
                        Ok(self.node(ctx, env, term, cod.clone(), TypingRule::AppElim, vec![df, da], Side::None))
                    }
                    _ => self.fail(TypeError::ArgMismatch {
                        head: print_term(f),
                        found: print_type(&df.ty),
                        what: "a term argument".into(),
                    }),
                }
            }
            Term::TyApp(f, c) => {
                let df = self.at(0, |ch| ch.synth(ctx, env, f))?;
                match &*df.ty.clone() {
                    Type::ForAll(_, k, body) => {
                        if self.level == Level::FOmega {
                            let kc = kind_of(ctx, c).or_else(|e| self.fail(e.into()))?;
                            if kc != *k {
                                return self.fail(TypeError::ArgMismatch {
                                    head: print_term(f),
                                    found: print_type(&df.ty),
                                    what: format!("a type of kind {}", print_kind(&kc)),
                                });
                            }
                        }
                        let c = self.norm(c);
                        let ty = self.norm(&ty_instantiate(body, &c));
                        let term = Term::ty_app(df.term.clone(), c.clone());
                        Ok(self.node(ctx, env, term, ty, TypingRule::AllElim, vec![df], Side::Instance(c)))
                    }
                    _ => self.fail(TypeError::ArgMismatch {
                        head: print_term(f),
                        found: print_type(&df.ty),
                        what: "a type argument".into(),
                    }),
                }
            }
            Term::Lam(..) | Term::TyLam(..) => self.fail(TypeError::NotSynthesizable(print_term(t))),
            _ => self.fail(TypeError::NotPure),
        }
    }
}

fn entry_checks(level: Level, ctx: &KindCtx, env: &TypeEnv, t: &Tm, a: Option<&Ty>) -> Result<(), CheckFailure> {
    let root = |reason| CheckFailure { path: "/".into(), reason };
    if !t.is_pure() {
        return Err(root(TypeError::NotPure));
    }
    if level == Level::FOmega {
        match env_well_formed(ctx, env) {
            Ok(true) => {}
            Ok(false) => return Err(root(TypeError::IllFormedEnv(env.to_string()))),
            Err(e) => return Err(root(e.into())),
        }
        if let Some(a) = a {
            check_prop(ctx, a).map_err(|e| root(e.into()))?;
        }
        well_kinded(ctx, t).map_err(|e| root(e.into()))?;
    }
    Ok(())
}

/// `Γ ⊢ t : A` at the given level.
pub fn check(level: Level, ctx: &KindCtx, env: &TypeEnv, t: &Tm, a: &Ty) -> CheckResult {
    entry_checks(level, ctx, env, t, Some(a))?;
    let mut path = Vec::new();
    Checker { level, path: &mut path }.check(ctx, env, t, a)
}

/// Synthesizes the type of a neutral spine headed by a variable or an
/// annotated term.
pub fn synth(level: Level, ctx: &KindCtx, env: &TypeEnv, t: &Tm) -> Result<(Ty, TypingDerivation), CheckFailure> {
    entry_checks(level, ctx, env, t, None)?;
    let mut path = Vec::new();
    let d = Checker { level, path: &mut path }.synth(ctx, env, t)?;
    Ok((d.ty.clone(), d))
}

impl TypingDerivation {
    /// Re-checks every node against its rule. The error carries the path of
    /// the first failing node, as premise indices.
    pub fn validate(&self) -> Result<(), String> {
        let mut path = Vec::new();
        self.validate_at(&mut path).map_err(|e| format!("at {}: {e}", render_path(&path)))
    }

    fn validate_at(&self, path: &mut Vec<usize>) -> Result<(), String> {
        self.validate_node()?;
        for (i, p) in self.premises.iter().enumerate() {
            path.push(i);
            p.validate_at(path)?;
            path.pop();
        }
        Ok(())
    }

    fn premise_count(&self, n: usize) -> Result<(), String> {
        if self.premises.len() != n {
            return Err(format!("{} expects {n} premises, found {}", self.rule.as_str(), self.premises.len()));
        }
        Ok(())
    }

    fn ty_eq(&self, a: &Ty, b: &Ty) -> bool {
        a == b
    }

    fn validate_node(&self) -> Result<(), String> {
        let bad = |what: &str| Err(format!("{}: {what}", self.rule.as_str()));
        if !self.term.is_pure() || has_annotations(&self.term) {
            return bad("subject is not a pure, unannotated term");
        }
        if !is_locally_closed(&self.term) || !ty_is_locally_closed(&self.ty) {
            return bad("subject or type has dangling bound variables");
        }
        if self.level == Level::FOmega {
            match kind_of(&self.ctx, &self.ty) {
                Ok(Kind::Prop) => {}
                Ok(k) => return bad(&format!("type has kind {}", print_kind(&k))),
                Err(e) => return bad(&e.to_string()),
            }
        }
        for p in &self.premises {
            if p.level != self.level {
                return bad("premise at a different level");
            }
        }
        let same_ctx_env = |p: &TypingDerivation| p.ctx == self.ctx && p.env == self.env;
        match self.rule {
            TypingRule::Var => {
                self.premise_count(0)?;
                let Term::Free(x) = &*self.term else { return bad("subject is not a variable") };
                match self.env.lookup(x) {
                    Some(a) if self.ty_eq(a, &self.ty) => Ok(()),
                    Some(_) => bad("type differs from the environment"),
                    None => bad("variable not in the environment"),
                }
            }
            TypingRule::AbsIntro => {
                self.premise_count(1)?;
                let p = &self.premises[0];
                let (Term::Lam(_, body), Type::Arrow(dom, cod)) = (&*self.term, &*self.ty) else {
                    return bad("expected an abstraction at an arrow type");
                };
                let Side::TermBinder(x) = &self.side else { return bad("missing binder") };
                if self.env.contains(x) || term_has_free(body, x) {
                    return bad("binder is not fresh");
                }
                if p.ctx != self.ctx || p.env != self.env.extended(x.clone(), dom.clone()) {
                    return bad("premise environment is not Γ, x : A");
                }
                if p.term != open(body, x) || !self.ty_eq(&p.ty, cod) {
                    return bad("premise does not match the body");
                }
                Ok(())
            }
            TypingRule::AppElim => {
                self.premise_count(2)?;
                let (pf, pa) = (&self.premises[0], &self.premises[1]);
                let Term::App(f, a) = &*self.term else { return bad("subject is not an application") };
                if !same_ctx_env(pf) || !same_ctx_env(pa) {
                    return bad("premise context differs");
                }
                if pf.term != *f || pa.term != *a {
                    return bad("premise subjects differ");
                }
                match &*pf.ty {
                    Type::Arrow(dom, cod) if self.ty_eq(dom, &pa.ty) && self.ty_eq(cod, &self.ty) => Ok(()),
                    _ => bad("types do not fit the elimination"),
                }
            }
            TypingRule::AllIntro => {
                self.premise_count(1)?;
                let p = &self.premises[0];
                let (Term::TyLam(_, k, body), Type::ForAll(_, k2, tb)) = (&*self.term, &*self.ty) else {
                    return bad("expected a type abstraction at a quantified type");
                };
                let Side::TypeBinder(v) = &self.side else { return bad("missing binder") };
                if k != k2 {
                    return bad("binder kinds differ");
                }
                if self.ctx.contains(v)
                    || self.env.free_names().contains_any(v)
                    || FreeNames::of_term(&self.term).contains_any(v)
                    || FreeNames::of_type(&self.ty).contains_any(v)
                {
                    return bad("type variable is free in the environment or conclusion");
                }
                if p.env != self.env || p.ctx != self.ctx.clone().with_tyvar(v, k.clone()) {
                    return bad("premise context is not Ξ, a : K");
                }
                if p.term != open_ty(body, v) || !self.ty_eq(&p.ty, &ty_open(tb, v)) {
                    return bad("premise does not match the body");
                }
                Ok(())
            }
            TypingRule::AllElim => {
                self.premise_count(1)?;
                let p = &self.premises[0];
                let Term::TyApp(f, c) = &*self.term else { return bad("subject is not a type application") };
                let Side::Instance(c2) = &self.side else { return bad("missing instance") };
                if c != c2 || !same_ctx_env(p) || p.term != *f {
                    return bad("premise does not match");
                }
                let Type::ForAll(_, k, body) = &*p.ty else { return bad("premise type is not quantified") };
                if self.level == Level::FOmega && kind_of(&self.ctx, c).ok().as_ref() != Some(k) {
                    return bad("instance has the wrong kind");
                }
                let mut inst = ty_instantiate(body, c);
                if self.level == Level::FOmega {
                    inst = normalize_type(&inst);
                }
                if !self.ty_eq(&inst, &self.ty) {
                    return bad("conclusion is not the instance");
                }
                Ok(())
            }
            TypingRule::Conv => {
                self.premise_count(1)?;
                let p = &self.premises[0];
                if self.level != Level::FOmega {
                    return bad("conversion is only available at Fω");
                }
                if !same_ctx_env(p) || p.term != self.term {
                    return bad("premise does not match");
                }
                if normalize_type(&p.ty) != normalize_type(&self.ty) {
                    return bad("types are not β-equal");
                }
                Ok(())
            }
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.premises.iter().map(|p| p.node_count()).sum::<usize>()
    }

    pub fn to_json(&self) -> Value {
        let ctx: serde_json::Map<String, Value> = self
            .ctx
            .tyvars
            .iter()
            .map(|(a, k)| (a.to_string(), json!(print_kind(k))))
            .chain(self.ctx.eigs.iter().map(|(e, k)| (format!("#{e}"), json!(print_kind(k)))))
            .collect();
        let env: Vec<Value> =
            self.env.entries().iter().map(|(x, a)| json!({"var": &**x, "type": print_type(a)})).collect();
        let mut obj = json!({
            "rule": self.rule.as_str(),
            "ctx": ctx,
            "env": env,
            "term": print_term(&self.term),
            "type": print_type(&self.ty),
            "premises": self.premises.iter().map(|p| p.to_json()).collect::<Vec<_>>(),
        });
        let side = match &self.side {
            Side::None => None,
            Side::TermBinder(x) => Some(json!({"fresh_var": &**x})),
            Side::TypeBinder(a) => Some(json!({"fresh_tyvar": &**a, "not_free_in_env": true})),
            Side::Instance(c) => Some(json!({"instance": print_type(c)})),
            Side::BetaEqual => Some(json!({"beta_equal": true})),
        };
        if let Some(s) = side {
            obj["side"] = s;
        }
        obj
    }
}

impl fmt::Display for TypingDerivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(d: &TypingDerivation, depth: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            writeln!(
                f,
                "{:indent$}{} ⊢ {} : {}   [{}]",
                "",
                d.env,
                print_term(&d.term),
                print_type(&d.ty),
                d.rule.as_str(),
                indent = depth * 2
            )?;
            for p in &d.premises {
                go(p, depth + 1, f)?;
            }
            Ok(())
        }
        go(self, 0, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok(level: Level, env: &str, t: &str, a: &str) -> TypingDerivation {
        let env = TypeEnv::from_entries(parse_env(env, level).unwrap());
        let t = parse_term(t, level).unwrap();
        let a = parse_type(a, level).unwrap();
        let d = check(level, &KindCtx::new(), &env, &t, &a).unwrap();
        d.validate().unwrap();
        d
    }

    #[test]
    fn k_combinator() {
        let d = ok(Level::ST, "", "\\x. \\y. x", "#a -> #b -> #a");
        assert_eq!(d.rule, TypingRule::AbsIntro);
    }

    #[test]
    fn conjunction_intro() {
        ok(Level::F, "", "\\x. \\y. /\\c. \\f. f x y", "#a -> #b -> forall c. (#a -> #b -> c) -> c");
    }

    #[test]
    fn identity_at_wrong_type() {
        let t = parse_term("\\x. x", Level::ST).unwrap();
        let a = parse_type("#a -> #b", Level::ST).unwrap();
        assert!(check(Level::ST, &KindCtx::new(), &TypeEnv::new(), &t, &a).is_err());
    }

    #[test]
    fn synth_examples() {
        let env = TypeEnv::from_entries(parse_env("x : #a -> #b, y : #a", Level::ST).unwrap());
        let (a, _) = synth(Level::ST, &KindCtx::new(), &env, &parse_term("x y", Level::ST).unwrap()).unwrap();
        assert_eq!(a, Type::eig("b"));
        let env = TypeEnv::from_entries(parse_env("p : forall a. a", Level::F).unwrap());
        let (a, _) = synth(Level::F, &KindCtx::new(), &env, &parse_term("p [#b]", Level::F).unwrap()).unwrap();
        assert_eq!(a, Type::eig("b"));
        let env = TypeEnv::from_entries(parse_env("y : #a", Level::ST).unwrap());
        let r = synth(Level::ST, &KindCtx::new(), &env, &parse_term("(\\x. x) y", Level::ST).unwrap());
        assert!(matches!(r, Err(CheckFailure { reason: TypeError::NotSynthesizable(_), .. })));
    }

    #[test]
    fn annotation_makes_redex_checkable() {
        ok(Level::ST, "y : #a", "(\\x. x : #a -> #a) y", "#a");
    }

    #[test]
    fn mutated_type_fails_validation() {
        let mut d = ok(Level::ST, "", "\\x. \\y. x", "#a -> #b -> #a");
        d.premises[0].ty = parse_type("#b -> #b", Level::ST).unwrap();
        assert!(d.validate().is_err());
    }

    #[test]
    fn fw_conversion() {
        let level = Level::FOmega;
        let ctx = KindCtx::new().with_eig("a", Kind::Prop);
        let t = parse_term("\\x. x", level).unwrap();
        let a = parse_type("(\\b:Prop. b -> b) #a", level).unwrap();
        let d = check(level, &ctx, &TypeEnv::new(), &t, &a).unwrap();
        assert_eq!(d.rule, TypingRule::Conv);
        d.validate().unwrap();
    }

    #[test]
    fn leibniz_symmetry_checks() {
        let level = Level::FOmega;
        let kk = Kind::Base(name("k"));
        let ctx = KindCtx::new().with_eig("A", kk.clone()).with_eig("B", kk);
        let t = parse_term("\\e. /\\P:@k -> Prop. \\x. e [\\c:@k. P c -> P #A] (\\y. y) x", level).unwrap();
        let a = parse_type(
            "(forall P:@k -> Prop. P #A -> P #B) -> (forall P:@k -> Prop. P #B -> P #A)",
            level,
        )
        .unwrap();
        let d = check(level, &ctx, &TypeEnv::new(), &t, &a).unwrap();
        d.validate().unwrap();
    }
}
