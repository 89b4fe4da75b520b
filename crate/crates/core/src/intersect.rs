//! Non-idempotent intersection types for the second-order metacalculus:
//! derivations with their checker and size, weighted substitution, weak-head
//! subject reduction, subject expansion, and derivations built backwards
//! from a reduction trace to `star`.
//!
//! Subjects are locally closed. `Llam` and `Lnu` open their binder with a
//! name stored in the node.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde_json::{json, Value};
use thiserror::Error;

use crate::reduction::*;
use crate::syntax::*;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LinType {
    Star,
    Gen(Name),
    Arrow(LinMulti, Box<LinType>),
    /// Used at the type argument `A`.
    ForAll(Ty, Box<LinType>),
}

/// A finite multiset, kept sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinMulti(Vec<LinType>);

impl LinMulti {
    pub fn new(mut items: Vec<LinType>) -> LinMulti {
        items.sort();
        LinMulti(items)
    }

    pub fn single(t: LinType) -> LinMulti {
        LinMulti(vec![t])
    }

    pub fn items(&self) -> &[LinType] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self, other: &LinMulti) -> LinMulti {
        LinMulti::new(self.0.iter().chain(&other.0).cloned().collect())
    }
}

/// Variable to multitype; variables mapped to the empty multiset are absent.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinEnv(BTreeMap<Name, LinMulti>);

impl LinEnv {
    pub fn new() -> LinEnv {
        LinEnv::default()
    }

    pub fn single(x: Name, m: LinMulti) -> LinEnv {
        let mut e = LinEnv::new();
        e.add(x, m);
        e
    }

    pub fn get(&self, x: &str) -> LinMulti {
        self.0.get(x).cloned().unwrap_or_default()
    }

    pub fn add(&mut self, x: Name, m: LinMulti) {
        if m.is_empty() {
            return;
        }
        let cur = self.get(&x);
        self.0.insert(x, cur.sum(&m));
    }

    pub fn sum(&self, other: &LinEnv) -> LinEnv {
        let mut e = self.clone();
        for (x, m) in &other.0 {
            e.add(x.clone(), m.clone());
        }
        e
    }

    pub fn without(&self, x: &str) -> LinEnv {
        let mut e = self.clone();
        e.0.remove(x);
        e
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Name, &LinMulti)> {
        self.0.iter()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LinRule {
    Var,
    Lam,
    App,
    LamT,
    AppT,
    StarIntro,
    Guard,
    Nu,
    VerEig,
    VerImp,
    VerAll,
    GenEig,
    GenImp,
    GenAll,
    Multi,
}

impl LinRule {
    pub fn as_str(self) -> &'static str {
        match self {
            LinRule::Var => "Lvar",
            LinRule::Lam => "Llam",
            LinRule::App => "Lapp",
            LinRule::LamT => "Llamt",
            LinRule::AppT => "Lappt",
            LinRule::StarIntro => "Lstar",
            LinRule::Guard => "Lguard",
            LinRule::Nu => "Lnu",
            LinRule::VerEig => "LverEig",
            LinRule::VerImp => "LverImp",
            LinRule::VerAll => "LverAll",
            LinRule::GenEig => "LgenEig",
            LinRule::GenImp => "LgenImp",
            LinRule::GenAll => "LgenAll",
            LinRule::Multi => "Lmulti",
        }
    }
}

/// Right-hand side of a judgment: a linear type, or a multitype for `Lmulti`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LinConcl {
    One(LinType),
    Many(LinMulti),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinDerivation {
    pub rule: LinRule,
    pub env: LinEnv,
    pub term: Tm,
    pub concl: LinConcl,
    pub premises: Vec<LinDerivation>,
    /// The opened binder of `Llam` (a term variable) or `Lnu` (an
    /// eigenvariable).
    pub binder: Option<Name>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinError {
    #[error("invalid derivation: {0}")]
    InvalidDerivation(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("the step is not weak-head")]
    NotWeakHead,
    #[error("subject mismatch: {0}")]
    SubjectMismatch(String),
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
}

fn mismatch<T>(what: impl Into<String>) -> Result<T, LinError> {
    Err(LinError::SubjectMismatch(what.into()))
}

// ---------------------------------------------------------------------------
// Construction helpers

impl LinDerivation {
    /// The linear type, for nodes other than `Lmulti`.
    pub fn ty(&self) -> Option<&LinType> {
        match &self.concl {
            LinConcl::One(t) => Some(t),
            LinConcl::Many(_) => None,
        }
    }

    fn lin_ty(&self) -> LinType {
        self.ty().cloned().expect("linear judgment")
    }

    pub fn star() -> LinDerivation {
        leaf(LinRule::StarIntro, LinEnv::new(), Term::star(), LinType::Star)
    }

    pub fn var(x: &Name, t: LinType) -> LinDerivation {
        leaf(LinRule::Var, LinEnv::single(x.clone(), LinMulti::single(t.clone())), Term::free_name(x), t)
    }

    pub fn gen_eig(e: &Name) -> LinDerivation {
        leaf(LinRule::GenEig, LinEnv::new(), Term::gen(Arc::new(Type::Eig(e.clone()))), LinType::Gen(e.clone()))
    }

    /// `Lmulti` over derivations of the same subject.
    pub fn multi(term: Tm, premises: Vec<LinDerivation>) -> LinDerivation {
        let env = premises.iter().fold(LinEnv::new(), |e, p| e.sum(&p.env));
        let m = LinMulti::new(premises.iter().map(|p| p.lin_ty()).collect());
        LinDerivation { rule: LinRule::Multi, env, term, concl: LinConcl::Many(m), premises, binder: None }
    }

    /// A node over `premises` whose environment and type follow from them.
    pub fn node(rule: LinRule, term: Tm, ty: LinType, premises: Vec<LinDerivation>, binder: Option<Name>) -> LinDerivation {
        let d = LinDerivation { rule, env: LinEnv::new(), term, concl: LinConcl::One(ty), premises, binder };
        d.rebuilt(d.term.clone(), d.premises.clone())
    }

    /// Same rule and binder with a new subject and premises; environment and
    /// (for `Llam` and `Lmulti`) the type are recomputed.
    fn rebuilt(&self, term: Tm, premises: Vec<LinDerivation>) -> LinDerivation {
        if self.rule == LinRule::Multi {
            return LinDerivation::multi(term, premises);
        }
        let (env, concl) = match self.rule {
            LinRule::Var | LinRule::StarIntro | LinRule::GenEig => (self.env.clone(), self.concl.clone()),
            LinRule::Lam => {
                let x = self.binder.as_ref().expect("Llam binder");
                let p = &premises[0];
                let ty = LinType::Arrow(p.env.get(x), Box::new(p.lin_ty()));
                (p.env.without(x), LinConcl::One(ty))
            }
            _ => (premises.iter().fold(LinEnv::new(), |e, p| e.sum(&p.env)), self.concl.clone()),
        };
        LinDerivation { rule: self.rule, env, term, concl, premises, binder: self.binder.clone() }
    }

    /// Node count without `Lmulti` nodes.
    pub fn size(&self) -> usize {
        let own = usize::from(self.rule != LinRule::Multi);
        own + self.premises.iter().map(|p| p.size()).sum::<usize>()
    }
}

fn leaf(rule: LinRule, env: LinEnv, term: Tm, ty: LinType) -> LinDerivation {
    LinDerivation { rule, env, term, concl: LinConcl::One(ty), premises: vec![], binder: None }
}

pub fn lderiv_size(d: &LinDerivation) -> Result<usize, LinError> {
    validate_lderiv(d).map_err(LinError::InvalidDerivation)?;
    Ok(d.size())
}

// ---------------------------------------------------------------------------
// Free names and renaming

fn lin_eigs(t: &LinType, out: &mut BTreeSet<Name>) {
    match t {
        LinType::Star => {}
        LinType::Gen(e) => {
            out.insert(e.clone());
        }
        LinType::Arrow(m, t) => {
            for s in m.items() {
                lin_eigs(s, out);
            }
            lin_eigs(t, out);
        }
        LinType::ForAll(a, t) => {
            out.extend(FreeNames::of_type(a).eigs);
            lin_eigs(t, out);
        }
    }
}

fn concl_eigs(c: &LinConcl) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    match c {
        LinConcl::One(t) => lin_eigs(t, &mut out),
        LinConcl::Many(m) => m.items().iter().for_each(|t| lin_eigs(t, &mut out)),
    }
    out
}

fn rename_lin(t: &LinType, e: &Name, e2: &Name) -> LinType {
    match t {
        LinType::Star => LinType::Star,
        LinType::Gen(n) => LinType::Gen(if n == e { e2.clone() } else { n.clone() }),
        LinType::Arrow(m, t) => LinType::Arrow(rename_multi(m, e, e2), Box::new(rename_lin(t, e, e2))),
        LinType::ForAll(a, t) => {
            let mut s = FreeSubst::default();
            s.eigs.insert(e.clone(), Arc::new(Type::Eig(e2.clone())));
            LinType::ForAll(subst_type(a, &s), Box::new(rename_lin(t, e, e2)))
        }
    }
}

fn rename_multi(m: &LinMulti, e: &Name, e2: &Name) -> LinMulti {
    LinMulti::new(m.items().iter().map(|t| rename_lin(t, e, e2)).collect())
}

/// Renames the free term variable `y` throughout.
fn rename_var(d: &LinDerivation, y: &Name, y2: &Name) -> LinDerivation {
    let mut env = d.env.without(y);
    env.add(y2.clone(), d.env.get(y));
    LinDerivation {
        rule: d.rule,
        env,
        term: subst_term_var(&d.term, y, &Term::free_name(y2)),
        concl: d.concl.clone(),
        premises: d.premises.iter().map(|p| rename_var(p, y, y2)).collect(),
        binder: d.binder.as_ref().map(|b| if b == y { y2.clone() } else { b.clone() }),
    }
}

/// Renames the free eigenvariable `e` throughout.
fn rename_eig(d: &LinDerivation, e: &Name, e2: &Name) -> LinDerivation {
    let mut s = FreeSubst::default();
    s.eigs.insert(e.clone(), Arc::new(Type::Eig(e2.clone())));
    LinDerivation {
        rule: d.rule,
        env: LinEnv(d.env.0.iter().map(|(x, m)| (x.clone(), rename_multi(m, e, e2))).collect()),
        term: subst_term(&d.term, &s),
        concl: match &d.concl {
            LinConcl::One(t) => LinConcl::One(rename_lin(t, e, e2)),
            LinConcl::Many(m) => LinConcl::Many(rename_multi(m, e, e2)),
        },
        premises: d.premises.iter().map(|p| rename_eig(p, e, e2)).collect(),
        binder: d.binder.as_ref().map(|b| if b == e { e2.clone() } else { b.clone() }),
    }
}

/// A supply of names unused by the derivations and terms it was built from.
struct Supply(BTreeSet<Name>);

impl Supply {
    fn new() -> Supply {
        Supply(BTreeSet::new())
    }

    fn term(&mut self, t: &Tm) {
        let n = FreeNames::of_term(t);
        self.0.extend(n.terms);
        self.0.extend(n.types);
        self.0.extend(n.eigs);
    }

    fn deriv(&mut self, d: &LinDerivation) {
        self.term(&d.term);
        for (x, m) in d.env.entries() {
            self.0.insert(x.clone());
            for t in m.items() {
                let mut s = BTreeSet::new();
                lin_eigs(t, &mut s);
                self.0.extend(s);
            }
        }
        self.0.extend(concl_eigs(&d.concl));
        self.0.extend(d.binder.clone());
        d.premises.iter().for_each(|p| self.deriv(p));
    }

    fn fresh(&mut self, base: &str) -> Name {
        let n = fresh_name(base, |c| self.0.contains(c));
        self.0.insert(n.clone());
        n
    }
}

fn eig_free_in(t: &Tm, e: &Name) -> bool {
    FreeNames::of_term(t).eigs.contains(e)
}

// ---------------------------------------------------------------------------
// Checking

pub fn check_lderiv(d: &LinDerivation) -> bool {
    validate_lderiv(d).is_ok()
}

/// Checks every node; the error names the first failing node by premise
/// path.
pub fn validate_lderiv(d: &LinDerivation) -> Result<(), String> {
    fn go(d: &LinDerivation, path: &mut Vec<usize>) -> Result<(), String> {
        check_node(d).map_err(|e| {
            let p: String = if path.is_empty() { "/".into() } else { path.iter().map(|i| format!("/{i}")).collect() };
            format!("at {p}: {}: {e}", d.rule.as_str())
        })?;
        for (i, p) in d.premises.iter().enumerate() {
            path.push(i);
            go(p, path)?;
            path.pop();
        }
        Ok(())
    }
    go(d, &mut Vec::new())
}

fn check_node(d: &LinDerivation) -> Result<(), String> {
    let err = |m: &str| Err(m.to_string());
    if !is_locally_closed(&d.term) {
        return err("subject is not locally closed");
    }
    let arity = match d.rule {
        LinRule::Var | LinRule::StarIntro | LinRule::GenEig => 0,
        LinRule::App | LinRule::Guard => 2,
        LinRule::Multi => d.premises.len(),
        _ => 1,
    };
    if d.premises.len() != arity {
        return err("wrong number of premises");
    }
    for (i, p) in d.premises.iter().enumerate() {
        let want_multi = d.rule == LinRule::App && i == 1;
        if (p.rule == LinRule::Multi) != want_multi {
            return err("premise has the wrong judgment form");
        }
    }
    let sum = || d.premises.iter().fold(LinEnv::new(), |e, p| e.sum(&p.env));
    if d.rule == LinRule::Multi {
        if d.premises.iter().any(|p| p.term != d.term) {
            return err("premise subjects differ");
        }
        if d.concl != LinConcl::Many(LinMulti::new(d.premises.iter().map(|p| p.lin_ty()).collect())) {
            return err("multitype is not the multiset of premise types");
        }
        if d.env != sum() {
            return err("environment is not the sum of the premises'");
        }
        return Ok(());
    }
    let Some(ty) = d.ty() else { return err("expected a linear type") };
    let p = d.premises.first();
    let same = |p: &LinDerivation| p.env == d.env && p.ty() == Some(ty);
    match (d.rule, &*d.term) {
        (LinRule::Var, Term::Free(x)) => {
            if d.env != LinEnv::single(x.clone(), LinMulti::single(ty.clone())) {
                return err("environment is not x : [T]");
            }
        }
        (LinRule::Lam, Term::Lam(_, b)) => {
            let p = p.unwrap();
            let Some(x) = &d.binder else { return err("missing binder") };
            if term_has_free(&d.term, x) {
                return err("binder is free in the subject");
            }
            if p.term != open(b, x) {
                return err("premise subject is not the opened body");
            }
            if *ty != LinType::Arrow(p.env.get(x), Box::new(p.lin_ty())) || d.env != p.env.without(x) {
                return err("type or environment does not fit the premise");
            }
        }
        (LinRule::App, Term::App(f, a)) => {
            let (p0, p1) = (&d.premises[0], &d.premises[1]);
            if p0.term != *f || p1.term != *a {
                return err("premise subjects differ");
            }
            match (p0.ty(), &p1.concl) {
                (Some(LinType::Arrow(m, t)), LinConcl::Many(m2)) if m == m2 && **t == *ty => {}
                _ => return err("types do not fit the application"),
            }
            if d.env != sum() {
                return err("environment is not the sum of the premises'");
            }
        }
        (LinRule::LamT, Term::TyLam(_, _, b)) => {
            let p = p.unwrap();
            let LinType::ForAll(a, t) = ty else { return err("type is not a quantified use") };
            if p.term != instantiate_ty(b, a) || p.ty() != Some(t) || p.env != d.env {
                return err("premise does not match");
            }
        }
        (LinRule::AppT, Term::TyApp(f, a)) => {
            let p = p.unwrap();
            match p.ty() {
                Some(LinType::ForAll(a2, t)) if a2 == a && **t == *ty => {}
                _ => return err("premise type does not fit"),
            }
            if p.term != *f || p.env != d.env {
                return err("premise does not match");
            }
        }
        (LinRule::StarIntro, Term::Star) => {
            if *ty != LinType::Star || !d.env.is_empty() {
                return err("expected the empty environment and type star");
            }
        }
        (LinRule::Guard, Term::Guard(c, n)) => {
            let (p0, p1) = (&d.premises[0], &d.premises[1]);
            if p0.term != *c || p1.term != *n || p0.ty() != Some(&LinType::Star) || p1.ty() != Some(ty) {
                return err("premises do not match");
            }
            if d.env != sum() {
                return err("environment is not the sum of the premises'");
            }
        }
        (LinRule::Nu, Term::Fresh(_, _, b)) => {
            let p = p.unwrap();
            let Some(e) = &d.binder else { return err("missing binder") };
            if eig_free_in(&d.term, e) || concl_eigs(&d.concl).contains(e) {
                return err("eigenvariable is not fresh");
            }
            if p.term != open_eig(b, e) || !same(p) {
                return err("premise does not match");
            }
        }
        (LinRule::VerEig, Term::Verif(a, m)) => {
            let p = p.unwrap();
            let Type::Eig(e) = &**a else { return err("verifier is not at an eigenvariable") };
            if p.term != *m || p.ty() != Some(&LinType::Gen(e.clone())) || p.env != d.env || *ty != LinType::Star {
                return err("premise does not match");
            }
        }
        (LinRule::VerImp, Term::Verif(a, m)) => {
            let p = p.unwrap();
            let Type::Arrow(a, b) = &**a else { return err("verifier is not at an implication") };
            if p.term != Term::verif(b.clone(), Term::app(m.clone(), Term::gen(a.clone()))) {
                return err("premise subject does not match");
            }
            if *ty != LinType::Star || !same(p) {
                return err("premise judgment does not match");
            }
        }
        (LinRule::VerAll, Term::Verif(a, m)) => {
            let p = p.unwrap();
            let Type::ForAll(h, k, body) = &**a else { return err("verifier is not at a quantifier") };
            if p.term != verif_all(&h.0, k, body, m) {
                return err("premise subject does not match");
            }
            if *ty != LinType::Star || !same(p) {
                return err("premise judgment does not match");
            }
        }
        (LinRule::GenEig, Term::Gen(a)) => {
            let Type::Eig(e) = &**a else { return err("generator is not at an eigenvariable") };
            if *ty != LinType::Gen(e.clone()) || !d.env.is_empty() {
                return err("expected the empty environment and type gen");
            }
        }
        (LinRule::GenImp, Term::Gen(a)) => {
            let Type::Arrow(a, b) = &**a else { return err("generator is not at an implication") };
            if p.unwrap().term != gen_imp(a, b) || !same(p.unwrap()) {
                return err("premise does not match");
            }
        }
        (LinRule::GenAll, Term::Gen(a)) => {
            let Type::ForAll(h, k, b) = &**a else { return err("generator is not at a quantifier") };
            let expect = Arc::new(Term::TyLam(h.clone(), k.clone(), Term::gen(b.clone())));
            if p.unwrap().term != expect || !same(p.unwrap()) {
                return err("premise does not match");
            }
        }
        _ => return err("subject does not fit the rule"),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Weighted substitution

/// From `Φ ▷ E, x:M ⊢ t : T` and `Ψ ▷ F ⊢ n : M` (an `Lmulti` node), builds
/// a derivation of `E + F ⊢ t[x := n] : T` of size `|Φ| - |M| + |Ψ|`.
pub fn subst_lderiv(phi: &LinDerivation, x: &Name, psi: &LinDerivation) -> Result<LinDerivation, LinError> {
    let pre = |m: &str| Err(LinError::PreconditionViolated(m.to_string()));
    if psi.rule != LinRule::Multi || phi.rule == LinRule::Multi {
        return pre("expected a linear derivation and a multitype derivation");
    }
    if term_has_free(&psi.term, x) {
        return pre("the variable is free in the substituted term");
    }
    if LinConcl::Many(phi.env.get(x)) != psi.concl {
        return pre("the multitype of the variable differs from the substituted term's");
    }
    let mut names = Supply::new();
    names.deriv(phi);
    names.deriv(psi);
    let mut pool = psi.premises.clone();
    let out = subst_go(phi, x, &psi.term, &mut pool, &mut names)?;
    if !pool.is_empty() {
        return pre("unused derivations of the substituted term");
    }
    Ok(out)
}

fn take(pool: &mut Vec<LinDerivation>, m: &LinMulti) -> Result<Vec<LinDerivation>, LinError> {
    let mut out = Vec::with_capacity(m.len());
    for t in m.items() {
        let Some(i) = pool.iter().position(|p| p.ty() == Some(t)) else {
            return Err(LinError::PreconditionViolated("no derivation for a use of the variable".into()));
        };
        out.push(pool.remove(i));
    }
    Ok(out)
}

fn subst_go(
    d: &LinDerivation,
    x: &Name,
    n: &Tm,
    pool: &mut Vec<LinDerivation>,
    names: &mut Supply,
) -> Result<LinDerivation, LinError> {
    if d.rule == LinRule::Var && d.term == Term::free_name(x) {
        let mut mine = take(pool, &d.env.get(x))?;
        return Ok(mine.pop().expect("one use"));
    }
    if d.env.get(x).is_empty() && !term_has_free(&d.term, x) {
        return Ok(d.clone());
    }
    let fv = FreeNames::of_term(n);
    let d = match (&d.binder, d.rule) {
        (Some(y), LinRule::Lam) if y == x || fv.terms.contains(y) => rename_var(d, y, &names.fresh(y)),
        (Some(e), LinRule::Nu) if fv.eigs.contains(e) => rename_eig(d, e, &names.fresh(e)),
        _ => d.clone(),
    };
    let mut premises = Vec::with_capacity(d.premises.len());
    for p in &d.premises {
        let mut mine = take(pool, &p.env.get(x))?;
        premises.push(subst_go(p, x, n, &mut mine, names)?);
        if !mine.is_empty() {
            return Err(LinError::PreconditionViolated("unused derivations of the substituted term".into()));
        }
    }
    Ok(d.rebuilt(subst_term_var(&d.term, x, n), premises))
}

// ---------------------------------------------------------------------------
// Weak-head subject reduction

/// Transports a derivation of `step.before` along a weak-head step. The
/// result types `step.after` with the same environment and type and is
/// strictly smaller.
pub fn wh_step_lderiv(d: &LinDerivation, step: &Step) -> Result<LinDerivation, LinError> {
    if d.term != step.before {
        return mismatch("the derivation's subject is not the step's source");
    }
    if !is_wh_position(&step.before, &step.position) {
        return Err(LinError::NotWeakHead);
    }
    let mut names = Supply::new();
    names.deriv(d);
    let mut red = Reducer::new(Level::F, KindCtx::new());
    let out = reduce_at(d, &step.position.0, &mut red, &mut names)?;
    if out.term != step.after {
        return mismatch("the transported subject is not the step's target");
    }
    Ok(out)
}

fn reduce_at(d: &LinDerivation, pos: &[u8], red: &mut Reducer, names: &mut Supply) -> Result<LinDerivation, LinError> {
    let Some((&i, rest)) = pos.split_first() else { return reduce_root(d, names) };
    if i != 0 {
        return Err(LinError::NotWeakHead);
    }
    let Some(step) = red.step_at(&d.term, &Position(pos.to_vec())) else {
        return mismatch(format!("no redex at {} in {}", Position(pos.to_vec()), print_term(&d.term)));
    };
    let inner: Vec<u8> = match d.rule {
        LinRule::App | LinRule::AppT | LinRule::Guard | LinRule::VerEig | LinRule::Nu => rest.to_vec(),
        LinRule::VerImp => [&[0, 0][..], rest].concat(),
        LinRule::VerAll => [&[0, 0, 0][..], rest].concat(),
        _ => return Err(LinError::NotWeakHead),
    };
    let mut premises = d.premises.clone();
    premises[0] = reduce_at(&d.premises[0], &inner, red, names)?;
    Ok(d.rebuilt(step.after, premises))
}

fn reduce_root(d: &LinDerivation, names: &mut Supply) -> Result<LinDerivation, LinError> {
    let prem = |i: usize| d.premises.get(i).cloned().ok_or_else(|| LinError::SubjectMismatch("missing premise".into()));
    match (&*d.term, d.rule) {
        (Term::App(f, n), LinRule::App) if matches!(&**f, Term::Lam(..)) => {
            let lam = prem(0)?;
            let psi = prem(1)?;
            let x = lam.binder.clone().expect("Llam binder");
            let mut phi = lam.premises[0].clone();
            let mut x2 = x.clone();
            if term_has_free(n, &x) {
                x2 = names.fresh(&x);
                phi = rename_var(&phi, &x, &x2);
            }
            subst_lderiv(&phi, &x2, &psi)
        }
        (Term::TyApp(f, _), LinRule::AppT) if matches!(&**f, Term::TyLam(..)) => Ok(prem(0)?.premises[0].clone()),
        (Term::Guard(c, _), LinRule::Guard) if c.is_star() => prem(1),
        (Term::Verif(..), LinRule::VerEig) => Ok(LinDerivation::star()),
        (Term::Gen(_), LinRule::GenImp | LinRule::GenAll) => prem(0),
        (Term::Verif(..), LinRule::VerImp | LinRule::VerAll) => prem(0),
        (Term::Fresh(_, _, b), LinRule::Nu) if !has_bound_eig(b, 0) => prem(0),
        _ => mismatch(format!("{} does not type a redex at the root of {}", d.rule.as_str(), print_term(&d.term))),
    }
}

// ---------------------------------------------------------------------------
// Anti-substitution and subject expansion

/// From `Φ ▷ E ⊢ body[x := n] : T`, splits off the uses of `n`: returns
/// `Φ0 ▷ E0, x:M ⊢ body : T` and the derivations of `n` typing `M`.
fn anti(
    d: &LinDerivation,
    body: &Tm,
    x: &Name,
    n: &Tm,
    names: &mut Supply,
) -> Result<(LinDerivation, Vec<LinDerivation>), LinError> {
    if let Term::Free(y) = &**body {
        if y == x {
            if d.term != *n {
                return mismatch("a use of the variable is not typed as the substituted term");
            }
            return Ok((LinDerivation::var(x, d.lin_ty()), vec![d.clone()]));
        }
    }
    if !term_has_free(body, x) {
        if d.term != *body {
            return mismatch("subjects diverge outside the substituted positions");
        }
        return Ok((d.clone(), vec![]));
    }
    let fv = FreeNames::of_term(n);
    let d = match (&d.binder, d.rule) {
        (Some(y), LinRule::Lam) if y == x || fv.terms.contains(y) || term_has_free(body, y) => {
            rename_var(d, y, &names.fresh(y))
        }
        (Some(e), LinRule::Nu) if fv.eigs.contains(e) || eig_free_in(body, e) => rename_eig(d, e, &names.fresh(e)),
        _ => d.clone(),
    };
    let child_bodies: Vec<Tm> = match (d.rule, &**body) {
        (LinRule::App, Term::App(f, a)) => vec![f.clone(), a.clone()],
        (LinRule::Guard, Term::Guard(c, m)) => vec![c.clone(), m.clone()],
        (LinRule::Lam, Term::Lam(_, b)) => vec![open(b, d.binder.as_ref().unwrap())],
        (LinRule::LamT, Term::TyLam(_, _, b)) => match d.ty() {
            Some(LinType::ForAll(a, _)) => vec![instantiate_ty(b, a)],
            _ => return mismatch("Llamt without a quantified use"),
        },
        (LinRule::AppT, Term::TyApp(f, _)) => vec![f.clone()],
        (LinRule::Nu, Term::Fresh(_, _, b)) => vec![open_eig(b, d.binder.as_ref().unwrap())],
        (LinRule::VerEig, Term::Verif(_, m)) => vec![m.clone()],
        (LinRule::VerImp, Term::Verif(a, m)) => match &**a {
            Type::Arrow(a, b) => vec![Term::verif(b.clone(), Term::app(m.clone(), Term::gen(a.clone())))],
            _ => return mismatch("LverImp on a non-implication"),
        },
        (LinRule::VerAll, Term::Verif(a, m)) => match &**a {
            Type::ForAll(h, k, b) => vec![verif_all(&h.0, k, b, m)],
            _ => return mismatch("LverAll on a non-quantifier"),
        },
        _ => return mismatch(format!("{} does not fit {}", d.rule.as_str(), print_term(body))),
    };
    let mut premises = Vec::new();
    let mut uses = Vec::new();
    for (p, b) in d.premises.iter().zip(child_bodies) {
        if p.rule == LinRule::Multi {
            let mut qs = Vec::new();
            for q in &p.premises {
                let (q0, u) = anti(q, &b, x, n, names)?;
                qs.push(q0);
                uses.extend(u);
            }
            premises.push(LinDerivation::multi(b, qs));
        } else {
            let (p0, u) = anti(p, &b, x, n, names)?;
            premises.push(p0);
            uses.extend(u);
        }
    }
    Ok((d.rebuilt(body.clone(), premises), uses))
}

/// Splits a derivation of `t[x := n]` into one of `t` with `x` typed by a
/// multitype and an `Lmulti` derivation of `n` at that multitype.
pub fn anti_subst_lderiv(
    d: &LinDerivation,
    body: &Tm,
    x: &Name,
    n: &Tm,
) -> Result<(LinDerivation, LinDerivation), LinError> {
    if term_has_free(n, x) {
        return Err(LinError::PreconditionViolated("the variable is free in the substituted term".into()));
    }
    if subst_term_var(body, x, n) != d.term {
        return mismatch("the derivation does not type the substitution instance");
    }
    let mut names = Supply::new();
    names.deriv(d);
    names.term(body);
    names.term(n);
    names.0.insert(x.clone());
    let (phi, uses) = anti(d, body, x, n, &mut names)?;
    Ok((phi, LinDerivation::multi(n.clone(), uses)))
}

/// Transports a derivation of `step.after` back to `step.before`, for a
/// step at any position.
pub fn expand_lderiv(d: &LinDerivation, step: &Step) -> Result<LinDerivation, LinError> {
    if d.term != step.after {
        return mismatch("the derivation's subject is not the step's target");
    }
    let mut names = Supply::new();
    names.deriv(d);
    names.term(&step.before);
    let out = expand_at(d, &step.before, &step.position.0, &mut names)?;
    if out.term != step.before {
        return mismatch("the expanded subject is not the step's source");
    }
    Ok(out)
}

fn expand_at(d: &LinDerivation, before: &Tm, pos: &[u8], names: &mut Supply) -> Result<LinDerivation, LinError> {
    let Some((&i, rest)) = pos.split_first() else { return expand_root(d, before, names) };
    if d.rule == LinRule::Multi {
        let mut qs = Vec::new();
        for q in &d.premises {
            qs.push(expand_at(q, before, pos, names)?);
        }
        return Ok(LinDerivation::multi(before.clone(), qs));
    }
    let d = match (&d.binder, d.rule) {
        (Some(y), LinRule::Lam) if term_has_free(before, y) => rename_var(d, y, &names.fresh(y)),
        (Some(e), LinRule::Nu) if eig_free_in(before, e) => rename_eig(d, e, &names.fresh(e)),
        _ => d.clone(),
    };
    let (k, child, inner): (usize, Tm, Vec<u8>) = match (d.rule, &**before, i) {
        (LinRule::App, Term::App(f, _), 0) | (LinRule::Guard, Term::Guard(f, _), 0) => (0, f.clone(), rest.to_vec()),
        (LinRule::App, Term::App(_, a), 1) | (LinRule::Guard, Term::Guard(_, a), 1) => (1, a.clone(), rest.to_vec()),
        (LinRule::Lam, Term::Lam(_, b), 0) => (0, open(b, d.binder.as_ref().unwrap()), rest.to_vec()),
        (LinRule::LamT, Term::TyLam(_, _, b), 0) => match d.ty() {
            Some(LinType::ForAll(a, _)) => (0, instantiate_ty(b, a), rest.to_vec()),
            _ => return mismatch("Llamt without a quantified use"),
        },
        (LinRule::AppT, Term::TyApp(f, _), 0) => (0, f.clone(), rest.to_vec()),
        (LinRule::Nu, Term::Fresh(_, _, b), 0) => (0, open_eig(b, d.binder.as_ref().unwrap()), rest.to_vec()),
        (LinRule::VerEig, Term::Verif(_, m), 0) => (0, m.clone(), rest.to_vec()),
        (LinRule::VerImp, Term::Verif(a, m), 0) => match &**a {
            Type::Arrow(a, b) => {
                (0, Term::verif(b.clone(), Term::app(m.clone(), Term::gen(a.clone()))), [&[0, 0][..], rest].concat())
            }
            _ => return mismatch("LverImp on a non-implication"),
        },
        (LinRule::VerAll, Term::Verif(a, m), 0) => match &**a {
            Type::ForAll(h, kd, b) => (0, verif_all(&h.0, kd, b, m), [&[0, 0, 0][..], rest].concat()),
            _ => return mismatch("LverAll on a non-quantifier"),
        },
        _ => return mismatch(format!("{} has no subterm at the step position", d.rule.as_str())),
    };
    let mut premises = d.premises.clone();
    premises[k] = expand_at(&d.premises[k], &child, &inner, names)?;
    Ok(d.rebuilt(before.clone(), premises))
}

fn expand_root(d: &LinDerivation, before: &Tm, names: &mut Supply) -> Result<LinDerivation, LinError> {
    if d.rule == LinRule::Multi {
        let mut qs = Vec::new();
        for q in &d.premises {
            qs.push(expand_root(q, before, names)?);
        }
        return Ok(LinDerivation::multi(before.clone(), qs));
    }
    let ty = d.lin_ty();
    let node = |rule, premises, binder| LinDerivation::node(rule, before.clone(), ty.clone(), premises, binder);
    match &**before {
        Term::App(f, n) => {
            let Term::Lam(h, b) = &**f else { return mismatch("not a beta-redex") };
            let x = names.fresh(h.as_str());
            let body = open(b, &x);
            let (phi, uses) = anti(d, &body, &x, n, names)?;
            let psi = LinDerivation::multi(n.clone(), uses);
            let lam = LinDerivation::node(LinRule::Lam, f.clone(), LinType::Star, vec![phi], Some(x));
            Ok(node(LinRule::App, vec![lam, psi], None))
        }
        Term::TyApp(f, a) => {
            if !matches!(&**f, Term::TyLam(..)) {
                return mismatch("not a type beta-redex");
            }
            let lamt = LinDerivation::node(
                LinRule::LamT,
                f.clone(),
                LinType::ForAll(a.clone(), Box::new(ty.clone())),
                vec![d.clone()],
                None,
            );
            Ok(node(LinRule::AppT, vec![lamt], None))
        }
        Term::Guard(c, _) if c.is_star() => Ok(node(LinRule::Guard, vec![LinDerivation::star(), d.clone()], None)),
        Term::Verif(a, m) => match (&**a, &**m) {
            (Type::Eig(e), Term::Gen(b)) if a == b => {
                if d.rule != LinRule::StarIntro {
                    return mismatch("the reduct star is not typed by the star axiom");
                }
                Ok(node(LinRule::VerEig, vec![LinDerivation::gen_eig(e)], None))
            }
            (Type::Arrow(..), _) => Ok(node(LinRule::VerImp, vec![d.clone()], None)),
            (Type::ForAll(..), _) => Ok(node(LinRule::VerAll, vec![d.clone()], None)),
            _ => mismatch("the verifier is not a redex"),
        },
        Term::Gen(a) => match &**a {
            Type::Arrow(..) => Ok(node(LinRule::GenImp, vec![d.clone()], None)),
            Type::ForAll(..) => Ok(node(LinRule::GenAll, vec![d.clone()], None)),
            _ => mismatch("the generator is not a redex"),
        },
        Term::Fresh(h, _, b) if !has_bound_eig(b, 0) => {
            let e = names.fresh(h.as_str());
            Ok(node(LinRule::Nu, vec![d.clone()], Some(e)))
        }
        _ => mismatch(format!("no rule contracts {}", print_term(before))),
    }
}

/// Starts from the star axiom and expands backwards along a recorded trace
/// that ends in `star`.
pub fn derive_from_trace(trace: &Trace) -> Result<LinDerivation, LinError> {
    let bad = |m: &str| Err(LinError::InvalidTrace(m.to_string()));
    if trace.level == Level::FOmega {
        return bad("traces of the higher-order calculus are not supported");
    }
    if trace.outcome != Outcome::StarReached || !trace.final_term.is_star() {
        return bad("the trace does not end in star");
    }
    if trace.steps.len() as u64 != trace.step_count || !trace.is_chained() {
        return bad("the steps are not recorded or do not chain");
    }
    let mut d = LinDerivation::star();
    for s in trace.steps.iter().rev() {
        d = expand_lderiv(&d, s)?;
    }
    Ok(d)
}

/// Sizes seen while replaying the weak-head reduction of `d`'s subject
/// through subject reduction.
#[derive(Clone, Debug)]
pub struct Replay {
    pub sizes: Vec<usize>,
    pub last: LinDerivation,
}

/// Follows weak-head reduction from `d`'s subject, transporting `d` at each
/// step. Stops at a weak-head normal form or after `fuel` steps.
pub fn replay_weak_head(d: &LinDerivation, fuel: u64) -> Result<Replay, LinError> {
    let mut red = Reducer::new(Level::F, KindCtx::new());
    let mut cur = d.clone();
    let mut sizes = vec![cur.size()];
    for _ in 0..fuel {
        let Some(step) = red.wh_step(&cur.term) else { break };
        cur = wh_step_lderiv(&cur, &step)?;
        sizes.push(cur.size());
    }
    Ok(Replay { sizes, last: cur })
}

// ---------------------------------------------------------------------------
// Printing

impl fmt::Display for LinType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinType::Star => f.write_str("star"),
            LinType::Gen(e) => write!(f, "gen(#{e})"),
            LinType::Arrow(m, t) => write!(f, "{m} -o {t}"),
            LinType::ForAll(a, t) => write!(f, "forall[{}]. {t}", print_type(a)),
        }
    }
}

impl fmt::Display for LinMulti {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|t| t.to_string()).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

impl fmt::Display for LinEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(x, m)| format!("{x} : {m}")).collect();
        f.write_str(&parts.join(", "))
    }
}

impl LinDerivation {
    pub fn to_json(&self) -> Value {
        let env: serde_json::Map<String, Value> = self
            .env
            .entries()
            .map(|(x, m)| (x.to_string(), json!(m.items().iter().map(|t| t.to_string()).collect::<Vec<_>>())))
            .collect();
        let mut v = json!({
            "rule": self.rule.as_str(),
            "env": env,
            "term": print_term(&self.term),
            "premises": self.premises.iter().map(|p| p.to_json()).collect::<Vec<_>>(),
        });
        match &self.concl {
            LinConcl::One(t) => v["linear_type"] = json!(t.to_string()),
            LinConcl::Many(m) => v["linear_multitype"] = json!(m.to_string()),
        }
        if let Some(b) = &self.binder {
            v["binder"] = json!(b.to_string());
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tm(s: &str) -> Tm {
        parse_term(s, Level::F).unwrap()
    }

    fn step(s: &str) -> Step {
        wh_step(Level::F, &tm(s)).unwrap()
    }

    #[test]
    fn axioms_and_sizes() {
        let s = LinDerivation::star();
        assert!(check_lderiv(&s));
        assert_eq!(lderiv_size(&s).unwrap(), 1);
        let v = LinDerivation::var(&name("x"), LinType::Star);
        assert!(check_lderiv(&v));
        let m = LinDerivation::multi(tm("x"), vec![v.clone(), v.clone()]);
        assert!(check_lderiv(&m));
        assert_eq!(lderiv_size(&m).unwrap(), 2);
        assert_eq!(LinDerivation::multi(tm("x"), vec![]).size(), 0);

        let bad = LinDerivation {
            rule: LinRule::App,
            env: LinEnv::new(),
            term: tm("f x"),
            concl: LinConcl::One(LinType::Star),
            premises: vec![
                LinDerivation::var(&name("f"), LinType::Arrow(LinMulti::single(LinType::Star), Box::new(LinType::Star))),
                LinDerivation::multi(tm("x"), vec![v]),
            ],
            binder: None,
        };
        assert!(!check_lderiv(&bad));
    }

    #[test]
    fn weighted_substitution() {
        let x = name("x");
        let phi = LinDerivation::var(&x, LinType::Star);
        let psi = LinDerivation::multi(Term::star(), vec![LinDerivation::star()]);
        let out = subst_lderiv(&phi, &x, &psi).unwrap();
        assert_eq!(out, LinDerivation::star());
        assert_eq!(out.size(), phi.size() - 1 + psi.size());

        let y = LinDerivation::var(&name("y"), LinType::Star);
        let out = subst_lderiv(&y, &x, &LinDerivation::multi(tm("z"), vec![])).unwrap();
        assert_eq!(out, y);

        let psi = LinDerivation::multi(tm("x"), vec![]);
        let r = subst_lderiv(&y, &x, &psi);
        assert!(matches!(r, Err(LinError::PreconditionViolated(_))));
    }

    #[test]
    fn subject_reduction_examples() {
        let s = step("seq(star, star)");
        let d = LinDerivation::node(
            LinRule::Guard,
            tm("seq(star, star)"),
            LinType::Star,
            vec![LinDerivation::star(), LinDerivation::star()],
            None,
        );
        assert!(check_lderiv(&d));
        assert_eq!(d.size(), 3);
        let r = wh_step_lderiv(&d, &s).unwrap();
        assert_eq!(r.size(), 1);

        let s = step("ver(#a, gen(#a))");
        let d = expand_lderiv(&LinDerivation::star(), &s).unwrap();
        assert!(check_lderiv(&d));
        assert_eq!(d.size(), 2);
        assert_eq!(wh_step_lderiv(&d, &s).unwrap(), LinDerivation::star());

        let t = tm("\\y. seq(star, y)");
        let inner = Reducer::new(Level::F, KindCtx::new()).step_at(&t, &"/0".parse().unwrap()).unwrap();
        let y = name("y");
        let body = LinDerivation::node(
            LinRule::Guard,
            tm("seq(star, y)"),
            LinType::Star,
            vec![LinDerivation::star(), LinDerivation::var(&y, LinType::Star)],
            None,
        );
        let d = LinDerivation::node(LinRule::Lam, t, LinType::Star, vec![body], Some(y));
        assert!(check_lderiv(&d), "{:?}", validate_lderiv(&d));
        assert_eq!(wh_step_lderiv(&d, &inner), Err(LinError::NotWeakHead));
    }

    #[test]
    fn expansion_examples() {
        let s = step("seq(star, star)");
        let d = expand_lderiv(&LinDerivation::star(), &s).unwrap();
        assert_eq!(d.rule, LinRule::Guard);
        assert!(check_lderiv(&d));
        let other = step("ver(#b, gen(#b))");
        let r = expand_lderiv(&d, &other);
        assert!(matches!(r, Err(LinError::SubjectMismatch(_))));
    }

    #[test]
    fn traces() {
        let tr = reduce(Level::F, &Term::star(), Strategy::WeakHead, 10);
        assert_eq!(derive_from_trace(&tr).unwrap().size(), 1);
        let tr = reduce(Level::F, &tm("ver(#a, gen(#a))"), Strategy::WeakHead, 10);
        let d = derive_from_trace(&tr).unwrap();
        assert!(check_lderiv(&d));
        assert_eq!(d.size(), 2);
        let tr = reduce(Level::F, &tm("ver(#a, \\x. x)"), Strategy::WeakHead, 10);
        assert!(matches!(derive_from_trace(&tr), Err(LinError::InvalidTrace(_))));
    }

    #[test]
    fn witnessed_standardization_on_a_scope_crossing_redex() {
        let m = tm("(\\x. ver(forall a. a -> a, x)) (/\\b. \\z. z)");
        let tr = reduce(Level::F, &m, Strategy::Random(7), 1000);
        assert_eq!(tr.outcome, Outcome::StarReached);
        let d = derive_from_trace(&tr).unwrap();
        validate_lderiv(&d).unwrap();
        let r = replay_weak_head(&d, 1000).unwrap();
        assert!(r.sizes.windows(2).all(|w| w[0] > w[1]));
        assert_eq!(r.last, LinDerivation::star());
    }
}
