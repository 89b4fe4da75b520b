//! Binding machinery: one generic traversal over de Bruijn terms, and the
//! shifting, instantiation, opening/closing and free-name substitutions that
//! the rest of the crate is written against.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use super::ast::*;

/// Number of binders of each namespace crossed so far.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Depth {
    pub tm: usize,
    pub ty: usize,
    pub eig: usize,
}

/// Callbacks for each variable form; `None` keeps the node unchanged, which
/// lets the traversal preserve sharing.
pub trait VarMap {
    fn term_var(&self, _i: usize, _d: Depth) -> Option<Tm> {
        None
    }
    fn free_term(&self, _x: &Name, _d: Depth) -> Option<Tm> {
        None
    }
    fn type_var(&self, _i: usize, _d: Depth) -> Option<Ty> {
        None
    }
    fn free_type(&self, _a: &Name, _d: Depth) -> Option<Ty> {
        None
    }
    fn eig(&self, _a: &Name, _d: Depth) -> Option<Ty> {
        None
    }
    fn bound_eig(&self, _i: usize, _d: Depth) -> Option<Ty> {
        None
    }
    /// Whether embedded types may change; lets term-only maps skip them.
    fn visits_types(&self) -> bool {
        true
    }
}

pub fn map_type(t: &Ty, m: &dyn VarMap, d: Depth) -> Option<Ty> {
    match &**t {
        Type::Var(i) => m.type_var(*i, d),
        Type::Free(a) => m.free_type(a, d),
        Type::Eig(a) => m.eig(a, d),
        Type::BoundEig(i) => m.bound_eig(*i, d),
        Type::Arrow(a, b) => {
            let a2 = map_type(a, m, d);
            let b2 = map_type(b, m, d);
            if a2.is_none() && b2.is_none() {
                return None;
            }
            Some(Type::arrow(a2.unwrap_or_else(|| a.clone()), b2.unwrap_or_else(|| b.clone())))
        }
        Type::ForAll(h, k, b) => {
            let inner = Depth { ty: d.ty + 1, ..d };
            map_type(b, m, inner).map(|b2| Arc::new(Type::ForAll(h.clone(), k.clone(), b2)))
        }
        Type::Lam(h, k, b) => {
            let inner = Depth { ty: d.ty + 1, ..d };
            map_type(b, m, inner).map(|b2| Arc::new(Type::Lam(h.clone(), k.clone(), b2)))
        }
        Type::App(f, a) => {
            let f2 = map_type(f, m, d);
            let a2 = map_type(a, m, d);
            match (f2, a2) {
                (None, None) => None,
                (Some(f2), a2) => Some(ty_apply(&f2, &a2.unwrap_or_else(|| a.clone()))),
                (None, Some(a2)) => Some(Type::app(f.clone(), a2)),
            }
        }
    }
}

pub fn map_term(t: &Tm, m: &dyn VarMap, d: Depth) -> Option<Tm> {
    let types = m.visits_types();
    let mt = |a: &Ty, d: Depth| if types { map_type(a, m, d) } else { None };
    match &**t {
        Term::Var(i) => m.term_var(*i, d),
        Term::Free(x) => m.free_term(x, d),
        Term::Star => None,
        Term::Lam(h, b) => {
            let inner = Depth { tm: d.tm + 1, ..d };
            map_term(b, m, inner).map(|b2| Arc::new(Term::Lam(h.clone(), b2)))
        }
        Term::App(f, a) => {
            let f2 = map_term(f, m, d);
            let a2 = map_term(a, m, d);
            if f2.is_none() && a2.is_none() {
                return None;
            }
            Some(Term::app(f2.unwrap_or_else(|| f.clone()), a2.unwrap_or_else(|| a.clone())))
        }
        Term::TyLam(h, k, b) => {
            let inner = Depth { ty: d.ty + 1, ..d };
            map_term(b, m, inner).map(|b2| Arc::new(Term::TyLam(h.clone(), k.clone(), b2)))
        }
        Term::TyApp(f, a) => {
            let f2 = map_term(f, m, d);
            let a2 = mt(a, d);
            if f2.is_none() && a2.is_none() {
                return None;
            }
            Some(Term::ty_app(f2.unwrap_or_else(|| f.clone()), a2.unwrap_or_else(|| a.clone())))
        }
        Term::Guard(c, b) => {
            let c2 = map_term(c, m, d);
            let b2 = map_term(b, m, d);
            if c2.is_none() && b2.is_none() {
                return None;
            }
            Some(Term::guard(c2.unwrap_or_else(|| c.clone()), b2.unwrap_or_else(|| b.clone())))
        }
        Term::Gen(a) => mt(a, d).map(Term::gen),
        Term::Verif(a, b) => {
            let a2 = mt(a, d);
            let b2 = map_term(b, m, d);
            if a2.is_none() && b2.is_none() {
                return None;
            }
            Some(Term::verif(a2.unwrap_or_else(|| a.clone()), b2.unwrap_or_else(|| b.clone())))
        }
        Term::Fresh(h, k, b) => {
            let inner = Depth { eig: d.eig + 1, ..d };
            map_term(b, m, inner).map(|b2| Arc::new(Term::Fresh(h.clone(), k.clone(), b2)))
        }
        Term::Annot(b, a) => {
            let b2 = map_term(b, m, d);
            let a2 = mt(a, d);
            if b2.is_none() && a2.is_none() {
                return None;
            }
            Some(Term::annot(b2.unwrap_or_else(|| b.clone()), a2.unwrap_or_else(|| a.clone())))
        }
    }
}

fn apply_map_ty(t: &Ty, m: &dyn VarMap) -> Ty {
    map_type(t, m, Depth::default()).unwrap_or_else(|| t.clone())
}

fn apply_map_tm(t: &Tm, m: &dyn VarMap) -> Tm {
    map_term(t, m, Depth::default()).unwrap_or_else(|| t.clone())
}

// ---------------------------------------------------------------------------
// Shifting

struct Shift {
    tm: isize,
    ty: isize,
    eig: isize,
}

fn bump(i: usize, by: isize) -> usize {
    let j = i as isize + by;
    assert!(j >= 0, "de Bruijn index underflow");
    j as usize
}

impl VarMap for Shift {
    fn term_var(&self, i: usize, d: Depth) -> Option<Tm> {
        (self.tm != 0 && i >= d.tm).then(|| Term::var(bump(i, self.tm)))
    }
    fn type_var(&self, i: usize, d: Depth) -> Option<Ty> {
        (self.ty != 0 && i >= d.ty).then(|| Type::var(bump(i, self.ty)))
    }
    fn bound_eig(&self, i: usize, d: Depth) -> Option<Ty> {
        (self.eig != 0 && i >= d.eig).then(|| Type::bound_eig(bump(i, self.eig)))
    }
    fn visits_types(&self) -> bool {
        self.ty != 0 || self.eig != 0
    }
}

pub fn shift_term(t: &Tm, tm: isize, ty: isize, eig: isize) -> Tm {
    if tm == 0 && ty == 0 && eig == 0 {
        return t.clone();
    }
    apply_map_tm(t, &Shift { tm, ty, eig })
}

pub fn shift_type(t: &Ty, ty: isize, eig: isize) -> Ty {
    if ty == 0 && eig == 0 {
        return t.clone();
    }
    apply_map_ty(t, &Shift { tm: 0, ty, eig })
}

// ---------------------------------------------------------------------------
// Instantiation of the outermost bound variable

struct InstTerm<'a>(&'a Tm);

impl VarMap for InstTerm<'_> {
    fn term_var(&self, i: usize, d: Depth) -> Option<Tm> {
        if i == d.tm {
            Some(shift_term(self.0, d.tm as isize, d.ty as isize, d.eig as isize))
        } else if i > d.tm {
            Some(Term::var(i - 1))
        } else {
            None
        }
    }
    fn visits_types(&self) -> bool {
        false
    }
}

/// `body[0 := s]` for a term binder (the beta rule).
pub fn instantiate(body: &Tm, s: &Tm) -> Tm {
    apply_map_tm(body, &InstTerm(s))
}

struct InstType<'a>(&'a Ty);

impl VarMap for InstType<'_> {
    fn type_var(&self, i: usize, d: Depth) -> Option<Ty> {
        if i == d.ty {
            Some(shift_type(self.0, d.ty as isize, d.eig as isize))
        } else if i > d.ty {
            Some(Type::var(i - 1))
        } else {
            None
        }
    }
}

/// `body[0 := s]` for a type binder, inside a type. The result is kept in
/// type-beta-normal form when `body` and `s` are.
pub fn ty_instantiate(body: &Ty, s: &Ty) -> Ty {
    apply_map_ty(body, &InstType(s))
}

/// `body[0 := s]` for a type binder of a metaterm (the type-beta rule).
pub fn instantiate_ty(body: &Tm, s: &Ty) -> Tm {
    apply_map_tm(body, &InstType(s))
}

struct InstEig<'a>(&'a Ty);

impl VarMap for InstEig<'_> {
    fn bound_eig(&self, i: usize, d: Depth) -> Option<Ty> {
        if i == d.eig {
            Some(shift_type(self.0, d.ty as isize, d.eig as isize))
        } else if i > d.eig {
            Some(Type::bound_eig(i - 1))
        } else {
            None
        }
    }
}

/// Replaces the eigenvariable bound by an enclosing `nu` with `s`.
pub fn instantiate_eig(body: &Tm, s: &Ty) -> Tm {
    apply_map_tm(body, &InstEig(s))
}

pub fn ty_instantiate_eig(body: &Ty, s: &Ty) -> Ty {
    apply_map_ty(body, &InstEig(s))
}

/// Type application that contracts a head type-lambda (hereditarily).
pub fn ty_apply(f: &Ty, a: &Ty) -> Ty {
    match &**f {
        Type::Lam(_, _, body) => ty_instantiate(body, a),
        _ => Type::app(f.clone(), a.clone()),
    }
}

// ---------------------------------------------------------------------------
// Opening and closing with names (locally nameless views)

pub fn open(body: &Tm, x: &Name) -> Tm {
    instantiate(body, &Term::free_name(x))
}

pub fn open_ty(body: &Tm, a: &Name) -> Tm {
    instantiate_ty(body, &Arc::new(Type::Free(a.clone())))
}

pub fn ty_open(body: &Ty, a: &Name) -> Ty {
    ty_instantiate(body, &Arc::new(Type::Free(a.clone())))
}

pub fn open_eig(body: &Tm, e: &Name) -> Tm {
    instantiate_eig(body, &Arc::new(Type::Eig(e.clone())))
}

struct Close<'a> {
    term: Option<&'a Name>,
    tyvar: Option<&'a Name>,
    eig: Option<&'a Name>,
}

impl VarMap for Close<'_> {
    fn free_term(&self, x: &Name, d: Depth) -> Option<Tm> {
        (self.term == Some(x)).then(|| Term::var(d.tm))
    }
    fn free_type(&self, a: &Name, d: Depth) -> Option<Ty> {
        (self.tyvar == Some(a)).then(|| Type::var(d.ty))
    }
    fn eig(&self, a: &Name, d: Depth) -> Option<Ty> {
        (self.eig == Some(a)).then(|| Type::bound_eig(d.eig))
    }
    fn visits_types(&self) -> bool {
        self.tyvar.is_some() || self.eig.is_some()
    }
}

/// Abstracts the free term variable `x` of a locally closed term.
pub fn close(t: &Tm, x: &Name) -> Tm {
    apply_map_tm(t, &Close { term: Some(x), tyvar: None, eig: None })
}

pub fn close_ty(t: &Tm, a: &Name) -> Tm {
    apply_map_tm(t, &Close { term: None, tyvar: Some(a), eig: None })
}

pub fn ty_close(t: &Ty, a: &Name) -> Ty {
    apply_map_ty(t, &Close { term: None, tyvar: Some(a), eig: None })
}

pub fn close_eig(t: &Tm, e: &Name) -> Tm {
    apply_map_tm(t, &Close { term: None, tyvar: None, eig: Some(e) })
}

pub fn ty_close_eig(t: &Ty, e: &Name) -> Ty {
    apply_map_ty(t, &Close { term: None, tyvar: None, eig: Some(e) })
}

// ---------------------------------------------------------------------------
// Substitution for free names

/// Parallel capture-avoiding substitution of free names. Replacements are
/// expected to be locally closed (as every parsed or generated term is).
#[derive(Clone, Debug, Default)]
pub struct FreeSubst {
    pub terms: HashMap<Name, Tm>,
    pub types: HashMap<Name, Ty>,
    pub eigs: HashMap<Name, Ty>,
}

impl FreeSubst {
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty() && self.types.is_empty() && self.eigs.is_empty()
    }
}

impl VarMap for FreeSubst {
    fn free_term(&self, x: &Name, _d: Depth) -> Option<Tm> {
        self.terms.get(x).cloned()
    }
    fn free_type(&self, a: &Name, _d: Depth) -> Option<Ty> {
        self.types.get(a).cloned()
    }
    fn eig(&self, a: &Name, _d: Depth) -> Option<Ty> {
        self.eigs.get(a).cloned()
    }
    fn visits_types(&self) -> bool {
        !self.types.is_empty() || !self.eigs.is_empty()
    }
}

pub fn subst_term(t: &Tm, s: &FreeSubst) -> Tm {
    if s.is_empty() {
        return t.clone();
    }
    apply_map_tm(t, s)
}

pub fn subst_type(t: &Ty, s: &FreeSubst) -> Ty {
    if s.types.is_empty() && s.eigs.is_empty() {
        return t.clone();
    }
    apply_map_ty(t, s)
}

pub fn subst_term_var(t: &Tm, x: &Name, n: &Tm) -> Tm {
    let mut s = FreeSubst::default();
    s.terms.insert(x.clone(), n.clone());
    subst_term(t, &s)
}

/// Renames a free eigenvariable to a free type variable.
pub fn eig_to_tyvar_tm(t: &Tm, e: &Name, a: &Name) -> Tm {
    let mut s = FreeSubst::default();
    s.eigs.insert(e.clone(), Arc::new(Type::Free(a.clone())));
    subst_term(t, &s)
}

pub fn eig_to_tyvar_ty(t: &Ty, e: &Name, a: &Name) -> Ty {
    let mut s = FreeSubst::default();
    s.eigs.insert(e.clone(), Arc::new(Type::Free(a.clone())));
    subst_type(t, &s)
}

// ---------------------------------------------------------------------------
// Free names

/// Free names of a term or type, split by namespace.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FreeNames {
    pub terms: BTreeSet<Name>,
    pub types: BTreeSet<Name>,
    pub eigs: BTreeSet<Name>,
}

impl FreeNames {
    pub fn of_term(t: &Tm) -> FreeNames {
        let mut f = FreeNames::default();
        f.add_term(t);
        f
    }

    pub fn of_type(t: &Ty) -> FreeNames {
        let mut f = FreeNames::default();
        f.add_type(t);
        f
    }

    pub fn add_type(&mut self, t: &Ty) {
        match &**t {
            Type::Free(a) => {
                self.types.insert(a.clone());
            }
            Type::Eig(a) => {
                self.eigs.insert(a.clone());
            }
            Type::Var(_) | Type::BoundEig(_) => {}
            Type::Arrow(a, b) | Type::App(a, b) => {
                self.add_type(a);
                self.add_type(b);
            }
            Type::ForAll(_, _, b) | Type::Lam(_, _, b) => self.add_type(b),
        }
    }

    pub fn add_term(&mut self, t: &Tm) {
        match &**t {
            Term::Free(x) => {
                self.terms.insert(x.clone());
            }
            Term::Var(_) | Term::Star => {}
            Term::Lam(_, b) | Term::TyLam(_, _, b) | Term::Fresh(_, _, b) => self.add_term(b),
            Term::App(f, a) | Term::Guard(f, a) => {
                self.add_term(f);
                self.add_term(a);
            }
            Term::TyApp(f, a) | Term::Annot(f, a) | Term::Verif(a, f) => {
                self.add_term(f);
                self.add_type(a);
            }
            Term::Gen(a) => self.add_type(a),
        }
    }

    pub fn contains_any(&self, n: &Name) -> bool {
        self.terms.contains(n) || self.types.contains(n) || self.eigs.contains(n)
    }
}

pub fn term_has_free(t: &Tm, x: &Name) -> bool {
    match &**t {
        Term::Free(y) => y == x,
        Term::Var(_) | Term::Star | Term::Gen(_) => false,
        Term::Lam(_, b) | Term::TyLam(_, _, b) | Term::Fresh(_, _, b) => term_has_free(b, x),
        Term::App(f, a) | Term::Guard(f, a) => term_has_free(f, x) || term_has_free(a, x),
        Term::TyApp(f, _) | Term::Annot(f, _) | Term::Verif(_, f) => term_has_free(f, x),
    }
}

/// Whether the eigenvariable with loose index `i` occurs in a type.
pub fn ty_has_bound_eig(t: &Ty, i: usize) -> bool {
    match &**t {
        Type::BoundEig(j) => *j == i,
        Type::Arrow(a, b) | Type::App(a, b) => ty_has_bound_eig(a, i) || ty_has_bound_eig(b, i),
        Type::ForAll(_, _, b) | Type::Lam(_, _, b) => ty_has_bound_eig(b, i),
        _ => false,
    }
}

/// Whether the eigenvariable with loose index `i` occurs in a metaterm.
pub fn has_bound_eig(t: &Tm, i: usize) -> bool {
    match &**t {
        Term::Var(_) | Term::Free(_) | Term::Star => false,
        Term::Lam(_, b) | Term::TyLam(_, _, b) => has_bound_eig(b, i),
        Term::Fresh(_, _, b) => has_bound_eig(b, i + 1),
        Term::App(f, a) | Term::Guard(f, a) => has_bound_eig(f, i) || has_bound_eig(a, i),
        Term::TyApp(f, a) | Term::Annot(f, a) | Term::Verif(a, f) => {
            ty_has_bound_eig(a, i) || has_bound_eig(f, i)
        }
        Term::Gen(a) => ty_has_bound_eig(a, i),
    }
}

/// Whether the type variable with loose index `i` occurs in a type.
pub fn ty_has_var(t: &Ty, i: usize) -> bool {
    match &**t {
        Type::Var(j) => *j == i,
        Type::Arrow(a, b) | Type::App(a, b) => ty_has_var(a, i) || ty_has_var(b, i),
        Type::ForAll(_, _, b) | Type::Lam(_, _, b) => ty_has_var(b, i + 1),
        _ => false,
    }
}

/// Whether the term variable with loose index `i` occurs.
pub fn has_var(t: &Tm, i: usize) -> bool {
    match &**t {
        Term::Var(j) => *j == i,
        Term::Free(_) | Term::Star | Term::Gen(_) => false,
        Term::Lam(_, b) => has_var(b, i + 1),
        Term::TyLam(_, _, b) | Term::Fresh(_, _, b) => has_var(b, i),
        Term::App(f, a) | Term::Guard(f, a) => has_var(f, i) || has_var(a, i),
        Term::TyApp(f, _) | Term::Annot(f, _) | Term::Verif(_, f) => has_var(f, i),
    }
}

/// True when no de Bruijn index escapes its binders.
pub fn is_locally_closed(t: &Tm) -> bool {
    fn ty_ok(t: &Ty, d: Depth) -> bool {
        match &**t {
            Type::Var(i) => *i < d.ty,
            Type::BoundEig(i) => *i < d.eig,
            Type::Free(_) | Type::Eig(_) => true,
            Type::Arrow(a, b) | Type::App(a, b) => ty_ok(a, d) && ty_ok(b, d),
            Type::ForAll(_, _, b) | Type::Lam(_, _, b) => ty_ok(b, Depth { ty: d.ty + 1, ..d }),
        }
    }
    fn go(t: &Tm, d: Depth) -> bool {
        match &**t {
            Term::Var(i) => *i < d.tm,
            Term::Free(_) | Term::Star => true,
            Term::Lam(_, b) => go(b, Depth { tm: d.tm + 1, ..d }),
            Term::TyLam(_, _, b) => go(b, Depth { ty: d.ty + 1, ..d }),
            Term::Fresh(_, _, b) => go(b, Depth { eig: d.eig + 1, ..d }),
            Term::App(f, a) | Term::Guard(f, a) => go(f, d) && go(a, d),
            Term::TyApp(f, a) | Term::Annot(f, a) | Term::Verif(a, f) => go(f, d) && ty_ok(a, d),
            Term::Gen(a) => ty_ok(a, d),
        }
    }
    go(t, Depth::default())
}

pub fn ty_is_locally_closed(t: &Ty) -> bool {
    is_locally_closed(&Term::gen(t.clone()))
}

// ---------------------------------------------------------------------------
// Canonical forms (type-beta-normal)

/// Type-beta-normal form. Terminates on well-kinded types.
pub fn normalize_type(t: &Ty) -> Ty {
    match &**t {
        Type::Var(_) | Type::Free(_) | Type::Eig(_) | Type::BoundEig(_) => t.clone(),
        Type::Arrow(a, b) => {
            let (a2, b2) = (normalize_type(a), normalize_type(b));
            if Arc::ptr_eq(&a2, a) && Arc::ptr_eq(&b2, b) {
                t.clone()
            } else {
                Type::arrow(a2, b2)
            }
        }
        Type::ForAll(h, k, b) => {
            let b2 = normalize_type(b);
            if Arc::ptr_eq(&b2, b) {
                t.clone()
            } else {
                Arc::new(Type::ForAll(h.clone(), k.clone(), b2))
            }
        }
        Type::Lam(h, k, b) => {
            let b2 = normalize_type(b);
            if Arc::ptr_eq(&b2, b) {
                t.clone()
            } else {
                Arc::new(Type::Lam(h.clone(), k.clone(), b2))
            }
        }
        Type::App(f, a) => {
            let (f2, a2) = (normalize_type(f), normalize_type(a));
            if matches!(&*f2, Type::Lam(..)) {
                ty_apply(&f2, &a2)
            } else if Arc::ptr_eq(&f2, f) && Arc::ptr_eq(&a2, a) {
                t.clone()
            } else {
                Type::app(f2, a2)
            }
        }
    }
}

pub fn is_type_normal(t: &Ty) -> bool {
    match &**t {
        Type::App(f, a) => !matches!(&**f, Type::Lam(..)) && is_type_normal(f) && is_type_normal(a),
        Type::Arrow(a, b) => is_type_normal(a) && is_type_normal(b),
        Type::ForAll(_, _, b) | Type::Lam(_, _, b) => is_type_normal(b),
        _ => true,
    }
}

/// Replaces every embedded type by its canonical form.
pub fn canonicalize(t: &Tm) -> Tm {
    fn go(t: &Tm) -> Tm {
        match &**t {
            Term::Var(_) | Term::Free(_) | Term::Star => t.clone(),
            Term::Lam(h, b) => Arc::new(Term::Lam(h.clone(), go(b))),
            Term::App(f, a) => Term::app(go(f), go(a)),
            Term::TyLam(h, k, b) => Arc::new(Term::TyLam(h.clone(), k.clone(), go(b))),
            Term::TyApp(f, a) => Term::ty_app(go(f), normalize_type(a)),
            Term::Guard(c, b) => Term::guard(go(c), go(b)),
            Term::Gen(a) => Term::gen(normalize_type(a)),
            Term::Verif(a, b) => Term::verif(normalize_type(a), go(b)),
            Term::Fresh(h, k, b) => Arc::new(Term::Fresh(h.clone(), k.clone(), go(b))),
            Term::Annot(b, a) => Term::annot(go(b), normalize_type(a)),
        }
    }
    go(t)
}

pub fn is_canonical(t: &Tm) -> bool {
    match &**t {
        Term::Var(_) | Term::Free(_) | Term::Star => true,
        Term::Lam(_, b) | Term::TyLam(_, _, b) | Term::Fresh(_, _, b) => is_canonical(b),
        Term::App(f, a) | Term::Guard(f, a) => is_canonical(f) && is_canonical(a),
        Term::TyApp(f, a) | Term::Annot(f, a) | Term::Verif(a, f) => {
            is_type_normal(a) && is_canonical(f)
        }
        Term::Gen(a) => is_type_normal(a),
    }
}

/// Removes surface annotations `(t : A)`.
pub fn strip_annotations(t: &Tm) -> Tm {
    fn go(t: &Tm) -> Option<Tm> {
        match &**t {
            Term::Annot(b, _) => Some(go(b).unwrap_or_else(|| b.clone())),
            Term::Var(_) | Term::Free(_) | Term::Star | Term::Gen(_) => None,
            Term::Lam(h, b) => go(b).map(|b| Arc::new(Term::Lam(h.clone(), b))),
            Term::TyLam(h, k, b) => go(b).map(|b| Arc::new(Term::TyLam(h.clone(), k.clone(), b))),
            Term::Fresh(h, k, b) => go(b).map(|b| Arc::new(Term::Fresh(h.clone(), k.clone(), b))),
            Term::TyApp(f, a) => go(f).map(|f| Term::ty_app(f, a.clone())),
            Term::Verif(a, f) => go(f).map(|f| Term::verif(a.clone(), f)),
            Term::App(f, a) | Term::Guard(f, a) => {
                let (f2, a2) = (go(f), go(a));
                if f2.is_none() && a2.is_none() {
                    return None;
                }
                let f2 = f2.unwrap_or_else(|| f.clone());
                let a2 = a2.unwrap_or_else(|| a.clone());
                Some(if matches!(&**t, Term::App(..)) { Term::app(f2, a2) } else { Term::guard(f2, a2) })
            }
        }
    }
    go(t).unwrap_or_else(|| t.clone())
}

pub fn has_annotations(t: &Tm) -> bool {
    match &**t {
        Term::Annot(..) => true,
        Term::Var(_) | Term::Free(_) | Term::Star | Term::Gen(_) => false,
        Term::Lam(_, b) | Term::TyLam(_, _, b) | Term::Fresh(_, _, b) => has_annotations(b),
        Term::TyApp(f, _) | Term::Verif(_, f) => has_annotations(f),
        Term::App(f, a) | Term::Guard(f, a) => has_annotations(f) || has_annotations(a),
    }
}

/// Picks `base`, `base1`, `base2`, ... until `taken` rejects none.
pub fn fresh_name(base: &str, taken: impl Fn(&str) -> bool) -> Name {
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit() || c == '\'');
    let stem = if stem.is_empty() { "x" } else { stem };
    if !taken(base) && !base.is_empty() {
        return name(base);
    }
    let mut i = 1usize;
    loop {
        let cand = format!("{stem}{i}");
        if !taken(&cand) {
            return name(&cand);
        }
        i += 1;
    }
}
