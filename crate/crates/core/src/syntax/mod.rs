//! Kinds, types and metaterms for the three calculi: representation,
//! binding operations, parsing and printing.

mod ast;
mod parse;
mod print;
mod subst;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

pub use ast::*;
pub use parse::{parse_env, parse_kind, parse_kind_decls, parse_term, parse_type, SyntaxError};
pub use print::{print_kind, print_term, print_type, Printer};
pub use subst::*;

/// Which grammar `parse` should read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sort {
    Kind,
    Type,
    Term,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Ast {
    Kind(Kind),
    Type(Ty),
    Term(Tm),
}

impl fmt::Display for Ast {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ast::Kind(k) => f.write_str(&print_kind(k)),
            Ast::Type(t) => f.write_str(&print_type(t)),
            Ast::Term(t) => f.write_str(&print_term(t)),
        }
    }
}

pub fn parse(text: &str, sort: Sort, level: Level) -> Result<Ast, SyntaxError> {
    Ok(match sort {
        Sort::Kind => Ast::Kind(parse_kind(text, level)?),
        Sort::Type => Ast::Type(parse_type(text, level)?),
        Sort::Term => Ast::Term(parse_term(text, level)?),
    })
}

pub fn print(ast: &Ast) -> String {
    ast.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("sort error: {0}")]
pub struct SortError(pub String);

/// A single substitution binding for `substitute`.
#[derive(Clone, Debug)]
pub enum Binding {
    Term(Name, Tm),
    Type(Name, Ty),
}

/// Capture-avoiding parallel substitution of free names. At Fω the result
/// is brought back to canonical form.
pub fn substitute(level: Level, target: &Ast, bindings: &[Binding]) -> Result<Ast, SortError> {
    let mut s = FreeSubst::default();
    for b in bindings {
        match b {
            Binding::Term(x, n) => {
                s.terms.insert(x.clone(), n.clone());
            }
            Binding::Type(a, t) => {
                s.types.insert(a.clone(), t.clone());
            }
        }
    }
    match target {
        Ast::Kind(_) => Err(SortError("kinds have no variables to substitute".into())),
        Ast::Type(t) => {
            if !s.terms.is_empty() {
                return Err(SortError("cannot substitute a metaterm into a type".into()));
            }
            let r = subst_type(t, &s);
            Ok(Ast::Type(if level == Level::FOmega { normalize_type(&r) } else { r }))
        }
        Ast::Term(t) => {
            let r = subst_term(t, &s);
            Ok(Ast::Term(if level == Level::FOmega { canonicalize(&r) } else { r }))
        }
    }
}

/// Alpha-equivalence at ST/F; alpha plus type-beta conversion at Fω.
pub fn equiv(level: Level, lhs: &Tm, rhs: &Tm) -> bool {
    match level {
        Level::FOmega => canonicalize(lhs) == canonicalize(rhs),
        _ => lhs == rhs,
    }
}

pub fn equiv_type(level: Level, lhs: &Ty, rhs: &Ty) -> bool {
    match level {
        Level::FOmega => normalize_type(lhs) == normalize_type(rhs),
        _ => lhs == rhs,
    }
}

pub fn free_names(t: &Tm) -> FreeNames {
    FreeNames::of_term(t)
}

/// Γ: an ordered assignment of types to term variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct TypeEnv {
    entries: Vec<(Name, Ty)>,
}

impl TypeEnv {
    pub fn new() -> TypeEnv {
        TypeEnv::default()
    }

    pub fn from_entries(entries: Vec<(Name, Ty)>) -> TypeEnv {
        let mut env = TypeEnv::new();
        for (x, a) in entries {
            env.insert(x, a);
        }
        env
    }

    /// Adds or replaces the assignment for `x`, keeping variables distinct.
    pub fn insert(&mut self, x: Name, a: Ty) {
        if let Some(slot) = self.entries.iter_mut().find(|(y, _)| *y == x) {
            slot.1 = a;
        } else {
            self.entries.push((x, a));
        }
    }

    pub fn extended(&self, x: Name, a: Ty) -> TypeEnv {
        let mut env = self.clone();
        env.insert(x, a);
        env
    }

    pub fn without(&self, x: &Name) -> TypeEnv {
        TypeEnv { entries: self.entries.iter().filter(|(y, _)| y != x).cloned().collect() }
    }

    pub fn lookup(&self, x: &str) -> Option<&Ty> {
        self.entries.iter().find(|(y, _)| &**y == x).map(|(_, a)| a)
    }

    pub fn contains(&self, x: &str) -> bool {
        self.lookup(x).is_some()
    }

    pub fn entries(&self) -> &[(Name, Ty)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn map_types(&self, f: impl Fn(&Ty) -> Ty) -> TypeEnv {
        TypeEnv { entries: self.entries.iter().map(|(x, a)| (x.clone(), f(a))).collect() }
    }

    pub fn free_names(&self) -> FreeNames {
        let mut f = FreeNames::default();
        for (_, a) in &self.entries {
            f.add_type(a);
        }
        f
    }
}

impl fmt::Display for TypeEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.entries.iter().map(|(x, a)| format!("{x} : {}", print_type(a))).collect();
        f.write_str(&parts.join(", "))
    }
}

/// Ξ: kinds of free type variables and eigenvariables, with a deterministic
/// supply of fresh eigenvariable names `#g0, #g1, ...`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KindCtx {
    pub tyvars: BTreeMap<Name, Kind>,
    pub eigs: BTreeMap<Name, Kind>,
    next_fresh: usize,
}

impl KindCtx {
    pub fn new() -> KindCtx {
        KindCtx::default()
    }

    pub fn with_tyvar(mut self, a: &str, k: Kind) -> KindCtx {
        self.tyvars.insert(name(a), k);
        self
    }

    pub fn with_eig(mut self, e: &str, k: Kind) -> KindCtx {
        self.eigs.insert(name(e.trim_start_matches('#')), k);
        self
    }

    pub fn contains(&self, n: &str) -> bool {
        self.tyvars.contains_key(n) || self.eigs.contains_key(n)
    }

    /// Next `g<i>` not already declared and not rejected by `avoid`.
    pub fn fresh_eig(&mut self, avoid: impl Fn(&str) -> bool) -> Name {
        loop {
            let cand = format!("g{}", self.next_fresh);
            self.next_fresh += 1;
            if !self.contains(&cand) && !avoid(&cand) {
                return name(&cand);
            }
        }
    }

    /// Registers every free name of the given types/terms that is not yet
    /// declared, at kind `Prop`.
    pub fn declare_missing(&mut self, names: &FreeNames) {
        for e in &names.eigs {
            self.eigs.entry(e.clone()).or_insert(Kind::Prop);
        }
        for a in &names.types {
            self.tyvars.entry(a.clone()).or_insert(Kind::Prop);
        }
    }
}

impl fmt::Display for KindCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> =
            self.tyvars.iter().map(|(a, k)| format!("{a} : {}", print_kind(k))).collect();
        parts.extend(self.eigs.iter().map(|(e, k)| format!("#{e} : {}", print_kind(k))));
        f.write_str(&parts.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tm(s: &str, level: Level) -> Tm {
        parse_term(s, level).unwrap()
    }

    #[test]
    fn print_examples() {
        assert_eq!(print_term(&Term::lam("x", Term::var(0))), "\\x. x");
        assert_eq!(print_term(&Term::gen(Type::arrow(Type::eig("a"), Type::eig("b")))), "gen(#a -> #b)");
        assert_eq!(print_term(&Term::star()), "star");
    }

    #[test]
    fn substitution_examples() {
        let t = tm("\\x. x y", Level::ST);
        let r = subst_term_var(&t, &name("y"), &Term::star());
        assert_eq!(print_term(&r), "\\x. x star");

        let t = tm("\\x. y", Level::ST);
        let r = subst_term_var(&t, &name("y"), &Term::free("x"));
        assert_eq!(print_term(&r), "\\x'. x");

        let a = parse_type("forall a. a -> b", Level::F).unwrap();
        let mut s = FreeSubst::default();
        s.types.insert(name("b"), Type::free("a"));
        assert_eq!(print_type(&subst_type(&a, &s)), "forall a'. a' -> a");
    }

    #[test]
    fn equivalence_examples() {
        assert!(equiv(Level::ST, &tm("\\x. x", Level::ST), &tm("\\y. y", Level::ST)));
        assert!(!equiv(Level::ST, &tm("\\x. \\y. x", Level::ST), &tm("\\x. \\y. y", Level::ST)));
        assert!(equiv(
            Level::FOmega,
            &tm("gen((\\a:Prop. a) #b)", Level::FOmega),
            &tm("gen(#b)", Level::FOmega)
        ));
    }

    #[test]
    fn free_name_examples() {
        let f = free_names(&tm("\\x. x y", Level::ST));
        assert_eq!(f.terms.iter().map(|n| n.to_string()).collect::<Vec<_>>(), vec!["y"]);
        let f = free_names(&tm("gen(#a -> b)", Level::F));
        assert!(f.terms.is_empty());
        assert!(f.types.contains("b") && f.eigs.contains("a"));
        let f = free_names(&tm("nu #a. ver(#a, x)", Level::F));
        assert!(f.eigs.is_empty() && f.terms.contains("x"));
    }

    #[test]
    fn round_trip_with_shadowing() {
        for (s, level) in [
            ("\\x. \\x. x", Level::ST),
            ("/\\a. \\x. x [forall a. a -> a]", Level::F),
            ("nu #g. ver(#g -> #a, \\x. x)", Level::F),
            ("/\\p:@k -> Prop. \\x. e [\\c:@k. p c -> p #a] x", Level::FOmega),
        ] {
            let t = tm(s, level);
            let back = tm(&print_term(&t), level);
            assert_eq!(t, back, "{s}");
        }
    }
}
