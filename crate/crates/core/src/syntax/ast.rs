use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

/// Identifiers are shared, immutable strings. Eigenvariable names are stored
/// without their leading `#`.
pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

/// A binder's display name. It is carried only for printing and never takes
/// part in comparisons, so derived equality on the ASTs is alpha-equivalence.
#[derive(Clone, Default)]
pub struct Hint(pub Name);

impl Hint {
    pub fn new(s: &str) -> Hint {
        Hint(name(s))
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Hint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl PartialEq for Hint {
    fn eq(&self, _: &Hint) -> bool {
        true
    }
}
impl Eq for Hint {}
impl Hash for Hint {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}
impl PartialOrd for Hint {
    fn partial_cmp(&self, other: &Hint) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Hint {
    fn cmp(&self, _: &Hint) -> Ordering {
        Ordering::Equal
    }
}

/// The three calculi, from simple types up to higher-order quantification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    ST,
    F,
    FOmega,
}

impl Level {
    pub fn tag(self) -> &'static str {
        match self {
            Level::ST => "st",
            Level::F => "f",
            Level::FOmega => "fw",
        }
    }

    pub fn from_tag(s: &str) -> Option<Level> {
        match s.to_ascii_lowercase().as_str() {
            "st" => Some(Level::ST),
            "f" => Some(Level::F),
            "fw" | "fomega" => Some(Level::FOmega),
            _ => None,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Prop,
    Base(Name),
    Arrow(Arc<Kind>, Arc<Kind>),
}

impl Kind {
    pub fn arrow(a: Kind, b: Kind) -> Kind {
        Kind::Arrow(Arc::new(a), Arc::new(b))
    }
}

pub type Ty = Arc<Type>;

/// Types and propositions. Bound variables are de Bruijn indices; free ones
/// are names. `Var` indices count `ForAll`/`Lam` binders in the type plus
/// enclosing type abstractions of the metaterm; `BoundEig` indices count
/// enclosing `nu` binders of the metaterm.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Var(usize),
    Free(Name),
    Eig(Name),
    BoundEig(usize),
    Arrow(Ty, Ty),
    ForAll(Hint, Kind, Ty),
    Lam(Hint, Kind, Ty),
    App(Ty, Ty),
}

impl Type {
    pub fn var(i: usize) -> Ty {
        Arc::new(Type::Var(i))
    }
    pub fn free(a: &str) -> Ty {
        Arc::new(Type::Free(name(a)))
    }
    pub fn eig(a: &str) -> Ty {
        Arc::new(Type::Eig(name(a.trim_start_matches('#'))))
    }
    pub fn bound_eig(i: usize) -> Ty {
        Arc::new(Type::BoundEig(i))
    }
    pub fn arrow(a: Ty, b: Ty) -> Ty {
        Arc::new(Type::Arrow(a, b))
    }
    pub fn forall(hint: &str, kind: Kind, body: Ty) -> Ty {
        Arc::new(Type::ForAll(Hint::new(hint), kind, body))
    }
    pub fn lam(hint: &str, kind: Kind, body: Ty) -> Ty {
        Arc::new(Type::Lam(Hint::new(hint), kind, body))
    }
    pub fn app(f: Ty, a: Ty) -> Ty {
        Arc::new(Type::App(f, a))
    }

    /// Right-nested arrow `a1 -> ... -> an -> res`.
    pub fn arrows(args: &[Ty], res: Ty) -> Ty {
        args.iter().rev().fold(res, |acc, a| Type::arrow(a.clone(), acc))
    }

    /// Head of an application spine together with its arguments.
    #[allow(clippy::needless_lifetimes)]
    pub fn spine<'a>(self: &'a Ty) -> (&'a Ty, Vec<&'a Ty>) {
        let mut head = self;
        let mut args = Vec::new();
        while let Type::App(f, a) = &**head {
            args.push(a);
            head = f;
        }
        args.reverse();
        (head, args)
    }

    /// True when the spine head is an eigenvariable (free or nu-bound).
    pub fn is_eig_headed(self: &Ty) -> bool {
        matches!(&**self.spine().0, Type::Eig(_) | Type::BoundEig(_))
    }

    /// `|A|` from the proof-size measure: atoms count 1, each connective 1.
    pub fn size(&self) -> usize {
        match self {
            Type::Arrow(a, b) => 1 + a.size() + b.size(),
            Type::ForAll(_, _, b) => 1 + b.size(),
            _ => 1,
        }
    }

    /// Number of constructors, used to bound generators and shrinkers.
    pub fn node_count(&self) -> usize {
        match self {
            Type::Arrow(a, b) | Type::App(a, b) => 1 + a.node_count() + b.node_count(),
            Type::ForAll(_, _, b) | Type::Lam(_, _, b) => 1 + b.node_count(),
            _ => 1,
        }
    }
}

pub type Tm = Arc<Term>;

/// Metaterms. `Var` indices count enclosing `Lam` binders only; type
/// abstractions bind type indices and `Fresh` binds eigenvariable indices.
/// `Annot` is a surface-only typing aid, erased before reduction.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(usize),
    Free(Name),
    Lam(Hint, Tm),
    App(Tm, Tm),
    TyLam(Hint, Kind, Tm),
    TyApp(Tm, Ty),
    Star,
    Guard(Tm, Tm),
    Gen(Ty),
    Verif(Ty, Tm),
    Fresh(Hint, Kind, Tm),
    Annot(Tm, Ty),
}

/// Dropping a deep term must not recurse once per level: uniquely owned
/// children are detached onto a worklist and released one at a time.
impl Drop for Term {
    fn drop(&mut self) {
        fn detach(t: &mut Term, work: &mut Vec<Tm>) {
            let mut take = |c: &mut Tm| {
                if Arc::strong_count(c) == 1 {
                    work.push(std::mem::replace(c, leaf()));
                }
            };
            match t {
                Term::Lam(_, b) | Term::TyLam(_, _, b) | Term::Fresh(_, _, b) => take(b),
                Term::TyApp(b, _) | Term::Verif(_, b) | Term::Annot(b, _) => take(b),
                Term::App(f, a) | Term::Guard(f, a) => {
                    take(f);
                    take(a);
                }
                Term::Var(_) | Term::Free(_) | Term::Star | Term::Gen(_) => {}
            }
        }
        let mut work = Vec::new();
        detach(self, &mut work);
        while let Some(c) = work.pop() {
            if let Ok(mut t) = Arc::try_unwrap(c) {
                detach(&mut t, &mut work);
            }
        }
    }
}

fn leaf() -> Tm {
    static LEAF: std::sync::LazyLock<Tm> = std::sync::LazyLock::new(|| Arc::new(Term::Star));
    LEAF.clone()
}

impl Term {
    pub fn var(i: usize) -> Tm {
        Arc::new(Term::Var(i))
    }
    pub fn free(x: &str) -> Tm {
        Arc::new(Term::Free(name(x)))
    }
    pub fn free_name(x: &Name) -> Tm {
        Arc::new(Term::Free(x.clone()))
    }
    pub fn lam(hint: &str, body: Tm) -> Tm {
        Arc::new(Term::Lam(Hint::new(hint), body))
    }
    pub fn app(f: Tm, a: Tm) -> Tm {
        Arc::new(Term::App(f, a))
    }
    pub fn apps(f: Tm, args: impl IntoIterator<Item = Tm>) -> Tm {
        args.into_iter().fold(f, Term::app)
    }
    pub fn ty_lam(hint: &str, kind: Kind, body: Tm) -> Tm {
        Arc::new(Term::TyLam(Hint::new(hint), kind, body))
    }
    pub fn ty_app(f: Tm, a: Ty) -> Tm {
        Arc::new(Term::TyApp(f, a))
    }
    pub fn star() -> Tm {
        Arc::new(Term::Star)
    }
    pub fn guard(c: Tm, t: Tm) -> Tm {
        Arc::new(Term::Guard(c, t))
    }
    pub fn gen(a: Ty) -> Tm {
        Arc::new(Term::Gen(a))
    }
    pub fn verif(a: Ty, m: Tm) -> Tm {
        Arc::new(Term::Verif(a, m))
    }
    pub fn fresh(hint: &str, kind: Kind, body: Tm) -> Tm {
        Arc::new(Term::Fresh(Hint::new(hint), kind, body))
    }
    pub fn annot(m: Tm, a: Ty) -> Tm {
        Arc::new(Term::Annot(m, a))
    }

    /// Built only from variables, abstractions and applications (term or type).
    pub fn is_pure(&self) -> bool {
        match self {
            Term::Var(_) | Term::Free(_) => true,
            Term::Lam(_, b) | Term::TyLam(_, _, b) | Term::TyApp(b, _) | Term::Annot(b, _) => {
                b.is_pure()
            }
            Term::App(f, a) => f.is_pure() && a.is_pure(),
            _ => false,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Lam(_, b) | Term::TyLam(_, _, b) | Term::TyApp(b, _) | Term::Fresh(_, _, b) => {
                1 + b.size()
            }
            Term::Verif(_, b) | Term::Annot(b, _) => 1 + b.size(),
            Term::App(f, a) | Term::Guard(f, a) => 1 + f.size() + a.size(),
            _ => 1,
        }
    }

    pub fn is_star(&self) -> bool {
        matches!(self, Term::Star)
    }
}

/// Arguments of a neutral spine: terms or types.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Input {
    TermInput(Tm),
    TypeInput(Ty),
}

/// Splits `h I1 ... In` into its head and inputs.
pub fn term_spine(t: &Tm) -> (Tm, Vec<Input>) {
    let mut head = t.clone();
    let mut inputs = Vec::new();
    loop {
        let next = match &*head {
            Term::App(f, a) => {
                inputs.push(Input::TermInput(a.clone()));
                f.clone()
            }
            Term::TyApp(f, a) => {
                inputs.push(Input::TypeInput(a.clone()));
                f.clone()
            }
            _ => break,
        };
        head = next;
    }
    inputs.reverse();
    (head, inputs)
}

pub fn rebuild_spine(head: Tm, inputs: &[Input]) -> Tm {
    inputs.iter().fold(head, |acc, i| match i {
        Input::TermInput(n) => Term::app(acc, n.clone()),
        Input::TypeInput(a) => Term::ty_app(acc, a.clone()),
    })
}
