//! Seeded generators: well-typed judgments built top-down from the typing
//! rules, arbitrary metaterms, and closed types.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::syntax::*;
use crate::typecheck::check;

pub const DEFAULT_FUEL: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenConfig {
    pub seed: u64,
    pub max_depth: usize,
    pub level: Level,
    pub env_size: usize,
    pub fuel: u64,
}

impl GenConfig {
    pub fn new(level: Level, seed: u64) -> GenConfig {
        GenConfig { seed, max_depth: 4, level, env_size: 2, fuel: DEFAULT_FUEL }
    }

    pub fn with_seed(&self, seed: u64) -> GenConfig {
        GenConfig { seed, ..self.clone() }
    }

    pub fn with_depth(&self, max_depth: usize) -> GenConfig {
        GenConfig { max_depth, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("generation exhausted: {0}")]
    Exhausted(String),
}

/// `Ξ; Γ ⊢ term : ty`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Judgment {
    pub ctx: KindCtx,
    pub env: TypeEnv,
    pub term: Tm,
    pub ty: Ty,
}

/// splitmix64 of `seed` and `i`; per-case seeds of a suite.
pub fn sub_seed(seed: u64, i: u64) -> u64 {
    let mut z = seed ^ i.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn pp() -> Kind {
    Kind::arrow(Kind::Prop, Kind::Prop)
}

/// Kinds of the binders in scope plus the free atoms usable in types.
#[derive(Clone, Debug, Default)]
struct TyScope {
    /// Nameless type binders, innermost last.
    vars: Vec<Kind>,
    /// Nameless `nu` binders, innermost last.
    beigs: Vec<Kind>,
    atoms: Vec<(Ty, Kind)>,
}

impl TyScope {
    fn of_kind(&self, k: &Kind) -> Vec<Ty> {
        let n = self.vars.len();
        let m = self.beigs.len();
        let vars = self.vars.iter().enumerate().filter(|(_, vk)| *vk == k).map(|(j, _)| Type::var(n - 1 - j));
        let beigs = self.beigs.iter().enumerate().filter(|(_, ek)| *ek == k).map(|(j, _)| Type::bound_eig(m - 1 - j));
        let atoms = self.atoms.iter().filter(|(_, ak)| ak == k).map(|(a, _)| a.clone());
        vars.chain(beigs).chain(atoms).collect()
    }
}

struct Rand {
    rng: ChaCha8Rng,
    level: Level,
}

impl Rand {
    fn new(cfg: &GenConfig) -> Rand {
        Rand { rng: ChaCha8Rng::seed_from_u64(cfg.seed), level: cfg.level }
    }

    fn coin(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    fn below(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    fn pick<T: Clone>(&mut self, xs: &[T]) -> T {
        xs.choose(&mut self.rng).expect("nonempty choice").clone()
    }

    /// An index drawn with the given weights.
    fn weighted(&mut self, weights: &[u32]) -> usize {
        let total: u32 = weights.iter().sum();
        let mut r = self.rng.gen_range(0..total);
        for (i, w) in weights.iter().enumerate() {
            if r < *w {
                return i;
            }
            r -= w;
        }
        unreachable!()
    }

    fn kind(&mut self) -> Kind {
        if self.level == Level::FOmega && self.coin(0.3) {
            pp()
        } else {
            Kind::Prop
        }
    }

    /// A well-kinded type of kind `k`.
    fn ty(&mut self, s: &mut TyScope, k: &Kind, depth: usize) -> Ty {
        let atoms = s.of_kind(k);
        let leaf = depth == 0 || self.coin(0.3);
        match k {
            Kind::Base(_) => self.pick(&atoms),
            Kind::Prop => {
                if (leaf || self.level == Level::ST && self.coin(0.2)) && !atoms.is_empty() {
                    return self.pick(&atoms);
                }
                let d = depth.saturating_sub(1);
                let choice = match self.level {
                    Level::ST => 0,
                    Level::F => self.weighted(&[3, 2]),
                    Level::FOmega => self.weighted(&[3, 2, 2]),
                };
                match choice {
                    0 => Type::arrow(self.ty(s, k, d), self.ty(s, k, d)),
                    1 => {
                        let kb = self.kind();
                        s.vars.push(kb.clone());
                        let body = self.ty(s, k, d);
                        s.vars.pop();
                        Type::forall("a", kb, body)
                    }
                    _ => {
                        let f = self.ty(s, &pp(), d);
                        let a = self.ty(s, &Kind::Prop, d);
                        Type::app(f, a)
                    }
                }
            }
            Kind::Arrow(k1, k2) => {
                if leaf && !atoms.is_empty() && self.coin(0.6) {
                    return self.pick(&atoms);
                }
                s.vars.push((**k1).clone());
                let body = self.ty(s, k2, depth.saturating_sub(1));
                s.vars.pop();
                Type::lam("a", (**k1).clone(), body)
            }
        }
    }
}

fn base_scope(level: Level) -> (KindCtx, TyScope) {
    let mut ctx = KindCtx::new();
    let mut scope = TyScope::default();
    for e in ["a", "b", "c"] {
        ctx = ctx.with_eig(e, Kind::Prop);
        scope.atoms.push((Type::eig(e), Kind::Prop));
    }
    if level == Level::FOmega {
        ctx = ctx.with_eig("f", pp());
        scope.atoms.push((Type::eig("f"), pp()));
    }
    (ctx, scope)
}

/// A closed type free of type variables, with the kind context of its
/// eigenvariables.
pub fn gen_closed_type(cfg: &GenConfig) -> (KindCtx, Ty) {
    let mut g = Rand::new(cfg);
    let (ctx, mut scope) = base_scope(cfg.level);
    let a = g.ty(&mut scope, &Kind::Prop, cfg.max_depth);
    (ctx, a)
}

// ---------------------------------------------------------------------------
// Well-typed judgments

struct Cx {
    scope: TyScope,
    ctx: KindCtx,
    env: TypeEnv,
}

impl Cx {
    fn with_var(&self, x: &Name, a: Ty) -> Cx {
        Cx { scope: self.scope.clone(), ctx: self.ctx.clone(), env: self.env.extended(x.clone(), a) }
    }

    fn with_tyvar(&self, a: &Name, k: &Kind) -> Cx {
        let mut scope = self.scope.clone();
        scope.atoms.push((Type::free(a), k.clone()));
        Cx { scope, ctx: self.ctx.clone().with_tyvar(a, k.clone()), env: self.env.clone() }
    }
}

enum Arg {
    Term(Ty),
    Type(Ty),
}

struct TypedGen {
    r: Rand,
    counter: usize,
    nodes: usize,
}

const NODE_BUDGET: usize = 300;

impl TypedGen {
    fn fresh(&mut self, base: &str) -> Name {
        self.counter += 1;
        name(&format!("{base}{}", self.counter))
    }

    fn norm(&self, a: &Ty) -> Ty {
        if self.r.level == Level::FOmega {
            normalize_type(a)
        } else {
            a.clone()
        }
    }

    fn small_ty(&mut self, cx: &mut Cx, k: &Kind) -> Ty {
        self.r.ty(&mut cx.scope, k, 2)
    }

    /// A term with a type read off the rules used; always succeeds.
    fn synth(&mut self, cx: &mut Cx, depth: usize) -> (Tm, Ty) {
        self.nodes += 1;
        let has_env = !cx.env.is_empty();
        if depth == 0 || self.nodes > NODE_BUDGET {
            if has_env {
                let (x, a) = self.r.pick(cx.env.entries());
                return (Term::free_name(&x), self.norm(&a));
            }
            let b = self.small_ty(cx, &Kind::Prop);
            return (Term::lam("x", Term::var(0)), Type::arrow(b.clone(), b));
        }
        let poly = self.r.level != Level::ST;
        let weights = [
            u32::from(has_env),
            4 * u32::from(has_env),
            2,
            2,
            u32::from(poly),
            u32::from(poly),
        ];
        let d = depth - 1;
        match self.r.weighted(&weights) {
            0 => {
                let (x, a) = self.r.pick(cx.env.entries());
                (Term::free_name(&x), self.norm(&a))
            }
            1 => {
                let fns: Vec<(Name, Ty)> = cx
                    .env
                    .entries()
                    .iter()
                    .filter(|(_, a)| matches!(&*self.norm(a), Type::Arrow(..) | Type::ForAll(..)))
                    .cloned()
                    .collect();
                let (x, a) = if fns.is_empty() { self.r.pick(cx.env.entries()) } else { self.r.pick(&fns) };
                self.spine(cx, Term::free_name(&x), self.norm(&a), d)
            }
            2 => {
                let b = self.small_ty(cx, &Kind::Prop);
                let x = self.fresh("x");
                let (m, c) = self.synth(&mut cx.with_var(&x, b.clone()), d);
                (Term::lam("x", close(&m, &x)), Type::arrow(b, c))
            }
            3 => {
                let (n, b) = self.synth(cx, d);
                let x = self.fresh("x");
                let (m, c) = self.synth(&mut cx.with_var(&x, b.clone()), d);
                let lam = Term::lam("x", close(&m, &x));
                (Term::app(Term::annot(lam, Type::arrow(b, c.clone())), n), c)
            }
            4 => {
                let k = self.r.kind();
                let a = self.fresh("a");
                let (m, c) = self.synth(&mut cx.with_tyvar(&a, &k), d);
                (Term::ty_lam("a", k.clone(), close_ty(&m, &a)), Type::forall("a", k, ty_close(&c, &a)))
            }
            _ => {
                let k = self.r.kind();
                let a = self.fresh("a");
                let (m, c) = self.synth(&mut cx.with_tyvar(&a, &k), d);
                let body = ty_close(&c, &a);
                let inst = self.small_ty(cx, &k);
                let tlam = Term::ty_lam("a", k.clone(), close_ty(&m, &a));
                let t = Term::ty_app(Term::annot(tlam, Type::forall("a", k, body.clone())), inst.clone());
                (t, self.norm(&ty_instantiate(&body, &inst)))
            }
        }
    }

    /// Applies `head : a` to up to three generated inputs.
    fn spine(&mut self, cx: &mut Cx, head: Tm, a: Ty, depth: usize) -> (Tm, Ty) {
        let (mut t, mut a) = (head, a);
        for _ in 0..1 + self.r.below(3) {
            match &*a.clone() {
                Type::Arrow(b, c) => match self.check(cx, b, depth) {
                    Some(n) => {
                        t = Term::app(t, n);
                        a = c.clone();
                    }
                    None => break,
                },
                Type::ForAll(_, k, body) => {
                    let inst = self.small_ty(cx, k);
                    t = Term::ty_app(t, inst.clone());
                    a = self.norm(&ty_instantiate(body, &inst));
                }
                _ => break,
            }
        }
        (t, a)
    }

    /// Heads of `Γ` whose type reaches `a` after some inputs.
    fn heads(&mut self, cx: &mut Cx, a: &Ty) -> Vec<(Name, Vec<Arg>)> {
        let mut out = Vec::new();
        for (x, t) in cx.env.entries().to_vec() {
            let mut t = self.norm(&t);
            let mut plan = Vec::new();
            for _ in 0..6 {
                if t == *a {
                    out.push((x.clone(), std::mem::take(&mut plan)));
                    break;
                }
                match &*t.clone() {
                    Type::Arrow(b, c) => {
                        plan.push(Arg::Term(b.clone()));
                        t = c.clone();
                    }
                    Type::ForAll(_, k, body) => {
                        let inst = if *k == Kind::Prop && self.r.coin(0.7) { a.clone() } else { self.small_ty(cx, k) };
                        t = self.norm(&ty_instantiate(body, &inst));
                        plan.push(Arg::Type(inst));
                    }
                    _ => break,
                }
            }
        }
        out
    }

    /// A term of type `a`, if one is found within the bounds.
    fn check(&mut self, cx: &mut Cx, a: &Ty, depth: usize) -> Option<Tm> {
        self.nodes += 1;
        if self.nodes > 2 * NODE_BUDGET {
            return None;
        }
        let a = self.norm(a);
        let intro_first = !self.r.coin(0.3);
        if intro_first {
            if let Some(t) = self.intro(cx, &a, depth) {
                return Some(t);
            }
        }
        let mut heads = self.heads(cx, &a);
        heads.shuffle(&mut self.r.rng);
        'heads: for (x, plan) in heads {
            let needs_args = plan.iter().any(|p| matches!(p, Arg::Term(_)));
            if needs_args && depth == 0 {
                continue;
            }
            let mut t = Term::free_name(&x);
            for p in plan {
                t = match p {
                    Arg::Term(b) => match self.check(cx, &b, depth - 1) {
                        Some(n) => Term::app(t, n),
                        None => continue 'heads,
                    },
                    Arg::Type(c) => Term::ty_app(t, c),
                };
            }
            return Some(t);
        }
        if depth > 0 && self.r.coin(0.3) {
            let (n, b) = self.synth(cx, depth - 1);
            let x = self.fresh("x");
            if let Some(m) = self.check(&mut cx.with_var(&x, b.clone()), &a, depth - 1) {
                let lam = Term::lam("x", close(&m, &x));
                return Some(Term::app(Term::annot(lam, Type::arrow(b, a.clone())), n));
            }
        }
        if intro_first {
            None
        } else {
            self.intro(cx, &a, depth)
        }
    }

    fn intro(&mut self, cx: &mut Cx, a: &Ty, depth: usize) -> Option<Tm> {
        match &**a {
            Type::Arrow(b, c) => {
                let x = self.fresh("x");
                let m = self.check(&mut cx.with_var(&x, b.clone()), c, depth)?;
                Some(Term::lam("x", close(&m, &x)))
            }
            Type::ForAll(h, k, body) => {
                let v = self.fresh("a");
                let m = self.check(&mut cx.with_tyvar(&v, k), &ty_open(body, &v), depth)?;
                Some(Term::ty_lam(h.as_str(), k.clone(), close_ty(&m, &v)))
            }
            _ => None,
        }
    }
}

fn typed_context(cfg: &GenConfig, r: &mut Rand) -> Cx {
    let (mut ctx, mut scope) = base_scope(cfg.level);
    if cfg.level != Level::ST {
        ctx = ctx.with_tyvar("p", Kind::Prop);
        scope.atoms.push((Type::free("p"), Kind::Prop));
    }
    let mut env = TypeEnv::new();
    for i in 0..cfg.env_size {
        let a = r.ty(&mut scope, &Kind::Prop, 2);
        env.insert(name(&format!("v{i}")), a);
    }
    Cx { scope, ctx, env }
}

/// A derivable judgment at `cfg.level`, with a random environment of
/// `cfg.env_size` entries.
pub fn gen_typed_term(cfg: &GenConfig) -> Result<Judgment, GenError> {
    let mut r = Rand::new(cfg);
    let cx = typed_context(cfg, &mut r);
    gen_in(cfg, r, cx)
}

/// Like `gen_typed_term` with the given context and environment.
pub fn gen_typed_term_in(cfg: &GenConfig, ctx: &KindCtx, env: &TypeEnv) -> Result<Judgment, GenError> {
    let r = Rand::new(cfg);
    let mut scope = TyScope::default();
    scope.atoms.extend(ctx.eigs.iter().map(|(e, k)| (Type::eig(e), k.clone())));
    scope.atoms.extend(ctx.tyvars.iter().map(|(a, k)| (Type::free(a), k.clone())));
    if !scope.atoms.iter().any(|(_, k)| *k == Kind::Prop) {
        scope.atoms.push((Type::eig("a"), Kind::Prop));
    }
    let mut ctx = ctx.clone();
    ctx.declare_missing(&env.free_names());
    ctx.declare_missing(&FreeNames::of_type(&scope.atoms[0].0));
    gen_in(cfg, r, Cx { scope, ctx, env: env.clone() })
}

fn gen_in(cfg: &GenConfig, r: Rand, mut cx: Cx) -> Result<Judgment, GenError> {
    let mut g = TypedGen { r, counter: 0, nodes: 0 };
    let goal_first = cfg.max_depth > 0 && g.r.coin(0.5);
    let mut found = None;
    if goal_first {
        let a = g.small_ty(&mut cx, &Kind::Prop);
        if let Some(t) = g.check(&mut cx, &a, cfg.max_depth) {
            found = Some((t, a));
        }
        g.nodes = 0;
    }
    let (term, ty) = match found {
        Some(x) => x,
        None => {
            // A bare variable is redrawn a few times when there is depth to spend.
            let mut out = g.synth(&mut cx, cfg.max_depth);
            for _ in 0..4 {
                if cfg.max_depth == 0 || !matches!(&*out.0, Term::Free(_)) {
                    break;
                }
                g.nodes = 0;
                out = g.synth(&mut cx, cfg.max_depth);
            }
            out
        }
    };
    if let Err(e) = check(cfg.level, &cx.ctx, &cx.env, &term, &ty) {
        return Err(GenError::Exhausted(format!("generated judgment does not check: {e}")));
    }
    Ok(Judgment { ctx: cx.ctx, env: cx.env, term, ty })
}

// ---------------------------------------------------------------------------
// Arbitrary metaterms

/// Restrictions on `gen_metaterm_shaped`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Shape {
    /// Only variables, abstraction and application.
    pub pure: bool,
    /// No free term variables.
    pub closed: bool,
    /// Bias toward redexes in weak-head position.
    pub redex_rich: bool,
}

struct MetaGen {
    r: Rand,
    shape: Shape,
}

const FREE_VARS: [&str; 3] = ["x", "y", "z"];

impl MetaGen {
    fn prop_atom(&mut self, s: &TyScope) -> Ty {
        let atoms = s.of_kind(&Kind::Prop);
        self.r.pick(&atoms)
    }

    fn prop(&mut self, s: &mut TyScope) -> Ty {
        if self.r.level == Level::ST {
            self.prop_atom(s)
        } else {
            self.r.ty(s, &Kind::Prop, 2)
        }
    }

    fn var(&mut self, terms: usize) -> Option<Tm> {
        if terms > 0 && (self.shape.closed || self.r.coin(0.7)) {
            Some(Term::var(self.r.below(terms)))
        } else if self.shape.closed {
            None
        } else {
            Some(Term::free(FREE_VARS[self.r.below(3)]))
        }
    }

    fn leaf(&mut self, terms: usize, s: &TyScope) -> Tm {
        if self.shape.pure {
            return self.var(terms).unwrap_or_else(|| Term::lam("x", Term::var(0)));
        }
        match self.r.below(3) {
            0 => Term::star(),
            1 => self.var(terms).unwrap_or_else(Term::star),
            _ => Term::gen(self.prop_atom(s)),
        }
    }

    fn mt(&mut self, terms: usize, s: &mut TyScope, depth: usize) -> Tm {
        if depth == 0 {
            return self.leaf(terms, s);
        }
        let d = depth - 1;
        let poly = self.r.level != Level::ST;
        let impure = !self.shape.pure;
        let rich = self.shape.redex_rich;
        let w = |on: bool, n: u32| if on { n } else { 0 };
        let weights = [
            1,                                 // leaf
            3,                                 // lambda
            3,                                 // application
            w(impure, 2),                      // guard
            w(impure, 1),                      // generator
            w(impure, 2 + 3 * u32::from(rich)), // verifier
            2 + 3 * u32::from(rich),           // beta-redex
            w(impure, 1 + u32::from(rich)),    // guard redex
            w(impure, 1),                      // eig verifier redex
            w(poly && impure, 2),              // type abstraction
            w(poly && impure, 2),              // type application
            w(poly && impure, 1 + u32::from(rich)), // type redex
            w(poly && impure, 1),              // nu
        ];
        match self.r.weighted(&weights) {
            0 => self.leaf(terms, s),
            1 => Term::lam("x", self.mt(terms + 1, s, d)),
            2 => Term::app(self.mt(terms, s, d), self.mt(terms, s, d)),
            3 => Term::guard(self.mt(terms, s, d), self.mt(terms, s, d)),
            4 => Term::gen(self.prop(s)),
            5 => {
                let a = self.prop(s);
                Term::verif(a, self.mt(terms, s, d))
            }
            6 => Term::app(Term::lam("x", self.mt(terms + 1, s, d)), self.mt(terms, s, d)),
            7 => Term::guard(Term::star(), self.mt(terms, s, d)),
            8 => {
                let a = self.prop_atom(s);
                Term::verif(a.clone(), Term::gen(a))
            }
            9 | 11 => {
                let k = self.r.kind();
                s.vars.push(k.clone());
                let body = self.mt(terms, s, d);
                s.vars.pop();
                let tlam = Term::ty_lam("a", k.clone(), body);
                if self.r.coin(0.5) || depth == 1 {
                    let a = self.r.ty(s, &k, 1);
                    Term::ty_app(tlam, a)
                } else {
                    tlam
                }
            }
            10 => {
                let k = self.r.kind();
                let a = self.r.ty(s, &k, 1);
                Term::ty_app(self.mt(terms, s, d), a)
            }
            _ => {
                let k = self.r.kind();
                s.beigs.push(k.clone());
                let body = self.mt(terms, s, d);
                s.beigs.pop();
                Term::fresh("e", k, body)
            }
        }
    }
}

/// An arbitrary, possibly impure metaterm; well-kinded at Fω when its free
/// eigenvariables are declared at `Prop`.
pub fn gen_metaterm(cfg: &GenConfig) -> Tm {
    gen_metaterm_shaped(cfg, Shape::default())
}

pub fn gen_metaterm_shaped(cfg: &GenConfig, shape: Shape) -> Tm {
    let mut g = MetaGen { r: Rand::new(cfg), shape };
    let mut scope = TyScope::default();
    for e in ["a", "b"] {
        scope.atoms.push((Type::eig(e), Kind::Prop));
    }
    let t = g.mt(0, &mut scope, cfg.max_depth);
    if shape.closed && !is_locally_closed(&t) {
        return Term::lam("x", t);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::default_ctx;
    use crate::typecheck::well_kinded;

    #[test]
    fn depth_zero_uses_the_variable_rule() {
        let env = TypeEnv::from_entries(vec![(name("x"), Type::eig("a"))]);
        let cfg = GenConfig::new(Level::ST, 3).with_depth(0);
        let j = gen_typed_term_in(&cfg, &KindCtx::new(), &env).unwrap();
        assert_eq!(j.term, Term::free("x"));
        assert_eq!(j.ty, Type::eig("a"));
    }

    #[test]
    fn typed_outputs_check_and_are_deterministic() {
        for level in [Level::ST, Level::F, Level::FOmega] {
            for seed in 0..150 {
                let cfg = GenConfig::new(level, seed).with_depth(3 + (seed as usize % 4));
                let j = gen_typed_term(&cfg).unwrap();
                assert!(check(level, &j.ctx, &j.env, &j.term, &j.ty).is_ok());
                assert_eq!(gen_typed_term(&cfg).unwrap(), j);
            }
        }
    }

    #[test]
    fn metaterms() {
        let cfg = GenConfig::new(Level::FOmega, 1).with_depth(0);
        for seed in 0..40 {
            let t = gen_metaterm(&cfg.with_seed(seed));
            assert!(matches!(&*t, Term::Star | Term::Var(_) | Term::Free(_) | Term::Gen(_)));
        }
        for seed in 0..200 {
            let cfg = GenConfig::new(Level::FOmega, seed).with_depth(5);
            let t = gen_metaterm(&cfg);
            assert!(well_kinded(&default_ctx(&t), &t).is_ok(), "{}", print_term(&t));
            assert_eq!(gen_metaterm(&cfg), t);
            assert!(is_locally_closed(&t));
        }
        for seed in 0..100 {
            let cfg = GenConfig::new(Level::ST, seed).with_depth(5);
            let t = gen_metaterm_shaped(&cfg, Shape { pure: true, closed: true, redex_rich: false });
            assert!(t.is_pure() && FreeNames::of_term(&t).terms.is_empty());
        }
    }
}
