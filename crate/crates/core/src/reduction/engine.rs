use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::typecheck::{kind_of_in, KindStack};

/// A reduction session at one level. Owns the kind context used by the
/// type-beta side condition and the supply of fresh eigenvariable names.
#[derive(Clone, Debug)]
pub struct Reducer {
    pub level: Level,
    pub ctx: KindCtx,
    /// Keep every step in the returned traces.
    pub record: bool,
}

/// A kind context declaring every free name of `t` at `Prop`.
pub fn default_ctx(t: &Tm) -> KindCtx {
    let mut ctx = KindCtx::new();
    ctx.declare_missing(&FreeNames::of_term(t));
    ctx
}

impl Reducer {
    pub fn new(level: Level, ctx: KindCtx) -> Reducer {
        Reducer { level, ctx, record: false }
    }

    pub fn recording(mut self, on: bool) -> Reducer {
        self.record = on;
        self
    }

    /// The rule whose left-hand side matches `t` itself. `stack` holds the
    /// kinds of the type and `nu` binders enclosing `t`.
    pub fn root_rule(&self, stack: &mut KindStack, t: &Tm) -> Option<RuleTag> {
        let st = self.level == Level::ST;
        match &**t {
            Term::App(f, _) if matches!(&**f, Term::Lam(..)) => Some(RuleTag::Beta),
            Term::TyApp(f, a) if !st => match &**f {
                Term::TyLam(_, k, _) => {
                    if self.level == Level::FOmega {
                        match kind_of_in(&self.ctx, stack, a) {
                            Ok(ka) if ka == *k => {}
                            _ => return None,
                        }
                    }
                    Some(RuleTag::TyBeta)
                }
                _ => None,
            },
            Term::Guard(c, _) if c.is_star() => Some(RuleTag::GuardStar),
            Term::Verif(a, m) => match (&**a, &**m) {
                (_, Term::Gen(b)) if a.is_eig_headed() && a == b => Some(RuleTag::VerifEig),
                (Type::Arrow(..), _) if !st => Some(RuleTag::VerifImp),
                (Type::ForAll(..), _) if !st => Some(RuleTag::VerifAll),
                _ => None,
            },
            Term::Gen(a) if !st => match &**a {
                Type::Arrow(..) => Some(RuleTag::GenImp),
                Type::ForAll(..) => Some(RuleTag::GenAll),
                _ => None,
            },
            Term::Fresh(_, _, b) if !st && !has_bound_eig(b, 0) => Some(RuleTag::FreshDrop),
            _ => None,
        }
    }

    /// Contracts the redex `t` with `rule`. `whole` is the enclosing term,
    /// whose free eigenvariables the fresh name must avoid.
    pub(super) fn contract(&mut self, rule: RuleTag, t: &Tm, whole: &Tm) -> Tm {
        match (rule, &**t) {
            (RuleTag::Beta, Term::App(f, n)) => match &**f {
                Term::Lam(_, b) => instantiate(b, n),
                _ => unreachable!("Beta on a non-redex"),
            },
            (RuleTag::TyBeta, Term::TyApp(f, a)) => match &**f {
                Term::TyLam(_, _, b) => instantiate_ty(b, a),
                _ => unreachable!("TyBeta on a non-redex"),
            },
            (RuleTag::GuardStar, Term::Guard(_, m)) => m.clone(),
            (RuleTag::VerifEig, _) => Term::star(),
            (RuleTag::GenImp, Term::Gen(a)) => match &**a {
                Type::Arrow(a, b) => gen_imp(a, b),
                _ => unreachable!("GenImp on a non-arrow"),
            },
            (RuleTag::GenAll, Term::Gen(a)) => match &**a {
                Type::ForAll(h, k, b) => Arc::new(Term::TyLam(h.clone(), k.clone(), Term::gen(b.clone()))),
                _ => unreachable!("GenAll on a non-quantifier"),
            },
            (RuleTag::VerifImp, Term::Verif(a, m)) => match &**a {
                Type::Arrow(a, b) => Term::verif(b.clone(), Term::app(m.clone(), Term::gen(a.clone()))),
                _ => unreachable!("VerifImp on a non-arrow"),
            },
            (RuleTag::VerifAll, Term::Verif(a, m)) => match &**a {
                Type::ForAll(_, k, body) => {
                    let taken = FreeNames::of_term(whole);
                    let g = self.ctx.fresh_eig(|n| taken.eigs.contains(n));
                    verif_all(&g, k, body, m)
                }
                _ => unreachable!("VerifAll on a non-quantifier"),
            },
            (RuleTag::FreshDrop, Term::Fresh(_, _, b)) => shift_term(b, 0, 0, -1),
            _ => unreachable!("rule {rule} does not match"),
        }
    }

    /// Weak-head redexes, outermost first along the weak-head spine.
    pub fn wh_redexes(&self, t: &Tm) -> Vec<(Position, RuleTag)> {
        let mut out = Vec::new();
        let mut stack = KindStack::default();
        let mut path = Vec::new();
        let mut cur = t;
        loop {
            if let Some(r) = self.root_rule(&mut stack, cur) {
                out.push((Position(path.clone()), r));
            }
            match wh_child(cur) {
                Some(next) => {
                    if let Term::Fresh(_, k, _) = &**cur {
                        stack.eig.push(k.clone());
                    }
                    path.push(0);
                    cur = next;
                }
                None => return out,
            }
        }
    }

    fn first_wh_redex(&self, t: &Tm) -> Option<(Position, RuleTag)> {
        let mut stack = KindStack::default();
        let mut path = Vec::new();
        let mut cur = t;
        loop {
            if let Some(r) = self.root_rule(&mut stack, cur) {
                return Some((Position(path), r));
            }
            let next = wh_child(cur)?;
            if let Term::Fresh(_, k, _) = &**cur {
                stack.eig.push(k.clone());
            }
            path.push(0);
            cur = next;
        }
    }

    /// Every redex under arbitrary contexts, in preorder (a node before its
    /// children, children left to right).
    pub fn redexes(&self, t: &Tm) -> Vec<(Position, RuleTag)> {
        fn go(r: &Reducer, t: &Tm, stack: &mut KindStack, path: &mut Vec<u8>, out: &mut Vec<(Position, RuleTag)>) {
            if let Some(rule) = r.root_rule(stack, t) {
                out.push((Position(path.clone()), rule));
            }
            let mut visit = |i: u8, c: &Tm, stack: &mut KindStack| {
                path.push(i);
                go(r, c, stack, path, out);
                path.pop();
            };
            match &**t {
                Term::Lam(_, b) | Term::TyApp(b, _) | Term::Verif(_, b) | Term::Annot(b, _) => visit(0, b, stack),
                Term::App(f, a) | Term::Guard(f, a) => {
                    visit(0, f, stack);
                    visit(1, a, stack);
                }
                Term::TyLam(_, k, b) => {
                    stack.ty.push(k.clone());
                    visit(0, b, stack);
                    stack.ty.pop();
                }
                Term::Fresh(_, k, b) => {
                    stack.eig.push(k.clone());
                    visit(0, b, stack);
                    stack.eig.pop();
                }
                Term::Var(_) | Term::Free(_) | Term::Star | Term::Gen(_) => {}
            }
        }
        let mut out = Vec::new();
        go(self, t, &mut KindStack::default(), &mut Vec::new(), &mut out);
        out
    }

    /// The redex rule at `pos`, if the subterm there is a redex.
    pub fn rule_at(&self, t: &Tm, pos: &Position) -> Option<RuleTag> {
        let mut stack = KindStack::default();
        let sub = subterm_at(t, pos, &mut stack)?;
        self.root_rule(&mut stack, sub)
    }

    /// Contracts the redex at `pos`.
    pub fn step_at(&mut self, t: &Tm, pos: &Position) -> Option<Step> {
        let rule = self.rule_at(t, pos)?;
        let sub = subterm_at(t, pos, &mut KindStack::default())?.clone();
        let new = self.contract(rule, &sub, t);
        let after = replace_at(t, &pos.0, new);
        Some(Step { rule, position: pos.clone(), before: t.clone(), after })
    }

    /// One weak-head step, if any applies.
    pub fn wh_step(&mut self, t: &Tm) -> Option<Step> {
        let (pos, _) = self.first_wh_redex(t)?;
        self.step_at(t, &pos)
    }

    /// Iterates the strategy until no step applies, `star` is reached, or
    /// `fuel` steps have been taken.
    pub fn reduce(&mut self, t: &Tm, strategy: Strategy, fuel: u64) -> Trace {
        let initial = strip_annotations(t);
        if strategy == Strategy::WeakHead && !self.record {
            let (final_term, step_count, outcome) = self.wh_run(&initial, fuel);
            return Trace { level: self.level, strategy, fuel, initial, steps: Vec::new(), step_count, outcome, final_term };
        }
        let mut cur = initial.clone();
        let mut steps = Vec::new();
        let mut count = 0u64;
        let mut rng = match strategy {
            Strategy::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        let outcome = loop {
            if cur.is_star() {
                break Outcome::StarReached;
            }
            let pos = match strategy {
                Strategy::WeakHead => self.first_wh_redex(&cur).map(|p| p.0),
                Strategy::LeftmostOutermost => self.redexes(&cur).into_iter().next().map(|p| p.0),
                Strategy::Random(_) => {
                    let all = self.redexes(&cur);
                    if all.is_empty() {
                        None
                    } else {
                        let i = rng.as_mut().expect("seeded").gen_range(0..all.len());
                        Some(all[i].0.clone())
                    }
                }
            };
            let Some(pos) = pos else { break Outcome::Normal };
            if count >= fuel {
                break Outcome::FuelExhausted;
            }
            let step = self.step_at(&cur, &pos).expect("enumerated redex contracts");
            count += 1;
            cur = step.after.clone();
            if self.record {
                steps.push(step);
            }
        };
        Trace {
            level: self.level,
            strategy,
            fuel,
            initial,
            steps,
            step_count: count,
            outcome,
            final_term: cur,
        }
    }

    /// Re-applies a recorded step's rule at its position and compares.
    pub fn revalidate(&mut self, step: &Step) -> bool {
        if self.rule_at(&step.before, &step.position) != Some(step.rule) {
            return false;
        }
        match self.step_at(&step.before, &step.position) {
            Some(s) => s.after == step.after,
            None => false,
        }
    }
}

/// The generator of an implication: `\x. seq(ver(A, x), gen(B))`.
pub fn gen_imp(a: &Ty, b: &Ty) -> Tm {
    Term::lam("x", Term::guard(Term::verif(a.clone(), Term::var(0)), Term::gen(b.clone())))
}

/// `nu #g:K. ver(A[a := #g], M #g)` for the quantifier body `A` (one type
/// binder open) and the verified term `M`.
pub fn verif_all(g: &Name, k: &Kind, body: &Ty, m: &Tm) -> Tm {
    let e = Type::bound_eig(0);
    let inst = ty_instantiate(&shift_type(body, 0, 1), &e);
    let applied = Term::ty_app(shift_term(m, 0, 0, 1), e);
    Arc::new(Term::Fresh(Hint(g.clone()), k.clone(), Term::verif(inst, applied)))
}

/// The metaterm child that a weak-head context may descend into.
pub fn wh_child(t: &Tm) -> Option<&Tm> {
    match &**t {
        Term::App(f, _) | Term::TyApp(f, _) | Term::Guard(f, _) => Some(f),
        Term::Verif(_, m) | Term::Fresh(_, _, m) => Some(m),
        _ => None,
    }
}

/// Whether `pos` lies inside a weak-head context of `t`.
pub fn is_wh_position(t: &Tm, pos: &Position) -> bool {
    let mut cur = t;
    for &i in &pos.0 {
        match (i, wh_child(cur)) {
            (0, Some(next)) => cur = next,
            _ => return false,
        }
    }
    true
}

/// The child of `t` with index `i`, pushing binder kinds onto `stack`.
pub fn child<'a>(t: &'a Tm, i: u8, stack: &mut KindStack) -> Option<&'a Tm> {
    match (&**t, i) {
        (Term::Lam(_, b), 0) | (Term::TyApp(b, _), 0) | (Term::Verif(_, b), 0) | (Term::Annot(b, _), 0) => Some(b),
        (Term::App(f, _), 0) | (Term::Guard(f, _), 0) => Some(f),
        (Term::App(_, a), 1) | (Term::Guard(_, a), 1) => Some(a),
        (Term::TyLam(_, k, b), 0) => {
            stack.ty.push(k.clone());
            Some(b)
        }
        (Term::Fresh(_, k, b), 0) => {
            stack.eig.push(k.clone());
            Some(b)
        }
        _ => None,
    }
}

pub fn subterm_at<'a>(t: &'a Tm, pos: &Position, stack: &mut KindStack) -> Option<&'a Tm> {
    let mut cur = t;
    for &i in &pos.0 {
        cur = child(cur, i, stack)?;
    }
    Some(cur)
}

/// Rebuilds `t` with the subterm at `path` replaced by `new`.
pub fn replace_at(t: &Tm, path: &[u8], new: Tm) -> Tm {
    let Some((&i, rest)) = path.split_first() else { return new };
    let sub = |c: &Tm| replace_at(c, rest, new.clone());
    match (&**t, i) {
        (Term::Lam(h, b), 0) => Arc::new(Term::Lam(h.clone(), sub(b))),
        (Term::TyLam(h, k, b), 0) => Arc::new(Term::TyLam(h.clone(), k.clone(), sub(b))),
        (Term::Fresh(h, k, b), 0) => Arc::new(Term::Fresh(h.clone(), k.clone(), sub(b))),
        (Term::TyApp(b, a), 0) => Term::ty_app(sub(b), a.clone()),
        (Term::Verif(a, b), 0) => Term::verif(a.clone(), sub(b)),
        (Term::Annot(b, a), 0) => Term::annot(sub(b), a.clone()),
        (Term::App(f, a), 0) => Term::app(sub(f), a.clone()),
        (Term::App(f, a), 1) => Term::app(f.clone(), sub(a)),
        (Term::Guard(f, a), 0) => Term::guard(sub(f), a.clone()),
        (Term::Guard(f, a), 1) => Term::guard(f.clone(), sub(a)),
        _ => panic!("position does not exist"),
    }
}

/// One weak-head step with a context declaring the free names of `m` at
/// `Prop`.
pub fn wh_step(level: Level, m: &Tm) -> Option<Step> {
    Reducer::new(level, default_ctx(m)).wh_step(m)
}

pub fn enumerate_redexes(level: Level, m: &Tm) -> Vec<(Position, RuleTag)> {
    Reducer::new(level, default_ctx(m)).redexes(m)
}

pub fn wh_redexes(level: Level, m: &Tm) -> Vec<(Position, RuleTag)> {
    Reducer::new(level, default_ctx(m)).wh_redexes(m)
}

/// Runs `strategy` with recording enabled.
pub fn reduce(level: Level, m: &Tm, strategy: Strategy, fuel: u64) -> Trace {
    Reducer::new(level, default_ctx(m)).recording(true).reduce(m, strategy, fuel)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tm(s: &str, level: Level) -> Tm {
        parse_term(s, level).unwrap()
    }

    #[test]
    fn guard_star_and_verif_eig() {
        let s = wh_step(Level::ST, &tm("seq(star, x)", Level::ST)).unwrap();
        assert_eq!((s.rule, s.position.to_string()), (RuleTag::GuardStar, "/".into()));
        assert_eq!(s.after, Term::free("x"));
        let s = wh_step(Level::ST, &tm("ver(#a, gen(#a))", Level::ST)).unwrap();
        assert_eq!(s.rule, RuleTag::VerifEig);
        assert!(s.after.is_star());
        assert!(wh_step(Level::ST, &tm("\\x. x", Level::ST)).is_none());
    }

    #[test]
    fn verif_all_introduces_fresh_eigenvariable() {
        let s = wh_step(Level::F, &tm("ver(forall a. a, M)", Level::F)).unwrap();
        assert_eq!(s.rule, RuleTag::VerifAll);
        assert_eq!(print_term(&s.after), "nu #g0. ver(#g0, M [#g0])");
    }

    #[test]
    fn redex_enumeration() {
        let r = enumerate_redexes(Level::ST, &tm("seq(star, ver(#a, gen(#a)))", Level::ST));
        let r: Vec<_> = r.into_iter().map(|(p, t)| (p.to_string(), t)).collect();
        assert_eq!(r, vec![("/".to_string(), RuleTag::GuardStar), ("/1".to_string(), RuleTag::VerifEig)]);
        assert!(enumerate_redexes(Level::F, &Term::star()).is_empty());
        let r = enumerate_redexes(Level::F, &tm("gen(#a -> #b)", Level::F));
        assert_eq!(r, vec![(Position::root(), RuleTag::GenImp)]);
    }

    #[test]
    fn omega_runs_out_of_fuel() {
        let t = tm("(\\x. x x)(\\x. x x)", Level::ST);
        for s in [Strategy::WeakHead, Strategy::LeftmostOutermost, Strategy::Random(7)] {
            let tr = reduce(Level::ST, &t, s, 10);
            assert_eq!(tr.outcome, Outcome::FuelExhausted);
            assert_eq!(tr.step_count, 10);
            assert!(tr.is_chained());
        }
    }

    #[test]
    fn verifier_on_abstraction_is_normal() {
        let t = tm("ver(#a, \\x. x)", Level::ST);
        let tr = reduce(Level::ST, &t, Strategy::WeakHead, 1_000_000);
        assert_eq!(tr.outcome, Outcome::Normal);
        assert_eq!(tr.final_term, t);
    }

    #[test]
    fn type_beta_checks_kinds_at_fomega() {
        let t = tm("(/\\a:Prop. gen(a -> a)) [#b]", Level::FOmega);
        let ctx = KindCtx::new().with_eig("b", Kind::Prop);
        assert!(Reducer::new(Level::FOmega, ctx).wh_step(&t).is_some());
        let ctx = KindCtx::new().with_eig("b", Kind::Base(name("k")));
        assert!(Reducer::new(Level::FOmega, ctx).wh_step(&t).is_none());
    }

    #[test]
    fn steps_revalidate() {
        let t = tm("ver(#a -> #b -> #a, \\x. \\y. x)", Level::F);
        let tr = reduce(Level::F, &t, Strategy::WeakHead, 100);
        assert_eq!(tr.outcome, Outcome::StarReached);
        let mut r = Reducer::new(Level::F, default_ctx(&t));
        for s in &tr.steps {
            assert!(r.revalidate(s));
            assert!(is_wh_position(&s.before, &s.position));
        }
    }

    #[test]
    fn fresh_drop_is_eager() {
        let t = tm("nu #c. seq(star, star)", Level::F);
        let s = wh_step(Level::F, &t).unwrap();
        assert_eq!(s.rule, RuleTag::FreshDrop);
    }
}
