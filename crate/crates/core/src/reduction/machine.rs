//! Weak-head reduction on an unwound spine. The term is kept as a stack of
//! weak-head frames above a head, so a step near the head does not rebuild
//! the path to the root. Used for unrecorded weak-head runs; it takes the
//! same steps as the position-based engine.

use std::collections::HashSet;
use std::sync::Arc;

use super::*;
use crate::typecheck::KindStack;

#[derive(Clone, Debug)]
enum Frame {
    App(Tm),
    TyApp(Ty),
    Guard(Tm),
    Verif(Ty),
    Fresh(Hint, Kind),
}

struct Spine {
    frames: Vec<Frame>,
    head: Tm,
    /// Indices of the `nu` frames, ascending.
    nus: Vec<usize>,
}

impl Spine {
    fn new(t: &Tm) -> Spine {
        let mut s = Spine { frames: Vec::new(), head: t.clone(), nus: Vec::new() };
        s.unwind();
        s
    }

    fn unwind(&mut self) {
        loop {
            let (frame, next) = match &*self.head {
                Term::App(f, a) => (Frame::App(a.clone()), f.clone()),
                Term::TyApp(f, a) => (Frame::TyApp(a.clone()), f.clone()),
                Term::Guard(c, n) => (Frame::Guard(n.clone()), c.clone()),
                Term::Verif(a, m) => (Frame::Verif(a.clone()), m.clone()),
                Term::Fresh(h, k, b) => (Frame::Fresh(h.clone(), k.clone()), b.clone()),
                _ => return,
            };
            if matches!(frame, Frame::Fresh(..)) {
                self.nus.push(self.frames.len());
            }
            self.frames.push(frame);
            self.head = next;
        }
    }

    /// The subterm rooted at frame `i` (the head when `i` is the depth).
    fn rebuild(&self, i: usize) -> Tm {
        let mut t = self.head.clone();
        for f in self.frames[i..].iter().rev() {
            t = match f {
                Frame::App(a) => Term::app(t, a.clone()),
                Frame::TyApp(a) => Term::ty_app(t, a.clone()),
                Frame::Guard(n) => Term::guard(t, n.clone()),
                Frame::Verif(a) => Term::verif(a.clone(), t),
                Frame::Fresh(h, k) => Arc::new(Term::Fresh(h.clone(), k.clone(), t)),
            };
        }
        t
    }

    fn truncate(&mut self, i: usize) {
        self.frames.truncate(i);
        while self.nus.last().is_some_and(|&j| j >= i) {
            self.nus.pop();
        }
    }

    fn kinds_above(&self, i: usize) -> KindStack {
        let mut stack = KindStack::default();
        for &j in self.nus.iter().take_while(|&&j| j < i) {
            if let Frame::Fresh(_, k) = &self.frames[j] {
                stack.eig.push(k.clone());
            }
        }
        stack
    }
}

/// Closed subterms met during a run, by address. Holding the terms keeps
/// the addresses from being reused.
#[derive(Default)]
struct Closed {
    addrs: HashSet<usize>,
    keep: Vec<Tm>,
}

impl Closed {
    fn add(&mut self, t: &Tm) {
        if self.addrs.insert(Arc::as_ptr(t) as usize) {
            self.keep.push(t.clone());
        }
    }

    fn has(&self, t: &Tm) -> bool {
        self.addrs.contains(&(Arc::as_ptr(t) as usize))
    }

    /// `body[depth := s]` for closed `s`, skipping known closed subterms so
    /// that shared arguments are not walked again.
    fn inst(&self, t: &Tm, depth: usize, s: &Tm) -> Tm {
        if self.has(t) {
            return t.clone();
        }
        let go = |c: &Tm, d: usize| self.inst(c, d, s);
        match &**t {
            Term::Var(i) if *i == depth => s.clone(),
            Term::Var(i) if *i > depth => Term::var(i - 1),
            Term::Var(_) | Term::Free(_) | Term::Star | Term::Gen(_) => t.clone(),
            Term::Lam(h, b) => Arc::new(Term::Lam(h.clone(), go(b, depth + 1))),
            Term::App(f, a) => Term::app(go(f, depth), go(a, depth)),
            Term::Guard(c, n) => Term::guard(go(c, depth), go(n, depth)),
            Term::TyLam(h, k, b) => Arc::new(Term::TyLam(h.clone(), k.clone(), go(b, depth))),
            Term::Fresh(h, k, b) => Arc::new(Term::Fresh(h.clone(), k.clone(), go(b, depth))),
            Term::TyApp(f, a) => Term::ty_app(go(f, depth), a.clone()),
            Term::Verif(a, m) => Term::verif(a.clone(), go(m, depth)),
            Term::Annot(m, a) => Arc::new(Term::Annot(go(m, depth), a.clone())),
        }
    }
}

impl Reducer {
    /// The rule at frame `i` of `s` (at the head when `i == depth`).
    fn frame_rule(&self, s: &Spine, i: usize) -> Option<RuleTag> {
        let depth = s.frames.len();
        if i + 1 >= depth {
            return self.root_rule(&mut s.kinds_above(i), &s.rebuild(i));
        }
        // Away from the head only rules that ignore the shape of the child
        // can apply.
        match &s.frames[i] {
            Frame::Verif(a) if self.level != Level::ST => match &**a {
                Type::Arrow(..) => Some(RuleTag::VerifImp),
                Type::ForAll(..) => Some(RuleTag::VerifAll),
                _ => None,
            },
            Frame::Fresh(..) if self.level != Level::ST => {
                (!has_bound_eig(&s.rebuild(i + 1), 0)).then_some(RuleTag::FreshDrop)
            }
            _ => None,
        }
    }

    /// Weak-head reduction without recording: final term, steps taken and
    /// outcome, identical to the `WeakHead` strategy of `reduce`.
    pub fn wh_run(&mut self, t: &Tm, fuel: u64) -> (Tm, u64, Outcome) {
        let mut s = Spine::new(t);
        let closed = is_locally_closed(t);
        let mut known = Closed::default();
        let mut count = 0u64;
        // Frames above `scan` other than `nu` frames are known not to be
        // redexes.
        let mut scan = 0usize;
        let outcome = loop {
            if s.frames.is_empty() && s.head.is_star() {
                break Outcome::StarReached;
            }
            let mut found = s.nus.iter().take_while(|&&i| i < scan).find_map(|&i| self.frame_rule(&s, i).map(|r| (i, r)));
            if found.is_none() {
                found = (scan..=s.frames.len()).find_map(|i| self.frame_rule(&s, i).map(|r| (i, r)));
            }
            let Some((i, rule)) = found else { break Outcome::Normal };
            if count >= fuel {
                break Outcome::FuelExhausted;
            }
            let whole = if rule == RuleTag::VerifAll { s.rebuild(0) } else { Term::star() };
            let new = match (&*s.head, s.frames.last()) {
                // Arguments of a closed term outside any `nu` are closed.
                (Term::Lam(_, b), Some(Frame::App(a))) if rule == RuleTag::Beta && closed && s.nus.is_empty() => {
                    known.add(a);
                    known.inst(b, 0, a)
                }
                _ => self.contract(rule, &s.rebuild(i), &whole),
            };
            s.truncate(i);
            s.head = new;
            s.unwind();
            count += 1;
            scan = i.saturating_sub(1);
        };
        (s.rebuild(0), count, outcome)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn agree(level: Level, src: &str, fuel: u64) {
        let m = parse_term(src, level).unwrap();
        let mut r = Reducer::new(level, default_ctx(&m));
        let slow = r.clone().recording(true).reduce(&m, Strategy::WeakHead, fuel);
        let (t, n, o) = r.wh_run(&m, fuel);
        assert_eq!((t, n, o), (slow.final_term, slow.step_count, slow.outcome), "{src}");
    }

    #[test]
    fn matches_the_engine() {
        agree(Level::ST, "(\\x. x x x)(\\x. x x x)", 50);
        agree(Level::ST, "seq(seq(star, (\\x. x) star), y)", 10);
        agree(Level::F, "ver(#a -> forall b. b -> #a, \\x. /\\c. \\y. x)", 100);
        agree(Level::F, "ver(forall a. a -> a, /\\b. \\z. z)", 100);
        agree(Level::F, "nu #e. (\\x. y) (gen(#e))", 10);
        agree(Level::FOmega, "ver(forall P:Prop -> Prop. P #a -> P #a, /\\P:Prop -> Prop. \\x. x)", 100);
    }

    #[test]
    fn long_spines_are_cheap() {
        let m = parse_term("(\\x. x x x)(\\x. x x x)", Level::ST).unwrap();
        let (_, n, o) = Reducer::new(Level::ST, KindCtx::new()).wh_run(&m, 20_000);
        assert_eq!((n, o), (20_000, Outcome::FuelExhausted));
    }
}
