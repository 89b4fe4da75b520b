use std::fmt::Write;

use super::ast::*;
use super::subst::FreeNames;

/// Renders ASTs in the surface grammar. Binder names come from hints and are
/// adjusted so that no binder captures a free name or shadows another binder
/// of the same namespace, which keeps `parse(print(t))` alpha-equivalent to `t`.
pub struct Printer {
    tm: Vec<Name>,
    ty: Vec<Name>,
    eig: Vec<Name>,
    free: FreeNames,
}

pub fn print_kind(k: &Kind) -> String {
    let mut s = String::new();
    kind_into(&mut s, k, false);
    s
}

fn kind_into(out: &mut String, k: &Kind, paren: bool) {
    match k {
        Kind::Prop => out.push_str("Prop"),
        Kind::Base(n) => {
            let _ = write!(out, "@{n}");
        }
        Kind::Arrow(a, b) => {
            if paren {
                out.push('(');
            }
            kind_into(out, a, true);
            out.push_str(" -> ");
            kind_into(out, b, false);
            if paren {
                out.push(')');
            }
        }
    }
}

pub fn print_type(t: &Ty) -> String {
    let mut p = Printer::new(FreeNames::of_type(t));
    let mut s = String::new();
    p.ty_into(&mut s, t, 0);
    s
}

pub fn print_term(t: &Tm) -> String {
    let mut p = Printer::new(FreeNames::of_term(t));
    let mut s = String::new();
    p.tm_into(&mut s, t, 0);
    s
}

#[derive(Clone, Copy)]
enum Space {
    Tm,
    Ty,
    Eig,
}

impl Printer {
    pub fn new(free: FreeNames) -> Printer {
        Printer { tm: Vec::new(), ty: Vec::new(), eig: Vec::new(), free }
    }

    fn pick(&self, hint: &Hint, space: Space) -> Name {
        let (stack, free, default) = match space {
            Space::Tm => (&self.tm, &self.free.terms, "x"),
            Space::Ty => (&self.ty, &self.free.types, "a"),
            Space::Eig => (&self.eig, &self.free.eigs, "g"),
        };
        let base = hint.as_str().trim_start_matches('#');
        let base = if base.is_empty() { default } else { base };
        let taken = |c: &str| stack.iter().any(|n| &**n == c) || free.iter().any(|n| &**n == c);
        if !taken(base) {
            return name(base);
        }
        let mut cand = format!("{base}'");
        while taken(&cand) {
            cand.push('\'');
        }
        name(&cand)
    }

    fn lookup(stack: &[Name], i: usize) -> Option<&Name> {
        stack.len().checked_sub(i + 1).map(|j| &stack[j])
    }

    pub fn ty_into(&mut self, out: &mut String, t: &Ty, prec: u8) {
        match &**t {
            Type::Var(i) => match Self::lookup(&self.ty, *i) {
                Some(n) => out.push_str(n),
                None => {
                    let _ = write!(out, "?{i}");
                }
            },
            Type::Free(a) => out.push_str(a),
            Type::Eig(a) => {
                let _ = write!(out, "#{a}");
            }
            Type::BoundEig(i) => match Self::lookup(&self.eig, *i) {
                Some(n) => {
                    let _ = write!(out, "#{n}");
                }
                None => {
                    let _ = write!(out, "#?{i}");
                }
            },
            Type::Arrow(a, b) => {
                if prec > 0 {
                    out.push('(');
                }
                self.ty_into(out, a, 1);
                out.push_str(" -> ");
                self.ty_into(out, b, 0);
                if prec > 0 {
                    out.push(')');
                }
            }
            Type::ForAll(h, k, b) | Type::Lam(h, k, b) => {
                if prec > 0 {
                    out.push('(');
                }
                let n = self.pick(h, Space::Ty);
                if matches!(&**t, Type::ForAll(..)) {
                    let _ = write!(out, "forall {n}");
                    if *k != Kind::Prop {
                        out.push(':');
                        kind_into(out, k, false);
                    }
                } else {
                    let _ = write!(out, "\\{n}:");
                    kind_into(out, k, false);
                }
                out.push_str(". ");
                self.ty.push(n);
                self.ty_into(out, b, 0);
                self.ty.pop();
                if prec > 0 {
                    out.push(')');
                }
            }
            Type::App(f, a) => {
                if prec > 1 {
                    out.push('(');
                }
                self.ty_into(out, f, 1);
                out.push(' ');
                self.ty_into(out, a, 2);
                if prec > 1 {
                    out.push(')');
                }
            }
        }
    }

    pub fn tm_into(&mut self, out: &mut String, t: &Tm, prec: u8) {
        match &**t {
            Term::Var(i) => match Self::lookup(&self.tm, *i) {
                Some(n) => out.push_str(n),
                None => {
                    let _ = write!(out, "?{i}");
                }
            },
            Term::Free(x) => out.push_str(x),
            Term::Star => out.push_str("star"),
            Term::Lam(h, b) => {
                if prec > 0 {
                    out.push('(');
                }
                let n = self.pick(h, Space::Tm);
                let _ = write!(out, "\\{n}. ");
                self.tm.push(n);
                self.tm_into(out, b, 0);
                self.tm.pop();
                if prec > 0 {
                    out.push(')');
                }
            }
            Term::TyLam(h, k, b) => {
                if prec > 0 {
                    out.push('(');
                }
                let n = self.pick(h, Space::Ty);
                let _ = write!(out, "/\\{n}");
                if *k != Kind::Prop {
                    out.push(':');
                    kind_into(out, k, false);
                }
                out.push_str(". ");
                self.ty.push(n);
                self.tm_into(out, b, 0);
                self.ty.pop();
                if prec > 0 {
                    out.push(')');
                }
            }
            Term::Fresh(h, k, b) => {
                if prec > 0 {
                    out.push('(');
                }
                let n = self.pick(h, Space::Eig);
                let _ = write!(out, "nu #{n}");
                if *k != Kind::Prop {
                    out.push(':');
                    kind_into(out, k, false);
                }
                out.push_str(". ");
                self.eig.push(n);
                self.tm_into(out, b, 0);
                self.eig.pop();
                if prec > 0 {
                    out.push(')');
                }
            }
            Term::App(f, a) => {
                if prec > 1 {
                    out.push('(');
                }
                self.tm_into(out, f, 1);
                out.push(' ');
                self.tm_into(out, a, 2);
                if prec > 1 {
                    out.push(')');
                }
            }
            Term::TyApp(f, a) => {
                if prec > 1 {
                    out.push('(');
                }
                self.tm_into(out, f, 1);
                out.push_str(" [");
                self.ty_into(out, a, 0);
                out.push(']');
                if prec > 1 {
                    out.push(')');
                }
            }
            Term::Guard(c, b) => {
                out.push_str("seq(");
                self.tm_into(out, c, 0);
                out.push_str(", ");
                self.tm_into(out, b, 0);
                out.push(')');
            }
            Term::Gen(a) => {
                out.push_str("gen(");
                self.ty_into(out, a, 0);
                out.push(')');
            }
            Term::Verif(a, b) => {
                out.push_str("ver(");
                self.ty_into(out, a, 0);
                out.push_str(", ");
                self.tm_into(out, b, 0);
                out.push(')');
            }
            Term::Annot(b, a) => {
                out.push('(');
                self.tm_into(out, b, 0);
                out.push_str(" : ");
                self.ty_into(out, a, 0);
                out.push(')');
            }
        }
    }
}
