//! Simultaneous reduction `⇛` for the second-order metacalculus: the
//! complete development and the set of all simultaneous reducts.

use std::collections::HashSet;
use std::sync::Arc;

use super::*;

fn require_f<T>(what: &str) -> Result<T, ReductionError> {
    Err(ReductionError::Level { level: Level::F, what: format!("{what} is defined for the second-order calculus only") })
}

fn is_eig(a: &Ty) -> bool {
    matches!(&**a, Type::Eig(_) | Type::BoundEig(_))
}

/// Contracts every redex present in `m` simultaneously, leaving created
/// redexes alone.
pub fn complete_development(level: Level, m: &Tm) -> Result<Tm, ReductionError> {
    if level != Level::F {
        return require_f("complete development");
    }
    Ok(cd(m))
}

fn cd(m: &Tm) -> Tm {
    match &**m {
        Term::Var(_) | Term::Free(_) | Term::Star => m.clone(),
        Term::Lam(h, b) => Arc::new(Term::Lam(h.clone(), cd(b))),
        Term::App(f, n) => match &**f {
            Term::Lam(_, b) => instantiate(&cd(b), &cd(n)),
            _ => Term::app(cd(f), cd(n)),
        },
        Term::TyLam(h, k, b) => Arc::new(Term::TyLam(h.clone(), k.clone(), cd(b))),
        Term::TyApp(f, a) => match &**f {
            Term::TyLam(_, _, b) => instantiate_ty(&cd(b), a),
            _ => Term::ty_app(cd(f), a.clone()),
        },
        Term::Guard(c, n) if c.is_star() => cd(n),
        Term::Guard(c, n) => Term::guard(cd(c), cd(n)),
        Term::Gen(a) => match &**a {
            Type::Arrow(a, b) => gen_imp(a, b),
            Type::ForAll(h, k, b) => Arc::new(Term::TyLam(h.clone(), k.clone(), Term::gen(b.clone()))),
            _ => m.clone(),
        },
        Term::Verif(a, n) => match (&**a, &**n) {
            (_, Term::Gen(b)) if is_eig(a) && a == b => Term::star(),
            (Type::Arrow(a1, b), _) => Term::verif(b.clone(), Term::app(cd(n), Term::gen(a1.clone()))),
            (Type::ForAll(h, k, body), _) => verif_all(&h.0, k, body, &cd(n)),
            _ => Term::verif(a.clone(), cd(n)),
        },
        Term::Fresh(h, k, b) => {
            if has_bound_eig(b, 0) {
                Arc::new(Term::Fresh(h.clone(), k.clone(), cd(b)))
            } else {
                shift_term(&cd(b), 0, 0, -1)
            }
        }
        Term::Annot(b, _) => cd(b),
    }
}

/// The reduct set grew beyond the configured bound.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("more than {0} simultaneous reducts")]
pub struct TooManyReducts(pub usize);

/// All `N` with `m ⇛ N`, following the inference rules of simultaneous
/// reduction literally. Fails once a set exceeds `cap` elements.
pub fn par_reducts(m: &Tm, cap: usize) -> Result<Vec<Tm>, TooManyReducts> {
    fn add(out: &mut Vec<Tm>, seen: &mut HashSet<Tm>, t: Tm, cap: usize) -> Result<(), TooManyReducts> {
        if seen.insert(t.clone()) {
            out.push(t);
            if out.len() > cap {
                return Err(TooManyReducts(cap));
            }
        }
        Ok(())
    }
    fn go(m: &Tm, cap: usize) -> Result<Vec<Tm>, TooManyReducts> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        match &**m {
            Term::Var(_) | Term::Free(_) | Term::Star => add(&mut out, &mut seen, m.clone(), cap)?,
            Term::Lam(h, b) => {
                for b2 in go(b, cap)? {
                    add(&mut out, &mut seen, Arc::new(Term::Lam(h.clone(), b2)), cap)?;
                }
            }
            Term::App(f, n) => {
                let fs = go(f, cap)?;
                let ns = go(n, cap)?;
                for f2 in &fs {
                    for n2 in &ns {
                        add(&mut out, &mut seen, Term::app(f2.clone(), n2.clone()), cap)?;
                    }
                }
                if let Term::Lam(_, b) = &**f {
                    for b2 in go(b, cap)? {
                        for n2 in &ns {
                            add(&mut out, &mut seen, instantiate(&b2, n2), cap)?;
                        }
                    }
                }
            }
            Term::TyLam(h, k, b) => {
                for b2 in go(b, cap)? {
                    add(&mut out, &mut seen, Arc::new(Term::TyLam(h.clone(), k.clone(), b2)), cap)?;
                }
            }
            Term::TyApp(f, a) => {
                for f2 in go(f, cap)? {
                    add(&mut out, &mut seen, Term::ty_app(f2, a.clone()), cap)?;
                }
                if let Term::TyLam(_, _, b) = &**f {
                    for b2 in go(b, cap)? {
                        add(&mut out, &mut seen, instantiate_ty(&b2, a), cap)?;
                    }
                }
            }
            Term::Guard(c, n) => {
                let ns = go(n, cap)?;
                for c2 in go(c, cap)? {
                    for n2 in &ns {
                        add(&mut out, &mut seen, Term::guard(c2.clone(), n2.clone()), cap)?;
                    }
                }
                if c.is_star() {
                    for n2 in ns {
                        add(&mut out, &mut seen, n2, cap)?;
                    }
                }
            }
            Term::Gen(a) => {
                add(&mut out, &mut seen, m.clone(), cap)?;
                match &**a {
                    Type::Arrow(..) | Type::ForAll(..) => add(&mut out, &mut seen, cd(m), cap)?,
                    _ => {}
                }
            }
            Term::Verif(a, n) => {
                let ns = go(n, cap)?;
                for n2 in &ns {
                    add(&mut out, &mut seen, Term::verif(a.clone(), n2.clone()), cap)?;
                }
                match (&**a, &**n) {
                    (_, Term::Gen(b)) if is_eig(a) && a == b => add(&mut out, &mut seen, Term::star(), cap)?,
                    (Type::Arrow(a1, b), _) => {
                        for n2 in &ns {
                            let t = Term::verif(b.clone(), Term::app(n2.clone(), Term::gen(a1.clone())));
                            add(&mut out, &mut seen, t, cap)?;
                        }
                    }
                    (Type::ForAll(h, k, body), _) => {
                        for n2 in &ns {
                            add(&mut out, &mut seen, verif_all(&h.0, k, body, n2), cap)?;
                        }
                    }
                    _ => {}
                }
            }
            Term::Fresh(h, k, b) => {
                let bs = go(b, cap)?;
                for b2 in &bs {
                    add(&mut out, &mut seen, Arc::new(Term::Fresh(h.clone(), k.clone(), b2.clone())), cap)?;
                }
                if !has_bound_eig(b, 0) {
                    for b2 in &bs {
                        add(&mut out, &mut seen, shift_term(b2, 0, 0, -1), cap)?;
                    }
                }
            }
            Term::Annot(b, _) => return go(b, cap),
        }
        Ok(out)
    }
    go(m, cap)
}

/// Decides `m ⇛ n`.
pub fn par_reduces(m: &Tm, n: &Tm, cap: usize) -> Result<bool, TooManyReducts> {
    Ok(par_reducts(m, cap)?.iter().any(|r| r == n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tm(s: &str) -> Tm {
        parse_term(s, Level::F).unwrap()
    }

    #[test]
    fn examples() {
        let r = complete_development(Level::F, &tm("(\\x. x x)(\\y. y)")).unwrap();
        assert_eq!(r, tm("(\\y. y)(\\y. y)"));
        let r = complete_development(Level::F, &tm("gen(#a -> #b)")).unwrap();
        assert_eq!(print_term(&r), "\\x. seq(ver(#a, x), gen(#b))");
        assert_eq!(complete_development(Level::F, &Term::star()).unwrap(), Term::star());
        assert!(complete_development(Level::ST, &Term::star()).is_err());
    }

    #[test]
    fn development_is_a_simultaneous_reduct() {
        for s in ["(\\x. x x)(\\y. y)", "seq(star, ver(#a, gen(#a)))", "ver(forall a. a -> a, \\x. x)", "nu #c. (\\x. x) y"]
        {
            let m = tm(s);
            let c = complete_development(Level::F, &m).unwrap();
            assert!(par_reduces(&m, &c, 10_000).unwrap(), "{s}");
            assert!(par_reduces(&m, &m, 10_000).unwrap(), "{s}");
        }
    }
}
