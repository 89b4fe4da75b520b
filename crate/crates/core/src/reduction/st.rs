use std::sync::Arc;

use super::*;

fn st_type(a: &Ty) -> Result<(), ReductionError> {
    match &**a {
        Type::Eig(_) => Ok(()),
        Type::Arrow(a, b) => {
            st_type(a)?;
            st_type(b)
        }
        _ => Err(ReductionError::Level {
            level: Level::ST,
            what: format!("type `{}` is not built from eigenvariables and arrows", print_type(a)),
        }),
    }
}

/// The simply-typed generator for `A`, with compound types unfolded.
pub fn st_gen(a: &Ty) -> Tm {
    match &**a {
        Type::Arrow(a, b) => Term::lam("x", Term::guard(st_ver(a, Term::var(0)), st_gen(b))),
        _ => Term::gen(a.clone()),
    }
}

/// The simply-typed verifier for `A` applied to `m`, with compound types
/// unfolded.
pub fn st_ver(a: &Ty, m: Tm) -> Tm {
    match &**a {
        Type::Arrow(a, b) => st_ver(b, Term::app(m, st_gen(a))),
        _ => Term::verif(a.clone(), m),
    }
}

/// Unfolds generators and verifiers at compound types into the core
/// simply-typed metacalculus, where they only occur at eigenvariables.
pub fn expand_st(surface: &Tm) -> Result<Tm, ReductionError> {
    let level_err = |what: &str| Err(ReductionError::Level { level: Level::ST, what: what.into() });
    Ok(match &**surface {
        Term::Var(_) | Term::Free(_) | Term::Star => surface.clone(),
        Term::Lam(h, b) => Arc::new(Term::Lam(h.clone(), expand_st(b)?)),
        Term::App(f, a) => Term::app(expand_st(f)?, expand_st(a)?),
        Term::Guard(c, b) => Term::guard(expand_st(c)?, expand_st(b)?),
        Term::Gen(a) => {
            st_type(a)?;
            st_gen(a)
        }
        Term::Verif(a, m) => {
            st_type(a)?;
            st_ver(a, expand_st(m)?)
        }
        Term::Annot(m, a) => {
            st_type(a)?;
            Term::annot(expand_st(m)?, a.clone())
        }
        Term::TyLam(..) | Term::TyApp(..) => return level_err("type abstraction and application"),
        Term::Fresh(..) => return level_err("`nu`"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(s: &str) -> String {
        print_term(&expand_st(&parse_term(s, Level::ST).unwrap()).unwrap())
    }

    #[test]
    fn examples() {
        assert_eq!(ex("gen(#a -> #b)"), "\\x. seq(ver(#a, x), gen(#b))");
        assert_eq!(ex("ver(#a -> #b -> #a, M)"), "ver(#a, M gen(#a) gen(#b))");
        assert_eq!(ex("gen(#a)"), "gen(#a)");
        assert_eq!(ex("\\x. x"), "\\x. x");
    }

    #[test]
    fn rejects_quantifiers() {
        let t = parse_term("gen(forall a. a)", Level::F).unwrap();
        assert!(expand_st(&t).is_err());
    }
}
