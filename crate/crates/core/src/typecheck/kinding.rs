//! Kinding for Fω types and well-kindedness of metaterms.

use thiserror::Error;

use crate::syntax::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KindError {
    #[error("unbound name `{0}`")]
    UnboundName(String),
    #[error("kind mismatch in `{ty}`: expected {expected}, found {found}")]
    KindMismatch { ty: String, expected: String, found: String },
    #[error("`{0}` is applied but is not of arrow kind")]
    NotAFunction(String),
}

/// Kinds of the binders crossed so far (type binders, then nu binders).
#[derive(Clone, Debug, Default)]
pub struct KindStack {
    pub ty: Vec<Kind>,
    pub eig: Vec<Kind>,
}

fn at(stack: &[Kind], i: usize) -> Option<&Kind> {
    stack.len().checked_sub(i + 1).map(|j| &stack[j])
}

fn mismatch(t: &Ty, expected: &Kind, found: &Kind) -> KindError {
    KindError::KindMismatch {
        ty: print_type(t),
        expected: print_kind(expected),
        found: print_kind(found),
    }
}

/// `Ξ ⊢ A : K` under the given binder stack.
pub fn kind_of_in(ctx: &KindCtx, stack: &mut KindStack, t: &Ty) -> Result<Kind, KindError> {
    match &**t {
        Type::Var(i) => at(&stack.ty, *i).cloned().ok_or_else(|| KindError::UnboundName(format!("?{i}"))),
        Type::Free(a) => ctx.tyvars.get(a).cloned().ok_or_else(|| KindError::UnboundName(a.to_string())),
        Type::Eig(a) => ctx.eigs.get(a).cloned().ok_or_else(|| KindError::UnboundName(format!("#{a}"))),
        Type::BoundEig(i) => {
            at(&stack.eig, *i).cloned().ok_or_else(|| KindError::UnboundName(format!("#?{i}")))
        }
        Type::Arrow(a, b) => {
            for side in [a, b] {
                let k = kind_of_in(ctx, stack, side)?;
                if k != Kind::Prop {
                    return Err(mismatch(side, &Kind::Prop, &k));
                }
            }
            Ok(Kind::Prop)
        }
        Type::ForAll(_, k, b) => {
            stack.ty.push(k.clone());
            let kb = kind_of_in(ctx, stack, b);
            stack.ty.pop();
            let kb = kb?;
            if kb != Kind::Prop {
                return Err(mismatch(t, &Kind::Prop, &kb));
            }
            Ok(Kind::Prop)
        }
        Type::Lam(_, k, b) => {
            stack.ty.push(k.clone());
            let kb = kind_of_in(ctx, stack, b);
            stack.ty.pop();
            Ok(Kind::arrow(k.clone(), kb?))
        }
        Type::App(f, a) => {
            let kf = kind_of_in(ctx, stack, f)?;
            let ka = kind_of_in(ctx, stack, a)?;
            match kf {
                Kind::Arrow(dom, cod) => {
                    if *dom != ka {
                        return Err(mismatch(a, &dom, &ka));
                    }
                    Ok((*cod).clone())
                }
                _ => Err(KindError::NotAFunction(print_type(f))),
            }
        }
    }
}

/// The unique kind of a closed-under-`ctx` type.
pub fn kind_of(ctx: &KindCtx, t: &Ty) -> Result<Kind, KindError> {
    kind_of_in(ctx, &mut KindStack::default(), t)
}

pub fn check_prop(ctx: &KindCtx, t: &Ty) -> Result<(), KindError> {
    let k = kind_of(ctx, t)?;
    if k == Kind::Prop {
        Ok(())
    } else {
        Err(mismatch(t, &Kind::Prop, &k))
    }
}

/// Every assigned type is a proposition.
pub fn env_well_formed(ctx: &KindCtx, env: &TypeEnv) -> Result<bool, KindError> {
    for (_, a) in env.entries() {
        if kind_of(ctx, a)? != Kind::Prop {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `⊢wk M`: embedded types are well-kinded, and verified/generated types and
/// annotations are propositions.
pub fn well_kinded(ctx: &KindCtx, m: &Tm) -> Result<(), KindError> {
    fn prop(ctx: &KindCtx, stack: &mut KindStack, a: &Ty) -> Result<(), KindError> {
        let k = kind_of_in(ctx, stack, a)?;
        if k != Kind::Prop {
            return Err(mismatch(a, &Kind::Prop, &k));
        }
        Ok(())
    }
    fn go(ctx: &KindCtx, stack: &mut KindStack, m: &Tm) -> Result<(), KindError> {
        match &**m {
            Term::Var(_) | Term::Free(_) | Term::Star => Ok(()),
            Term::Lam(_, b) => go(ctx, stack, b),
            Term::App(f, a) | Term::Guard(f, a) => {
                go(ctx, stack, f)?;
                go(ctx, stack, a)
            }
            Term::TyLam(_, k, b) => {
                stack.ty.push(k.clone());
                let r = go(ctx, stack, b);
                stack.ty.pop();
                r
            }
            Term::TyApp(f, a) => {
                go(ctx, stack, f)?;
                kind_of_in(ctx, stack, a).map(|_| ())
            }
            Term::Gen(a) => prop(ctx, stack, a),
            Term::Verif(a, b) | Term::Annot(b, a) => {
                prop(ctx, stack, a)?;
                go(ctx, stack, b)
            }
            Term::Fresh(_, k, b) => {
                stack.eig.push(k.clone());
                let r = go(ctx, stack, b);
                stack.eig.pop();
                r
            }
        }
    }
    go(ctx, &mut KindStack::default(), m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fw(s: &str) -> Ty {
        parse_type(s, Level::FOmega).unwrap()
    }

    #[test]
    fn type_lambda_kind() {
        let k = kind_of(&KindCtx::new(), &fw("\\a:Prop. a -> a")).unwrap();
        assert_eq!(k, Kind::arrow(Kind::Prop, Kind::Prop));
    }

    #[test]
    fn leibniz_premise_kind() {
        let kk = Kind::Base(name("k"));
        let ctx = KindCtx::new()
            .with_eig("p", Kind::arrow(kk.clone(), Kind::Prop))
            .with_eig("A", kk.clone())
            .with_eig("B", kk);
        assert_eq!(kind_of(&ctx, &fw("#p #B -> #p #A")).unwrap(), Kind::Prop);
    }

    #[test]
    fn applying_a_proposition_fails() {
        let ctx = KindCtx::new().with_tyvar("a", Kind::Prop).with_tyvar("b", Kind::Prop);
        assert!(kind_of(&ctx, &fw("a b")).is_err());
    }

    #[test]
    fn env_examples() {
        let ctx = KindCtx::new()
            .with_eig("a", Kind::Prop)
            .with_eig("p", Kind::arrow(Kind::Base(name("k")), Kind::Prop));
        let env = TypeEnv::from_entries(vec![(name("x"), Type::eig("a"))]);
        assert!(env_well_formed(&ctx, &env).unwrap());
        let env = TypeEnv::from_entries(vec![(name("x"), Type::eig("p"))]);
        assert!(!env_well_formed(&ctx, &env).unwrap());
        assert!(env_well_formed(&ctx, &TypeEnv::new()).unwrap());
    }
}
