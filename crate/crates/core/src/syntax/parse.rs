use std::sync::Arc;

use thiserror::Error;

use super::ast::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("parse error at byte {position}: expected {expected}")]
    Parse { position: usize, expected: String },
    #[error("construct not available at level {level}: {what} (byte {position})")]
    Level { level: Level, what: String, position: usize },
}

impl SyntaxError {
    fn parse(position: usize, expected: impl Into<String>) -> SyntaxError {
        SyntaxError::Parse { position, expected: expected.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    EigIdent(String),
    BaseKind(String),
    Backslash,
    BigLambda,
    Dot,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Colon,
    Arrow,
    Eof,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::EigIdent(s) => format!("eigenvariable `#{s}`"),
        Tok::BaseKind(s) => format!("kind `@{s}`"),
        Tok::Backslash => "`\\`".into(),
        Tok::BigLambda => "`/\\`".into(),
        Tok::Dot => "`.`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::LBrack => "`[`".into(),
        Tok::RBrack => "`]`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Colon => "`:`".into(),
        Tok::Arrow => "`->`".into(),
        Tok::Eof => "end of input".into(),
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, SyntaxError> {
    let bytes: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let word = |start: usize| -> (String, usize) {
        let mut j = start;
        let mut s = String::new();
        while j < bytes.len() && is_ident_char(bytes[j].1) {
            s.push(bytes[j].1);
            j += 1;
        }
        (s, j)
    };
    while i < bytes.len() {
        let (pos, c) = bytes[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '-' && bytes.get(i + 1).map(|p| p.1) == Some('-') {
            while i < bytes.len() && bytes[i].1 != '\n' {
                i += 1;
            }
            continue;
        }
        let tok = match c {
            '\\' => {
                i += 1;
                Tok::Backslash
            }
            '/' if bytes.get(i + 1).map(|p| p.1) == Some('\\') => {
                i += 2;
                Tok::BigLambda
            }
            '.' => {
                i += 1;
                Tok::Dot
            }
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            '[' => {
                i += 1;
                Tok::LBrack
            }
            ']' => {
                i += 1;
                Tok::RBrack
            }
            ',' => {
                i += 1;
                Tok::Comma
            }
            ':' => {
                i += 1;
                Tok::Colon
            }
            '-' if bytes.get(i + 1).map(|p| p.1) == Some('>') => {
                i += 2;
                Tok::Arrow
            }
            '#' | '@' => {
                let (w, j) = word(i + 1);
                if w.is_empty() {
                    return Err(SyntaxError::parse(pos, "a name after `#` or `@`"));
                }
                i = j;
                if c == '#' {
                    Tok::EigIdent(w)
                } else {
                    Tok::BaseKind(w)
                }
            }
            c if is_ident_char(c) => {
                let (w, j) = word(i);
                i = j;
                Tok::Ident(w)
            }
            _ => return Err(SyntaxError::parse(pos, "a token")),
        };
        out.push((tok, pos));
    }
    out.push((Tok::Eof, src.len()));
    Ok(out)
}

const KEYWORDS: &[&str] = &["forall", "star", "seq", "gen", "ver", "nu", "Prop"];

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
    level: Level,
    tm_scope: Vec<String>,
    ty_scope: Vec<String>,
    eig_scope: Vec<String>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok) -> Result<(), SyntaxError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(SyntaxError::parse(self.pos(), describe(&t)))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn level_error(&self, what: &str) -> SyntaxError {
        SyntaxError::Level { level: self.level, what: what.into(), position: self.pos() }
    }

    fn binder_name(&mut self) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => Err(SyntaxError::parse(self.pos(), "a binder name")),
        }
    }

    fn eig_binder(&mut self) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::EigIdent(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(SyntaxError::parse(self.pos(), "an eigenvariable `#name`")),
        }
    }

    /// Optional `: K`; kind annotations are an Fω feature.
    fn opt_kind(&mut self) -> Result<Kind, SyntaxError> {
        if *self.peek() == Tok::Colon {
            if self.level != Level::FOmega {
                return Err(self.level_error("kind annotation"));
            }
            self.bump();
            self.kind()
        } else {
            Ok(Kind::Prop)
        }
    }

    fn kind(&mut self) -> Result<Kind, SyntaxError> {
        let dom = match self.peek().clone() {
            Tok::Ident(s) if s == "Prop" => {
                self.bump();
                Kind::Prop
            }
            Tok::BaseKind(s) => {
                self.bump();
                Kind::Base(name(&s))
            }
            Tok::LParen => {
                self.bump();
                let k = self.kind()?;
                self.expect(Tok::RParen)?;
                k
            }
            _ => return Err(SyntaxError::parse(self.pos(), "a kind (`Prop`, `@k` or `(`)")),
        };
        if *self.peek() == Tok::Arrow {
            self.bump();
            let cod = self.kind()?;
            Ok(Kind::arrow(dom, cod))
        } else {
            Ok(dom)
        }
    }

    fn ty(&mut self) -> Result<Ty, SyntaxError> {
        if self.is_kw("forall") {
            if self.level == Level::ST {
                return Err(self.level_error("`forall`"));
            }
            self.bump();
            let a = self.binder_name()?;
            let k = self.opt_kind()?;
            self.expect(Tok::Dot)?;
            self.ty_scope.push(a.clone());
            let body = self.ty();
            self.ty_scope.pop();
            return Ok(Arc::new(Type::ForAll(Hint::new(&a), k, body?)));
        }
        if *self.peek() == Tok::Backslash {
            if self.level != Level::FOmega {
                return Err(self.level_error("type-level lambda"));
            }
            self.bump();
            let a = self.binder_name()?;
            self.expect(Tok::Colon)?;
            let k = self.kind()?;
            self.expect(Tok::Dot)?;
            self.ty_scope.push(a.clone());
            let body = self.ty();
            self.ty_scope.pop();
            return Ok(Arc::new(Type::Lam(Hint::new(&a), k, body?)));
        }
        let lhs = self.ty_app()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.ty()?;
            Ok(Type::arrow(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn ty_starts_atom(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => !KEYWORDS.contains(&s.as_str()),
            Tok::EigIdent(_) | Tok::LParen => true,
            _ => false,
        }
    }

    fn ty_app(&mut self) -> Result<Ty, SyntaxError> {
        let mut head = self.ty_atom()?;
        while self.ty_starts_atom() {
            if self.level != Level::FOmega {
                return Err(self.level_error("type application"));
            }
            let arg = self.ty_atom()?;
            head = Type::app(head, arg);
        }
        Ok(head)
    }

    fn ty_atom(&mut self) -> Result<Ty, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                if self.level == Level::ST {
                    return Err(self.level_error("type variable (use `#name` for atoms)"));
                }
                self.bump();
                match self.ty_scope.iter().rev().position(|n| *n == s) {
                    Some(i) => Ok(Type::var(i)),
                    None => Ok(Type::free(&s)),
                }
            }
            Tok::EigIdent(s) => {
                self.bump();
                match self.eig_scope.iter().rev().position(|n| *n == s) {
                    Some(i) => Ok(Type::bound_eig(i)),
                    None => Ok(Type::eig(&s)),
                }
            }
            Tok::LParen => {
                self.bump();
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            _ => Err(SyntaxError::parse(self.pos(), "a type")),
        }
    }

    fn term(&mut self) -> Result<Tm, SyntaxError> {
        match self.peek() {
            Tok::Backslash => {
                self.bump();
                let x = self.binder_name()?;
                self.expect(Tok::Dot)?;
                self.tm_scope.push(x.clone());
                let body = self.term();
                self.tm_scope.pop();
                Ok(Arc::new(Term::Lam(Hint::new(&x), body?)))
            }
            Tok::BigLambda => {
                if self.level == Level::ST {
                    return Err(self.level_error("type abstraction"));
                }
                self.bump();
                let a = self.binder_name()?;
                let k = self.opt_kind()?;
                self.expect(Tok::Dot)?;
                self.ty_scope.push(a.clone());
                let body = self.term();
                self.ty_scope.pop();
                Ok(Arc::new(Term::TyLam(Hint::new(&a), k, body?)))
            }
            _ if self.is_kw("nu") => {
                if self.level == Level::ST {
                    return Err(self.level_error("`nu`"));
                }
                self.bump();
                let e = self.eig_binder()?;
                let k = self.opt_kind()?;
                self.expect(Tok::Dot)?;
                self.eig_scope.push(e.clone());
                let body = self.term();
                self.eig_scope.pop();
                Ok(Arc::new(Term::Fresh(Hint::new(&e), k, body?)))
            }
            _ => self.term_app(),
        }
    }

    fn starts_binder(&self) -> bool {
        matches!(self.peek(), Tok::Backslash | Tok::BigLambda) || self.is_kw("nu")
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => !["forall", "nu", "Prop"].contains(&s.as_str()),
            Tok::LParen => true,
            _ => false,
        }
    }

    fn term_app(&mut self) -> Result<Tm, SyntaxError> {
        let mut head = self.term_atom()?;
        loop {
            if *self.peek() == Tok::LBrack {
                if self.level == Level::ST {
                    return Err(self.level_error("type application"));
                }
                self.bump();
                let a = self.ty()?;
                self.expect(Tok::RBrack)?;
                head = Term::ty_app(head, a);
            } else if self.starts_atom() {
                let arg = self.term_atom()?;
                head = Term::app(head, arg);
            } else if self.starts_binder() {
                let arg = self.term()?;
                head = Term::app(head, arg);
                break;
            } else {
                break;
            }
        }
        Ok(head)
    }

    fn term_atom(&mut self) -> Result<Tm, SyntaxError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(s) if s == "star" => {
                self.bump();
                Ok(Term::star())
            }
            Tok::Ident(s) if s == "seq" && *self.peek2() == Tok::LParen => {
                self.bump();
                self.bump();
                let c = self.term()?;
                self.expect(Tok::Comma)?;
                let b = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(Term::guard(c, b))
            }
            Tok::Ident(s) if s == "gen" && *self.peek2() == Tok::LParen => {
                self.bump();
                self.bump();
                let a = self.ty()?;
                self.expect(Tok::RParen)?;
                Ok(Term::gen(a))
            }
            Tok::Ident(s) if s == "ver" && *self.peek2() == Tok::LParen => {
                self.bump();
                self.bump();
                let a = self.ty()?;
                self.expect(Tok::Comma)?;
                let b = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(Term::verif(a, b))
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                match self.tm_scope.iter().rev().position(|n| *n == s) {
                    Some(i) => Ok(Term::var(i)),
                    None => Ok(Term::free(&s)),
                }
            }
            Tok::LParen => {
                self.bump();
                let t = self.term()?;
                if *self.peek() == Tok::Colon {
                    self.bump();
                    let a = self.ty()?;
                    self.expect(Tok::RParen)?;
                    return Ok(Term::annot(t, a));
                }
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            _ => Err(SyntaxError::parse(pos, "a term")),
        }
    }

    fn finish(&mut self) -> Result<(), SyntaxError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(SyntaxError::parse(self.pos(), format!("end of input, found {}", describe(self.peek()))))
        }
    }
}

fn parser(text: &str, level: Level) -> Result<Parser, SyntaxError> {
    Ok(Parser {
        toks: lex(text)?,
        at: 0,
        level,
        tm_scope: Vec::new(),
        ty_scope: Vec::new(),
        eig_scope: Vec::new(),
    })
}

pub fn parse_kind(text: &str, level: Level) -> Result<Kind, SyntaxError> {
    let mut p = parser(text, level)?;
    if level != Level::FOmega {
        return Err(p.level_error("kinds"));
    }
    let k = p.kind()?;
    p.finish()?;
    Ok(k)
}

pub fn parse_type(text: &str, level: Level) -> Result<Ty, SyntaxError> {
    let mut p = parser(text, level)?;
    let t = p.ty()?;
    p.finish()?;
    Ok(t)
}

pub fn parse_term(text: &str, level: Level) -> Result<Tm, SyntaxError> {
    let mut p = parser(text, level)?;
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}

/// Parses `x : A, y : B` (possibly empty).
pub fn parse_env(text: &str, level: Level) -> Result<Vec<(Name, Ty)>, SyntaxError> {
    let mut p = parser(text, level)?;
    let mut out = Vec::new();
    if *p.peek() == Tok::Eof {
        return Ok(out);
    }
    loop {
        let x = p.binder_name()?;
        p.expect(Tok::Colon)?;
        let a = p.ty()?;
        out.push((name(&x), a));
        if *p.peek() == Tok::Comma {
            p.bump();
        } else {
            break;
        }
    }
    p.finish()?;
    Ok(out)
}

/// Parses kind declarations `#p : K, a : K` (eigenvariables with `#`).
pub fn parse_kind_decls(text: &str) -> Result<Vec<(bool, Name, Kind)>, SyntaxError> {
    let mut p = parser(text, Level::FOmega)?;
    let mut out = Vec::new();
    if *p.peek() == Tok::Eof {
        return Ok(out);
    }
    loop {
        let (is_eig, n) = match p.peek().clone() {
            Tok::EigIdent(s) => {
                p.bump();
                (true, s)
            }
            _ => (false, p.binder_name()?),
        };
        p.expect(Tok::Colon)?;
        let k = p.kind()?;
        out.push((is_eig, name(&n), k));
        if *p.peek() == Tok::Comma {
            p.bump();
        } else {
            break;
        }
    }
    p.finish()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity() {
        let t = parse_term("\\x. x", Level::ST).unwrap();
        assert_eq!(t, Term::lam("x", Term::var(0)));
    }

    #[test]
    fn hilbert_k_type() {
        let t = parse_type("#a -> #b -> #a", Level::ST).unwrap();
        assert_eq!(t, Type::arrow(Type::eig("a"), Type::arrow(Type::eig("b"), Type::eig("a"))));
    }

    #[test]
    fn quantifier_with_kind() {
        let t = parse_type("forall a:Prop. a -> a", Level::FOmega).unwrap();
        assert_eq!(t, Type::forall("a", Kind::Prop, Type::arrow(Type::var(0), Type::var(0))));
    }

    #[test]
    fn level_errors() {
        assert!(matches!(parse_type("forall a. a", Level::ST), Err(SyntaxError::Level { .. })));
        assert!(matches!(parse_type("a -> a", Level::ST), Err(SyntaxError::Level { .. })));
        assert!(matches!(parse_type("\\a:Prop. a", Level::F), Err(SyntaxError::Level { .. })));
        assert!(matches!(parse_type("forall a:Prop. a", Level::F), Err(SyntaxError::Level { .. })));
        assert!(matches!(parse_term("/\\a. x", Level::ST), Err(SyntaxError::Level { .. })));
    }

    #[test]
    fn parse_error_position() {
        match parse_term("\\x x", Level::ST) {
            Err(SyntaxError::Parse { position, .. }) => assert_eq!(position, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn comments_are_skipped() {
        let t = parse_term("-- identity\n\\x. x -- trailing", Level::ST).unwrap();
        assert_eq!(t, Term::lam("x", Term::var(0)));
    }

    #[test]
    fn nu_binds_eigenvariable() {
        let t = parse_term("nu #a. ver(#a, x)", Level::F).unwrap();
        assert_eq!(t, Term::fresh("a", Kind::Prop, Term::verif(Type::bound_eig(0), Term::free("x"))));
    }

    #[test]
    fn trailing_lambda_argument() {
        let t = parse_term("f \\x. x", Level::ST).unwrap();
        assert_eq!(t, Term::app(Term::free("f"), Term::lam("x", Term::var(0))));
    }
}
