//! Golden examples, one per file:
//!
//! ```text
//! -- comment
//! name: k-combinator
//! level: st
//! env: x : #a
//! kindctx: #p : Prop -> Prop
//! type: #a -> #b -> #a
//! term: \x.\y.x
//! expect: realized
//! ```
//!
//! `env`, `kindctx` and `op` are optional. A line starting with whitespace
//! continues the previous header. `op: correctness` runs the generator check
//! on `type` (free type variables are kept); otherwise realized/stuck entries
//! verify `term` with free type variables closed by fresh eigenvariables, and
//! typecheck entries run the checker.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use thiserror::Error;

use crate::syntax::*;
use crate::typecheck::check;
use crate::verify::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expectation {
    Realized,
    Stuck,
    TypecheckOk,
    TypecheckFail,
}

impl Expectation {
    pub fn as_str(self) -> &'static str {
        match self {
            Expectation::Realized => "realized",
            Expectation::Stuck => "stuck",
            Expectation::TypecheckOk => "typecheck-ok",
            Expectation::TypecheckFail => "typecheck-fail",
        }
    }

    fn parse(s: &str) -> Option<Expectation> {
        [Expectation::Realized, Expectation::Stuck, Expectation::TypecheckOk, Expectation::TypecheckFail]
            .into_iter()
            .find(|e| e.as_str() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorpusOp {
    Verify,
    Correctness,
    Typecheck,
}

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub name: String,
    pub level: Level,
    pub env: TypeEnv,
    pub kindctx: KindCtx,
    pub ty: Ty,
    pub term: Tm,
    pub expected: Expectation,
    pub op: CorpusOp,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{file}: {msg}")]
    Format { file: String, msg: String },
}

fn format_err(file: &str, msg: impl Into<String>) -> CorpusError {
    CorpusError::Format { file: file.into(), msg: msg.into() }
}

impl CorpusEntry {
    /// Parses an entry; `file` only labels errors.
    pub fn parse(text: &str, file: &str) -> Result<CorpusEntry, CorpusError> {
        let mut fields: Vec<(String, String)> = Vec::new();
        for line in text.lines() {
            let body = line.split("--").next().unwrap_or("");
            if body.trim().is_empty() {
                continue;
            }
            if body.starts_with(char::is_whitespace) {
                let Some(last) = fields.last_mut() else {
                    return Err(format_err(file, "continuation line before any header"));
                };
                last.1.push(' ');
                last.1.push_str(body.trim());
                continue;
            }
            let Some((k, v)) = body.split_once(':') else {
                return Err(format_err(file, format!("expected `key: value`, got `{}`", line.trim())));
            };
            let k = k.trim().to_string();
            if fields.iter().any(|(f, _)| *f == k) {
                return Err(format_err(file, format!("duplicate header `{k}`")));
            }
            fields.push((k, v.trim().to_string()));
        }
        let get = |k: &str| fields.iter().find(|(f, _)| f == k).map(|(_, v)| v.as_str());
        let need = |k: &str| get(k).ok_or_else(|| format_err(file, format!("missing header `{k}`")));
        for (k, _) in &fields {
            if !["name", "level", "env", "kindctx", "type", "term", "expect", "op"].contains(&k.as_str()) {
                return Err(format_err(file, format!("unknown header `{k}`")));
            }
        }
        let level = Level::from_tag(need("level")?).ok_or_else(|| format_err(file, "level must be st, f or fw"))?;
        let syn = |e: SyntaxError| format_err(file, e.to_string());
        let env = TypeEnv::from_entries(parse_env(get("env").unwrap_or(""), level).map_err(syn)?);
        let mut kindctx = KindCtx::new();
        for (is_eig, n, k) in parse_kind_decls(get("kindctx").unwrap_or("")).map_err(syn)? {
            kindctx = if is_eig { kindctx.with_eig(&n, k) } else { kindctx.with_tyvar(&n, k) };
        }
        let ty = parse_type(need("type")?, level).map_err(syn)?;
        let expected = Expectation::parse(need("expect")?)
            .ok_or_else(|| format_err(file, "expect must be realized, stuck, typecheck-ok or typecheck-fail"))?;
        let op = match get("op") {
            None if matches!(expected, Expectation::TypecheckOk | Expectation::TypecheckFail) => CorpusOp::Typecheck,
            None | Some("verify") => CorpusOp::Verify,
            Some("correctness") => CorpusOp::Correctness,
            Some("typecheck") => CorpusOp::Typecheck,
            Some(o) => return Err(format_err(file, format!("unknown op `{o}`"))),
        };
        let term = match (op, get("term")) {
            (CorpusOp::Correctness, None) => Term::gen(ty.clone()),
            (_, t) => parse_term(t.ok_or_else(|| format_err(file, "missing header `term`"))?, level).map_err(syn)?,
        };
        let mut names = env.free_names();
        names.add_type(&ty);
        names.add_term(&term);
        kindctx.declare_missing(&names);
        Ok(CorpusEntry { name: need("name")?.to_string(), level, env, kindctx, ty, term, expected, op })
    }

    pub fn run(&self, fuel: u64) -> CorpusOutcome {
        let start = Instant::now();
        let (observed, steps, detail) = match self.op {
            CorpusOp::Typecheck => match check(self.level, &self.kindctx, &self.env, &self.term, &self.ty) {
                Ok(_) => ("typecheck-ok".to_string(), 0, String::new()),
                Err(e) => ("typecheck-fail".to_string(), 0, e.to_string()),
            },
            CorpusOp::Verify | CorpusOp::Correctness => {
                let v = if self.op == CorpusOp::Correctness {
                    correctness_check_in(self.level, &self.kindctx, &self.ty, fuel)
                } else {
                    let opts = VerifyOptions { close_free_tvars: true, record: false };
                    realizes_with(self.level, &self.kindctx, &self.env, &self.ty, &self.term, fuel, opts)
                };
                match v {
                    Ok(v) => {
                        let detail = match &v {
                            Verdict::Stuck { final_term, .. } => print_term(final_term),
                            _ => String::new(),
                        };
                        (v.tag().to_string(), v.trace().step_count, detail)
                    }
                    Err(e) => ("error".to_string(), 0, e.to_string()),
                }
            }
        };
        CorpusOutcome {
            name: self.name.clone(),
            expected: self.expected,
            ok: observed == self.expected.as_str(),
            observed,
            steps,
            detail,
            elapsed: start.elapsed(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CorpusOutcome {
    pub name: String,
    pub expected: Expectation,
    pub observed: String,
    pub ok: bool,
    /// Weak-head steps of the verification run.
    pub steps: u64,
    /// Stuck state or error text.
    pub detail: String,
    pub elapsed: Duration,
}

impl CorpusOutcome {
    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "expected": self.expected.as_str(),
            "observed": self.observed,
            "ok": self.ok,
            "steps": self.steps,
            "detail": self.detail,
        })
    }
}

impl fmt::Display for CorpusOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.ok { "ok  " } else { "FAIL" };
        write!(f, "{mark} {}: {} ({} steps)", self.name, self.observed, self.steps)?;
        if !self.ok {
            write!(f, ", expected {}", self.expected.as_str())?;
        }
        if !self.detail.is_empty() {
            write!(f, "\n     {}", self.detail)?;
        }
        Ok(())
    }
}

/// The corpus shipped with the crate.
pub fn default_corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

/// Entries of every `*.rlz` file under the given paths, sorted by file name
/// within each directory.
pub fn load_corpus(paths: &[PathBuf]) -> Result<Vec<CorpusEntry>, CorpusError> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let rd = fs::read_dir(p).map_err(|e| CorpusError::Io { path: p.display().to_string(), source: e })?;
            let mut here: Vec<PathBuf> = rd
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "rlz"))
                .collect();
            here.sort();
            files.extend(here);
        } else {
            files.push(p.clone());
        }
    }
    files
        .iter()
        .map(|f| {
            let label = f.display().to_string();
            let text = fs::read_to_string(f).map_err(|e| CorpusError::Io { path: label.clone(), source: e })?;
            CorpusEntry::parse(&text, &label)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_headers_and_continuations() {
        let e = CorpusEntry::parse(
            "-- K\nname: k\nlevel: st\ntype: #a -> #b\n  -> #a\nterm: \\x.\\y.x -- const\nexpect: realized\n",
            "k.rlz",
        )
        .unwrap();
        assert_eq!(e.name, "k");
        assert_eq!(print_type(&e.ty), "#a -> #b -> #a");
        assert!(e.run(1000).ok);
    }

    #[test]
    fn rejects_bad_headers() {
        for bad in ["name: k\nlevel: st\ntype: #a\nterm: x\nexpect: maybe\n", "name: k\nlevel: st\nterm: x\nexpect: stuck\n", "name k\n"] {
            assert!(CorpusEntry::parse(bad, "bad").is_err(), "{bad}");
        }
    }

    #[test]
    fn correctness_keeps_type_variables() {
        let e = CorpusEntry::parse("name: g\nlevel: f\ntype: a\nop: correctness\nexpect: stuck\n", "g").unwrap();
        let o = e.run(100);
        assert!(o.ok, "{o}");
    }
}
