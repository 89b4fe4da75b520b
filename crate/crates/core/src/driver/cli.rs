//! The `rlz` command line. `dispatch` does all the work and returns the exit
//! code with captured output, so tests can drive it without a process.
//!
//! Exit codes: 0 success, 1 negative verdict, 2 usage or parse error,
//! 3 fuel exhausted.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use super::corpus::*;
use super::gen::*;
use super::suite::*;
use crate::extract::{extract, ExtractError};
use crate::reduction::{Outcome, Reducer, Strategy};
use crate::syntax::*;
use crate::typecheck::check;
use crate::verify::*;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FUEL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "rlz", version, about = "Realizability checker for simple types, System F and F-omega")]
struct Cli {
    /// st, f or fw.
    #[arg(long, global = true, default_value = "st", value_parser = parse_level)]
    calculus: Level,
    /// Reduction steps allowed per run.
    #[arg(long, global = true, env = "RLZ_FUEL", default_value_t = DEFAULT_FUEL)]
    fuel: u64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    /// Write the reduction trace as JSON lines to this file.
    #[arg(long, global = true)]
    trace: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

fn parse_level(s: &str) -> Result<Level, String> {
    Level::from_tag(s).ok_or_else(|| format!("unknown calculus `{s}` (expected st, f or fw)"))
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum What {
    Term,
    Type,
    Kind,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    Wh,
    Lo,
    Random,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GenWhat {
    Typed,
    Metaterm,
    Type,
}

#[derive(Args, Debug)]
struct Judgment {
    #[arg(long = "type")]
    ty: String,
    #[arg(long)]
    term: String,
    /// Typing environment, e.g. "x : #a, f : #a -> #b".
    #[arg(long, default_value = "")]
    env: String,
    /// Kind declarations, e.g. "#p : Prop -> Prop, a : Prop".
    #[arg(long, default_value = "")]
    kinds: String,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Parse and pretty-print.
    Parse {
        text: String,
        #[arg(long = "as", value_enum, default_value = "term")]
        what: What,
    },
    /// Reduce a metaterm.
    Reduce {
        term: String,
        #[arg(long, value_enum, default_value = "wh")]
        strategy: StrategyArg,
    },
    /// Run the verifier for a type on a term.
    Verify {
        #[command(flatten)]
        j: Judgment,
        /// Replace free type variables by fresh eigenvariables.
        #[arg(long)]
        close_tvars: bool,
    },
    /// Type-check a term.
    Check {
        #[command(flatten)]
        j: Judgment,
    },
    /// Extract a typing derivation from a realizer.
    Extract {
        #[command(flatten)]
        j: Judgment,
    },
    /// Generate a random instance.
    Gen {
        #[arg(value_enum, default_value = "typed")]
        what: GenWhat,
        #[arg(long, default_value_t = 4)]
        depth: usize,
    },
    /// Run a property suite.
    Suite {
        name: String,
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 4)]
        depth: usize,
    },
    /// Re-check corpus entries (the shipped corpus by default).
    Corpus { paths: Vec<PathBuf> },
}

/// Exit code and captured output of one invocation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Ctx {
    level: Level,
    fuel: u64,
    seed: u64,
    json: bool,
    trace: Option<PathBuf>,
    out: CliOutput,
}

impl Ctx {
    fn say(&mut self, s: impl AsRef<str>) {
        self.out.stdout.push_str(s.as_ref());
        self.out.stdout.push('\n');
    }

    fn fail(&mut self, code: i32, msg: impl AsRef<str>) {
        self.out.code = code;
        let _ = writeln!(self.out.stderr, "rlz: {}", msg.as_ref());
    }

    fn write_trace(&mut self, lines: &str) {
        if let Some(p) = self.trace.clone() {
            if let Err(e) = std::fs::write(&p, lines) {
                self.fail(EXIT_USAGE, format!("{}: {e}", p.display()));
            }
        }
    }
}

/// Runs the command line `argv` (including the program name).
pub fn dispatch<I, T>(argv: I) -> CliOutput
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CliOutput { code: EXIT_USAGE, stdout: String::new(), stderr: text }
            } else {
                CliOutput { code: EXIT_OK, stdout: text, stderr: String::new() }
            };
        }
    };
    let mut cx = Ctx {
        level: cli.calculus,
        fuel: cli.fuel,
        seed: cli.seed,
        json: cli.json,
        trace: cli.trace,
        out: CliOutput::default(),
    };
    match cli.cmd {
        Cmd::Parse { text, what } => parse_cmd(&mut cx, &text, what),
        Cmd::Reduce { term, strategy } => reduce_cmd(&mut cx, &term, strategy),
        Cmd::Verify { j, close_tvars } => {
            if let Some(j) = judgment(&mut cx, &j) {
                verify_cmd(&mut cx, j, close_tvars)
            }
        }
        Cmd::Check { j } => {
            if let Some(j) = judgment(&mut cx, &j) {
                check_cmd(&mut cx, j)
            }
        }
        Cmd::Extract { j } => {
            if let Some(j) = judgment(&mut cx, &j) {
                extract_cmd(&mut cx, j)
            }
        }
        Cmd::Gen { what, depth } => gen_cmd(&mut cx, what, depth),
        Cmd::Suite { name, cases, depth } => suite_cmd(&mut cx, &name, cases, depth),
        Cmd::Corpus { paths } => corpus_cmd(&mut cx, paths),
    }
    cx.out
}

fn parse_cmd(cx: &mut Ctx, text: &str, what: What) {
    let printed = match what {
        What::Term => parse_term(text, cx.level).map(|t| print_term(&t)),
        What::Type => parse_type(text, cx.level).map(|t| print_type(&t)),
        What::Kind => parse_kind(text, cx.level).map(|k| print_kind(&k)),
    };
    match printed {
        Ok(p) if cx.json => cx.say(json!({"parsed": p}).to_string()),
        Ok(p) => cx.say(p),
        Err(e) => cx.fail(EXIT_USAGE, e.to_string()),
    }
}

fn reduce_cmd(cx: &mut Ctx, text: &str, strategy: StrategyArg) {
    let m = match parse_term(text, cx.level) {
        Ok(m) => strip_annotations(&m),
        Err(e) => return cx.fail(EXIT_USAGE, e.to_string()),
    };
    let strategy = match strategy {
        StrategyArg::Wh => Strategy::WeakHead,
        StrategyArg::Lo => Strategy::LeftmostOutermost,
        StrategyArg::Random => Strategy::Random(cx.seed),
    };
    let mut ctx = KindCtx::new();
    ctx.declare_missing(&FreeNames::of_term(&m));
    let record = cx.json || cx.trace.is_some();
    let tr = Reducer::new(cx.level, ctx).recording(record).reduce(&m, strategy, cx.fuel);
    let lines = tr.to_json_lines();
    cx.write_trace(&lines);
    if cx.json {
        cx.out.stdout.push_str(&lines);
    } else {
        cx.say(print_term(&tr.final_term));
        cx.say(format!("{} after {} steps", tr.outcome.as_str(), tr.step_count));
    }
    if tr.outcome == Outcome::FuelExhausted {
        cx.fail(EXIT_FUEL, format!("fuel exhausted after {} steps", tr.step_count));
    }
}

struct ParsedJudgment {
    ctx: KindCtx,
    env: TypeEnv,
    ty: Ty,
    term: Tm,
}

fn judgment(cx: &mut Ctx, j: &Judgment) -> Option<ParsedJudgment> {
    let level = cx.level;
    let parsed = (|| {
        let env = TypeEnv::from_entries(parse_env(&j.env, level)?);
        let mut ctx = KindCtx::new();
        for (is_eig, n, k) in parse_kind_decls(&j.kinds)? {
            ctx = if is_eig { ctx.with_eig(&n, k) } else { ctx.with_tyvar(&n, k) };
        }
        let ty = parse_type(&j.ty, level)?;
        let term = parse_term(&j.term, level)?;
        let mut names = env.free_names();
        names.add_type(&ty);
        names.add_term(&term);
        ctx.declare_missing(&names);
        Ok::<_, SyntaxError>(ParsedJudgment { ctx, env, ty, term })
    })();
    match parsed {
        Ok(p) => Some(p),
        Err(e) => {
            cx.fail(EXIT_USAGE, e.to_string());
            None
        }
    }
}

fn verify_cmd(cx: &mut Ctx, j: ParsedJudgment, close_tvars: bool) {
    let record = cx.json || cx.trace.is_some();
    let opts = VerifyOptions { close_free_tvars: close_tvars, record };
    let v = match realizes_with(cx.level, &j.ctx, &j.env, &j.ty, &j.term, cx.fuel, opts) {
        Ok(v) => v,
        Err(e) => return cx.fail(EXIT_USAGE, e.to_string()),
    };
    let mut lines = v.trace().to_json_lines();
    lines.push_str(&v.to_json().to_string());
    lines.push('\n');
    cx.write_trace(&lines);
    if cx.json {
        cx.out.stdout.push_str(&lines);
    } else {
        cx.say(format!("{} ({} steps)", v.tag(), v.trace().step_count));
        if let Verdict::Stuck { final_term, .. } = &v {
            cx.say(format!("stuck at: {}", print_term(final_term)));
        }
    }
    match v {
        Verdict::Realized(_) => {}
        Verdict::Stuck { .. } => cx.out.code = EXIT_NEGATIVE,
        Verdict::FuelExhausted(_) => cx.fail(EXIT_FUEL, "fuel exhausted"),
    }
}

fn check_cmd(cx: &mut Ctx, j: ParsedJudgment) {
    match check(cx.level, &j.ctx, &j.env, &j.term, &j.ty) {
        Ok(d) if cx.json => cx.say(d.to_json().to_string()),
        Ok(_) => cx.say("ok"),
        Err(e) => {
            if cx.json {
                cx.say(json!({"error": e.to_string(), "path": e.path}).to_string());
            }
            cx.fail(EXIT_NEGATIVE, e.to_string())
        }
    }
}

fn extract_cmd(cx: &mut Ctx, j: ParsedJudgment) {
    match extract(cx.level, &j.ctx, &j.env, &j.ty, &j.term, cx.fuel) {
        Ok(x) if cx.json => cx.say(x.to_json().to_string()),
        Ok(x) => {
            cx.say(format!("normal form: {}", print_term(&x.normal_form)));
            cx.say(format!("proof size: {}", x.proof_size));
            cx.say(format!("derivation: {} nodes", x.derivation.node_count()));
        }
        Err(ExtractError::FuelExhausted) => cx.fail(EXIT_FUEL, "fuel exhausted"),
        Err(e @ (ExtractError::NotRealizer(_) | ExtractError::NotPure | ExtractError::NotNormal)) => {
            cx.fail(EXIT_NEGATIVE, e.to_string())
        }
        Err(e) => cx.fail(EXIT_USAGE, e.to_string()),
    }
}

fn gen_cmd(cx: &mut Ctx, what: GenWhat, depth: usize) {
    let cfg = GenConfig { fuel: cx.fuel, ..GenConfig::new(cx.level, cx.seed).with_depth(depth) };
    match what {
        GenWhat::Typed => match gen_typed_term(&cfg) {
            Ok(j) if cx.json => cx.say(
                json!({
                    "kindctx": j.ctx.to_string(),
                    "env": j.env.to_string(),
                    "term": print_term(&j.term),
                    "type": print_type(&j.ty),
                })
                .to_string(),
            ),
            Ok(j) => cx.say(format!("{}; {} |- {} : {}", j.ctx, j.env, print_term(&j.term), print_type(&j.ty))),
            Err(e) => cx.fail(EXIT_NEGATIVE, e.to_string()),
        },
        GenWhat::Metaterm => {
            let m = print_term(&gen_metaterm(&cfg));
            cx.say(if cx.json { json!({"term": m}).to_string() } else { m })
        }
        GenWhat::Type => {
            let (ctx, a) = gen_closed_type(&cfg);
            if cx.json {
                cx.say(json!({"kindctx": ctx.to_string(), "type": print_type(&a)}).to_string())
            } else {
                cx.say(format!("{ctx} |- {}", print_type(&a)))
            }
        }
    }
}

fn suite_cmd(cx: &mut Ctx, name: &str, cases: usize, depth: usize) {
    let cfg = GenConfig { fuel: cx.fuel, ..GenConfig::new(cx.level, cx.seed).with_depth(depth) };
    match run_suite(name, &cfg, cases) {
        Ok(r) => {
            cx.say(if cx.json { r.to_json().to_string() } else { r.to_string() });
            if !r.ok() {
                cx.out.code = EXIT_NEGATIVE;
            }
        }
        Err(e) => cx.fail(EXIT_USAGE, e.to_string()),
    }
}

fn corpus_cmd(cx: &mut Ctx, paths: Vec<PathBuf>) {
    let paths = if paths.is_empty() { vec![default_corpus_dir()] } else { paths };
    let entries = match load_corpus(&paths) {
        Ok(es) => es,
        Err(e) => return cx.fail(EXIT_USAGE, e.to_string()),
    };
    let mut failed = 0;
    for e in &entries {
        let o = e.run(cx.fuel);
        failed += usize::from(!o.ok);
        cx.say(if cx.json { o.to_json().to_string() } else { o.to_string() });
    }
    if !cx.json {
        cx.say(format!("{} entries, {failed} failed", entries.len()));
    }
    if failed > 0 {
        cx.out.code = EXIT_NEGATIVE;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> CliOutput {
        dispatch(std::iter::once("rlz").chain(args.iter().copied()))
    }

    #[test]
    fn exit_codes() {
        let k = run(&["verify", "--calculus", "st", "--type", "#a -> #b -> #a", "--term", "\\x.\\y.x"]);
        assert_eq!(k.code, 0);
        assert!(k.stdout.contains("realized"));
        let omega = run(&["reduce", "--calculus", "st", "--strategy", "wh", "--fuel", "5", "(\\x. x x)(\\x. x x)"]);
        assert_eq!(omega.code, 3);
        let id = run(&["verify", "--calculus", "st", "--type", "#a", "--term", "\\x.x"]);
        assert_eq!(id.code, 1);
        assert!(id.stdout.contains("stuck at:"), "{}", id.stdout);
        assert_eq!(run(&["parse", "(\\x."]).code, 2);
        assert_eq!(run(&["frobnicate"]).code, 2);
        assert_eq!(run(&["--help"]).code, 0);
    }
}
