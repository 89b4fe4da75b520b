//! Rewrite rules of the three metacalculi, weak-head and full reduction
//! strategies with fuel and traces, definitional expansion of simply-typed
//! generators and verifiers, and simultaneous reduction.

mod engine;
mod machine;
mod parallel;
mod st;

use std::fmt;
use std::str::FromStr;

use serde_json::{json, Value};
use thiserror::Error;

use crate::syntax::*;

pub use engine::*;
pub use parallel::*;
pub use st::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleTag {
    Beta,
    TyBeta,
    GuardStar,
    VerifEig,
    GenImp,
    VerifImp,
    GenAll,
    VerifAll,
    FreshDrop,
    StExpand,
}

impl RuleTag {
    pub const ALL: [RuleTag; 10] = [
        RuleTag::Beta,
        RuleTag::TyBeta,
        RuleTag::GuardStar,
        RuleTag::VerifEig,
        RuleTag::GenImp,
        RuleTag::VerifImp,
        RuleTag::GenAll,
        RuleTag::VerifAll,
        RuleTag::FreshDrop,
        RuleTag::StExpand,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleTag::Beta => "Beta",
            RuleTag::TyBeta => "TyBeta",
            RuleTag::GuardStar => "GuardStar",
            RuleTag::VerifEig => "VerifEig",
            RuleTag::GenImp => "GenImp",
            RuleTag::VerifImp => "VerifImp",
            RuleTag::GenAll => "GenAll",
            RuleTag::VerifAll => "VerifAll",
            RuleTag::FreshDrop => "FreshDrop",
            RuleTag::StExpand => "StExpand",
        }
    }

    /// Whether the rule belongs to the rewrite system of `level`.
    pub fn available_at(self, level: Level) -> bool {
        match self {
            RuleTag::Beta | RuleTag::GuardStar | RuleTag::VerifEig => true,
            RuleTag::StExpand => false,
            _ => level != Level::ST,
        }
    }
}

impl fmt::Display for RuleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RuleTag {
    type Err = String;
    fn from_str(s: &str) -> Result<RuleTag, String> {
        RuleTag::ALL.into_iter().find(|r| r.as_str() == s).ok_or_else(|| format!("unknown rule `{s}`"))
    }
}

/// Path from the root to a subterm, as child indices. Children are numbered
/// left to right: an application has function 0 and argument 1, a guard has
/// condition 0 and body 1, and every other constructor with a metaterm child
/// (abstractions, type application, verifier, `nu`) has it at 0.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position(pub Vec<u8>);

impl Position {
    pub fn root() -> Position {
        Position(Vec::new())
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, i: u8) -> Position {
        let mut v = self.0.clone();
        v.push(i);
        Position(v)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("/");
        }
        for i in &self.0 {
            write!(f, "/{i}")?;
        }
        Ok(())
    }
}

impl FromStr for Position {
    type Err = String;
    fn from_str(s: &str) -> Result<Position, String> {
        let rest = s.strip_prefix('/').ok_or_else(|| format!("position `{s}` must start with `/`"))?;
        if rest.is_empty() {
            return Ok(Position::root());
        }
        rest.split('/')
            .map(|p| p.parse::<u8>().map_err(|_| format!("bad position component `{p}`")))
            .collect::<Result<Vec<_>, _>>()
            .map(Position)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub rule: RuleTag,
    pub position: Position,
    pub before: Tm,
    pub after: Tm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Normal,
    StarReached,
    FuelExhausted,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Normal => "Normal",
            Outcome::StarReached => "StarReached",
            Outcome::FuelExhausted => "FuelExhausted",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    WeakHead,
    LeftmostOutermost,
    Random(u64),
}

impl Strategy {
    pub fn tag(self) -> &'static str {
        match self {
            Strategy::WeakHead => "wh",
            Strategy::LeftmostOutermost => "lo",
            Strategy::Random(_) => "random",
        }
    }
}

/// A reduction run. `steps` is filled only when recording was requested;
/// `step_count` is always exact.
#[derive(Clone, Debug)]
pub struct Trace {
    pub level: Level,
    pub strategy: Strategy,
    pub fuel: u64,
    pub initial: Tm,
    pub steps: Vec<Step>,
    pub step_count: u64,
    pub outcome: Outcome,
    pub final_term: Tm,
}

impl Trace {
    /// Consecutive recorded steps chain from `initial` to `final_term`.
    pub fn is_chained(&self) -> bool {
        let mut cur = &self.initial;
        for s in &self.steps {
            if s.before != *cur {
                return false;
            }
            cur = &s.after;
        }
        *cur == self.final_term
    }

    pub fn header_json(&self) -> Value {
        let mut h = json!({"level": self.level.tag(), "strategy": self.strategy.tag(), "fuel": self.fuel});
        if let Strategy::Random(seed) = self.strategy {
            h["seed"] = json!(seed);
        }
        h
    }

    pub fn step_json(i: usize, s: &Step) -> Value {
        json!({"step": i, "rule": s.rule.as_str(), "pos": s.position.to_string(), "term": print_term(&s.after)})
    }

    /// The JSON-lines rendering: header, one line per recorded step, outcome.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header_json().to_string());
        out.push('\n');
        for (i, s) in self.steps.iter().enumerate() {
            out.push_str(&Trace::step_json(i + 1, s).to_string());
            out.push('\n');
        }
        out.push_str(&json!({"outcome": self.outcome.as_str()}).to_string());
        out.push('\n');
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReductionError {
    #[error("not available at level {level}: {what}")]
    Level { level: Level, what: String },
}
