//! Operational semantics: the speculative semantics of source programs and
//! the sequential semantics of target programs, with pluggable leakage
//! models.

pub mod model;
pub mod seq;
pub mod spec;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::lang::{Cmd, Int, Memory, Value, VarMap};

pub use model::LeakageModel;
pub use seq::{run_seq, run_target, SeqObserver};
pub use spec::run_spec;

/// Default step budget for a single run.
pub const DEFAULT_FUEL: u64 = 100_000;

/// An attacker directive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Directive {
    /// Take the given branch regardless of the condition.
    Force(bool),
    /// Read the `n`-th most recent write of the loaded cell.
    Load(u32),
}

/// The two directive shapes; a run that stops for lack of a directive
/// records which one it wanted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DirectiveKind {
    Force,
    Load,
}

impl Directive {
    pub fn kind(self) -> DirectiveKind {
        match self {
            Directive::Force(_) => DirectiveKind::Force,
            Directive::Load(_) => DirectiveKind::Load,
        }
    }

    /// The encoding of the directive as an element of the `dir` list.
    pub fn to_value(self) -> Value {
        match self {
            Directive::Force(b) => Value::Bool(b),
            Directive::Load(n) => Value::int(n as i64),
        }
    }
}

impl fmt::Display for Directive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Directive::Force(true) => f.write_str("T"),
            Directive::Force(false) => f.write_str("F"),
            Directive::Load(n) => write!(f, "L{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid directive string at position {pos}: {message}")]
pub struct DirectiveParseError {
    pub pos: usize,
    pub message: String,
}

/// Parses a compact directive string such as `FTTL0` or `T,F,L12`.
/// Whitespace and commas are ignored.
pub fn parse_directives(s: &str) -> Result<Vec<Directive>, DirectiveParseError> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'T' => out.push(Directive::Force(true)),
            b'F' => out.push(Directive::Force(false)),
            b'L' => {
                let start = i + 1;
                let mut j = start;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                let n = s[start..j].parse::<u32>().map_err(|_| DirectiveParseError {
                    pos: i,
                    message: "`L` must be followed by a load index".into(),
                })?;
                out.push(Directive::Load(n));
                i = j;
                continue;
            }
            b',' | b' ' | b'\n' | b'\t' | b'\r' => {}
            c => {
                return Err(DirectiveParseError {
                    pos: i,
                    message: format!("unexpected character `{}`", c as char),
                })
            }
        }
        i += 1;
    }
    Ok(out)
}

pub fn directives_to_string(ds: &[Directive]) -> String {
    ds.iter().map(|d| d.to_string()).collect()
}

impl Serialize for Directive {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Directive {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Directive, D::Error> {
        let s = String::deserialize(d)?;
        match parse_directives(&s).map_err(serde::de::Error::custom)?.as_slice() {
            [one] => Ok(*one),
            _ => Err(serde::de::Error::custom(format!("expected one directive, found `{s}`"))),
        }
    }
}

/// The speculative-execution variant a source program is run under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Branch misprediction only.
    #[default]
    V1,
    /// Branch misprediction plus store-to-load forwarding over write histories.
    V4,
}

impl FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Variant, String> {
        match s {
            "v1" => Ok(Variant::V1),
            "v4" => Ok(Variant::V4),
            _ => Err(format!("unknown variant `{s}` (expected v1 or v4)")),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::V1 => "v1",
            Variant::V4 => "v4",
        })
    }
}

/// A single leakage observation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Observation {
    Branch(bool),
    Addr(Int),
    Op(Vec<Int>),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "k", rename_all = "lowercase")]
enum ObsRepr {
    Branch { b: bool },
    Addr { i: Int },
    Op { v: Vec<Int> },
}

impl Serialize for Observation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Observation::Branch(b) => ObsRepr::Branch { b: *b },
            Observation::Addr(i) => ObsRepr::Addr { i: i.clone() },
            Observation::Op(v) => ObsRepr::Op { v: v.clone() },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Observation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Observation, D::Error> {
        Ok(match ObsRepr::deserialize(d)? {
            ObsRepr::Branch { b } => Observation::Branch(b),
            ObsRepr::Addr { i } => Observation::Addr(i),
            ObsRepr::Op { v } => Observation::Op(v),
        })
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observation::Branch(b) => write!(f, "branch {b}"),
            Observation::Addr(i) => write!(f, "addr {i}"),
            Observation::Op(vs) => {
                f.write_str("op")?;
                for v in vs {
                    write!(f, " {v}")?;
                }
                Ok(())
            }
        }
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    /// Reached the end of the program.
    Completed,
    /// Source only: `init_msf` under misspeculation.
    FenceHalt,
    /// Target only: a failed `assert`.
    AssertError,
    /// Needed a directive that was not supplied.
    OutOfDirectives,
    /// Exhausted the step budget.
    OutOfFuel,
    /// Type error, division by zero, negative address or bad load index.
    RuntimeError,
}

impl Status {
    /// Final statuses: the trace is the whole observable behavior.
    pub fn is_complete(self) -> bool {
        matches!(self, Status::Completed | Status::FenceHalt | Status::AssertError)
    }
}

/// The outcome of a single run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunResult {
    pub status: Status,
    pub steps: u64,
    pub consumed: usize,
    pub trace: Vec<Observation>,
    pub vars: VarMap,
    pub mem: Memory,
    /// Misspeculation flag at the end of a source run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ms: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// For source runs that stopped on a missing directive: the shape needed.
    #[serde(skip)]
    pub wanted: Option<DirectiveKind>,
}

/// A program input: initial variables and memory.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Input {
    pub vars: VarMap,
    pub mem: Memory,
}

impl Input {
    pub fn new(vars: VarMap, mem: Memory) -> Input {
        Input { vars, mem }
    }
}

#[derive(Serialize, Deserialize)]
struct InputRepr {
    #[serde(default)]
    vars: BTreeMap<String, Value>,
    #[serde(default)]
    mem: BTreeMap<String, Value>,
}

fn parse_range(key: &str) -> Result<(Int, Int), String> {
    let bad = || format!("invalid memory key `{key}` (expected `n` or `lo..hi`)");
    match key.split_once("..") {
        Some((lo, hi)) => {
            let lo: Int = lo.trim().parse().map_err(|_| bad())?;
            let hi: Int = hi.trim().parse().map_err(|_| bad())?;
            Ok((lo, hi))
        }
        None => {
            let a: Int = key.trim().parse().map_err(|_| bad())?;
            let b = a.add(&Int::ONE);
            Ok((a, b))
        }
    }
}

impl Serialize for Input {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let repr = InputRepr {
            vars: self.vars.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            mem: BTreeMap::new(),
        };
        // Memory keys are emitted in numeric order, which a string-keyed map
        // would not preserve.
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(Some(2))?;
        m.serialize_entry("vars", &repr.vars)?;
        let cells: Vec<(String, Value)> = self
            .mem
            .current()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        m.serialize_entry("mem", &OrderedMap(&cells))?;
        m.end()
    }
}

struct OrderedMap<'a>(&'a [(String, Value)]);

impl Serialize for OrderedMap<'_> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(self.0.iter().map(|(k, v)| (k, v)))
    }
}

impl<'de> Deserialize<'de> for Input {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Input, D::Error> {
        let repr = InputRepr::deserialize(d)?;
        let vars = repr.vars.into_iter().map(|(k, v)| (k.into(), v)).collect();
        let mut mem = Memory::new();
        for (k, v) in repr.mem {
            let (lo, hi) = parse_range(&k).map_err(serde::de::Error::custom)?;
            if lo.is_negative() {
                return Err(serde::de::Error::custom(format!("negative address in `{k}`")));
            }
            let mut a = lo;
            while a < hi {
                mem.write(a.clone(), v.clone());
                a = a.add(&Int::ONE);
            }
        }
        Ok(Input { vars, mem })
    }
}

/// A continuation: a stack of (block, next index) frames.
#[derive(Debug, Clone)]
pub(crate) struct Cont<'p> {
    frames: Vec<(&'p [Cmd], usize)>,
}

impl<'p> Cont<'p> {
    pub(crate) fn new(body: &'p [Cmd]) -> Cont<'p> {
        Cont { frames: vec![(body, 0)] }
    }

    /// The next command to execute, discarding finished frames.
    pub(crate) fn current(&mut self) -> Option<&'p Cmd> {
        while let Some(&(block, i)) = self.frames.last() {
            if i < block.len() {
                return Some(&block[i]);
            }
            self.frames.pop();
        }
        None
    }

    /// Moves past the current command.
    pub(crate) fn advance(&mut self) {
        if let Some(f) = self.frames.last_mut() {
            f.1 += 1;
        }
    }

    /// Runs `block` before continuing with the current position.
    pub(crate) fn push(&mut self, block: &'p [Cmd]) {
        if !block.is_empty() {
            self.frames.push((block, 0));
        }
    }
}
