//! Checker configuration.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::semantics::DEFAULT_FUEL;

/// How directive lists are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Each force directive is `true` with probability `p`.
    Random { p: f64 },
    AllTrue,
    AllFalse,
    /// The first `k` force directives are `false`, the rest `true`.
    FlipFirstK { k: usize },
    /// Every list up to the length bound, grouped by public input; falls
    /// back to random sampling when the space exceeds `max_space` runs.
    Enumerate,
}

impl Default for Strategy {
    fn default() -> Strategy {
        Strategy::Enumerate
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Random { p } => write!(f, "random:{p}"),
            Strategy::AllTrue => f.write_str("all_true"),
            Strategy::AllFalse => f.write_str("all_false"),
            Strategy::FlipFirstK { k } => write!(f, "flip_first:{k}"),
            Strategy::Enumerate => f.write_str("enumerate"),
        }
    }
}

impl FromStr for Strategy {
    type Err = String;

    /// Accepts `random`, `random:<p>`, `all_true`, `all_false`,
    /// `flip_first:<k>` and `enumerate`.
    fn from_str(s: &str) -> Result<Strategy, String> {
        let bad = || format!("unknown strategy `{s}`");
        match s {
            "random" => Ok(Strategy::Random { p: 0.5 }),
            "all_true" => Ok(Strategy::AllTrue),
            "all_false" => Ok(Strategy::AllFalse),
            "enumerate" => Ok(Strategy::Enumerate),
            _ => {
                if let Some(p) = s.strip_prefix("random:") {
                    let p: f64 = p.parse().map_err(|_| bad())?;
                    if !(0.0..=1.0).contains(&p) {
                        return Err(bad());
                    }
                    Ok(Strategy::Random { p })
                } else if let Some(k) = s.strip_prefix("flip_first:") {
                    Ok(Strategy::FlipFirstK { k: k.parse().map_err(|_| bad())? })
                } else {
                    Err(bad())
                }
            }
        }
    }
}

/// Parameters shared by input generation, program generation and the
/// checkers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    /// Inclusive range of input values for variables and memory cells
    /// without an explicit domain.
    pub domain: (i64, i64),
    /// Size of the address space used by generated programs.
    pub mem_size: i64,
    /// Maximum directive list length.
    pub max_directives: usize,
    /// Number of sampled trials for random strategies.
    pub trials: u64,
    pub seed: u64,
    pub strategy: Strategy,
    /// Largest number of runs an exhaustive search may take.
    pub max_space: u64,
    /// Load directives range over `L0 .. L{max_load_index}`.
    pub max_load_index: u32,
    pub fuel: u64,
}

impl Default for GenConfig {
    fn default() -> GenConfig {
        GenConfig {
            domain: (0, 3),
            mem_size: 16,
            max_directives: 6,
            trials: 10_000,
            seed: 42,
            strategy: Strategy::Enumerate,
            max_space: 200_000,
            max_load_index: 1,
            fuel: DEFAULT_FUEL,
        }
    }
}
