//! Leakage models: what an attacker learns from memory accesses and
//! arithmetic.

use std::fmt;
use std::str::FromStr;

use crate::lang::{Binop, Int, Value};

use super::Observation;

pub const DEFAULT_LINE_SIZE: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum LeakageModel {
    /// Branch conditions and full memory addresses.
    #[default]
    Baseline,
    /// Branch conditions and the cache line of each address.
    CacheLine { line: u64 },
    /// Baseline plus the operand magnitudes of divisions.
    VariableTime,
}

impl LeakageModel {
    pub fn cache_line() -> LeakageModel {
        LeakageModel::CacheLine { line: DEFAULT_LINE_SIZE }
    }

    /// The observable part of an address.
    pub fn laddr(&self, a: &Int) -> Int {
        match self {
            LeakageModel::CacheLine { line } => a
                .div_floor(&Int::small(*line as i64))
                .expect("line size is positive"),
            _ => a.clone(),
        }
    }

    /// The observation produced by evaluating `op` on `a` and `b`, if any.
    pub fn lop(&self, op: Binop, a: &Value, b: &Value) -> Option<Observation> {
        match (self, a, b) {
            (LeakageModel::VariableTime, Value::Int(a), Value::Int(b)) if op.is_variable_time() => {
                Some(Observation::Op(vec![a.log2_floor(), b.log2_floor()]))
            }
            _ => None,
        }
    }

    pub fn leaks_ops(&self) -> bool {
        matches!(self, LeakageModel::VariableTime)
    }
}

impl fmt::Display for LeakageModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LeakageModel::Baseline => f.write_str("baseline"),
            LeakageModel::CacheLine { line } if *line == DEFAULT_LINE_SIZE => f.write_str("cacheline"),
            LeakageModel::CacheLine { line } => write!(f, "cacheline:{line}"),
            LeakageModel::VariableTime => f.write_str("vartime"),
        }
    }
}

impl FromStr for LeakageModel {
    type Err = String;

    /// Accepts `baseline`, `cacheline`, `cacheline:<bytes>` and `vartime`.
    fn from_str(s: &str) -> Result<LeakageModel, String> {
        match s {
            "baseline" => Ok(LeakageModel::Baseline),
            "cacheline" => Ok(LeakageModel::cache_line()),
            "vartime" => Ok(LeakageModel::VariableTime),
            _ => match s.strip_prefix("cacheline:").map(str::parse::<u64>) {
                Some(Ok(line)) if line > 0 => Ok(LeakageModel::CacheLine { line }),
                _ => Err(format!(
                    "unknown leakage model `{s}` (expected baseline, cacheline[:N] or vartime)"
                )),
            },
        }
    }
}

impl serde::Serialize for LeakageModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for LeakageModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<LeakageModel, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cache_line_addresses() {
        let m = LeakageModel::cache_line();
        assert_eq!(m.laddr(&Int::small(63)), Int::ZERO);
        assert_eq!(m.laddr(&Int::small(64)), Int::ONE);
        assert_eq!(m.laddr(&Int::small(64 * 5 + 7)), Int::small(5));
        assert_eq!(LeakageModel::Baseline.laddr(&Int::small(70)), Int::small(70));
    }

    #[test]
    fn variable_time_division() {
        let m = LeakageModel::VariableTime;
        assert_eq!(
            m.lop(Binop::Div, &Value::int(9), &Value::int(0)),
            Some(Observation::Op(vec![Int::small(3), Int::ZERO]))
        );
        assert_eq!(m.lop(Binop::Add, &Value::int(9), &Value::int(2)), None);
        assert_eq!(LeakageModel::Baseline.lop(Binop::Div, &Value::int(9), &Value::int(2)), None);
    }

    #[test]
    fn parse_and_display() {
        for s in ["baseline", "cacheline", "cacheline:32", "vartime"] {
            assert_eq!(s.parse::<LeakageModel>().unwrap().to_string(), s);
        }
        assert!("cacheline:0".parse::<LeakageModel>().is_err());
    }
}
