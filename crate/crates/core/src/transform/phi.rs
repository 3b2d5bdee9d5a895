//! Input relations: which inputs an attacker can tell apart.
//!
//! Two inputs are related when they agree on all public variables and
//! public memory cells and both satisfy the constraints. Every other input
//! location is secret.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::lang::{eval, expr_to_string, parse_expr, Expr, Ident, Int, ParseError, Value};
use crate::semantics::Input;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PhiError {
    #[error("invalid relation file: {0}")]
    Json(String),
    #[error("constraint `{src}`: {err}")]
    Constraint { src: String, err: ParseError },
    #[error("memory range [{0}, {1}) is empty or negative")]
    BadRange(i64, i64),
    #[error("domain of `{0}` is empty")]
    BadDomain(String),
}

#[derive(Serialize, Deserialize)]
struct PhiRepr {
    #[serde(default)]
    public_vars: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    secret_vars: Vec<String>,
    #[serde(default)]
    public_mem: Vec<[i64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    secret_mem: Vec<[i64; 2]>,
    #[serde(default)]
    constraints: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    domains: BTreeMap<String, [i64; 2]>,
}

/// A relation on program inputs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PhiSpec {
    pub public_vars: BTreeSet<Ident>,
    /// Secret variables beyond those inferred from the program.
    pub secret_vars: BTreeSet<Ident>,
    /// Public memory as half-open ranges.
    pub public_mem: Vec<(i64, i64)>,
    /// Secret memory as half-open ranges.
    pub secret_mem: Vec<(i64, i64)>,
    /// Boolean expressions over input variables that both inputs satisfy.
    pub constraints: Vec<Expr>,
    /// Per-variable value ranges (inclusive) used when enumerating inputs.
    pub domains: BTreeMap<Ident, (i64, i64)>,
}

fn cells(ranges: &[(i64, i64)]) -> Vec<Int> {
    let mut out: BTreeSet<i64> = BTreeSet::new();
    for &(lo, hi) in ranges {
        out.extend(lo..hi);
    }
    out.into_iter().map(Int::small).collect()
}

impl PhiSpec {
    pub fn from_json(s: &str) -> Result<PhiSpec, PhiError> {
        let r: PhiRepr = serde_json::from_str(s).map_err(|e| PhiError::Json(e.to_string()))?;
        let mut constraints = Vec::new();
        for c in &r.constraints {
            constraints.push(parse_expr(c).map_err(|err| PhiError::Constraint { src: c.clone(), err })?);
        }
        for [lo, hi] in r.public_mem.iter().chain(&r.secret_mem) {
            if *lo < 0 || hi < lo {
                return Err(PhiError::BadRange(*lo, *hi));
            }
        }
        for (x, [lo, hi]) in &r.domains {
            if hi < lo {
                return Err(PhiError::BadDomain(x.clone()));
            }
        }
        Ok(PhiSpec {
            public_vars: r.public_vars.into_iter().map(Ident::from).collect(),
            secret_vars: r.secret_vars.into_iter().map(Ident::from).collect(),
            public_mem: r.public_mem.iter().map(|[a, b]| (*a, *b)).collect(),
            secret_mem: r.secret_mem.iter().map(|[a, b]| (*a, *b)).collect(),
            constraints,
            domains: r.domains.into_iter().map(|(k, [a, b])| (Ident::from(k), (a, b))).collect(),
        })
    }

    pub fn to_json(&self) -> String {
        let r = PhiRepr {
            public_vars: self.public_vars.iter().map(|x| x.to_string()).collect(),
            secret_vars: self.secret_vars.iter().map(|x| x.to_string()).collect(),
            public_mem: self.public_mem.iter().map(|&(a, b)| [a, b]).collect(),
            secret_mem: self.secret_mem.iter().map(|&(a, b)| [a, b]).collect(),
            constraints: self.constraints.iter().map(expr_to_string).collect(),
            domains: self.domains.iter().map(|(k, &(a, b))| (k.to_string(), [a, b])).collect(),
        };
        serde_json::to_string_pretty(&r).expect("relation serializes")
    }

    /// A relation with the given public variables and nothing else.
    pub fn public(vars: &[&str]) -> PhiSpec {
        PhiSpec {
            public_vars: vars.iter().map(|x| Ident::new(x)).collect(),
            ..PhiSpec::default()
        }
    }

    pub fn public_cells(&self) -> Vec<Int> {
        cells(&self.public_mem)
    }

    /// Secret memory cells, excluding any that are also public.
    pub fn secret_cells(&self) -> Vec<Int> {
        let public: BTreeSet<Int> = self.public_cells().into_iter().collect();
        cells(&self.secret_mem).into_iter().filter(|c| !public.contains(c)).collect()
    }

    /// Whether `input` satisfies every constraint. Constraints that fail to
    /// evaluate to a boolean count as unsatisfied.
    pub fn satisfies(&self, input: &Input) -> bool {
        self.constraints
            .iter()
            .all(|c| matches!(eval(c, &input.vars), Ok(Value::Bool(true))))
    }

    /// Whether two inputs are related.
    pub fn related(&self, a: &Input, b: &Input) -> bool {
        self.public_vars.iter().all(|x| a.vars.get(x) == b.vars.get(x))
            && self.public_cells().iter().all(|c| a.mem.read(c) == b.mem.read(c))
            && self.satisfies(a)
            && self.satisfies(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let src = r#"{"public_vars":["n"],"public_mem":[[0,2]],"secret_mem":[[2,4]],"constraints":["n < 3"],"domains":{"n":[0,5]}}"#;
        let phi = PhiSpec::from_json(src).unwrap();
        assert_eq!(phi.public_cells(), [Int::small(0), Int::small(1)]);
        assert_eq!(phi.secret_cells(), [Int::small(2), Int::small(3)]);
        assert_eq!(PhiSpec::from_json(&phi.to_json()).unwrap(), phi);
        assert!(PhiSpec::from_json(r#"{"constraints":["n <"]}"#).is_err());
        assert!(PhiSpec::from_json(r#"{"public_mem":[[3,1]]}"#).is_err());
    }

    #[test]
    fn relatedness() {
        let phi = PhiSpec::from_json(r#"{"public_vars":["n"],"public_mem":[[0,1]],"constraints":["s < 5"]}"#).unwrap();
        let mk = |n: i64, s: i64, m0: i64| {
            let mut i = Input::default();
            i.vars.set("n".into(), Value::int(n));
            i.vars.set("s".into(), Value::int(s));
            i.mem.write(Int::ZERO, Value::int(m0));
            i
        };
        assert!(phi.related(&mk(1, 2, 0), &mk(1, 4, 0)));
        assert!(!phi.related(&mk(1, 2, 0), &mk(2, 2, 0)));
        assert!(!phi.related(&mk(1, 2, 0), &mk(1, 2, 1)));
        assert!(!phi.related(&mk(1, 2, 0), &mk(1, 7, 0)));
    }
}
