//! Verdicts, witnesses and trace comparison.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::semantics::{Directive, Input, Observation, RunResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VerdictKind {
    Violation,
    /// No violation anywhere in the (bounded) space, checked completely.
    NoViolationExhaustive,
    /// No violation among the sampled trials.
    NoViolationBounded,
    /// No run pair could be compared conclusively.
    Inconclusive,
}

impl VerdictKind {
    pub fn is_violation(self) -> bool {
        self == VerdictKind::Violation
    }

    pub fn is_no_violation(self) -> bool {
        matches!(self, VerdictKind::NoViolationExhaustive | VerdictKind::NoViolationBounded)
    }
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Two related inputs and a directive list whose traces differ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub i1: Input,
    pub i2: Input,
    pub dirs: Vec<Directive>,
    /// Index of the first observation at which the traces differ.
    pub divergence: usize,
    /// Whether at least one of the two runs was cut short, so that the
    /// difference shows in a common prefix rather than in full traces.
    #[serde(default)]
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub result: VerdictKind,
    pub trials: u64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl Verdict {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("verdicts serialize")
    }
}

/// The outcome of comparing two runs on related inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    /// Both runs are complete with equal traces.
    Agree,
    /// The traces differ at the given index.
    Diverge { at: usize, partial: bool },
    /// No difference so far, but at least one run was cut short.
    Undecided,
}

/// Compares two traces. A complete trace is final: any other trace that is
/// longer, or complete and shorter, differs from it.
pub fn compare_traces(t1: &[Observation], c1: bool, t2: &[Observation], c2: bool) -> Comparison {
    let n = t1.len().min(t2.len());
    if let Some(at) = (0..n).find(|&k| t1[k] != t2[k]) {
        return Comparison::Diverge { at, partial: !(c1 && c2) };
    }
    let longer_than_final = (c1 && t2.len() > t1.len()) || (c2 && t1.len() > t2.len());
    if longer_than_final || (c1 && c2 && t1.len() != t2.len()) {
        return Comparison::Diverge { at: n, partial: !(c1 && c2) };
    }
    if c1 && c2 {
        Comparison::Agree
    } else {
        Comparison::Undecided
    }
}

pub fn compare_runs(r1: &RunResult, r2: &RunResult) -> Comparison {
    compare_traces(&r1.trace, r1.status.is_complete(), &r2.trace, r2.status.is_complete())
}

#[cfg(test)]
mod tests {
    use super::*;
    use Observation::Branch;

    #[test]
    fn comparison_rules() {
        let a = [Branch(true), Branch(false)];
        let b = [Branch(true), Branch(true)];
        assert_eq!(compare_traces(&a, true, &a, true), Comparison::Agree);
        assert_eq!(compare_traces(&a, true, &b, false), Comparison::Diverge { at: 1, partial: true });
        assert_eq!(compare_traces(&a, true, &a[..1], true), Comparison::Diverge { at: 1, partial: false });
        assert_eq!(compare_traces(&a, false, &a[..1], false), Comparison::Undecided);
        assert_eq!(compare_traces(&a[..1], true, &a, false), Comparison::Diverge { at: 1, partial: true });
        assert_eq!(compare_traces(&a, true, &a[..1], false), Comparison::Undecided);
    }

    #[test]
    fn verdict_json() {
        let v = Verdict { result: VerdictKind::NoViolationBounded, trials: 3, seed: 42, witness: None };
        assert_eq!(v.to_json(), r#"{"result":"NoViolationBounded","trials":3,"seed":42}"#);
    }
}
