//! Re-running a witness to show both traces side by side.

use serde::Serialize;

use crate::semantics::{Input, RunResult};

use super::verdict::{compare_runs, Comparison, Witness};

/// The two runs of a witness and where they diverge.
#[derive(Debug, Clone, Serialize)]
pub struct ReplayReport {
    pub r1: RunResult,
    pub r2: RunResult,
    /// First differing observation, if the traces do differ.
    pub divergence: Option<usize>,
    /// Whether the recorded divergence index was reproduced.
    pub reproduced: bool,
}

/// Replays `w` with `run`, which executes the program on an input and the
/// witness directives.
pub fn replay(w: &Witness, run: impl Fn(&Input) -> RunResult) -> ReplayReport {
    let r1 = run(&w.i1);
    let r2 = run(&w.i2);
    let divergence = match compare_runs(&r1, &r2) {
        Comparison::Diverge { at, .. } => Some(at),
        _ => None,
    };
    ReplayReport { reproduced: divergence == Some(w.divergence), r1, r2, divergence }
}
