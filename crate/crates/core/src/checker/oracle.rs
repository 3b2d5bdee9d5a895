//! A brute-force reference for the speculative checker. It shares only
//! the interpreter with [`check_sct`](super::check_sct): every input in the
//! space is materialized, every related pair is formed by checking the
//! relation directly, and every directive list up to the bound is tried.

use crate::lang::SourceProgram;
use crate::semantics::{run_spec, Input, LeakageModel, Observation, RunResult, Variant};
use crate::transform::PhiSpec;

use super::config::GenConfig;
use super::inputs::InputSpace;
use super::search::all_directive_lists;
use super::verdict::{Verdict, VerdictKind, Witness};
use super::CheckError;

/// Where two runs first disagree, if they do. A finished trace admits no
/// continuation, so a trace that runs past it (or finishes at another
/// length) disagrees with it at the shorter length.
fn first_difference(a: &RunResult, b: &RunResult) -> Option<(usize, bool)> {
    let (ta, tb): (&[Observation], &[Observation]) = (&a.trace, &b.trace);
    let (fa, fb) = (a.status.is_complete(), b.status.is_complete());
    let partial = !fa || !fb;
    for (k, (x, y)) in ta.iter().zip(tb).enumerate() {
        if x != y {
            return Some((k, partial));
        }
    }
    let short = ta.len().min(tb.len());
    let a_over = fb && ta.len() > tb.len();
    let b_over = fa && tb.len() > ta.len();
    if a_over || b_over {
        return Some((short, partial));
    }
    None
}

/// Exhaustively checks speculative constant-time over the whole bounded
/// space. Fails with [`CheckError::SpaceTooLarge`] when the number of runs
/// exceeds `cfg.max_space`.
pub fn oracle_sct(
    p: &SourceProgram,
    phi: &PhiSpec,
    model: &LeakageModel,
    variant: Variant,
    cfg: &GenConfig,
) -> Result<Verdict, CheckError> {
    let space = InputSpace::new(p.body(), phi, cfg);
    let total = space.public_size().saturating_mul(space.secret_size());
    let lists = all_directive_lists(variant, cfg.max_load_index, cfg.max_directives);
    let runs = total.saturating_mul(lists.len() as u128);
    if runs > cfg.max_space as u128 {
        return Err(CheckError::SpaceTooLarge { runs, cap: cfg.max_space });
    }
    let mut inputs: Vec<Input> = Vec::new();
    for pi in 0..space.public_size() {
        for si in 0..space.secret_size() {
            let i = space.input_at(pi, si);
            if phi.satisfies(&i) {
                inputs.push(i);
            }
        }
    }
    if inputs.is_empty() {
        return Err(CheckError::UnsatisfiablePhi);
    }
    let mut pairs = Vec::new();
    for a in 0..inputs.len() {
        for b in a + 1..inputs.len() {
            if phi.related(&inputs[a], &inputs[b]) {
                pairs.push((a, b));
            }
        }
    }
    let mut any_complete = false;
    let mut trials = 0u64;
    for d in &lists {
        let results: Vec<RunResult> = inputs
            .iter()
            .map(|i| run_spec(p.body(), i, d, model, variant, cfg.fuel))
            .collect();
        any_complete |= results.iter().any(|r| r.status.is_complete());
        for &(a, b) in &pairs {
            trials += 1;
            if let Some((divergence, partial)) = first_difference(&results[a], &results[b]) {
                return Ok(Verdict {
                    result: VerdictKind::Violation,
                    trials,
                    seed: cfg.seed,
                    witness: Some(Witness {
                        i1: inputs[a].clone(),
                        i2: inputs[b].clone(),
                        dirs: d.clone(),
                        divergence,
                        partial,
                    }),
                });
            }
        }
    }
    Ok(Verdict {
        result: if any_complete { VerdictKind::NoViolationExhaustive } else { VerdictKind::Inconclusive },
        trials,
        seed: cfg.seed,
        witness: None,
    })
}
