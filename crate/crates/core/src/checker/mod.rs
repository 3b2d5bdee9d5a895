//! Testing-based checkers: speculative constant-time on source programs,
//! constant-time on target programs, assertion safety of product programs,
//! a taint tracker, and a brute-force reference oracle.

pub mod config;
pub mod gen;
pub mod inputs;
pub mod oracle;
pub mod replay;
pub mod search;
pub mod taint;
pub mod verdict;

use rayon::prelude::*;
use thiserror::Error;

use crate::lang::{SourceProgram, TargetProgram};
use crate::semantics::{run_seq, run_spec, run_target, Directive, Input, LeakageModel, RunResult, Status, Variant};
use crate::transform::{default_offset, product, product_input, PhiSpec};

pub use config::{GenConfig, Strategy};
pub use gen::{gen_program, gen_program_with, gen_target_program, GenOptions};
pub use inputs::{gen_inputs, InputSpace, Loc};
pub use oracle::oracle_sct;
pub use replay::{replay, ReplayReport};
pub use search::{all_directive_lists, alphabet, gen_directives, trial_rng};
pub use taint::{check_taint, taint_run, TaintFlag};
pub use verdict::{compare_runs, compare_traces, Comparison, Verdict, VerdictKind, Witness};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("the input relation has no satisfying inputs in the configured domain")]
    UnsatisfiablePhi,
    #[error("search space of {runs} runs exceeds the budget of {cap}")]
    SpaceTooLarge { runs: u128, cap: u64 },
    #[error("the product requires an assertion-free program; apply assert-elim first")]
    HasAsserts,
}

/// Tests a source program for speculative constant-time: related inputs
/// must produce equal speculative traces under every directive list.
pub fn check_sct(
    p: &SourceProgram,
    phi: &PhiSpec,
    model: &LeakageModel,
    variant: Variant,
    cfg: &GenConfig,
) -> Result<Verdict, CheckError> {
    let space = InputSpace::new(p.body(), phi, cfg);
    let runner = |i: &Input, d: &[Directive]| run_spec(p.body(), i, d, model, variant, cfg.fuel);
    search::search(&space, &runner, variant, cfg, true)
}

/// Tests a target program for constant-time: related inputs must produce
/// equal sequential traces. Directive lists are supplied through `dir`;
/// `variant` only selects their alphabet.
pub fn check_ct(
    p: &TargetProgram,
    phi: &PhiSpec,
    model: &LeakageModel,
    variant: Variant,
    cfg: &GenConfig,
) -> Result<Verdict, CheckError> {
    let space = InputSpace::new(p.body(), phi, cfg);
    let runner = |i: &Input, d: &[Directive]| run_seq(p.body(), i, d, model, cfg.fuel, &mut ());
    search::search(&space, &runner, variant, cfg, false)
}

enum PairOutcome {
    Fails,
    Safe,
    Cut,
}

/// Tests a target program for constant-time by building its product and
/// searching for an input pair that makes an assertion of the product fail.
/// The witness divergence index is recovered by running the original
/// program on the failing pair.
pub fn check_assert_safety(
    p: &TargetProgram,
    phi: &PhiSpec,
    model: &LeakageModel,
    variant: Variant,
    cfg: &GenConfig,
) -> Result<Verdict, CheckError> {
    let offset = default_offset();
    let q = product(p, phi, model, &offset).map_err(|_| CheckError::HasAsserts)?;
    let space = InputSpace::new(p.body(), phi, cfg);
    let run_pair = |i1: &Input, i2: &Input, d: &[Directive]| -> (PairOutcome, RunResult) {
        let input = product_input(i1, i2, d, &offset);
        let r = run_target(q.body(), input.vars, input.mem, &LeakageModel::Baseline, cfg.fuel, &mut ());
        let o = match r.status {
            Status::AssertError => PairOutcome::Fails,
            Status::Completed => PairOutcome::Safe,
            _ => PairOutcome::Cut,
        };
        (o, r)
    };
    let witness = |i1: &Input, i2: &Input, d: &[Directive]| {
        let r1 = run_seq(p.body(), i1, d, model, cfg.fuel, &mut ());
        let r2 = run_seq(p.body(), i2, d, model, cfg.fuel, &mut ());
        let (divergence, partial) = match compare_runs(&r1, &r2) {
            Comparison::Diverge { at, partial } => (at, partial),
            _ => (r1.trace.len().min(r2.trace.len()), true),
        };
        Witness { i1: i1.clone(), i2: i2.clone(), dirs: d.to_vec(), divergence, partial }
    };
    let verdict = |result, trials, w| Verdict { result, trials, seed: cfg.seed, witness: w };

    if cfg.strategy == Strategy::Enumerate && space.public_size().saturating_mul(space.secret_size()) <= cfg.max_space as u128 {
        let groups: Vec<Vec<Input>> = (0..space.public_size())
            .into_par_iter()
            .map(|g| space.group(g))
            .filter(|g| !g.is_empty())
            .collect();
        if groups.is_empty() {
            return Err(CheckError::UnsatisfiablePhi);
        }
        let pairs: Vec<(&Input, &Input)> = groups
            .iter()
            .flat_map(|g| (0..g.len()).flat_map(move |a| (a + 1..g.len()).map(move |b| (&g[a], &g[b]))))
            .collect();
        let mut runs: u128 = 0;
        let mut safe_seen = false;
        let mut frontier = std::collections::VecDeque::from([Vec::<Directive>::new()]);
        let mut fits = true;
        let mut trials = 0u64;
        while let Some(d) = frontier.pop_front() {
            runs += pairs.len() as u128;
            if runs > cfg.max_space as u128 {
                fits = false;
                break;
            }
            trials += pairs.len() as u64;
            let outcomes: Vec<(PairOutcome, bool)> = pairs
                .par_iter()
                .map(|(a, b)| {
                    let (o, r) = run_pair(a, b, &d);
                    (o, r.status == Status::OutOfDirectives)
                })
                .collect();
            let mut extend = false;
            for (k, (o, starved)) in outcomes.iter().enumerate() {
                match o {
                    PairOutcome::Fails => {
                        let (a, b) = pairs[k];
                        return Ok(verdict(VerdictKind::Violation, trials, Some(witness(a, b, &d))));
                    }
                    PairOutcome::Safe => safe_seen = true,
                    PairOutcome::Cut => extend |= starved,
                }
            }
            if extend && d.len() < cfg.max_directives {
                for s in alphabet(variant, cfg.max_load_index, None) {
                    let mut e = d.clone();
                    e.push(s);
                    frontier.push_back(e);
                }
            }
        }
        if fits {
            let kind = if safe_seen || pairs.is_empty() {
                VerdictKind::NoViolationExhaustive
            } else {
                VerdictKind::Inconclusive
            };
            return Ok(verdict(kind, trials, None));
        }
    }

    let strategy = match cfg.strategy {
        Strategy::Enumerate => Strategy::Random { p: 0.5 },
        s => s,
    };
    space.gen_pair(&mut trial_rng(cfg.seed, u64::MAX))?;
    let outcomes: Vec<Result<(PairOutcome, Input, Input, Vec<Directive>), CheckError>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(cfg.seed, t);
            let (i1, i2) = space.gen_pair(&mut rng)?;
            let d = gen_directives(strategy, variant, cfg, &mut rng);
            let (o, _) = run_pair(&i1, &i2, &d);
            Ok((o, i1, i2, d))
        })
        .collect();
    let mut safe_seen = false;
    for o in outcomes {
        let (o, i1, i2, d) = o?;
        match o {
            PairOutcome::Fails => {
                return Ok(verdict(VerdictKind::Violation, cfg.trials, Some(witness(&i1, &i2, &d))));
            }
            PairOutcome::Safe => safe_seen = true,
            PairOutcome::Cut => {}
        }
    }
    let kind = if safe_seen { VerdictKind::NoViolationBounded } else { VerdictKind::Inconclusive };
    Ok(verdict(kind, cfg.trials, None))
}
