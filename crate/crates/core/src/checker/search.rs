//! The search engine shared by the speculative and sequential checkers:
//! exhaustive enumeration over a lazily built tree of directive lists, and
//! seeded random sampling.

use std::collections::{HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::semantics::{Directive, DirectiveKind, Input, Observation, RunResult, Status, Variant};

use super::config::{GenConfig, Strategy};
use super::inputs::InputSpace;
use super::verdict::{compare_runs, compare_traces, Comparison, Verdict, VerdictKind, Witness};
use super::CheckError;

/// Runs the program under test on one input and directive list.
pub(crate) trait Runner: Sync {
    fn run(&self, input: &Input, dirs: &[Directive]) -> RunResult;
}

impl<F: Fn(&Input, &[Directive]) -> RunResult + Sync> Runner for F {
    fn run(&self, input: &Input, dirs: &[Directive]) -> RunResult {
        self(input, dirs)
    }
}

/// The directives that can extend a list when a run wanted the given shape
/// (or any shape, when unknown).
pub fn alphabet(variant: Variant, max_load_index: u32, wanted: Option<DirectiveKind>) -> Vec<Directive> {
    let forces = [Directive::Force(false), Directive::Force(true)];
    let loads = (0..=max_load_index).map(Directive::Load);
    match (variant, wanted) {
        (Variant::V1, _) | (Variant::V4, Some(DirectiveKind::Force)) => forces.to_vec(),
        (Variant::V4, Some(DirectiveKind::Load)) => loads.collect(),
        (Variant::V4, None) => forces.into_iter().chain(loads).collect(),
    }
}

/// Every directive list over the full alphabet up to the length bound, in
/// order of increasing length.
pub fn all_directive_lists(variant: Variant, max_load_index: u32, max_len: usize) -> Vec<Vec<Directive>> {
    let sigma = alphabet(variant, max_load_index, None);
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        let next: Vec<Vec<Directive>> = layer
            .iter()
            .flat_map(|d: &Vec<Directive>| {
                sigma.iter().map(move |s| {
                    let mut e = d.clone();
                    e.push(*s);
                    e
                })
            })
            .collect();
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

struct GroupOutcome {
    violation: Option<Witness>,
    complete: bool,
    /// `Some(None)`: extend with every shape; `Some(Some(k))`: with shape `k`.
    wants: Vec<Option<DirectiveKind>>,
}

fn eval_group(runner: &dyn Runner, group: &[Input], d: &[Directive]) -> GroupOutcome {
    let mut distinct: Vec<(usize, RunResult)> = Vec::new();
    let mut seen: HashMap<(Vec<Observation>, bool), ()> = HashMap::new();
    let mut complete = false;
    let mut wants = Vec::new();
    for (k, input) in group.iter().enumerate() {
        let r = runner.run(input, d);
        complete |= r.status.is_complete();
        if r.status == Status::OutOfDirectives && r.consumed == d.len() && !wants.contains(&r.wanted) {
            wants.push(r.wanted);
        }
        if seen.insert((r.trace.clone(), r.status.is_complete()), ()).is_none() {
            distinct.push((k, r));
        }
    }
    for a in 0..distinct.len() {
        for b in a + 1..distinct.len() {
            if let Comparison::Diverge { at, partial } = compare_runs(&distinct[a].1, &distinct[b].1) {
                return GroupOutcome {
                    violation: Some(Witness {
                        i1: group[distinct[a].0].clone(),
                        i2: group[distinct[b].0].clone(),
                        dirs: d.to_vec(),
                        divergence: at,
                        partial,
                    }),
                    complete,
                    wants,
                };
            }
        }
    }
    GroupOutcome { violation: None, complete, wants }
}

/// Explores every public input group under every relevant directive list.
/// Returns `None` when the space exceeds the configured budget.
pub(crate) fn exhaustive(
    space: &InputSpace,
    runner: &dyn Runner,
    variant: Variant,
    cfg: &GenConfig,
) -> Result<Option<Verdict>, CheckError> {
    let cap = cfg.max_space as u128;
    if space.public_size().saturating_mul(space.secret_size()) > cap {
        return Ok(None);
    }
    let groups: Vec<Vec<Input>> = (0..space.public_size())
        .into_par_iter()
        .map(|p| space.group(p))
        .filter(|g| !g.is_empty())
        .collect();
    if groups.is_empty() {
        return Err(CheckError::UnsatisfiablePhi);
    }
    let per_list: u128 = groups.iter().map(|g| g.len() as u128).sum();
    let mut runs: u128 = 0;
    let mut trials: u64 = 0;
    let mut complete_seen = false;
    let mut frontier: VecDeque<Vec<Directive>> = VecDeque::from([Vec::new()]);
    while let Some(d) = frontier.pop_front() {
        runs += per_list;
        if runs > cap {
            return Ok(None);
        }
        let outcomes: Vec<GroupOutcome> = groups.par_iter().map(|g| eval_group(runner, g, &d)).collect();
        trials += groups.len() as u64;
        let mut wants: Vec<Option<DirectiveKind>> = Vec::new();
        for o in outcomes {
            if let Some(w) = o.violation {
                return Ok(Some(Verdict {
                    result: VerdictKind::Violation,
                    trials,
                    seed: cfg.seed,
                    witness: Some(w),
                }));
            }
            complete_seen |= o.complete;
            for w in o.wants {
                if !wants.contains(&w) {
                    wants.push(w);
                }
            }
        }
        if d.len() < cfg.max_directives {
            let mut next: Vec<Directive> = Vec::new();
            for w in wants {
                for s in alphabet(variant, cfg.max_load_index, w) {
                    if !next.contains(&s) {
                        next.push(s);
                    }
                }
            }
            next.sort();
            for s in next {
                let mut e = d.clone();
                e.push(s);
                frontier.push_back(e);
            }
        }
    }
    Ok(Some(Verdict {
        result: if complete_seen {
            VerdictKind::NoViolationExhaustive
        } else {
            VerdictKind::Inconclusive
        },
        trials,
        seed: cfg.seed,
        witness: None,
    }))
}

/// The random generator for trial `t`: independent of scheduling.
pub fn trial_rng(seed: u64, t: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t);
    rng
}

fn force_at(strategy: Strategy, pos: usize, rng: &mut impl Rng) -> bool {
    match strategy {
        Strategy::Random { p } => rng.gen_bool(p),
        Strategy::Enumerate => rng.gen_bool(0.5),
        Strategy::AllTrue => true,
        Strategy::AllFalse => false,
        Strategy::FlipFirstK { k } => pos >= k,
    }
}

fn load_for(strategy: Strategy, cfg: &GenConfig, rng: &mut impl Rng) -> Directive {
    match strategy {
        Strategy::Random { .. } | Strategy::Enumerate => Directive::Load(rng.gen_range(0..=cfg.max_load_index)),
        _ => Directive::Load(0),
    }
}

/// A directive list of length `cfg.max_directives` following `strategy`.
pub fn gen_directives(strategy: Strategy, variant: Variant, cfg: &GenConfig, rng: &mut impl Rng) -> Vec<Directive> {
    (0..cfg.max_directives)
        .map(|pos| {
            let random = matches!(strategy, Strategy::Random { .. } | Strategy::Enumerate);
            if variant == Variant::V4 && random && rng.gen_bool(0.5) {
                load_for(strategy, cfg, rng)
            } else {
                Directive::Force(force_at(strategy, pos, rng))
            }
        })
        .collect()
}

/// Fixes directives whose shape does not match what the program asks for
/// on `input`, so that sampled lists are not wasted on shape mismatches.
fn repair_shapes(
    runner: &dyn Runner,
    input: &Input,
    mut d: Vec<Directive>,
    strategy: Strategy,
    cfg: &GenConfig,
    rng: &mut impl Rng,
) -> Vec<Directive> {
    for _ in 0..=d.len() {
        let r = runner.run(input, &d);
        let k = r.consumed;
        match r.wanted {
            Some(want) if r.status == Status::OutOfDirectives && k < d.len() && d[k].kind() != want => {
                d[k] = match want {
                    DirectiveKind::Force => Directive::Force(force_at(strategy, k, rng)),
                    DirectiveKind::Load => load_for(strategy, cfg, rng),
                };
            }
            _ => break,
        }
    }
    d
}

enum TrialOutcome {
    Violation(Witness),
    Agree,
    Undecided,
}

/// Samples `cfg.trials` related input pairs and directive lists.
pub(crate) fn sampled(
    space: &InputSpace,
    runner: &dyn Runner,
    variant: Variant,
    strategy: Strategy,
    cfg: &GenConfig,
    repair: bool,
) -> Result<Verdict, CheckError> {
    space.gen_pair(&mut trial_rng(cfg.seed, u64::MAX))?;
    let outcomes: Vec<Result<TrialOutcome, CheckError>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(cfg.seed, t);
            let (i1, i2) = space.gen_pair(&mut rng)?;
            let mut d = gen_directives(strategy, variant, cfg, &mut rng);
            if repair && variant == Variant::V4 {
                d = repair_shapes(runner, &i1, d, strategy, cfg, &mut rng);
            }
            let r1 = runner.run(&i1, &d);
            let r2 = runner.run(&i2, &d);
            Ok(match compare_traces(&r1.trace, r1.status.is_complete(), &r2.trace, r2.status.is_complete()) {
                Comparison::Diverge { at, partial } => TrialOutcome::Violation(Witness {
                    i1,
                    i2,
                    dirs: d,
                    divergence: at,
                    partial,
                }),
                Comparison::Agree => TrialOutcome::Agree,
                Comparison::Undecided => TrialOutcome::Undecided,
            })
        })
        .collect();
    let mut agreed = false;
    for o in outcomes {
        match o? {
            TrialOutcome::Violation(w) => {
                return Ok(Verdict {
                    result: VerdictKind::Violation,
                    trials: cfg.trials,
                    seed: cfg.seed,
                    witness: Some(w),
                })
            }
            TrialOutcome::Agree => agreed = true,
            TrialOutcome::Undecided => {}
        }
    }
    Ok(Verdict {
        result: if agreed { VerdictKind::NoViolationBounded } else { VerdictKind::Inconclusive },
        trials: cfg.trials,
        seed: cfg.seed,
        witness: None,
    })
}

/// Exhaustive search when the strategy asks for it and the space fits the
/// budget; sampling otherwise.
pub(crate) fn search(
    space: &InputSpace,
    runner: &dyn Runner,
    variant: Variant,
    cfg: &GenConfig,
    repair: bool,
) -> Result<Verdict, CheckError> {
    match cfg.strategy {
        Strategy::Enumerate => match exhaustive(space, runner, variant, cfg)? {
            Some(v) => Ok(v),
            None => sampled(space, runner, variant, Strategy::Random { p: 0.5 }, cfg, repair),
        },
        s => sampled(space, runner, variant, s, cfg, repair),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alphabets() {
        assert_eq!(alphabet(Variant::V1, 3, None).len(), 2);
        assert_eq!(alphabet(Variant::V4, 1, None).len(), 4);
        assert_eq!(alphabet(Variant::V4, 1, Some(DirectiveKind::Load)), [Directive::Load(0), Directive::Load(1)]);
        let all = all_directive_lists(Variant::V1, 0, 3);
        assert_eq!(all.len(), 1 + 2 + 4 + 8);
        assert!(all.windows(2).all(|w| w[0].len() <= w[1].len()));
    }

    #[test]
    fn fixed_strategies() {
        let cfg = GenConfig { max_directives: 4, ..GenConfig::default() };
        let mut rng = trial_rng(0, 0);
        let d = gen_directives(Strategy::FlipFirstK { k: 1 }, Variant::V1, &cfg, &mut rng);
        assert_eq!(crate::semantics::directives_to_string(&d), "FTTT");
        let d = gen_directives(Strategy::AllFalse, Variant::V4, &cfg, &mut rng);
        assert_eq!(crate::semantics::directives_to_string(&d), "FFFF");
    }

    #[test]
    fn trial_rngs_are_reproducible() {
        let a: u64 = trial_rng(7, 3).gen();
        let b: u64 = trial_rng(7, 3).gen();
        let c: u64 = trial_rng(7, 4).gen();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
