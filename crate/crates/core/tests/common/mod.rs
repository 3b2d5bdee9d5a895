//! Helpers shared by the integration tests.

#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use spskit_core::checker::{gen_directives, GenConfig, InputSpace, Strategy};
use spskit_core::lang::{SourceProgram, Value};
use spskit_core::semantics::{
    run_seq, run_spec, Directive, DirectiveKind, Input, LeakageModel, RunResult, Status, Variant,
};
use spskit_core::transform::{sps_for, t_obs, t_obs_truncated, PhiSpec};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub const MODELS: [LeakageModel; 3] =
    [LeakageModel::Baseline, LeakageModel::CacheLine { line: 4 }, LeakageModel::VariableTime];

/// The target status expected for a source run that stopped with `s`.
fn expected_target_status(src: &RunResult, d: &[Directive]) -> Status {
    match src.status {
        Status::FenceHalt => Status::AssertError,
        Status::OutOfDirectives => {
            // A directive of the wrong shape is a type error in the target.
            let mismatch = src.wanted.is_some_and(|w| d.get(src.consumed).is_some_and(|x| x.kind() != w));
            if mismatch {
                Status::RuntimeError
            } else {
                Status::OutOfDirectives
            }
        }
        s => s,
    }
}

/// Runs `p` speculatively and its translation sequentially, and checks
/// that statuses, traces (through the observation transformation) and
/// final states correspond.
pub fn correspondence(
    p: &SourceProgram,
    input: &Input,
    d: &[Directive],
    model: &LeakageModel,
    variant: Variant,
    fuel: u64,
) -> Result<(), String> {
    let t = sps_for(p, variant);
    let src = run_spec(p.body(), input, d, model, variant, fuel);
    let tgt = run_seq(t.body(), input, d, model, fuel, &mut ());
    if src.status == Status::OutOfFuel || tgt.status == Status::OutOfFuel {
        return Ok(());
    }
    let want = expected_target_status(&src, d);
    if tgt.status != want {
        return Err(format!("status {:?} -> {:?}, expected {:?}", src.status, tgt.status, want));
    }
    let used = &d[..src.consumed];
    let expected = if src.status == Status::OutOfDirectives || tgt.status == Status::RuntimeError {
        t_obs_truncated(&src.trace, used)
    } else {
        t_obs(&src.trace, used)
    }
    .map_err(|e| format!("t_obs: {e}"))?;
    if tgt.trace != expected {
        return Err(format!("trace {:?}\n  expected {:?}\n  source {:?}", tgt.trace, expected, src.trace));
    }
    if tgt.consumed != src.consumed {
        return Err(format!("consumed {} vs {}", tgt.consumed, src.consumed));
    }
    for (x, v) in src.vars.iter() {
        if tgt.vars.get(x) != *v {
            return Err(format!("variable {x}: {} vs {}", v, tgt.vars.get(x)));
        }
    }
    for (x, v) in tgt.vars.iter() {
        if !matches!(x.as_str(), "ms" | "dir") && src.vars.get(x) != *v {
            return Err(format!("extra variable {x} = {v}"));
        }
    }
    if tgt.vars.get("ms") != Value::Bool(src.ms.unwrap_or(false)) {
        return Err(format!("ms: {:?} vs {}", src.ms, tgt.vars.get("ms")));
    }
    if tgt.mem != src.mem {
        return Err(format!("memory {:?} vs {:?}", src.mem, tgt.mem));
    }
    Ok(())
}

/// A random directive list; for v4, the shapes are fixed up on `input`
/// with probability one half so that runs get past shape mismatches.
pub fn sample_directives(
    p: &SourceProgram,
    input: &Input,
    variant: Variant,
    cfg: &GenConfig,
    rng: &mut impl Rng,
) -> Vec<Directive> {
    let len = rng.gen_range(0..=cfg.max_directives);
    let cfg = GenConfig { max_directives: len, ..cfg.clone() };
    let mut d = gen_directives(Strategy::Random { p: 0.5 }, variant, &cfg, rng);
    if variant == Variant::V4 && rng.gen_bool(0.5) {
        for _ in 0..=d.len() {
            let r = run_spec(p.body(), input, &d, &LeakageModel::Baseline, variant, cfg.fuel);
            match r.wanted {
                Some(w) if r.status == Status::OutOfDirectives && r.consumed < d.len() => {
                    d[r.consumed] = match w {
                        DirectiveKind::Force => Directive::Force(rng.gen()),
                        DirectiveKind::Load => Directive::Load(rng.gen_range(0..=cfg.max_load_index)),
                    };
                }
                _ => break,
            }
        }
    }
    d
}

/// A random input for `p` under `phi`.
pub fn sample_input(p: &[spskit_core::lang::Cmd], phi: &PhiSpec, cfg: &GenConfig, rng: &mut impl Rng) -> Input {
    InputSpace::new(p, phi, cfg).gen_pair(rng).expect("satisfiable").0
}
