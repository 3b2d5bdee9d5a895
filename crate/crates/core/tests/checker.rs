//! Checkers: exhaustive and sampled search, the brute-force oracle,
//! witness replay, taint tracking and the random program generator.

mod common;

use spskit_core::checker::{
    check_ct, check_sct, check_taint, compare_traces, gen_program, gen_program_with, oracle_sct, replay, trial_rng,
    CheckError, Comparison, GenConfig, GenOptions, Strategy, VerdictKind, Witness,
};
use spskit_core::corpus::load_corpus;
use spskit_core::lang::{parse_source, source_to_string, Int};
use spskit_core::semantics::{run_spec, LeakageModel, Observation, Status, Variant};
use spskit_core::transform::{sps, PhiSpec};

use common::{corpus_dir, sample_input, MODELS};

fn tiny() -> GenConfig {
    GenConfig { domain: (0, 3), max_directives: 4, mem_size: 8, strategy: Strategy::Enumerate, ..GenConfig::default() }
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/golden/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

#[test]
fn trace_comparison_rule() {
    let b = Observation::Branch;
    assert_eq!(compare_traces(&[b(true)], true, &[b(true)], true), Comparison::Agree);
    assert_eq!(compare_traces(&[b(true)], true, &[b(false)], false), Comparison::Diverge { at: 0, partial: true });
    assert_eq!(compare_traces(&[b(true)], true, &[b(true), b(true)], false), Comparison::Diverge { at: 1, partial: true });
    assert_eq!(compare_traces(&[b(true)], false, &[b(true), b(true)], false), Comparison::Undecided);
    assert_eq!(compare_traces(&[], true, &[b(true)], true), Comparison::Diverge { at: 0, partial: false });
}

#[test]
fn oracle_on_skip() {
    let p = parse_source("skip;").unwrap();
    let v = oracle_sct(&p, &PhiSpec::public(&[]), &LeakageModel::Baseline, Variant::V1, &tiny()).unwrap();
    assert_eq!(v.result, VerdictKind::NoViolationExhaustive);
}

#[test]
fn oracle_refuses_oversized_spaces() {
    let p = parse_source("leak a + b + c + d + e + f + g + h < 3;").unwrap();
    let cfg = GenConfig { max_space: 1000, ..tiny() };
    let r = oracle_sct(&p, &PhiSpec::public(&[]), &LeakageModel::Baseline, Variant::V1, &cfg);
    assert!(matches!(r, Err(CheckError::SpaceTooLarge { .. })));
}

#[test]
fn oracle_initialization_witness() {
    let cases = load_corpus(corpus_dir()).unwrap();
    let c = cases.iter().find(|c| c.name == "initialization").unwrap();
    let cfg = GenConfig { domain: (0, 1), max_directives: 2, mem_size: 8, ..GenConfig::default() };
    let v = oracle_sct(&c.program, &c.phi, &LeakageModel::Baseline, Variant::V1, &cfg).unwrap();
    assert_eq!(v.result, VerdictKind::Violation);
    let w = v.witness.unwrap();
    let frozen: Witness = serde_json::from_str(&golden("initialization_oracle_witness.json")).unwrap();
    assert_eq!(w, frozen);
    let report = replay(&w, |i| run_spec(c.program.body(), i, &w.dirs, &c.model, Variant::V1, cfg.fuel));
    assert!(report.reproduced);
}

#[test]
fn oracle_agrees_with_the_enumerating_checker() {
    let cfg = tiny();
    let opts = GenOptions::tiny();
    let phi = opts.phi();
    let mut kinds = std::collections::HashSet::new();
    for k in 0..50u64 {
        let mut rng = trial_rng(21, k);
        let p = gen_program_with(&mut rng, 1 + (k % 3) as usize, &cfg, &opts);
        let model = MODELS[(k % 3) as usize];
        let a = oracle_sct(&p, &phi, &model, Variant::V1, &cfg).unwrap();
        let b = check_sct(&p, &phi, &model, Variant::V1, &cfg).unwrap();
        assert_eq!(a.result, b.result, "program {k}:\n{}", source_to_string(&p));
        kinds.insert(a.result);
    }
    assert!(kinds.contains(&VerdictKind::Violation));
    assert!(kinds.contains(&VerdictKind::NoViolationExhaustive));
}

#[test]
fn violations_replay() {
    let cfg = tiny();
    let opts = GenOptions::tiny();
    let phi = opts.phi();
    let mut found = 0;
    for k in 0..40u64 {
        let mut rng = trial_rng(5, k);
        let p = gen_program_with(&mut rng, 2, &cfg, &opts);
        let model = MODELS[(k % 3) as usize];
        let v = check_sct(&p, &phi, &model, Variant::V1, &cfg).unwrap();
        let Some(w) = v.witness else { continue };
        found += 1;
        assert!(phi.related(&w.i1, &w.i2));
        let report = replay(&w, |i| run_spec(p.body(), i, &w.dirs, &model, Variant::V1, cfg.fuel));
        assert!(report.reproduced, "program {k}");
        assert_ne!(report.r1.trace, report.r2.trace);
        let t = sps(&p);
        let ct = check_ct(&t, &phi, &model, Variant::V1, &cfg).unwrap();
        assert!(ct.result.is_violation());
    }
    assert!(found > 5);
}

#[test]
fn exhaustive_safety_is_never_contradicted_by_sampling() {
    let opts = GenOptions::tiny();
    let phi = opts.phi();
    let mut checked = 0;
    for k in 0..30u64 {
        let mut rng = trial_rng(9, k);
        let p = gen_program_with(&mut rng, 2, &tiny(), &opts);
        let model = MODELS[(k % 3) as usize];
        let v = oracle_sct(&p, &phi, &model, Variant::V1, &tiny()).unwrap();
        if v.result != VerdictKind::NoViolationExhaustive {
            continue;
        }
        checked += 1;
        for seed in 0..3 {
            let cfg = GenConfig { strategy: Strategy::Random { p: 0.5 }, trials: 200, seed, ..tiny() };
            assert!(!check_sct(&p, &phi, &model, Variant::V1, &cfg).unwrap().result.is_violation());
        }
    }
    assert!(checked > 0);
}

#[test]
fn sampling_is_deterministic() {
    let cases = load_corpus(corpus_dir()).unwrap();
    let c = cases.iter().find(|c| c.name == "kocher_case05").unwrap();
    let cfg = GenConfig { strategy: Strategy::Random { p: 0.5 }, trials: 500, seed: 3, ..c.config.clone() };
    let a = c.check_with(&c.model, &cfg).unwrap();
    let b = c.check_with(&c.model, &cfg).unwrap();
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn taint_covers_witnessed_runs() {
    let cfg = tiny();
    let opts = GenOptions::tiny();
    let phi = opts.phi();
    for k in 0..40u64 {
        let mut rng = trial_rng(17, k);
        let p = gen_program_with(&mut rng, 2, &cfg, &opts);
        let model = MODELS[(k % 3) as usize];
        let v = check_sct(&p, &phi, &model, Variant::V1, &cfg).unwrap();
        let Some(w) = v.witness else { continue };
        let t = sps(&p);
        let space = spskit_core::checker::InputSpace::new(t.body(), &phi, &cfg);
        let f1 = spskit_core::checker::taint_run(t.body(), &space, &w.i1, &w.dirs, &model, cfg.fuel).1;
        let f2 = spskit_core::checker::taint_run(t.body(), &space, &w.i2, &w.dirs, &model, cfg.fuel).1;
        assert!(f1.is_some() || f2.is_some(), "program {k} unflagged:\n{}", source_to_string(&p));
    }
}

#[test]
fn taint_flags_secret_branches_and_spares_public_ones() {
    let cfg = GenConfig { trials: 200, ..tiny() };
    let phi = PhiSpec::public(&["x"]);
    let check = |src: &str| {
        let t = sps(&parse_source(src).unwrap());
        check_taint(t.body(), &phi, &LeakageModel::Baseline, Variant::V1, &cfg).unwrap().result
    };
    assert_eq!(check("leak s < 2;"), VerdictKind::Violation);
    assert_eq!(check("leak x < 2; y <- [x % 8];"), VerdictKind::NoViolationBounded);
}

#[test]
fn generated_programs_run_cleanly() {
    let cfg = GenConfig::default();
    let opts = GenOptions { division: true, ..GenOptions::default() };
    for k in 0..300u64 {
        let mut rng = trial_rng(1, k);
        let p = gen_program_with(&mut rng, 3, &cfg, &opts);
        let i = sample_input(p.body(), &opts.phi(), &cfg, &mut rng);
        let r = run_spec(p.body(), &i, &[], &LeakageModel::VariableTime, Variant::V1, cfg.fuel);
        assert_ne!(r.status, Status::RuntimeError, "{:?}\n{}", r.error, source_to_string(&p));
        let mut branches = 0;
        for c in p.body() {
            c.walk(&mut |c| branches += matches!(c, spskit_core::lang::Cmd::If(..) | spskit_core::lang::Cmd::While(..)) as usize);
        }
        assert!(branches <= opts.max_branches);
    }
}

/// FNV-1a, as a stable digest of generator output.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

#[test]
fn generator_snapshot() {
    let cfg = GenConfig::default();
    let mut all = String::new();
    for k in 0..1000u64 {
        let p = gen_program(&mut trial_rng(42, k), (k % 4) as usize, &cfg);
        all.push_str(&source_to_string(&p));
        all.push('\n');
    }
    let frozen = golden("generator_seed42.txt");
    let (first, digest) = frozen.rsplit_once("digest ").unwrap();
    assert!(all.starts_with(first), "first programs changed");
    assert_eq!(format!("{:016x}", fnv1a(all.as_bytes())), digest.trim());
}

#[test]
fn cache_line_observations() {
    let m = LeakageModel::CacheLine { line: 64 };
    assert_eq!(m.laddr(&Int::small(63)), Int::small(0));
    assert_eq!(m.laddr(&Int::small(64)), Int::small(1));
}
