//! Acceptance suite: one line per criterion, nonzero exit if any fails.

mod common;

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use spskit_core::checker::{
    all_directive_lists, check_assert_safety, check_ct, check_sct, check_taint, gen_program_with, gen_target_program,
    taint_run, trial_rng, GenConfig, GenOptions, InputSpace, Strategy, VerdictKind,
};
use spskit_core::corpus::{load_corpus, CorpusCase};
use spskit_core::lang::{Int, Value};
use spskit_core::semantics::{
    run_seq, run_spec, run_target, Directive, LeakageModel, Observation, Status, Variant, DEFAULT_FUEL,
};
use spskit_core::transform::{assert_elim, decode_obs, leak_instrument, sps, sps_for, t_obs, t_obs_inv};

use common::{corpus_dir, correspondence, sample_directives, sample_input, MODELS};

type Outcome = Result<String, String>;

fn case<'a>(cases: &'a [CorpusCase], name: &str) -> &'a CorpusCase {
    cases.iter().find(|c| c.name == name).unwrap_or_else(|| panic!("corpus case {name} missing"))
}

fn expect(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn source_target_correspondence(programs: u64, variant: Variant, seed: u64) -> Outcome {
    let cfg = GenConfig { max_directives: 8, ..GenConfig::default() };
    let opts = GenOptions { division: true, ..GenOptions::default() };
    let phi = opts.phi();
    let mut statuses: HashMap<Status, usize> = HashMap::new();
    for k in 0..programs {
        let mut rng = trial_rng(seed, k);
        let depth = rng.gen_range(0..=3);
        let p = gen_program_with(&mut rng, depth, &cfg, &opts);
        let model = MODELS[(k % 3) as usize];
        for _ in 0..5 {
            let input = sample_input(p.body(), &phi, &cfg, &mut rng);
            let d = sample_directives(&p, &input, variant, &cfg, &mut rng);
            correspondence(&p, &input, &d, &model, variant, DEFAULT_FUEL)
                .map_err(|e| format!("program {k} ({model}), dirs {d:?}: {e}"))?;
            let s = run_spec(p.body(), &input, &d, &model, variant, DEFAULT_FUEL).status;
            *statuses.entry(s).or_default() += 1;
        }
    }
    let seen = |s| statuses.get(&s).copied().unwrap_or(0);
    expect(seen(Status::FenceHalt) > 0, || "no fence halt exercised".into())?;
    expect(seen(Status::Completed) > 0, || "no completed run exercised".into())?;
    Ok(format!(
        "{} runs: {} completed, {} fence halts, {} out of directives, {} runtime errors",
        programs * 5,
        seen(Status::Completed),
        seen(Status::FenceHalt),
        seen(Status::OutOfDirectives),
        seen(Status::RuntimeError)
    ))
}

fn criterion_1() -> Outcome {
    source_target_correspondence(1000, Variant::V1, 42)
}

fn tiny_cfg() -> GenConfig {
    GenConfig { domain: (0, 3), max_directives: 4, mem_size: 8, strategy: Strategy::Enumerate, ..GenConfig::default() }
}

fn criterion_2() -> Outcome {
    let cfg = tiny_cfg();
    let opts = GenOptions::tiny();
    let phi = opts.phi();
    let mut violations = 0;
    for k in 0..100u64 {
        let mut rng = trial_rng(7, k);
        let depth = rng.gen_range(1..=3);
        let p = gen_program_with(&mut rng, depth, &cfg, &opts);
        let model = MODELS[(k % 3) as usize];
        let a = check_sct(&p, &phi, &model, Variant::V1, &cfg).map_err(|e| e.to_string())?;
        let b = check_ct(&sps(&p), &phi, &model, Variant::V1, &cfg).map_err(|e| e.to_string())?;
        expect(a.result == b.result, || format!("program {k}: sct {} vs ct {}", a.result, b.result))?;
        expect(a.result != VerdictKind::NoViolationBounded, || format!("program {k}: space too large"))?;
        violations += a.result.is_violation() as usize;
    }
    Ok(format!("100 programs agree ({violations} violations)"))
}

fn all_traces(alphabet: &[Observation], max_len: usize) -> Vec<Vec<Observation>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        let next: Vec<Vec<Observation>> = layer
            .iter()
            .flat_map(|t: &Vec<Observation>| {
                alphabet.iter().map(move |o| {
                    let mut t = t.clone();
                    t.push(o.clone());
                    t
                })
            })
            .collect();
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn criterion_3() -> Outcome {
    let alphabet = [
        Observation::Branch(false),
        Observation::Branch(true),
        Observation::Addr(Int::small(0)),
        Observation::Addr(Int::small(1)),
        Observation::Op(vec![Int::small(1), Int::small(0)]),
    ];
    let traces = all_traces(&alphabet, 4);
    let lists = all_directive_lists(Variant::V1, 0, 4);
    let mut pairs = 0u64;
    for d in &lists {
        let mut images: HashMap<Vec<Observation>, &Vec<Observation>> = HashMap::new();
        let mut defined = 0u64;
        for o in &traces {
            let Ok(t) = t_obs(o, d) else { continue };
            defined += 1;
            if let Some(prev) = images.insert(t, o) {
                return Err(format!("t_obs({prev:?}) = t_obs({o:?}) under {d:?}"));
            }
        }
        pairs += defined * defined.saturating_sub(1) / 2;
    }
    let mut rng = trial_rng(3, 0);
    for _ in 0..1000 {
        let n = rng.gen_range(0..=12);
        let o: Vec<Observation> = (0..n).map(|_| alphabet[rng.gen_range(0..alphabet.len())].clone()).collect();
        let d: Vec<Directive> = (0..n).map(|_| Directive::Force(rng.gen())).collect();
        let t = t_obs(&o, &d).map_err(|e| e.to_string())?;
        expect(t_obs_inv(&t, &d).as_ref() == Ok(&o), || format!("inverse fails on {o:?}"))?;
    }
    Ok(format!("{} traces x {} lists, {pairs} distinct pairs; 1000 inverses", traces.len(), lists.len()))
}

fn criterion_4(cases: &[CorpusCase]) -> Outcome {
    let cfg = GenConfig { domain: (0, 3), max_directives: 4, ..GenConfig::default() };
    let vul = case(cases, "initialization");
    let v = vul.check_with(&vul.model, &cfg).map_err(|e| e.to_string())?;
    let w = v.witness.as_ref().ok_or("vulnerable program: no violation")?;
    expect(w.dirs.first() == Some(&Directive::Force(false)), || format!("witness directives {:?}", w.dirs))?;
    let prot = case(cases, "initialization_selslh");
    let v2 = prot.check_with(&prot.model, &cfg).map_err(|e| e.to_string())?;
    expect(v2.result == VerdictKind::NoViolationExhaustive, || format!("selslh variant: {}", v2.result))?;
    Ok(format!("vulnerable: Violation under {:?}; selslh: {}", w.dirs, v2.result))
}

fn criterion_5(cases: &[CorpusCase]) -> Outcome {
    let want = [
        ("kocher_case01", VerdictKind::Violation),
        ("kocher_case01_masked", VerdictKind::NoViolationExhaustive),
        ("kocher_case01_selslh", VerdictKind::NoViolationExhaustive),
        ("kocher_case05", VerdictKind::Violation),
        ("kocher_case05_masked", VerdictKind::NoViolationBounded),
        ("kocher_case05_selslh", VerdictKind::NoViolationBounded),
    ];
    for (name, kind) in want {
        let c = case(cases, name);
        let cfg = GenConfig { max_directives: 6, ..c.config.clone() };
        let v = c.check_with(&c.model, &cfg).map_err(|e| e.to_string())?;
        expect(v.result == kind, || format!("{name}: {} (expected {kind})", v.result))?;
    }
    Ok("case01 x3, case05 x3 as expected".into())
}

fn criterion_6(cases: &[CorpusCase]) -> Outcome {
    let vul = case(cases, "v4_stl");
    let v = vul.check().map_err(|e| e.to_string())?;
    let w = v.witness.as_ref().ok_or("vulnerable program: no violation")?;
    expect(w.dirs.contains(&Directive::Load(1)), || format!("witness directives {:?}", w.dirs))?;
    let fenced = case(cases, "v4_stl_fenced");
    let v2 = fenced.check().map_err(|e| e.to_string())?;
    expect(v2.result == VerdictKind::NoViolationExhaustive, || format!("fenced: {}", v2.result))?;
    let corr = source_target_correspondence(500, Variant::V4, 43)?;
    Ok(format!("witness {:?}; fenced {}; {corr}", w.dirs, v2.result))
}

fn criterion_7(cases: &[CorpusCase]) -> Outcome {
    let mac = case(cases, "mac_rotation");
    let v = mac.check().map_err(|e| e.to_string())?;
    expect(v.result == VerdictKind::NoViolationExhaustive, || format!("cache-line model: {}", v.result))?;
    let base = case(cases, "mac_rotation_baseline");
    let vb = base.check().map_err(|e| e.to_string())?;
    expect(vb.result.is_violation(), || format!("baseline model: {}", vb.result))?;

    // Every load of the rotation reads the cache line of rotatedmac = 64.
    let model = LeakageModel::cache_line();
    let cfg = &mac.config;
    let space = InputSpace::new(mac.program.body(), &mac.phi, cfg);
    let lists = all_directive_lists(Variant::V1, 0, cfg.max_directives);
    let mut loads = 0usize;
    for p in 0..space.public_size() {
        for input in space.group(p) {
            for d in &lists {
                let r = run_spec(mac.program.body(), &input, d, &model, Variant::V1, cfg.fuel);
                let addrs: Vec<&Int> = r
                    .trace
                    .iter()
                    .filter_map(|o| match o {
                        Observation::Addr(a) => Some(a),
                        _ => None,
                    })
                    .collect();
                for a in addrs.iter().step_by(2) {
                    loads += 1;
                    expect(**a == Int::small(1), || format!("load on line {a} for {input:?} under {d:?}"))?;
                }
            }
        }
    }
    expect(loads > 0, || "no loads observed".into())?;
    Ok(format!("cache-line {}; baseline {}; {loads} loads all on line 1", v.result, vb.result))
}

fn criterion_8() -> Outcome {
    let cfg = GenConfig::default();
    let opts = GenOptions { asserts: true, division: true, ..GenOptions::default() };
    let phi = opts.phi();
    let mut failing = 0;
    for k in 0..1000u64 {
        let mut rng = trial_rng(11, k);
        let depth = rng.gen_range(0..=3);
        let p = gen_target_program(&mut rng, depth, &cfg, &opts);
        let model = MODELS[(k % 3) as usize];
        let q = assert_elim(&p).map_err(|e| e.to_string())?;
        let inst = leak_instrument(&q, &model).map_err(|e| e.to_string())?;
        for _ in 0..3 {
            let input = sample_input(p.body(), &phi, &cfg, &mut rng);
            let r = run_seq(p.body(), &input, &[], &model, cfg.fuel, &mut ());
            let rq = run_seq(q.body(), &input, &[], &model, cfg.fuel, &mut ());
            let ctx = || format!("program {k} ({model})");
            expect(rq.trace == r.trace, || format!("{}: assert-elim changed the trace", ctx()))?;
            let failed = r.status == Status::AssertError;
            failing += failed as usize;
            let status_ok = match r.status {
                Status::AssertError | Status::Completed => rq.status == Status::Completed,
                s => rq.status == s,
            };
            expect(status_ok, || format!("{}: status {:?} vs {:?}", ctx(), r.status, rq.status))?;
            if rq.status == Status::Completed {
                expect(rq.vars.get("ret") == Value::Bool(failed), || format!("{}: wrong ret", ctx()))?;
            }
            let mut vq = rq.vars.clone();
            vq.remove("ret");
            expect(vq.equivalent(&r.vars) && rq.mem == r.mem, || format!("{}: final states differ", ctx()))?;
            let ri = run_target(inst.body(), input.vars.clone(), input.mem.clone(), &model, cfg.fuel, &mut ());
            let decoded = decode_obs(&ri.vars.get("obs")).map_err(|e| e.to_string())?;
            expect(decoded == r.trace, || format!("{}: decoded obs {decoded:?} vs {:?}", ctx(), r.trace))?;
        }
    }
    expect(failing > 0, || "no failing assertion exercised".into())?;

    let tiny = tiny_cfg();
    let topts = GenOptions { asserts: true, ..GenOptions::tiny() };
    let tphi = topts.phi();
    let mut violations = 0;
    for k in 0..100u64 {
        let mut rng = trial_rng(13, k);
        let depth = rng.gen_range(1..=3);
        let p = assert_elim(&gen_target_program(&mut rng, depth, &tiny, &topts)).map_err(|e| e.to_string())?;
        let model = MODELS[(k % 3) as usize];
        let a = check_assert_safety(&p, &tphi, &model, Variant::V1, &tiny).map_err(|e| e.to_string())?;
        let b = check_ct(&p, &tphi, &model, Variant::V1, &tiny).map_err(|e| e.to_string())?;
        expect(a.result == b.result, || format!("program {k} ({model}): product {} vs ct {}", a.result, b.result))?;
        expect(a.result != VerdictKind::NoViolationBounded, || format!("program {k}: space too large"))?;
        violations += a.result.is_violation() as usize;
    }
    Ok(format!("3000 runs ({failing} failing asserts); product = ct on 100 programs ({violations} violations)"))
}

fn criterion_9(cases: &[CorpusCase]) -> Outcome {
    let init = case(cases, "initialization");
    let v = init.check().map_err(|e| e.to_string())?;
    let w = v.witness.ok_or("no witness for the initialization example")?;
    let t = sps(&init.program);
    let space = InputSpace::new(t.body(), &init.phi, &init.config);
    let (_, flag) = taint_run(t.body(), &space, &w.i1, &w.dirs, &init.model, DEFAULT_FUEL);
    expect(flag.is_some(), || format!("witness run under {:?} not flagged", w.dirs))?;

    let prot = case(cases, "initialization_selslh");
    let cfg = GenConfig { trials: 1000, strategy: Strategy::Random { p: 0.5 }, ..prot.config.clone() };
    let tp = sps(&prot.program);
    let vp = check_taint(tp.body(), &prot.phi, &prot.model, Variant::V1, &cfg).map_err(|e| e.to_string())?;
    expect(vp.result == VerdictKind::NoViolationBounded, || format!("selslh variant flagged: {:?}", vp.witness))?;

    for name in ["kocher_case01", "kocher_case05"] {
        let c = case(cases, name);
        let cfg = GenConfig { max_directives: 6, ..c.config.clone() };
        let v = c.check_with(&c.model, &cfg).map_err(|e| e.to_string())?;
        let w = v.witness.ok_or_else(|| format!("{name}: no witness"))?;
        let t = sps_for(&c.program, c.spectre);
        let space = InputSpace::new(t.body(), &c.phi, &cfg);
        for i in [&w.i1, &w.i2] {
            let (_, flag) = taint_run(t.body(), &space, i, &w.dirs, &c.model, cfg.fuel);
            expect(flag.is_some(), || format!("{name}: witness run not flagged"))?;
        }
    }
    Ok("witness runs flagged; selslh variant unflagged over 1000 lists".into())
}

fn criterion_10(cases: &[CorpusCase]) -> Outcome {
    let c = case(cases, "selslh_typing_v1");
    let v = c.check().map_err(|e| e.to_string())?;
    expect(v.result == VerdictKind::NoViolationExhaustive, || format!("{}", v.result))?;
    Ok(format!("{} over {} group-list runs", v.result, v.trials))
}

fn main() -> ExitCode {
    let cases = load_corpus(corpus_dir()).expect("bundled corpus loads");
    let criteria: Vec<(&str, u64, Box<dyn Fn() -> Outcome>)> = vec![
        ("source/target trace correspondence", 30, Box::new(criterion_1)),
        ("exhaustive sct = ct of translation", 120, Box::new(criterion_2)),
        ("observation transformation injective", 30, Box::new(criterion_3)),
        ("initialization example", 10, Box::new(|| criterion_4(&cases))),
        ("kocher cases 1 and 5", 60, Box::new(|| criterion_5(&cases))),
        ("spectre-v4", 60, Box::new(|| criterion_6(&cases))),
        ("cache-line mac rotation", 60, Box::new(|| criterion_7(&cases))),
        ("pipeline transforms", 120, Box::new(criterion_8)),
        ("taint mode", 60, Box::new(|| criterion_9(&cases))),
        ("selslh typing example", 60, Box::new(|| criterion_10(&cases))),
    ];
    let mut failed = 0;
    for (k, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if took > Duration::from_secs(*limit) => Err(format!("{msg}; exceeded {limit} s")),
            o => o,
        };
        match outcome {
            Ok(msg) => println!("criterion {:>2} PASS {name} ({:.2} s): {msg}", k + 1, took.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name} ({:.2} s): {msg}", k + 1, took.as_secs_f64());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
