//! `spskit`: parse, transform, run and check programs, and benchmark the
//! bundled corpus.
//!
//! Exit codes: 0 success (or no violation), 1 violation or bench mismatch,
//! 2 usage, parse or validation error, 3 assertion failure, 4 any other
//! non-completing run, 5 inconclusive check.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use spskit_core::checker::{
    check_assert_safety, check_ct, check_sct, check_taint, oracle_sct, replay, GenConfig, Strategy, Verdict,
    VerdictKind, Witness,
};
use spskit_core::corpus::{load_case, load_corpus, Expected};
use spskit_core::lang::{parse_source, parse_target, source_to_string, target_to_string, SourceProgram, TargetProgram};
use spskit_core::semantics::{
    parse_directives, run_seq, run_spec, Directive, Input, LeakageModel, RunResult, Status, Variant, DEFAULT_FUEL,
};
use spskit_core::transform::{assert_elim, default_offset, leak_instrument, product, sps_for, PhiSpec};

#[derive(Parser)]
#[command(name = "spskit", version, about = "Speculation-passing style toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a program and print its canonical form.
    Parse {
        file: PathBuf,
        /// Parse as a target program (default: by extension, `.spt` is target).
        #[arg(long)]
        target: bool,
    },
    /// Apply a transformation.
    Transform {
        kind: TransformKind,
        input: PathBuf,
        /// Output file (default: stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Leakage model for `leak-inst` and `product`.
        #[arg(long, default_value = "baseline")]
        model: LeakageModel,
        /// Input relation for `product`.
        #[arg(long)]
        phi: Option<PathBuf>,
    },
    /// Run a program under the speculative (`spec`) or sequential (`seq`)
    /// semantics and print the result as JSON.
    Run {
        mode: RunMode,
        program: PathBuf,
        /// Input file (`{"vars": {..}, "mem": {..}}`).
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        dirs: DirArgs,
        #[arg(long, default_value = "v1")]
        variant: Variant,
        #[arg(long, default_value = "baseline")]
        model: LeakageModel,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
    },
    /// Check a program, or a corpus case directory, and print a verdict.
    Check {
        kind: CheckKind,
        /// A `.sps`/`.spt` file or a corpus case directory.
        target: PathBuf,
        #[command(flatten)]
        opts: CheckOpts,
        /// Write the witness of a violation to this file.
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
    /// Re-run a witness and print both runs.
    Replay {
        /// A verdict or witness JSON file.
        witness: PathBuf,
        /// The checked program or corpus case directory.
        target: PathBuf,
        #[arg(long, default_value = "spec")]
        mode: RunMode,
        #[arg(long)]
        variant: Option<Variant>,
        #[arg(long)]
        model: Option<LeakageModel>,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
    },
    /// Check every corpus case against its expected verdict.
    Bench {
        corpus: PathBuf,
        /// Override every case's leakage model. Expectations only apply to
        /// cases whose own model matches.
        #[arg(long)]
        model: Option<LeakageModel>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformKind {
    Sps,
    SpsV4,
    AssertElim,
    LeakInst,
    Product,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RunMode {
    Spec,
    Seq,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CheckKind {
    Sct,
    Ct,
    Product,
    Taint,
    Oracle,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct DirArgs {
    /// Directives, e.g. `FTTL0`.
    #[arg(long, default_value = "")]
    dirs: String,
    /// Read directives from a file instead.
    #[arg(long)]
    dirs_file: Option<PathBuf>,
}

impl DirArgs {
    fn get(&self) -> Result<Vec<Directive>> {
        let s = match &self.dirs_file {
            Some(p) => read(p)?,
            None => self.dirs.clone(),
        };
        Ok(parse_directives(&s)?)
    }
}

#[derive(Args)]
struct CheckOpts {
    /// Input relation (default: `phi.json` of a case directory, else
    /// everything secret).
    #[arg(long)]
    phi: Option<PathBuf>,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    model: Option<LeakageModel>,
    /// Configuration file with `GenConfig` fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `enumerate`, `random[:p]`, `all_true`, `all_false` or `flip_first:k`.
    #[arg(long)]
    strategy: Option<Strategy>,
    #[arg(long)]
    trials: Option<u64>,
    /// Seed (default: `SPSKIT_SEED`, else 42).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_directives: Option<usize>,
    /// Input value range, e.g. `0..3` (inclusive).
    #[arg(long, value_parser = parse_domain)]
    domain: Option<(i64, i64)>,
    #[arg(long)]
    mem_size: Option<i64>,
    #[arg(long)]
    max_space: Option<u64>,
    #[arg(long)]
    max_load_index: Option<u32>,
    #[arg(long)]
    fuel: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

fn parse_domain(s: &str) -> Result<(i64, i64), String> {
    let (lo, hi) = s.split_once("..").ok_or("expected `lo..hi`")?;
    let lo: i64 = lo.trim().parse().map_err(|_| format!("bad bound `{lo}`"))?;
    let hi: i64 = hi.trim().parse().map_err(|_| format!("bad bound `{hi}`"))?;
    if lo > hi {
        return Err("empty range".into());
    }
    Ok((lo, hi))
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var("SPSKIT_SEED") {
        Ok(s) => Ok(Some(s.trim().parse().with_context(|| format!("SPSKIT_SEED=`{s}` is not a number"))?)),
        Err(_) => Ok(None),
    }
}

fn read(p: &Path) -> Result<String> {
    fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))
}

fn is_target_file(p: &Path) -> bool {
    p.extension().is_some_and(|e| e == "spt")
}

fn load_source(p: &Path) -> Result<SourceProgram> {
    parse_source(&read(p)?).with_context(|| format!("{}", p.display()))
}

fn load_target(p: &Path) -> Result<TargetProgram> {
    parse_target(&read(p)?).with_context(|| format!("{}", p.display()))
}

fn write_out(output: &Option<PathBuf>, text: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("output serializes")
}

/// A usage, parse or validation failure: exit 2.
struct Usage(anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for Usage {
    fn from(e: E) -> Usage {
        Usage(e.into())
    }
}

type CmdResult = std::result::Result<u8, Usage>;

fn cmd_parse(file: &Path, target: bool) -> CmdResult {
    let text = if target || is_target_file(file) {
        target_to_string(&load_target(file)?)
    } else {
        source_to_string(&load_source(file)?)
    };
    print!("{text}");
    Ok(0)
}

fn cmd_transform(
    kind: TransformKind,
    input: &Path,
    output: &Option<PathBuf>,
    model: &LeakageModel,
    phi: &Option<PathBuf>,
) -> CmdResult {
    let out = match kind {
        TransformKind::Sps => sps_for(&load_source(input)?, Variant::V1),
        TransformKind::SpsV4 => sps_for(&load_source(input)?, Variant::V4),
        TransformKind::AssertElim => assert_elim(&load_target(input)?)?,
        TransformKind::LeakInst => leak_instrument(&load_target(input)?, model)?,
        TransformKind::Product => {
            let phi = match phi {
                Some(p) => PhiSpec::from_json(&read(p)?)?,
                None => PhiSpec::default(),
            };
            product(&load_target(input)?, &phi, model, &default_offset())?
        }
    };
    write_out(output, &target_to_string(&out))?;
    Ok(0)
}

fn run_exit(r: &RunResult) -> u8 {
    match r.status {
        Status::Completed | Status::FenceHalt => 0,
        Status::AssertError => 3,
        _ => 4,
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    mode: RunMode,
    program: &Path,
    input: &Option<PathBuf>,
    dirs: &DirArgs,
    variant: Variant,
    model: &LeakageModel,
    fuel: u64,
) -> CmdResult {
    let input: Input = match input {
        Some(p) => serde_json::from_str(&read(p)?).with_context(|| format!("{}", p.display()))?,
        None => Input::default(),
    };
    let d = dirs.get()?;
    let r = match mode {
        RunMode::Spec => run_spec(load_source(program)?.body(), &input, &d, model, variant, fuel),
        RunMode::Seq => run_seq(load_target(program)?.body(), &input, &d, model, fuel, &mut ()),
    };
    println!("{}", to_json(&r));
    Ok(run_exit(&r))
}

/// A checked program with the defaults its location provides.
struct Subject {
    program: Program,
    phi: PhiSpec,
    variant: Variant,
    model: LeakageModel,
    cfg: GenConfig,
}

enum Program {
    Source(SourceProgram),
    Target(TargetProgram),
}

fn load_subject(path: &Path, phi: &Option<PathBuf>) -> Result<Subject> {
    let mut s = if path.is_dir() {
        let case = load_case(path)?;
        Subject {
            program: Program::Source(case.program),
            phi: case.phi,
            variant: case.spectre,
            model: case.model,
            cfg: case.config,
        }
    } else {
        let program = if is_target_file(path) {
            Program::Target(load_target(path)?)
        } else {
            Program::Source(load_source(path)?)
        };
        Subject {
            program,
            phi: PhiSpec::default(),
            variant: Variant::V1,
            model: LeakageModel::Baseline,
            cfg: GenConfig::default(),
        }
    };
    if let Some(p) = phi {
        s.phi = PhiSpec::from_json(&read(p)?).with_context(|| format!("{}", p.display()))?;
    }
    Ok(s)
}

impl CheckOpts {
    fn apply(&self, s: &mut Subject) -> Result<()> {
        if let Some(p) = &self.config {
            s.cfg = serde_json::from_str(&read(p)?).with_context(|| format!("{}", p.display()))?;
        }
        let c = &mut s.cfg;
        if let Some(seed) = self.seed.or(env_seed()?) {
            c.seed = seed;
        }
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        set!(strategy, trials, max_directives, domain, mem_size, max_space, max_load_index, fuel);
        if let Some(v) = self.variant {
            s.variant = v;
        }
        if let Some(m) = self.model {
            s.model = m;
        }
        Ok(())
    }
}

fn target_of(s: &Subject) -> TargetProgram {
    match &s.program {
        Program::Source(p) => sps_for(p, s.variant),
        Program::Target(p) => p.clone(),
    }
}

fn print_verdict(v: &Verdict, format: Format) {
    match format {
        Format::Json => println!("{}", v.to_json()),
        Format::Text => {
            println!("{} ({} trials, seed {})", v.result, v.trials, v.seed);
            if let Some(w) = &v.witness {
                println!("  i1: {}", to_json(&w.i1));
                println!("  i2: {}", to_json(&w.i2));
                println!("  dirs: {}", spskit_core::semantics::directives_to_string(&w.dirs));
                println!("  divergence: {}{}", w.divergence, if w.partial { " (partial)" } else { "" });
            }
        }
    }
}

fn verdict_exit(v: &Verdict) -> u8 {
    match v.result {
        VerdictKind::Violation => 1,
        VerdictKind::NoViolationExhaustive | VerdictKind::NoViolationBounded => 0,
        VerdictKind::Inconclusive => 5,
    }
}

fn cmd_check(kind: CheckKind, path: &Path, opts: &CheckOpts, witness_out: &Option<PathBuf>) -> CmdResult {
    let mut s = load_subject(path, &opts.phi)?;
    opts.apply(&mut s)?;
    let source = || match &s.program {
        Program::Source(p) => Ok(p),
        Program::Target(_) => Err(anyhow!("this check needs a source program")),
    };
    let v = match kind {
        CheckKind::Sct => check_sct(source()?, &s.phi, &s.model, s.variant, &s.cfg)?,
        CheckKind::Oracle => oracle_sct(source()?, &s.phi, &s.model, s.variant, &s.cfg)?,
        CheckKind::Ct => check_ct(&target_of(&s), &s.phi, &s.model, s.variant, &s.cfg)?,
        CheckKind::Taint => check_taint(target_of(&s).body(), &s.phi, &s.model, s.variant, &s.cfg)?,
        CheckKind::Product => {
            let t = target_of(&s);
            let t = if t.has_asserts() { assert_elim(&t)? } else { t };
            check_assert_safety(&t, &s.phi, &s.model, s.variant, &s.cfg)?
        }
    };
    print_verdict(&v, opts.format);
    if let (Some(p), Some(w)) = (witness_out, &v.witness) {
        fs::write(p, to_json(w)).with_context(|| format!("cannot write {}", p.display()))?;
    }
    Ok(verdict_exit(&v))
}

fn load_witness(p: &Path) -> Result<Witness> {
    let text = read(p)?;
    if let Ok(w) = serde_json::from_str::<Witness>(&text) {
        return Ok(w);
    }
    let v: Verdict = serde_json::from_str(&text).with_context(|| format!("{}: not a witness or verdict", p.display()))?;
    v.witness.ok_or_else(|| anyhow!("{}: the verdict has no witness", p.display()))
}

fn cmd_replay(
    witness: &Path,
    path: &Path,
    mode: RunMode,
    variant: Option<Variant>,
    model: Option<LeakageModel>,
    fuel: u64,
) -> CmdResult {
    let w = load_witness(witness)?;
    let mut s = load_subject(path, &None)?;
    if let Some(v) = variant {
        s.variant = v;
    }
    if let Some(m) = model {
        s.model = m;
    }
    let report = match (mode, &s.program) {
        (RunMode::Spec, Program::Source(p)) => {
            replay(&w, |i| run_spec(p.body(), i, &w.dirs, &s.model, s.variant, fuel))
        }
        (RunMode::Spec, Program::Target(_)) => return Err(Usage(anyhow!("spec replay needs a source program"))),
        (RunMode::Seq, _) => {
            let t = target_of(&s);
            replay(&w, |i| run_seq(t.body(), i, &w.dirs, &s.model, fuel, &mut ()))
        }
    };
    println!("{}", to_json(&report));
    Ok(if report.reproduced { 0 } else { 1 })
}

#[derive(Serialize)]
struct BenchRow {
    name: String,
    variant: String,
    spectre: Variant,
    model: LeakageModel,
    expected: Option<Expected>,
    result: Option<VerdictKind>,
    error: Option<String>,
    ok: bool,
}

fn label<T: Serialize>(v: &T) -> String {
    to_json(v).trim_matches('"').to_string()
}

fn cmd_bench(corpus: &Path, model: Option<LeakageModel>, format: Format, seed: Option<u64>) -> CmdResult {
    let cases = load_corpus(corpus)?;
    if cases.is_empty() {
        return Err(Usage(anyhow!("no corpus cases under {}", corpus.display())));
    }
    let seed = seed.or(env_seed()?);
    let start = Instant::now();
    let mut rows = Vec::new();
    for c in &cases {
        let m = model.unwrap_or(c.model);
        let mut cfg = c.config.clone();
        if let Some(s) = seed {
            cfg.seed = s;
        }
        let expected = (m == c.model).then_some(c.expected);
        let (result, error, ok) = match c.check_with(&m, &cfg) {
            Ok(v) => (Some(v.result), None, expected.map_or(true, |e| e.matches(&v))),
            Err(e) => (None, Some(e.to_string()), false),
        };
        rows.push(BenchRow {
            name: c.name.clone(),
            variant: label(&c.variant),
            spectre: c.spectre,
            model: m,
            expected,
            result,
            error,
            ok,
        });
    }
    let mismatches = rows.iter().filter(|r| !r.ok).count();
    match format {
        Format::Json => println!("{}", to_json(&rows)),
        Format::Text => {
            println!("{:<24} {:<13} {:<3} {:<10} {:<12} {:<22} ok", "case", "variant", "v", "model", "expected", "result");
            for r in &rows {
                let expected = r.expected.map_or("-".to_string(), |e| e.to_string());
                let result = match (&r.result, &r.error) {
                    (Some(k), _) => k.to_string(),
                    (None, Some(e)) => format!("error: {e}"),
                    (None, None) => "-".into(),
                };
                println!(
                    "{:<24} {:<13} {:<3} {:<10} {:<12} {:<22} {}",
                    r.name,
                    r.variant,
                    r.spectre.to_string(),
                    r.model.to_string(),
                    expected,
                    result,
                    if r.ok { "yes" } else { "NO" }
                );
            }
            println!("{} cases, {} mismatches", rows.len(), mismatches);
        }
    }
    eprintln!("bench finished in {:.2}s", start.elapsed().as_secs_f64());
    Ok(if mismatches == 0 { 0 } else { 1 })
}

fn dispatch(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Parse { file, target } => cmd_parse(&file, target),
        Command::Transform { kind, input, output, model, phi } => cmd_transform(kind, &input, &output, &model, &phi),
        Command::Run { mode, program, input, dirs, variant, model, fuel } => {
            cmd_run(mode, &program, &input, &dirs, variant, &model, fuel)
        }
        Command::Check { kind, target, opts, witness_out } => cmd_check(kind, &target, &opts, &witness_out),
        Command::Replay { witness, target, mode, variant, model, fuel } => {
            cmd_replay(&witness, &target, mode, variant, model, fuel)
        }
        Command::Bench { corpus, model, format, seed } => cmd_bench(&corpus, model, format, seed),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
