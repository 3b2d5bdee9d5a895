//! Dynamic taint tracking over sequential runs of target programs.
//!
//! Secret inputs are tainted. Taint flows through assignments and memory
//! (per history entry), and a selection takes the taint of its condition
//! and of the arm it picks. A run is flagged when a tainted value decides a
//! branch, forms an address, or (under variable-time leakage) is an operand
//! of a division. The directive list `dir` is public. Silent guards on the
//! halt flag are never flagged.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::lang::{eval, Cmd, Expr, Ident, Int, Memory, Value, VarMap};
use crate::semantics::seq::{guarded_loop_cond, silent_if, SeqObserver, RET};
use crate::semantics::{run_seq, Directive, Input, LeakageModel, RunResult};
use crate::transform::PhiSpec;

use super::config::{GenConfig, Strategy};
use super::inputs::{InputSpace, Loc};
use super::search::{gen_directives, trial_rng};
use super::verdict::{Verdict, VerdictKind, Witness};
use super::CheckError;

/// A flagged observation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaintFlag {
    /// Index of the flagged observation in the trace.
    pub observation: usize,
    pub reason: String,
}

struct Tracker<'m> {
    vars: BTreeSet<Ident>,
    mem: BTreeMap<Int, Vec<bool>>,
    model: &'m LeakageModel,
    flag: Option<TaintFlag>,
}

impl Tracker<'_> {
    fn var(&self, x: &str) -> bool {
        self.vars.contains(x)
    }

    fn set_var(&mut self, x: &Ident, t: bool) {
        if t {
            self.vars.insert(x.clone());
        } else {
            self.vars.remove(x);
        }
    }

    fn expr(&self, e: &Expr, vars: &VarMap) -> bool {
        match e {
            Expr::Lit(_) => false,
            Expr::Var(x) | Expr::Head(x) | Expr::Tail(x) => self.var(x),
            Expr::Unop(_, a) => self.expr(a, vars),
            Expr::Binop(_, a, b) => self.expr(a, vars) || self.expr(b, vars),
            Expr::Select(c, a, b) => {
                self.expr(c, vars)
                    || match eval(c, vars) {
                        Ok(Value::Bool(true)) => self.expr(a, vars),
                        Ok(Value::Bool(false)) => self.expr(b, vars),
                        _ => self.expr(a, vars) || self.expr(b, vars),
                    }
            }
            Expr::List(es) => es.iter().any(|e| self.expr(e, vars)),
        }
    }

    /// Walks the variable-time operations `e` will perform, in the order
    /// their observations are emitted, returning how many there are and the
    /// position of the first one with a tainted operand.
    fn ops(&self, e: &Expr, vars: &VarMap, count: &mut usize, first: &mut Option<usize>) {
        match e {
            Expr::Lit(_) | Expr::Var(_) | Expr::Head(_) | Expr::Tail(_) => {}
            Expr::Unop(_, a) => self.ops(a, vars, count, first),
            Expr::Binop(op, a, b) => {
                self.ops(a, vars, count, first);
                self.ops(b, vars, count, first);
                if op.is_variable_time() {
                    if first.is_none() && (self.expr(a, vars) || self.expr(b, vars)) {
                        *first = Some(*count);
                    }
                    *count += 1;
                }
            }
            Expr::Select(c, a, b) => {
                self.ops(c, vars, count, first);
                match eval(c, vars) {
                    Ok(Value::Bool(true)) => self.ops(a, vars, count, first),
                    Ok(Value::Bool(false)) => self.ops(b, vars, count, first),
                    _ => {}
                }
            }
            Expr::List(es) => es.iter().for_each(|e| self.ops(e, vars, count, first)),
        }
    }

    fn raise(&mut self, observation: usize, reason: impl Into<String>) {
        if self.flag.is_none() {
            self.flag = Some(TaintFlag { observation, reason: reason.into() });
        }
    }

    fn address(&self, e: &Expr, vars: &VarMap) -> Option<Int> {
        match eval(e, vars) {
            Ok(Value::Int(a)) if !a.is_negative() => Some(a),
            _ => None,
        }
    }

    fn cell(&self, a: &Int) -> &[bool] {
        self.mem.get(a).map(Vec::as_slice).unwrap_or(&[false])
    }
}

impl SeqObserver for Tracker<'_> {
    fn before(&mut self, cmd: &Cmd, vars: &VarMap, _mem: &Memory, at: usize) {
        match cmd {
            Cmd::Assign(x, e) => {
                if self.model.leaks_ops() {
                    let (mut count, mut first) = (0, None);
                    self.ops(e, vars, &mut count, &mut first);
                    if let Some(k) = first {
                        self.raise(at + k, format!("tainted operand of a division in `{x} = ..`"));
                    }
                }
                let t = self.expr(e, vars);
                self.set_var(x, t);
            }
            Cmd::Assert(e) if self.model.leaks_ops() => {
                let (mut count, mut first) = (0, None);
                self.ops(e, vars, &mut count, &mut first);
                if let Some(k) = first {
                    self.raise(at + k, "tainted operand of a division in an assertion");
                }
            }
            Cmd::Load(x, a) | Cmd::IndexedLoad(x, a, _) => {
                if self.expr(a, vars) {
                    self.raise(at, format!("tainted address in load into `{x}`"));
                }
                let t = match (self.address(a, vars), cmd) {
                    (Some(addr), Cmd::IndexedLoad(_, _, n)) => {
                        let hist = self.cell(&addr);
                        let k = match eval(n, vars) {
                            Ok(Value::Int(n)) => n.to_usize(),
                            _ => None,
                        };
                        let base = k.and_then(|k| hist.len().checked_sub(1 + k).map(|i| hist[i])).unwrap_or(false);
                        base || self.expr(n, vars)
                    }
                    (Some(addr), _) => self.cell(&addr).last().copied().unwrap_or(false),
                    (None, _) => false,
                };
                self.set_var(x, t);
            }
            Cmd::Store(a, x) | Cmd::AppendStore(a, x) => {
                if self.expr(a, vars) {
                    self.raise(at, format!("tainted address in store of `{x}`"));
                }
                if let Some(addr) = self.address(a, vars) {
                    let t = self.var(x);
                    let append = matches!(cmd, Cmd::AppendStore(..));
                    let hist = self.mem.entry(addr).or_insert_with(|| vec![false]);
                    if append {
                        hist.push(t);
                    } else {
                        *hist = vec![t];
                    }
                }
            }
            Cmd::ClearMem => {
                for h in self.mem.values_mut() {
                    let last = h.last().copied().unwrap_or(false);
                    *h = vec![last];
                }
            }
            Cmd::If(c, _, _) if silent_if(cmd).is_none() => {
                if self.expr(c, vars) {
                    self.raise(at, "tainted branch condition");
                }
            }
            Cmd::While(c, _) => {
                let (cond, live) = match guarded_loop_cond(c) {
                    Some(e) => (e, !matches!(vars.get_ref(RET), Some(Value::Bool(true)))),
                    None => (c, true),
                };
                if live && self.expr(cond, vars) {
                    self.raise(at, "tainted loop condition");
                }
            }
            _ => {}
        }
    }
}

/// Runs `p` on one input with taint tracking. Secret locations are those
/// of `space`.
pub fn taint_run(
    p: &[Cmd],
    space: &InputSpace,
    input: &Input,
    dirs: &[Directive],
    model: &LeakageModel,
    fuel: u64,
) -> (RunResult, Option<TaintFlag>) {
    let mut t = Tracker { vars: BTreeSet::new(), mem: BTreeMap::new(), model, flag: None };
    for (loc, _) in &space.secret {
        match loc {
            Loc::Var(x) => {
                t.vars.insert(x.clone());
            }
            Loc::Cell(a) => {
                t.mem.insert(a.clone(), vec![true]);
            }
        }
    }
    let r = run_seq(p, input, dirs, model, fuel, &mut t);
    let flag = t.flag.filter(|f| f.observation < r.trace.len());
    (r, flag)
}

/// Runs the taint tracker on `cfg.trials` sampled inputs and directive
/// lists. A flag is reported as a violation whose witness pairs the flagged
/// input with a related one; the flag is a potential leak, so the two
/// traces need not actually differ.
pub fn check_taint(
    p: &[Cmd],
    phi: &PhiSpec,
    model: &LeakageModel,
    variant: crate::semantics::Variant,
    cfg: &GenConfig,
) -> Result<Verdict, CheckError> {
    let space = InputSpace::new(p, phi, cfg);
    let strategy = match cfg.strategy {
        Strategy::Enumerate => Strategy::Random { p: 0.5 },
        s => s,
    };
    space.gen_pair(&mut trial_rng(cfg.seed, u64::MAX))?;
    let found = (0..cfg.trials)
        .into_par_iter()
        .map(|t| -> Result<Option<Witness>, CheckError> {
            let mut rng = trial_rng(cfg.seed, t);
            let (i1, i2) = space.gen_pair(&mut rng)?;
            let d = gen_directives(strategy, variant, cfg, &mut rng);
            let (_, flag) = taint_run(p, &space, &i1, &d, model, cfg.fuel);
            Ok(flag.map(|f| Witness { i1, i2, dirs: d, divergence: f.observation, partial: false }))
        })
        .collect::<Vec<_>>();
    for w in found {
        if let Some(w) = w? {
            return Ok(Verdict { result: VerdictKind::Violation, trials: cfg.trials, seed: cfg.seed, witness: Some(w) });
        }
    }
    Ok(Verdict { result: VerdictKind::NoViolationBounded, trials: cfg.trials, seed: cfg.seed, witness: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_target;

    fn flag(src: &str, model: LeakageModel) -> Option<TaintFlag> {
        let p = parse_target(src).unwrap();
        let phi = PhiSpec::public(&["x"]);
        let space = InputSpace::new(p.body(), &phi, &GenConfig::default());
        let mut input = Input::default();
        input.vars.set("x".into(), Value::int(1));
        input.vars.set("s".into(), Value::int(2));
        taint_run(p.body(), &space, &input, &[], &model, 1000).1
    }

    #[test]
    fn flags_secret_dependent_observations() {
        assert_eq!(flag("if s < 1 { y = 1; } else {}", LeakageModel::Baseline).unwrap().observation, 0);
        assert_eq!(flag("leak x < 1; y <- [s];", LeakageModel::Baseline).unwrap().observation, 1);
        assert_eq!(flag("y = x / 1 + s / 1;", LeakageModel::VariableTime).unwrap().observation, 1);
        assert!(flag("y = s / 1;", LeakageModel::Baseline).is_none());
    }

    #[test]
    fn taint_flows_through_memory_and_selection() {
        assert!(flag("[0] <- s; y <- [0]; leak y == 0;", LeakageModel::Baseline).is_some());
        assert!(flag("[0] <- s; [0] <- x; y <- [0]; leak y == 0;", LeakageModel::Baseline).is_none());
        assert!(flag("y = x < 5 ? x : s; leak y == 0;", LeakageModel::Baseline).is_none());
        assert!(flag("y = s < 5 ? x : x; leak y == 0;", LeakageModel::Baseline).is_some());
    }
}
