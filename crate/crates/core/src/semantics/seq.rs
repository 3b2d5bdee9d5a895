//! Sequential semantics of target programs.
//!
//! Directives, when used, are an ordinary list-valued input variable `dir`.
//! Code guarded on the halt flag `ret` (as produced by assert elimination) is
//! executed silently: `if !ret {..} else {}` observes nothing, and the
//! condition of `while !ret && e {..}` is observed only while `ret` is false
//! (and `e` is only evaluated then).

use crate::lang::{eval, eval_with, Binop, Cmd, EvalError, Expr, Int, Memory, Unop, Value, VarMap};

use super::{Cont, Directive, Input, LeakageModel, Observation, RunResult, Status};

/// The distinguished halt flag introduced by assert elimination.
pub const RET: &str = "ret";

/// Matches the guard `!ret`.
pub fn is_ret_guard(e: &Expr) -> bool {
    matches!(e, Expr::Unop(Unop::Not, a) if matches!(&**a, Expr::Var(x) if &**x == RET))
}

/// Matches a silent conditional `if !ret {..} else {}`.
pub fn silent_if(cmd: &Cmd) -> Option<&[Cmd]> {
    match cmd {
        Cmd::If(c, a, b) if b.is_empty() && is_ret_guard(c) => Some(a),
        _ => None,
    }
}

/// Matches a guarded loop `while !ret && e {..}`, returning `e`.
pub fn guarded_loop_cond(cond: &Expr) -> Option<&Expr> {
    match cond {
        Expr::Binop(Binop::And, g, e) if is_ret_guard(g) => Some(e),
        _ => None,
    }
}

/// Hook invoked before each command executes.
pub trait SeqObserver {
    fn before(&mut self, cmd: &Cmd, vars: &VarMap, mem: &Memory, trace_len: usize);
}

impl SeqObserver for () {
    fn before(&mut self, _: &Cmd, _: &VarMap, _: &Memory, _: usize) {}
}

enum Stop {
    Assert,
    Runtime(EvalError),
    Other(String),
}

impl From<EvalError> for Stop {
    fn from(e: EvalError) -> Stop {
        Stop::Runtime(e)
    }
}

fn address(v: Value) -> Result<Int, Stop> {
    match v {
        Value::Int(a) if !a.is_negative() => Ok(a),
        Value::Int(a) => Err(Stop::Other(format!("negative address {a}"))),
        v => Err(Stop::Other(format!("type error: address is {}", v.type_name()))),
    }
}

fn as_bool(v: Value, what: &str) -> Result<bool, Stop> {
    match v {
        Value::Bool(b) => Ok(b),
        v => Err(Stop::Other(format!("type error: {what} is {}", v.type_name()))),
    }
}

/// A sequential machine state.
pub struct SeqState<'p> {
    cont: Cont<'p>,
    pub vars: VarMap,
    pub mem: Memory,
}

impl<'p> SeqState<'p> {
    pub fn new(body: &'p [Cmd], vars: VarMap, mem: Memory) -> SeqState<'p> {
        SeqState { cont: Cont::new(body), vars, mem }
    }

    fn eval_leaking(
        &self,
        e: &Expr,
        model: &LeakageModel,
        trace: &mut Vec<Observation>,
    ) -> Result<Value, EvalError> {
        if model.leaks_ops() {
            eval_with(e, &self.vars, &mut |op, a, b| {
                if let Some(o) = model.lop(op, a, b) {
                    trace.push(o);
                }
            })
        } else {
            eval(e, &self.vars)
        }
    }

    fn step(&mut self, cmd: &'p Cmd, model: &LeakageModel, trace: &mut Vec<Observation>) -> Result<(), Stop> {
        match cmd {
            Cmd::Skip => self.cont.advance(),
            Cmd::Assign(x, e) => {
                let v = self.eval_leaking(e, model, trace)?;
                self.vars.set(x.clone(), v);
                self.cont.advance();
            }
            Cmd::Load(x, e) => {
                let a = address(eval(e, &self.vars)?)?;
                trace.push(Observation::Addr(model.laddr(&a)));
                let v = self.mem.read(&a);
                self.vars.set(x.clone(), v);
                self.cont.advance();
            }
            Cmd::Store(e, x) => {
                let a = address(eval(e, &self.vars)?)?;
                trace.push(Observation::Addr(model.laddr(&a)));
                self.mem.write(a, self.vars.get(x));
                self.cont.advance();
            }
            Cmd::IndexedLoad(x, e, n) => {
                let a = eval(e, &self.vars)?;
                let n = match eval(n, &self.vars)? {
                    Value::Int(n) => n,
                    v => return Err(Stop::Other(format!("type error: load index is {}", v.type_name()))),
                };
                let a = address(a)?;
                let v = n
                    .to_usize()
                    .and_then(|k| self.mem.read_at(&a, k))
                    .ok_or_else(|| Stop::Other(format!("load index {n} exceeds the history of cell {a}")))?;
                trace.push(Observation::Addr(model.laddr(&a)));
                self.vars.set(x.clone(), v);
                self.cont.advance();
            }
            Cmd::AppendStore(e, x) => {
                let a = address(eval(e, &self.vars)?)?;
                trace.push(Observation::Addr(model.laddr(&a)));
                self.mem.append(a, self.vars.get(x));
                self.cont.advance();
            }
            Cmd::ClearMem => {
                self.mem.clear_histories();
                self.cont.advance();
            }
            Cmd::Assert(e) => {
                if !as_bool(self.eval_leaking(e, model, trace)?, "assertion")? {
                    return Err(Stop::Assert);
                }
                self.cont.advance();
            }
            Cmd::If(c, a, b) => {
                let v = as_bool(eval(c, &self.vars)?, "condition")?;
                if silent_if(cmd).is_none() {
                    trace.push(Observation::Branch(v));
                }
                self.cont.advance();
                self.cont.push(if v { a } else { b });
            }
            Cmd::While(c, body) => {
                let v = match guarded_loop_cond(c) {
                    Some(e) => {
                        if as_bool(self.vars.get(RET), "ret")? {
                            false
                        } else {
                            let v = as_bool(eval(e, &self.vars)?, "condition")?;
                            trace.push(Observation::Branch(v));
                            v
                        }
                    }
                    None => {
                        let v = as_bool(eval(c, &self.vars)?, "condition")?;
                        trace.push(Observation::Branch(v));
                        v
                    }
                };
                if v {
                    self.cont.push(body);
                } else {
                    self.cont.advance();
                }
            }
            Cmd::InitMsf | Cmd::UpdateMsf(_) | Cmd::Protect(..) => {
                return Err(Stop::Other("source-only command in a target program".into()))
            }
        }
        Ok(())
    }
}

/// Runs a target program from the given variables and memory. No
/// directive list is installed; see [`run_seq`].
pub fn run_target(
    body: &[Cmd],
    vars: VarMap,
    mem: Memory,
    model: &LeakageModel,
    fuel: u64,
    observer: &mut dyn SeqObserver,
) -> RunResult {
    let mut st = SeqState::new(body, vars, mem);
    let mut trace = Vec::new();
    let mut steps = 0;
    let (status, error) = loop {
        let Some(cmd) = st.cont.current() else { break (Status::Completed, None) };
        if steps >= fuel {
            break (Status::OutOfFuel, None);
        }
        observer.before(cmd, &st.vars, &st.mem, trace.len());
        match st.step(cmd, model, &mut trace) {
            Ok(()) => steps += 1,
            Err(Stop::Assert) => break (Status::AssertError, None),
            Err(Stop::Runtime(EvalError::EmptyList(x))) => {
                break (Status::OutOfDirectives, Some(format!("empty list `{x}`")))
            }
            Err(Stop::Runtime(e)) => break (Status::RuntimeError, Some(e.to_string())),
            Err(Stop::Other(m)) => break (Status::RuntimeError, Some(m)),
        }
    };
    RunResult {
        status,
        steps,
        consumed: 0,
        trace,
        vars: st.vars,
        mem: st.mem,
        ms: None,
        error,
        wanted: None,
    }
}

/// The `dir` list encoding a directive sequence.
pub fn dir_value(directives: &[Directive]) -> Value {
    Value::list(directives.iter().map(|d| d.to_value()).collect())
}

/// Runs a target program with `directives` installed as the list `dir`.
pub fn run_seq(
    body: &[Cmd],
    input: &Input,
    directives: &[Directive],
    model: &LeakageModel,
    fuel: u64,
    observer: &mut dyn SeqObserver,
) -> RunResult {
    let mut vars = input.vars.clone();
    vars.set("dir".into(), dir_value(directives));
    let mut r = run_target(body, vars, input.mem.clone(), model, fuel, observer);
    let left = match r.vars.get_ref("dir") {
        Some(Value::List(l)) => l.len(),
        _ => 0,
    };
    r.consumed = directives.len().saturating_sub(left);
    r
}
