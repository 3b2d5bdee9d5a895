//! Speculative semantics of source programs.
//!
//! Every branch consumes a `Force` directive that decides which way
//! execution goes; disagreeing with the condition sets the misspeculation
//! flag. Under [`Variant::V4`] every load also consumes a `Load(n)` directive
//! choosing which earlier write of the cell is read. `init_msf` under
//! misspeculation halts the run.

use crate::lang::{eval, eval_with, Cmd, EvalError, Expr, Ident, Int, Memory, Value, VarMap};

use super::{Cont, Directive, DirectiveKind, Input, LeakageModel, Observation, RunResult, Status, Variant};

/// Why a step could not proceed normally.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stop {
    FenceHalt,
    OutOfDirectives(DirectiveKind),
    Runtime(String),
}

impl From<EvalError> for Stop {
    fn from(e: EvalError) -> Stop {
        Stop::Runtime(e.to_string())
    }
}

/// A speculative machine state.
#[derive(Debug, Clone)]
pub struct SpecState<'p> {
    cont: Cont<'p>,
    pub vars: VarMap,
    pub mem: Memory,
    pub ms: bool,
}

fn msf() -> Ident {
    Ident::new("msf")
}

fn address(v: Value) -> Result<Int, Stop> {
    match v {
        Value::Int(a) if !a.is_negative() => Ok(a),
        Value::Int(a) => Err(Stop::Runtime(format!("negative address {a}"))),
        v => Err(Stop::Runtime(format!("type error: address is {}", v.type_name()))),
    }
}

impl<'p> SpecState<'p> {
    pub fn new(body: &'p [Cmd], input: &Input) -> SpecState<'p> {
        SpecState {
            cont: Cont::new(body),
            vars: input.vars.clone(),
            mem: input.mem.clone(),
            ms: false,
        }
    }

    pub fn is_final(&mut self) -> bool {
        self.cont.current().is_none()
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

    fn cond(&self, e: &Expr) -> Result<bool, Stop> {
        match eval(e, &self.vars)? {
            Value::Bool(b) => Ok(b),
            v => Err(Stop::Runtime(format!("type error: condition is {}", v.type_name()))),
        }
    }

    fn force(&self, pending: &[Directive]) -> Result<bool, Stop> {
        match pending.first() {
            Some(Directive::Force(b)) => Ok(*b),
            _ => Err(Stop::OutOfDirectives(DirectiveKind::Force)),
        }
    }

    /// Executes one command. Observations are appended to `trace`; the
    /// return value is the number of directives consumed.
    pub fn step(
        &mut self,
        pending: &[Directive],
        model: &LeakageModel,
        variant: Variant,
        trace: &mut Vec<Observation>,
    ) -> Result<usize, Stop> {
        let Some(cmd) = self.cont.current() else { return Ok(0) };
        match cmd {
            Cmd::Skip => {
                self.cont.advance();
                Ok(0)
            }
            Cmd::Assign(x, e) => {
                let v = self.eval_leaking(e, model, trace)?;
                self.vars.set(x.clone(), v);
                self.cont.advance();
                Ok(0)
            }
            Cmd::Load(x, e) => {
                let a = eval(e, &self.vars)?;
                let (n, used) = match variant {
                    Variant::V1 => (0, 0),
                    Variant::V4 => match pending.first() {
                        Some(Directive::Load(n)) => (*n as usize, 1),
                        _ => return Err(Stop::OutOfDirectives(DirectiveKind::Load)),
                    },
                };
                let a = address(a)?;
                let v = self.mem.read_at(&a, n).ok_or_else(|| {
                    Stop::Runtime(format!("load index {n} exceeds the history of cell {a}"))
                })?;
                trace.push(Observation::Addr(model.laddr(&a)));
                if n != 0 {
                    self.ms = true;
                }
                self.vars.set(x.clone(), v);
                self.cont.advance();
                Ok(used)
            }
            Cmd::Store(e, x) => {
                let a = address(eval(e, &self.vars)?)?;
                trace.push(Observation::Addr(model.laddr(&a)));
                let v = self.vars.get(x);
                match variant {
                    Variant::V1 => self.mem.write(a, v),
                    Variant::V4 => self.mem.append(a, v),
                }
                self.cont.advance();
                Ok(0)
            }
            Cmd::InitMsf => {
                if self.ms {
                    return Err(Stop::FenceHalt);
                }
                self.vars.set(msf(), Value::Bool(false));
                if variant == Variant::V4 {
                    self.mem.clear_histories();
                }
                self.cont.advance();
                Ok(0)
            }
            Cmd::UpdateMsf(e) => {
                let v = self.eval_leaking(e, model, trace)?;
                match v {
                    Value::Bool(true) => {}
                    Value::Bool(false) => self.vars.set(msf(), Value::Bool(true)),
                    v => {
                        return Err(Stop::Runtime(format!(
                            "type error: update_msf expects bool, found {}",
                            v.type_name()
                        )))
                    }
                }
                self.cont.advance();
                Ok(0)
            }
            Cmd::Protect(x, e) => {
                let v = match self.vars.get(&msf()) {
                    Value::Bool(true) => Value::int(0),
                    Value::Bool(false) => self.eval_leaking(e, model, trace)?,
                    v => {
                        return Err(Stop::Runtime(format!(
                            "type error: msf is {}",
                            v.type_name()
                        )))
                    }
                };
                self.vars.set(x.clone(), v);
                self.cont.advance();
                Ok(0)
            }
            Cmd::If(e, a, b) => {
                let actual = self.cond(e)?;
                trace.push(Observation::Branch(actual));
                let taken = self.force(pending)?;
                self.ms |= taken != actual;
                self.eval_leaking(e, model, trace)?;
                self.cont.advance();
                self.cont.push(if taken { a } else { b });
                Ok(1)
            }
            Cmd::While(e, body) => {
                let actual = self.cond(e)?;
                trace.push(Observation::Branch(actual));
                let taken = self.force(pending)?;
                self.ms |= taken != actual;
                self.eval_leaking(e, model, trace)?;
                if taken {
                    self.cont.push(body);
                } else {
                    self.cont.advance();
                }
                Ok(1)
            }
            Cmd::Assert(_) | Cmd::IndexedLoad(..) | Cmd::AppendStore(..) | Cmd::ClearMem => Err(
                Stop::Runtime("target-only command in a source program".into()),
            ),
        }
    }
}

/// Runs a source program under the speculative semantics.
pub fn run_spec(
    body: &[Cmd],
    input: &Input,
    directives: &[Directive],
    model: &LeakageModel,
    variant: Variant,
    fuel: u64,
) -> RunResult {
    let mut st = SpecState::new(body, input);
    let mut trace = Vec::new();
    let mut consumed = 0;
    let mut steps = 0;
    let (status, error, wanted) = loop {
        if st.is_final() {
            break (Status::Completed, None, None);
        }
        if steps >= fuel {
            break (Status::OutOfFuel, None, None);
        }
        match st.step(&directives[consumed..], model, variant, &mut trace) {
            Ok(n) => {
                consumed += n;
                steps += 1;
            }
            Err(Stop::FenceHalt) => break (Status::FenceHalt, None, None),
            Err(Stop::OutOfDirectives(k)) => break (Status::OutOfDirectives, None, Some(k)),
            Err(Stop::Runtime(m)) => break (Status::RuntimeError, Some(m), None),
        }
    };
    RunResult {
        status,
        steps,
        consumed,
        trace,
        vars: st.vars,
        mem: st.mem,
        ms: Some(st.ms),
        error,
        wanted,
    }
}
