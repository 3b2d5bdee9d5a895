//! Leakage instrumentation: makes the trace of a program explicit as a
//! ghost list `obs`.
//!
//! Observations are encoded as list segments: a branch on `b` as `[0, b]`,
//! an access to address `i` as `[1, laddr(i)]`, and a variable-time
//! operation on operands with magnitudes `v1, v2` as `[2, v1, v2]`.

use crate::lang::{Binop, Block, Cmd, Expr, Int, TargetProgram, Value};
use crate::semantics::seq::{guarded_loop_cond, silent_if, RET};
use crate::semantics::{LeakageModel, Observation};

pub const OBS: &str = "obs";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LeakInstError {
    #[error("the program contains assertions; apply assert-elim first")]
    HasAsserts,
    #[error("the program already uses the reserved variable `obs`")]
    UsesObs,
}

/// The expression for the observable part of address `a`.
pub fn laddr_expr(model: &LeakageModel, a: &Expr) -> Expr {
    match model {
        LeakageModel::CacheLine { line } => Expr::bin(Binop::Div, a.clone(), Expr::int(*line as i64)),
        _ => a.clone(),
    }
}

fn concat(parts: Vec<Expr>) -> Option<Expr> {
    parts.into_iter().reduce(|a, b| Expr::bin(Binop::Concat, a, b))
}

fn has_variable_time_op(e: &Expr) -> bool {
    match e {
        Expr::Binop(op, a, b) => {
            op.is_variable_time() || has_variable_time_op(a) || has_variable_time_op(b)
        }
        Expr::Unop(_, a) => has_variable_time_op(a),
        Expr::Select(c, a, b) => {
            has_variable_time_op(c) || has_variable_time_op(a) || has_variable_time_op(b)
        }
        Expr::List(es) => es.iter().any(has_variable_time_op),
        _ => false,
    }
}

/// A list expression whose value is the encoding of the operation
/// observations produced by evaluating `e`, or `None` when `e` can never
/// produce any.
pub fn op_leak_expr(model: &LeakageModel, e: &Expr) -> Option<Expr> {
    if !model.leaks_ops() || !has_variable_time_op(e) {
        return None;
    }
    let empty = || Expr::List(Vec::new());
    Some(match e {
        Expr::Binop(op, a, b) => {
            let mut parts: Vec<Expr> = [op_leak_expr(model, a), op_leak_expr(model, b)]
                .into_iter()
                .flatten()
                .collect();
            if op.is_variable_time() {
                parts.push(Expr::List(vec![
                    Expr::int(2),
                    Expr::log2((**a).clone()),
                    Expr::log2((**b).clone()),
                ]));
            }
            concat(parts).unwrap_or_else(empty)
        }
        Expr::Unop(_, a) => op_leak_expr(model, a).unwrap_or_else(empty),
        Expr::Select(c, a, b) => {
            let arms = Expr::select(
                (**c).clone(),
                op_leak_expr(model, a).unwrap_or_else(empty),
                op_leak_expr(model, b).unwrap_or_else(empty),
            );
            match op_leak_expr(model, c) {
                Some(lc) => Expr::bin(Binop::Concat, lc, arms),
                None => arms,
            }
        }
        Expr::List(es) => concat(es.iter().filter_map(|e| op_leak_expr(model, e)).collect())
            .unwrap_or_else(empty),
        _ => empty(),
    })
}

fn append(seg: Expr) -> Cmd {
    Cmd::assign(OBS, Expr::bin(Binop::Concat, Expr::var(OBS), seg))
}

fn branch_seg(e: &Expr) -> Expr {
    Expr::List(vec![Expr::int(0), e.clone()])
}

fn addr_seg(model: &LeakageModel, a: &Expr) -> Expr {
    Expr::List(vec![Expr::int(1), laddr_expr(model, a)])
}

fn cmd(c: &Cmd, model: &LeakageModel, out: &mut Block) {
    match c {
        Cmd::Assign(_, e) => {
            if let Some(l) = op_leak_expr(model, e) {
                out.push(append(l));
            }
            out.push(c.clone());
        }
        Cmd::Load(_, a) | Cmd::Store(a, _) | Cmd::IndexedLoad(_, a, _) | Cmd::AppendStore(a, _) => {
            out.push(append(addr_seg(model, a)));
            out.push(c.clone());
        }
        Cmd::If(e, a, b) => {
            if silent_if(c).is_none() {
                out.push(append(branch_seg(e)));
            }
            out.push(Cmd::If(e.clone(), block(a, model), block(b, model)));
        }
        Cmd::While(e, body) => {
            let record = match guarded_loop_cond(e) {
                Some(inner) => Cmd::assign(
                    OBS,
                    Expr::select(
                        Expr::var(RET),
                        Expr::var(OBS),
                        Expr::bin(Binop::Concat, Expr::var(OBS), branch_seg(inner)),
                    ),
                ),
                None => append(branch_seg(e)),
            };
            let mut inner = block(body, model);
            inner.push(record.clone());
            out.push(record);
            out.push(Cmd::While(e.clone(), inner));
        }
        other => out.push(other.clone()),
    }
}

fn block(b: &[Cmd], model: &LeakageModel) -> Block {
    let mut out = Vec::with_capacity(b.len());
    for c in b {
        cmd(c, model, &mut out);
    }
    out
}

/// Instruments an assertion-free program so that `obs` accumulates the
/// encoded trace.
pub fn leak_instrument(p: &TargetProgram, model: &LeakageModel) -> Result<TargetProgram, LeakInstError> {
    if p.has_asserts() {
        return Err(LeakInstError::HasAsserts);
    }
    if crate::lang::ast::block_vars(p.body()).iter().any(|x| &**x == OBS) {
        return Err(LeakInstError::UsesObs);
    }
    let mut out = vec![Cmd::assign(OBS, Expr::List(Vec::new()))];
    out.extend(block(p.body(), model));
    Ok(TargetProgram::new(out).expect("instrumentation only emits target commands"))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed observation list at element {0}")]
pub struct DecodeError(pub usize);

/// Decodes the value of `obs` into a trace.
pub fn decode_obs(v: &Value) -> Result<Vec<Observation>, DecodeError> {
    let items = v.as_list().ok_or(DecodeError(0))?.as_slice();
    let int_at = |k: usize| -> Result<Int, DecodeError> {
        items.get(k).and_then(Value::as_int).cloned().ok_or(DecodeError(k))
    };
    let mut out = Vec::new();
    let mut k = 0;
    while k < items.len() {
        let tag = items[k].as_int().and_then(Int::as_i64);
        match tag {
            Some(0) => {
                let b = items.get(k + 1).and_then(Value::as_bool).ok_or(DecodeError(k + 1))?;
                out.push(Observation::Branch(b));
                k += 2;
            }
            Some(1) => {
                out.push(Observation::Addr(int_at(k + 1)?));
                k += 2;
            }
            Some(2) => {
                out.push(Observation::Op(vec![int_at(k + 1)?, int_at(k + 2)?]));
                k += 3;
            }
            _ => return Err(DecodeError(k)),
        }
    }
    Ok(out)
}

/// Encodes a trace in the `obs` list format.
pub fn encode_obs(trace: &[Observation]) -> Value {
    let mut items = Vec::new();
    for o in trace {
        match o {
            Observation::Branch(b) => items.extend([Value::int(0), Value::Bool(*b)]),
            Observation::Addr(i) => items.extend([Value::int(1), Value::Int(i.clone())]),
            Observation::Op(vs) => {
                items.push(Value::int(2));
                items.extend(vs.iter().cloned().map(Value::Int));
            }
        }
    }
    Value::list(items)
}
