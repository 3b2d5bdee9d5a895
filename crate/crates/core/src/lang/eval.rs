//! Expression evaluation.

use super::ast::{Binop, Expr, Unop};
use super::int::Int;
use super::value::{List, Value, VarMap};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    /// `hd` or `tl` of an empty list.
    #[error("empty list `{0}`")]
    EmptyList(String),
    #[error("type error: {0}")]
    Type(String),
}

fn type_err<T>(msg: String) -> Result<T, EvalError> {
    Err(EvalError::Type(msg))
}

fn int<'a>(v: &'a Value, op: &str) -> Result<&'a Int, EvalError> {
    v.as_int()
        .ok_or_else(|| EvalError::Type(format!("`{op}` expects int, found {}", v.type_name())))
}

fn boolean(v: &Value, op: &str) -> Result<bool, EvalError> {
    v.as_bool()
        .ok_or_else(|| EvalError::Type(format!("`{op}` expects bool, found {}", v.type_name())))
}

pub fn apply_binop(op: Binop, a: &Value, b: &Value) -> Result<Value, EvalError> {
    let s = op.symbol();
    Ok(match op {
        Binop::Add => Value::Int(int(a, s)?.add(int(b, s)?)),
        Binop::Sub => Value::Int(int(a, s)?.sub(int(b, s)?)),
        Binop::Mul => Value::Int(int(a, s)?.mul(int(b, s)?)),
        Binop::Div => Value::Int(int(a, s)?.div_floor(int(b, s)?).ok_or(EvalError::DivisionByZero)?),
        Binop::Mod => Value::Int(int(a, s)?.mod_floor(int(b, s)?).ok_or(EvalError::DivisionByZero)?),
        Binop::BitAnd => Value::Int(int(a, s)?.bitand(int(b, s)?)),
        Binop::Lt => Value::Bool(int(a, s)? < int(b, s)?),
        Binop::Le => Value::Bool(int(a, s)? <= int(b, s)?),
        Binop::Gt => Value::Bool(int(a, s)? > int(b, s)?),
        Binop::Ge => Value::Bool(int(a, s)? >= int(b, s)?),
        Binop::Eq | Binop::Ne => {
            if std::mem::discriminant(a) != std::mem::discriminant(b) {
                return type_err(format!(
                    "`{s}` compares {} with {}",
                    a.type_name(),
                    b.type_name()
                ));
            }
            Value::Bool((a == b) == (op == Binop::Eq))
        }
        Binop::And => Value::Bool(boolean(a, s)? & boolean(b, s)?),
        Binop::Or => Value::Bool(boolean(a, s)? | boolean(b, s)?),
        Binop::Concat => match (a, b) {
            (Value::List(x), Value::List(y)) => Value::List(x.concat(y)),
            _ => return type_err(format!("`++` expects lists, found {} and {}", a.type_name(), b.type_name())),
        },
    })
}

/// Evaluates `e` under `vars`, reporting every binary operation (with its
/// operand values) to `on_op` in evaluation order: operands left to right,
/// then the operator.
pub fn eval_with(
    e: &Expr,
    vars: &VarMap,
    on_op: &mut impl FnMut(Binop, &Value, &Value),
) -> Result<Value, EvalError> {
    match e {
        Expr::Lit(v) => Ok(v.clone()),
        Expr::Var(x) => Ok(vars.get(x)),
        Expr::Unop(op, a) => {
            let v = eval_with(a, vars, on_op)?;
            match op {
                Unop::Not => Ok(Value::Bool(!boolean(&v, "!")?)),
                Unop::Neg => Ok(Value::Int(int(&v, "-")?.neg())),
                Unop::Log2 => Ok(Value::Int(int(&v, "log2")?.log2_floor())),
            }
        }
        Expr::Binop(op, a, b) => {
            let va = eval_with(a, vars, on_op)?;
            let vb = eval_with(b, vars, on_op)?;
            let r = apply_binop(*op, &va, &vb)?;
            on_op(*op, &va, &vb);
            Ok(r)
        }
        Expr::Select(c, a, b) => {
            let vc = eval_with(c, vars, on_op)?;
            if boolean(&vc, "?:")? {
                eval_with(a, vars, on_op)
            } else {
                eval_with(b, vars, on_op)
            }
        }
        Expr::Head(x) => match vars.get(x) {
            Value::List(l) => l.head().cloned().ok_or_else(|| EvalError::EmptyList(x.to_string())),
            v => type_err(format!("`hd` expects a list, `{x}` is {}", v.type_name())),
        },
        Expr::Tail(x) => match vars.get(x) {
            Value::List(l) => l
                .tail()
                .map(Value::List)
                .ok_or_else(|| EvalError::EmptyList(x.to_string())),
            v => type_err(format!("`tl` expects a list, `{x}` is {}", v.type_name())),
        },
        Expr::List(es) => {
            let mut items = Vec::with_capacity(es.len());
            for e in es {
                items.push(eval_with(e, vars, on_op)?);
            }
            Ok(Value::List(List::new(items)))
        }
    }
}

pub fn eval(e: &Expr, vars: &VarMap) -> Result<Value, EvalError> {
    eval_with(e, vars, &mut |_, _, _| {})
}

pub fn eval_bool(e: &Expr, vars: &VarMap) -> Result<bool, EvalError> {
    let v = eval(e, vars)?;
    boolean(&v, "condition")
}
