//! Assertion elimination.
//!
//! A failing `assert e` becomes `ret = ret || !e`, and everything that could
//! run after a command that may set `ret` is guarded by `if !ret`. Loops
//! whose body may set `ret` get the condition `!ret && e`. The sequential
//! semantics treats these guards as silent, so the result has the same trace
//! as the original and ends in the same state (up to `ret`), with `ret` true
//! exactly when an assertion failed.

use crate::lang::{Binop, Block, Cmd, Expr, TargetProgram};
use crate::semantics::seq::RET;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AssertElimError {
    #[error("the program already uses the reserved flag `ret`")]
    UsesRet,
}

fn may_fail(c: &Cmd) -> bool {
    let mut found = false;
    c.walk(&mut |c| found |= matches!(c, Cmd::Assert(_)));
    found
}

fn not_ret() -> Expr {
    Expr::not(Expr::var(RET))
}

fn cmd(c: &Cmd) -> Cmd {
    match c {
        Cmd::Assert(e) => Cmd::assign(RET, Expr::bin(Binop::Or, Expr::var(RET), Expr::not(e.clone()))),
        Cmd::If(e, a, b) => Cmd::If(e.clone(), block(a), block(b)),
        Cmd::While(e, body) if may_fail(c) => {
            Cmd::While(Expr::bin(Binop::And, not_ret(), e.clone()), block(body))
        }
        other => other.clone(),
    }
}

fn block(b: &[Cmd]) -> Block {
    let mut out = Vec::with_capacity(b.len());
    for (i, c) in b.iter().enumerate() {
        out.push(cmd(c));
        let rest = &b[i + 1..];
        if may_fail(c) && !rest.is_empty() {
            out.push(Cmd::If(not_ret(), block(rest), Vec::new()));
            break;
        }
    }
    out
}

/// Replaces assertions by updates of the halt flag `ret`.
pub fn assert_elim(p: &TargetProgram) -> Result<TargetProgram, AssertElimError> {
    if crate::lang::ast::block_vars(p.body()).iter().any(|x| &**x == RET) {
        return Err(AssertElimError::UsesRet);
    }
    let mut out = vec![Cmd::assign(RET, Expr::bool(false))];
    out.extend(block(p.body()));
    Ok(TargetProgram::new(out).expect("assert elimination only emits target commands"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_target, target_to_string};

    #[test]
    fn guards_the_rest_of_the_block() {
        let p = parse_target("x = 1; assert x > 0; y = 2; while c { assert y; y = 3; } z = 4;").unwrap();
        let q = assert_elim(&p).unwrap();
        assert_eq!(
            target_to_string(&q),
            "ret = false;\nx = 1;\nret = ret || !(x > 0);\nif !ret {\n    y = 2;\n    while !ret && c {\n        ret = ret || !y;\n        if !ret {\n            y = 3;\n        } else {}\n    }\n    if !ret {\n        z = 4;\n    } else {}\n} else {}\n"
        );
        assert!(!q.has_asserts());
    }

    #[test]
    fn rejects_programs_using_ret() {
        let p = parse_target("ret = 1;").unwrap();
        assert_eq!(assert_elim(&p), Err(AssertElimError::UsesRet));
    }
}
