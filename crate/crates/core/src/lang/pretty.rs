//! Canonical pretty-printer. Output re-parses to the same syntax tree.

use std::fmt::Write;

use super::ast::{Cmd, Expr, SourceProgram, TargetProgram, Unop};
use super::value::Value;

const INDENT: &str = "    ";
const SELECT_PREC: u8 = 0;
const UNARY_PREC: u8 = 8;

pub fn expr_to_string(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, SELECT_PREC);
    s
}

fn write_value(out: &mut String, v: &Value) {
    match v {
        Value::Int(i) => {
            let _ = write!(out, "{i}");
        }
        Value::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Value::List(l) => {
            out.push('[');
            for (k, v) in l.as_slice().iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                write_value(out, v);
            }
            out.push(']');
        }
    }
}

fn write_expr(out: &mut String, e: &Expr, min_prec: u8) {
    match e {
        Expr::Lit(v) => write_value(out, v),
        Expr::Var(x) => out.push_str(x),
        Expr::Head(x) => {
            let _ = write!(out, "hd({x})");
        }
        Expr::Tail(x) => {
            let _ = write!(out, "tl({x})");
        }
        Expr::List(es) => {
            out.push('[');
            for (k, e) in es.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                write_expr(out, e, SELECT_PREC);
            }
            out.push(']');
        }
        Expr::Unop(Unop::Log2, a) => {
            out.push_str("log2(");
            write_expr(out, a, SELECT_PREC);
            out.push(')');
        }
        Expr::Unop(Unop::Not, a) => {
            out.push('!');
            write_expr(out, a, UNARY_PREC);
        }
        Expr::Unop(Unop::Neg, a) => {
            out.push('-');
            // A bare literal after `-` would re-parse as a negative literal.
            let lit = matches!(**a, Expr::Lit(Value::Int(_)));
            if lit {
                out.push('(');
            }
            write_expr(out, a, UNARY_PREC);
            if lit {
                out.push(')');
            }
        }
        Expr::Binop(op, a, b) => {
            let p = op.precedence();
            let paren = min_prec > p;
            if paren {
                out.push('(');
            }
            write_expr(out, a, p);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, b, p + 1);
            if paren {
                out.push(')');
            }
        }
        Expr::Select(c, a, b) => {
            let paren = min_prec > SELECT_PREC;
            if paren {
                out.push('(');
            }
            write_expr(out, c, 1);
            out.push_str(" ? ");
            write_expr(out, a, SELECT_PREC);
            out.push_str(" : ");
            write_expr(out, b, SELECT_PREC);
            if paren {
                out.push(')');
            }
        }
    }
}

fn write_block(out: &mut String, block: &[Cmd], depth: usize) {
    if block.is_empty() {
        out.push_str("{}");
        return;
    }
    out.push_str("{\n");
    for c in block {
        write_cmd(out, c, depth + 1);
    }
    for _ in 0..depth {
        out.push_str(INDENT);
    }
    out.push('}');
}

fn write_cmd(out: &mut String, c: &Cmd, depth: usize) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
    let e = expr_to_string;
    match c {
        Cmd::Assign(x, v) => {
            let _ = write!(out, "{x} = {};", e(v));
        }
        Cmd::Load(x, a) => {
            let _ = write!(out, "{x} <- [{}];", e(a));
        }
        Cmd::Store(a, x) => {
            let _ = write!(out, "[{}] <- {x};", e(a));
        }
        Cmd::InitMsf => out.push_str("init_msf;"),
        Cmd::UpdateMsf(v) => {
            let _ = write!(out, "update_msf {};", e(v));
        }
        Cmd::Protect(x, v) => {
            let _ = write!(out, "{x} = protect({});", e(v));
        }
        Cmd::If(c, a, b) if a.is_empty() && b.is_empty() => {
            let _ = write!(out, "leak {};", e(c));
        }
        Cmd::If(c, a, b) => {
            let _ = write!(out, "if {} ", e(c));
            write_block(out, a, depth);
            out.push_str(" else ");
            write_block(out, b, depth);
        }
        Cmd::While(c, body) => {
            let _ = write!(out, "while {} ", e(c));
            write_block(out, body, depth);
        }
        Cmd::Skip => out.push_str("skip;"),
        Cmd::Assert(v) => {
            let _ = write!(out, "assert {};", e(v));
        }
        Cmd::IndexedLoad(x, a, n) => {
            let _ = write!(out, "{x} <- [{}] @ {};", e(a), e(n));
        }
        Cmd::AppendStore(a, x) => {
            let _ = write!(out, "[{}] <+ {x};", e(a));
        }
        Cmd::ClearMem => out.push_str("clear_mem;"),
    }
    out.push('\n');
}

pub fn block_to_string(block: &[Cmd]) -> String {
    let mut out = String::new();
    for c in block {
        write_cmd(&mut out, c, 0);
    }
    out
}

pub fn source_to_string(p: &SourceProgram) -> String {
    block_to_string(p.body())
}

pub fn target_to_string(p: &TargetProgram) -> String {
    block_to_string(p.body())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::{parse_expr, parse_source};

    #[test]
    fn nested_blocks_indent_by_four() {
        let p = parse_source("if a { while b { x = 1; } } else { leak c; }").unwrap();
        assert_eq!(
            source_to_string(&p),
            "if a {\n    while b {\n        x = 1;\n    }\n} else {\n    leak c;\n}\n"
        );
    }

    #[test]
    fn minimal_parentheses() {
        for (src, want) in [
            ("(1 + 2) * 3", "(1 + 2) * 3"),
            ("1 + (2 + 3)", "1 + (2 + 3)"),
            ("(1 + 2) + 3", "1 + 2 + 3"),
            ("!(a && b)", "!(a && b)"),
            ("(c ? 1 : 2) + 1", "(c ? 1 : 2) + 1"),
            ("-(5)", "-(5)"),
            ("x - -5", "x - -5"),
            ("--5", "-(-5)"),
        ] {
            let e = parse_expr(src).unwrap();
            assert_eq!(expr_to_string(&e), want);
            assert_eq!(parse_expr(want).unwrap(), e);
        }
    }
}
