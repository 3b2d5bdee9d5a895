//! The speculation-passing transformation.
//!
//! Directives become the input list `dir` and the misspeculation flag
//! becomes the variable `ms`. Each branch first leaks its actual condition,
//! then branches on the head of `dir`, recording in `ms` whether the forced
//! direction disagrees with the condition.

use crate::lang::{Binop, Block, Cmd, Expr, Ident, SourceProgram, TargetProgram};
use crate::semantics::Variant;

const DIR: &str = "dir";
const MS: &str = "ms";
const MSF: &str = "msf";

fn ms_or(e: Expr) -> Cmd {
    Cmd::assign(MS, Expr::bin(Binop::Or, Expr::var(MS), e))
}

fn pop_dir() -> Cmd {
    Cmd::assign(DIR, Expr::tail(DIR))
}

fn cmd(c: &Cmd, variant: Variant, out: &mut Block) {
    match c {
        Cmd::If(e, a, b) => {
            let mut then = vec![pop_dir(), ms_or(Expr::not(e.clone()))];
            then.extend(block(a, variant));
            let mut els = vec![pop_dir(), ms_or(e.clone())];
            els.extend(block(b, variant));
            out.push(Cmd::leak(e.clone()));
            out.push(Cmd::If(Expr::head(DIR), then, els));
        }
        Cmd::While(e, body) => {
            let mut inner = vec![pop_dir(), ms_or(Expr::not(e.clone()))];
            inner.extend(block(body, variant));
            inner.push(Cmd::leak(e.clone()));
            out.push(Cmd::leak(e.clone()));
            out.push(Cmd::While(Expr::head(DIR), inner));
            out.push(pop_dir());
            out.push(ms_or(e.clone()));
        }
        Cmd::InitMsf => {
            out.push(Cmd::Assert(Expr::not(Expr::var(MS))));
            out.push(Cmd::assign(MSF, Expr::bool(false)));
            if variant == Variant::V4 {
                out.push(Cmd::ClearMem);
            }
        }
        Cmd::UpdateMsf(e) => {
            out.push(Cmd::assign(MSF, Expr::select(e.clone(), Expr::var(MSF), Expr::bool(true))));
        }
        Cmd::Protect(x, e) => {
            out.push(Cmd::Assign(x.clone(), Expr::select(Expr::var(MSF), Expr::int(0), e.clone())));
        }
        Cmd::Load(x, e) if variant == Variant::V4 => {
            out.push(Cmd::IndexedLoad(x.clone(), e.clone(), Expr::head(DIR)));
            out.push(ms_or(Expr::bin(Binop::Ne, Expr::head(DIR), Expr::int(0))));
            out.push(pop_dir());
        }
        Cmd::Store(e, x) if variant == Variant::V4 => {
            out.push(Cmd::AppendStore(e.clone(), x.clone()));
        }
        other => out.push(other.clone()),
    }
}

fn block(b: &[Cmd], variant: Variant) -> Block {
    let mut out = Vec::with_capacity(b.len());
    for c in b {
        cmd(c, variant, &mut out);
    }
    out
}

fn transform(p: &SourceProgram, variant: Variant) -> TargetProgram {
    let mut out = vec![Cmd::Assign(Ident::new(MS), Expr::bool(false))];
    out.extend(block(p.body(), variant));
    TargetProgram::new(out).expect("the transformation only emits target commands")
}

/// Speculation-passing style for branch misprediction.
pub fn sps(p: &SourceProgram) -> TargetProgram {
    transform(p, Variant::V1)
}

/// Speculation-passing style for branch misprediction and store-to-load
/// forwarding: loads also consume a directive choosing the write to read.
pub fn sps_v4(p: &SourceProgram) -> TargetProgram {
    transform(p, Variant::V4)
}

/// Dispatches on the variant.
pub fn sps_for(p: &SourceProgram, variant: Variant) -> TargetProgram {
    transform(p, variant)
}
