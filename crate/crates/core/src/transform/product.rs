//! Self-composition: a product program whose assertion safety is
//! equivalent to constant-time of the original.
//!
//! Two renamed copies run in lockstep. Copy `n` uses variables `x_n`; copy 2
//! uses memory shifted by a fixed offset. Every leak point becomes an
//! assertion that both copies leak the same thing. Code guarded on the halt
//! flag `ret` is silent, so once one copy has halted the other runs alone
//! until its next observation, which is then a difference in traces and
//! fails an assertion. The whole body is guarded by a check that the two
//! initial states are related.

use crate::lang::{Binop, Block, Cmd, Expr, Ident, Int, TargetProgram};
use crate::semantics::seq::{guarded_loop_cond, silent_if, RET};
use crate::semantics::{Directive, Input, LeakageModel};

use super::leak_inst::{laddr_expr, op_leak_expr};
use super::phi::PhiSpec;

/// Default distance between the memories of the two copies.
pub fn default_offset() -> Int {
    Int::pow2(20)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProductError {
    #[error("the program contains assertions; apply assert-elim first")]
    HasAsserts,
}

/// The name of variable `x` in copy `n`.
pub fn tag(x: &Ident, n: u8) -> Ident {
    Ident::from(format!("{x}_{n}"))
}

/// Renames every variable of `e` into copy `n`.
pub fn rtag(e: &Expr, n: u8) -> Expr {
    e.rename(&|x| tag(x, n))
}

struct Builder<'a> {
    model: &'a LeakageModel,
    offset: Int,
}

fn and(a: Expr, b: Expr) -> Expr {
    Expr::bin(Binop::And, a, b)
}

fn or(a: Expr, b: Expr) -> Expr {
    Expr::bin(Binop::Or, a, b)
}

fn eq(a: Expr, b: Expr) -> Expr {
    Expr::bin(Binop::Eq, a, b)
}

fn alive(n: u8) -> Expr {
    Expr::not(Expr::Var(tag(&Ident::new(RET), n)))
}

fn both_alive() -> Expr {
    and(alive(1), alive(2))
}

fn fail() -> Cmd {
    Cmd::Assert(Expr::bool(false))
}

impl Builder<'_> {
    fn addr(&self, a: &Expr, n: u8) -> Expr {
        let e = rtag(a, n);
        if n == 2 {
            Expr::bin(Binop::Add, e, Expr::big(self.offset.clone()))
        } else {
            e
        }
    }

    /// Leaks of the two copies' addresses agree, unless one of them is
    /// invalid (the access then fails before anything is observed).
    fn same_addr(&self, a: &Expr) -> Cmd {
        let neg = |n| Expr::bin(Binop::Lt, rtag(a, n), Expr::int(0));
        Cmd::Assert(or(
            or(neg(1), neg(2)),
            eq(laddr_expr(self.model, &rtag(a, 1)), laddr_expr(self.model, &rtag(a, 2))),
        ))
    }

    fn memory_cmd(&self, c: &Cmd, n: u8) -> Cmd {
        match c {
            Cmd::Load(x, a) => Cmd::Load(tag(x, n), self.addr(a, n)),
            Cmd::Store(a, x) => Cmd::Store(self.addr(a, n), tag(x, n)),
            Cmd::IndexedLoad(x, a, k) => Cmd::IndexedLoad(tag(x, n), self.addr(a, n), rtag(k, n)),
            Cmd::AppendStore(a, x) => Cmd::AppendStore(self.addr(a, n), tag(x, n)),
            _ => unreachable!("not a memory command"),
        }
    }

    /// Copy `n` observes the branch on `e` and the other copy has halted.
    fn lone_branch(&self, e: &Expr, n: u8) -> Cmd {
        Cmd::If(rtag(e, n), vec![fail()], vec![fail()])
    }

    fn lockstep(&self, c: &Cmd, out: &mut Block) {
        match c {
            Cmd::Skip => out.push(Cmd::Skip),
            Cmd::ClearMem => out.push(Cmd::ClearMem),
            Cmd::Assign(x, e) => {
                if let Some(l) = op_leak_expr(self.model, e) {
                    out.push(Cmd::Assert(eq(rtag(&l, 1), rtag(&l, 2))));
                }
                out.push(Cmd::Assign(tag(x, 1), rtag(e, 1)));
                out.push(Cmd::Assign(tag(x, 2), rtag(e, 2)));
            }
            Cmd::Load(_, a) | Cmd::Store(a, _) | Cmd::IndexedLoad(_, a, _) | Cmd::AppendStore(a, _) => {
                out.push(self.same_addr(a));
                out.push(self.memory_cmd(c, 1));
                out.push(self.memory_cmd(c, 2));
            }
            Cmd::If(e, a, b) => match silent_if(c) {
                Some(body) => out.push(Cmd::If(
                    both_alive(),
                    self.lockstep_block(body),
                    vec![
                        Cmd::If(alive(1), self.single_block(body, 1), vec![]),
                        Cmd::If(alive(2), self.single_block(body, 2), vec![]),
                    ],
                )),
                None => {
                    out.push(Cmd::Assert(eq(rtag(e, 1), rtag(e, 2))));
                    out.push(Cmd::If(rtag(e, 1), self.lockstep_block(a), self.lockstep_block(b)));
                }
            },
            Cmd::While(cond, body) => match guarded_loop_cond(cond) {
                Some(e) => {
                    let check = Cmd::If(
                        both_alive(),
                        vec![Cmd::Assert(eq(rtag(e, 1), rtag(e, 2)))],
                        vec![
                            Cmd::If(alive(1), vec![self.lone_branch(e, 1)], vec![]),
                            Cmd::If(alive(2), vec![self.lone_branch(e, 2)], vec![]),
                        ],
                    );
                    let mut inner = self.lockstep_block(body);
                    inner.push(check.clone());
                    out.push(check);
                    out.push(Cmd::While(Expr::select(both_alive(), rtag(e, 1), Expr::bool(false)), inner));
                }
                None => {
                    let check = Cmd::Assert(eq(rtag(cond, 1), rtag(cond, 2)));
                    let mut inner = self.lockstep_block(body);
                    inner.push(check.clone());
                    out.push(check);
                    out.push(Cmd::While(rtag(cond, 1), inner));
                }
            },
            Cmd::Assert(_) | Cmd::InitMsf | Cmd::UpdateMsf(_) | Cmd::Protect(..) => {
                unreachable!("rejected before construction")
            }
        }
    }

    fn lockstep_block(&self, b: &[Cmd]) -> Block {
        let mut out = Vec::new();
        for c in b {
            self.lockstep(c, &mut out);
        }
        out
    }

    /// Copy `n` runs alone; the other copy has halted, so the first further
    /// observation is a difference.
    fn single(&self, c: &Cmd, n: u8, out: &mut Block) {
        match c {
            Cmd::Skip => {}
            Cmd::ClearMem => out.push(Cmd::ClearMem),
            Cmd::Assign(x, e) => {
                if let Some(l) = op_leak_expr(self.model, e) {
                    out.push(Cmd::Assert(eq(rtag(&l, n), Expr::List(vec![]))));
                }
                out.push(Cmd::Assign(tag(x, n), rtag(e, n)));
            }
            Cmd::Load(_, a) | Cmd::Store(a, _) | Cmd::IndexedLoad(_, a, _) | Cmd::AppendStore(a, _) => {
                out.push(Cmd::Assert(Expr::bin(Binop::Lt, rtag(a, n), Expr::int(0))));
                out.push(self.memory_cmd(c, n));
            }
            Cmd::If(e, _, _) => match silent_if(c) {
                Some(body) => out.push(Cmd::If(alive(n), self.single_block(body, n), vec![])),
                None => out.push(self.lone_branch(e, n)),
            },
            Cmd::While(cond, _) => match guarded_loop_cond(cond) {
                Some(e) => out.push(Cmd::If(alive(n), vec![self.lone_branch(e, n)], vec![])),
                None => out.push(self.lone_branch(cond, n)),
            },
            Cmd::Assert(_) | Cmd::InitMsf | Cmd::UpdateMsf(_) | Cmd::Protect(..) => {
                unreachable!("rejected before construction")
            }
        }
    }

    fn single_block(&self, b: &[Cmd], n: u8) -> Block {
        let mut out = Vec::new();
        for c in b {
            self.single(c, n, &mut out);
        }
        out
    }

    fn prelude(&self, phi: &PhiSpec) -> (Block, Expr) {
        let ok = Ident::new("phi_ok");
        let dir = Ident::new("dir");
        let mut cond = eq(Expr::Var(tag(&dir, 1)), Expr::Var(tag(&dir, 2)));
        for x in &phi.public_vars {
            cond = and(cond, eq(Expr::Var(tag(x, 1)), Expr::Var(tag(x, 2))));
        }
        for c in &phi.constraints {
            cond = and(cond, and(rtag(c, 1), rtag(c, 2)));
        }
        let mut out = vec![Cmd::Assign(ok.clone(), cond)];
        for cell in phi.public_cells() {
            out.push(Cmd::Load(Ident::new("phi_l"), Expr::big(cell.clone())));
            out.push(Cmd::Load(Ident::new("phi_r"), Expr::big(cell.add(&self.offset))));
            out.push(Cmd::Assign(
                ok.clone(),
                and(Expr::Var(ok.clone()), eq(Expr::var("phi_l"), Expr::var("phi_r"))),
            ));
        }
        (out, Expr::Var(ok))
    }
}

/// Builds the product program of an assertion-free target program.
pub fn product(
    p: &TargetProgram,
    phi: &PhiSpec,
    model: &LeakageModel,
    offset: &Int,
) -> Result<TargetProgram, ProductError> {
    if p.has_asserts() {
        return Err(ProductError::HasAsserts);
    }
    let b = Builder { model, offset: offset.clone() };
    let (mut out, ok) = b.prelude(phi);
    out.push(Cmd::If(ok, b.lockstep_block(p.body()), vec![]));
    Ok(TargetProgram::new(out).expect("the product only emits target commands"))
}

/// The initial state of the product for running the original on `i1` and
/// `i2` with directives `d`.
pub fn product_input(i1: &Input, i2: &Input, d: &[Directive], offset: &Int) -> Input {
    let dir = crate::semantics::seq::dir_value(d);
    let mut vars = crate::lang::VarMap::new();
    for (n, i) in [(1u8, i1), (2u8, i2)] {
        for (x, v) in i.vars.iter() {
            vars.set(tag(x, n), v.clone());
        }
        vars.set(tag(&Ident::new("dir"), n), dir.clone());
    }
    let mut mem = i1.mem.clone();
    mem.merge(&i2.mem.shifted(offset));
    Input { vars, mem }
}
