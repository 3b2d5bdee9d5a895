//! Random program generation for property tests and self-checks.
//!
//! Generated programs are well typed: integer variables only ever hold
//! integers, conditions are boolean, addresses are reduced modulo the
//! memory size, divisors are never zero, `msf` is initialized before use,
//! and every loop has a counter bound.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::lang::{Binop, Block, Cmd, Expr, Ident, SourceProgram, TargetProgram, Unop};
use crate::transform::PhiSpec;

use super::config::GenConfig;

/// Shape parameters for generated programs.
#[derive(Debug, Clone)]
pub struct GenOptions {
    pub public_vars: Vec<Ident>,
    pub secret_vars: Vec<Ident>,
    /// Scratch variables; reading one before writing makes it a secret input.
    pub local_vars: Vec<Ident>,
    /// Bound on the number of `if`, `leak` and `while` commands.
    pub max_branches: usize,
    pub max_block_len: usize,
    pub loops: bool,
    pub memory: bool,
    pub selslh: bool,
    pub division: bool,
    /// Target programs only: emit `assert` commands.
    pub asserts: bool,
    pub public_mem: (i64, i64),
    pub secret_mem: (i64, i64),
}

impl Default for GenOptions {
    fn default() -> GenOptions {
        GenOptions {
            public_vars: vec![Ident::new("x"), Ident::new("y")],
            secret_vars: vec![Ident::new("s")],
            local_vars: vec![Ident::new("a"), Ident::new("b")],
            max_branches: 4,
            max_block_len: 3,
            loops: true,
            memory: true,
            selslh: true,
            division: false,
            asserts: false,
            public_mem: (0, 2),
            secret_mem: (2, 4),
        }
    }
}

impl GenOptions {
    /// Small programs whose whole input space can be enumerated.
    pub fn tiny() -> GenOptions {
        GenOptions {
            public_vars: vec![Ident::new("x")],
            secret_vars: vec![Ident::new("s")],
            local_vars: vec![Ident::new("a")],
            max_branches: 3,
            max_block_len: 3,
            loops: true,
            memory: true,
            selslh: true,
            division: false,
            asserts: false,
            public_mem: (0, 1),
            secret_mem: (1, 2),
        }
    }

    /// The input relation matching these options.
    pub fn phi(&self) -> PhiSpec {
        PhiSpec {
            public_vars: self.public_vars.iter().cloned().collect(),
            secret_vars: self.secret_vars.iter().cloned().collect(),
            public_mem: vec![self.public_mem],
            secret_mem: vec![self.secret_mem],
            ..PhiSpec::default()
        }
    }
}

struct Gen<'a, R: Rng> {
    rng: &'a mut R,
    cfg: &'a GenConfig,
    opts: &'a GenOptions,
    branches: usize,
    counters: usize,
    msf_ready: bool,
}

impl<R: Rng> Gen<'_, R> {
    fn any_var(&mut self) -> Ident {
        let o = self.opts;
        let all: Vec<&Ident> = o.public_vars.iter().chain(&o.secret_vars).chain(&o.local_vars).collect();
        (*all.choose(self.rng).expect("at least one variable")).clone()
    }

    fn dest_var(&mut self) -> Ident {
        let o = self.opts;
        let pool: Vec<&Ident> = if o.local_vars.is_empty() || self.rng.gen_bool(0.3) {
            o.public_vars.iter().chain(&o.secret_vars).chain(&o.local_vars).collect()
        } else {
            o.local_vars.iter().collect()
        };
        (*pool.choose(self.rng).expect("at least one variable")).clone()
    }

    fn literal(&mut self) -> Expr {
        let (lo, hi) = self.cfg.domain;
        Expr::int(self.rng.gen_range(lo..=hi))
    }

    fn int_expr(&mut self, depth: usize) -> Expr {
        if depth == 0 || self.rng.gen_bool(0.4) {
            return if self.rng.gen_bool(0.6) { Expr::Var(self.any_var()) } else { self.literal() };
        }
        let a = self.int_expr(depth - 1);
        let b = self.int_expr(depth - 1);
        let choices: &[u8] = if self.opts.division { &[0, 1, 2, 3, 4] } else { &[0, 1, 2, 3] };
        match choices.choose(self.rng).copied().unwrap_or(0) {
            0 => Expr::bin(Binop::Add, a, b),
            1 => Expr::bin(Binop::Sub, a, b),
            2 => Expr::bin(Binop::Mul, a, b),
            3 => Expr::select(self.bool_expr(depth - 1), a, b),
            _ => {
                // b % 3 + 1 is in 1..=3, so the division is always defined.
                let d = Expr::bin(Binop::Add, Expr::bin(Binop::Mod, b, Expr::int(3)), Expr::int(1));
                Expr::bin(Binop::Div, a, d)
            }
        }
    }

    fn bool_expr(&mut self, depth: usize) -> Expr {
        if depth > 0 && self.rng.gen_bool(0.2) {
            let a = self.bool_expr(depth - 1);
            return match self.rng.gen_range(0..3) {
                0 => Expr::Unop(Unop::Not, Box::new(a)),
                1 => Expr::bin(Binop::And, a, self.bool_expr(depth - 1)),
                _ => Expr::bin(Binop::Or, a, self.bool_expr(depth - 1)),
            };
        }
        let op = *[Binop::Lt, Binop::Le, Binop::Eq, Binop::Ne].choose(self.rng).unwrap_or(&Binop::Lt);
        let d = depth.min(1);
        Expr::bin(op, self.int_expr(d), self.int_expr(d))
    }

    fn address(&mut self) -> Expr {
        Expr::bin(Binop::Mod, self.int_expr(1), Expr::int(self.cfg.mem_size.max(1)))
    }

    fn cmd(&mut self, depth: usize, out: &mut Block) {
        let can_branch = depth > 0 && self.branches < self.opts.max_branches;
        let mut kinds: Vec<u8> = vec![0, 0];
        if self.opts.memory {
            kinds.extend([1, 2]);
        }
        if can_branch {
            kinds.extend([3, 3, 4]);
            if self.opts.loops {
                kinds.push(5);
            }
        }
        if self.msf_ready {
            kinds.extend([6, 7, 9]);
        }
        if self.opts.asserts {
            kinds.push(8);
        }
        match kinds.choose(self.rng).copied().unwrap_or(0) {
            0 => {
                let x = self.dest_var();
                let e = self.int_expr(2);
                out.push(Cmd::Assign(x, e));
            }
            1 => {
                let x = self.dest_var();
                let a = self.address();
                out.push(Cmd::Load(x, a));
            }
            2 => {
                let a = self.address();
                let x = self.any_var();
                out.push(Cmd::Store(a, x));
            }
            3 => {
                self.branches += 1;
                let c = self.bool_expr(1);
                let a = self.block(depth - 1);
                let b = if self.rng.gen_bool(0.5) { self.block(depth - 1) } else { Vec::new() };
                out.push(Cmd::If(c, a, b));
            }
            4 => {
                self.branches += 1;
                let c = self.bool_expr(1);
                out.push(Cmd::leak(c));
            }
            5 => {
                self.branches += 1;
                let counter = Ident::from(format!("i{}", self.counters));
                self.counters += 1;
                let bound = self.rng.gen_range(1..=2);
                let cond = Expr::bin(Binop::Lt, Expr::Var(counter.clone()), Expr::int(bound));
                let cond = if self.rng.gen_bool(0.5) {
                    Expr::bin(Binop::And, cond, self.bool_expr(0))
                } else {
                    cond
                };
                let mut body = self.block(depth - 1);
                body.push(Cmd::Assign(
                    counter.clone(),
                    Expr::bin(Binop::Add, Expr::Var(counter.clone()), Expr::int(1)),
                ));
                out.push(Cmd::Assign(counter, Expr::int(0)));
                out.push(Cmd::While(cond, body));
            }
            6 => {
                let c = self.bool_expr(1);
                out.push(Cmd::UpdateMsf(c));
            }
            7 => {
                let x = self.dest_var();
                let e = self.int_expr(1);
                out.push(Cmd::Protect(x, e));
            }
            9 => out.push(Cmd::InitMsf),
            _ => {
                let c = self.bool_expr(1);
                out.push(Cmd::Assert(c));
            }
        }
    }

    fn block(&mut self, depth: usize) -> Block {
        let n = self.rng.gen_range(1..=self.opts.max_block_len.max(1));
        let mut out = Vec::new();
        for _ in 0..n {
            self.cmd(depth, &mut out);
        }
        out
    }

    fn program(&mut self, depth: usize) -> Block {
        if depth == 0 {
            let x = self.dest_var();
            let e = self.int_expr(1);
            return vec![Cmd::Assign(x, e)];
        }
        let mut out = Vec::new();
        if self.opts.selslh && self.rng.gen_bool(0.5) {
            out.push(Cmd::InitMsf);
            self.msf_ready = true;
        }
        out.extend(self.block(depth));
        out
    }
}

fn generate<R: Rng>(rng: &mut R, depth: usize, cfg: &GenConfig, opts: &GenOptions) -> Block {
    let mut g = Gen { rng, cfg, opts, branches: 0, counters: 0, msf_ready: false };
    g.program(depth)
}

/// A random source program with nesting depth at most `depth`, using the
/// default shape.
pub fn gen_program<R: Rng>(rng: &mut R, depth: usize, cfg: &GenConfig) -> SourceProgram {
    gen_program_with(rng, depth, cfg, &GenOptions::default())
}

pub fn gen_program_with<R: Rng>(rng: &mut R, depth: usize, cfg: &GenConfig, opts: &GenOptions) -> SourceProgram {
    let opts = GenOptions { asserts: false, ..opts.clone() };
    SourceProgram::new(generate(rng, depth, cfg, &opts)).expect("generated programs are valid source")
}

/// A random target program; `assert` commands appear when `opts.asserts`
/// is set. Selective-SLH commands are never generated.
pub fn gen_target_program<R: Rng>(rng: &mut R, depth: usize, cfg: &GenConfig, opts: &GenOptions) -> TargetProgram {
    let opts = GenOptions { selslh: false, ..opts.clone() };
    TargetProgram::new(generate(rng, depth, cfg, &opts)).expect("generated programs are valid target")
}
