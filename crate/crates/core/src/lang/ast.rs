//! Abstract syntax for source and target programs.
//!
//! Both languages share one expression and command type. Source programs
//! may use the selective-SLH commands and never the target-only ones; target
//! programs the other way around. [`SourceProgram`] and [`TargetProgram`]
//! check these restrictions on construction.

use std::collections::BTreeSet;

use super::int::Int;
use super::value::{Ident, Value};

/// Names that only target programs (or transformations) may use.
pub const RESERVED: [&str; 4] = ["dir", "ms", "obs", "ret"];

pub fn is_reserved(x: &str) -> bool {
    RESERVED.contains(&x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unop {
    Not,
    Neg,
    /// `log2(e)`: `⌊log2 max(v, 1)⌋`.
    Log2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Binop {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    BitAnd,
    Concat,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl Binop {
    pub fn symbol(self) -> &'static str {
        match self {
            Binop::Add => "+",
            Binop::Sub => "-",
            Binop::Mul => "*",
            Binop::Div => "/",
            Binop::Mod => "%",
            Binop::BitAnd => "&",
            Binop::Concat => "++",
            Binop::Lt => "<",
            Binop::Le => "<=",
            Binop::Gt => ">",
            Binop::Ge => ">=",
            Binop::Eq => "==",
            Binop::Ne => "!=",
            Binop::And => "&&",
            Binop::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter. All binary operators are
    /// left-associative.
    pub fn precedence(self) -> u8 {
        match self {
            Binop::Or => 1,
            Binop::And => 2,
            Binop::Eq | Binop::Ne => 3,
            Binop::Lt | Binop::Le | Binop::Gt | Binop::Ge => 4,
            Binop::BitAnd => 5,
            Binop::Add | Binop::Sub | Binop::Concat => 6,
            Binop::Mul | Binop::Div | Binop::Mod => 7,
        }
    }

    /// Operators whose execution time depends on operand values.
    pub fn is_variable_time(self) -> bool {
        matches!(self, Binop::Div | Binop::Mod)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Lit(Value),
    Var(Ident),
    Unop(Unop, Box<Expr>),
    Binop(Binop, Box<Expr>, Box<Expr>),
    /// `c ? a : b`; only the selected arm is evaluated.
    Select(Box<Expr>, Box<Expr>, Box<Expr>),
    Head(Ident),
    Tail(Ident),
    List(Vec<Expr>),
}

impl Expr {
    pub fn int(v: i64) -> Expr {
        Expr::Lit(Value::int(v))
    }

    pub fn big(v: Int) -> Expr {
        Expr::Lit(Value::Int(v))
    }

    pub fn bool(b: bool) -> Expr {
        Expr::Lit(Value::Bool(b))
    }

    pub fn var(x: &str) -> Expr {
        Expr::Var(Ident::new(x))
    }

    pub fn not(e: Expr) -> Expr {
        Expr::Unop(Unop::Not, Box::new(e))
    }

    pub fn log2(e: Expr) -> Expr {
        Expr::Unop(Unop::Log2, Box::new(e))
    }

    pub fn bin(op: Binop, a: Expr, b: Expr) -> Expr {
        Expr::Binop(op, Box::new(a), Box::new(b))
    }

    pub fn select(c: Expr, a: Expr, b: Expr) -> Expr {
        Expr::Select(Box::new(c), Box::new(a), Box::new(b))
    }

    pub fn head(x: &str) -> Expr {
        Expr::Head(Ident::new(x))
    }

    pub fn tail(x: &str) -> Expr {
        Expr::Tail(Ident::new(x))
    }

    /// Calls `f` on every variable the expression reads.
    pub fn for_each_var(&self, f: &mut impl FnMut(&Ident)) {
        match self {
            Expr::Lit(_) => {}
            Expr::Var(x) | Expr::Head(x) | Expr::Tail(x) => f(x),
            Expr::Unop(_, a) => a.for_each_var(f),
            Expr::Binop(_, a, b) => {
                a.for_each_var(f);
                b.for_each_var(f);
            }
            Expr::Select(c, a, b) => {
                c.for_each_var(f);
                a.for_each_var(f);
                b.for_each_var(f);
            }
            Expr::List(es) => es.iter().for_each(|e| e.for_each_var(f)),
        }
    }

    pub fn vars(&self) -> BTreeSet<Ident> {
        let mut s = BTreeSet::new();
        self.for_each_var(&mut |x| {
            s.insert(x.clone());
        });
        s
    }

    /// Whether the expression uses list-only or target-only constructs.
    fn uses_target_forms(&self) -> bool {
        match self {
            Expr::Lit(Value::List(_)) | Expr::Head(_) | Expr::Tail(_) | Expr::List(_) => true,
            Expr::Lit(_) | Expr::Var(_) => false,
            Expr::Unop(_, a) => a.uses_target_forms(),
            Expr::Binop(op, a, b) => {
                *op == Binop::Concat || a.uses_target_forms() || b.uses_target_forms()
            }
            Expr::Select(c, a, b) => {
                c.uses_target_forms() || a.uses_target_forms() || b.uses_target_forms()
            }
        }
    }

    /// Renames every variable through `f`.
    pub fn rename(&self, f: &impl Fn(&Ident) -> Ident) -> Expr {
        match self {
            Expr::Lit(v) => Expr::Lit(v.clone()),
            Expr::Var(x) => Expr::Var(f(x)),
            Expr::Head(x) => Expr::Head(f(x)),
            Expr::Tail(x) => Expr::Tail(f(x)),
            Expr::Unop(op, a) => Expr::Unop(*op, Box::new(a.rename(f))),
            Expr::Binop(op, a, b) => Expr::bin(*op, a.rename(f), b.rename(f)),
            Expr::Select(c, a, b) => Expr::select(c.rename(f), a.rename(f), b.rename(f)),
            Expr::List(es) => Expr::List(es.iter().map(|e| e.rename(f)).collect()),
        }
    }
}

pub type Block = Vec<Cmd>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Cmd {
    /// `x = e;`
    Assign(Ident, Expr),
    /// `x <- [e];`
    Load(Ident, Expr),
    /// `[e] <- x;`
    Store(Expr, Ident),
    /// `init_msf;`
    InitMsf,
    /// `update_msf e;`
    UpdateMsf(Expr),
    /// `x = protect(e);`
    Protect(Ident, Expr),
    /// `if e {..} else {..}`; `leak e;` is the empty-branch case.
    If(Expr, Block, Block),
    /// `while e {..}`
    While(Expr, Block),
    /// `skip;`
    Skip,
    /// `assert e;`
    Assert(Expr),
    /// `x <- [e] @ n;`: load the `n`-th most recent write of `[e]`.
    IndexedLoad(Ident, Expr, Expr),
    /// `[e] <+ x;`: append to the write history of `[e]`.
    AppendStore(Expr, Ident),
    /// `clear_mem;`: forget all but the latest write of every cell.
    ClearMem,
}

impl Cmd {
    pub fn assign(x: &str, e: Expr) -> Cmd {
        Cmd::Assign(Ident::new(x), e)
    }

    pub fn leak(e: Expr) -> Cmd {
        Cmd::If(e, Vec::new(), Vec::new())
    }

    /// Calls `f` on this command and every nested one, outermost first.
    pub fn walk(&self, f: &mut impl FnMut(&Cmd)) {
        f(self);
        match self {
            Cmd::If(_, a, b) => {
                a.iter().for_each(|c| c.walk(f));
                b.iter().for_each(|c| c.walk(f));
            }
            Cmd::While(_, a) => a.iter().for_each(|c| c.walk(f)),
            _ => {}
        }
    }

    /// Expressions that appear directly in this command (not nested blocks).
    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            Cmd::Assign(_, e)
            | Cmd::Load(_, e)
            | Cmd::Store(e, _)
            | Cmd::UpdateMsf(e)
            | Cmd::Protect(_, e)
            | Cmd::If(e, _, _)
            | Cmd::While(e, _)
            | Cmd::Assert(e)
            | Cmd::AppendStore(e, _) => vec![e],
            Cmd::IndexedLoad(_, a, n) => vec![a, n],
            Cmd::InitMsf | Cmd::Skip | Cmd::ClearMem => vec![],
        }
    }

    /// Variables that this command names directly as a destination or source
    /// outside of expressions.
    pub fn named_vars(&self) -> Vec<&Ident> {
        match self {
            Cmd::Assign(x, _)
            | Cmd::Load(x, _)
            | Cmd::Store(_, x)
            | Cmd::Protect(x, _)
            | Cmd::IndexedLoad(x, _, _)
            | Cmd::AppendStore(_, x) => vec![x],
            _ => vec![],
        }
    }
}

/// Every variable mentioned anywhere in `block`.
pub fn block_vars(block: &[Cmd]) -> BTreeSet<Ident> {
    let mut s = BTreeSet::new();
    for c in block {
        c.walk(&mut |c| {
            for x in c.named_vars() {
                s.insert(x.clone());
            }
            for e in c.exprs() {
                e.for_each_var(&mut |x| {
                    s.insert(x.clone());
                });
            }
            if matches!(c, Cmd::InitMsf | Cmd::UpdateMsf(_) | Cmd::Protect(..)) {
                s.insert(Ident::new("msf"));
            }
        });
    }
    s
}

/// Variables that may be read before they are definitely assigned: the
/// inputs a program depends on.
pub fn live_inputs(block: &[Cmd]) -> BTreeSet<Ident> {
    fn read(e: &Expr, assigned: &BTreeSet<Ident>, live: &mut BTreeSet<Ident>) {
        e.for_each_var(&mut |x| {
            if !assigned.contains(x) {
                live.insert(x.clone());
            }
        });
    }
    fn use_var(x: &Ident, assigned: &BTreeSet<Ident>, live: &mut BTreeSet<Ident>) {
        if !assigned.contains(x) {
            live.insert(x.clone());
        }
    }
    fn go(block: &[Cmd], assigned: &mut BTreeSet<Ident>, live: &mut BTreeSet<Ident>) {
        let msf = Ident::new("msf");
        for c in block {
            match c {
                Cmd::Assign(x, e) | Cmd::Load(x, e) => {
                    read(e, assigned, live);
                    assigned.insert(x.clone());
                }
                Cmd::IndexedLoad(x, e, n) => {
                    read(e, assigned, live);
                    read(n, assigned, live);
                    assigned.insert(x.clone());
                }
                Cmd::Store(e, x) | Cmd::AppendStore(e, x) => {
                    read(e, assigned, live);
                    use_var(x, assigned, live);
                }
                Cmd::InitMsf => {
                    assigned.insert(msf.clone());
                }
                Cmd::UpdateMsf(e) => {
                    read(e, assigned, live);
                    use_var(&msf, assigned, live);
                    assigned.insert(msf.clone());
                }
                Cmd::Protect(x, e) => {
                    use_var(&msf, assigned, live);
                    read(e, assigned, live);
                    assigned.insert(x.clone());
                }
                Cmd::If(e, a, b) => {
                    read(e, assigned, live);
                    let mut sa = assigned.clone();
                    let mut sb = assigned.clone();
                    go(a, &mut sa, live);
                    go(b, &mut sb, live);
                    *assigned = sa.intersection(&sb).cloned().collect();
                }
                Cmd::While(e, body) => {
                    read(e, assigned, live);
                    let mut sb = assigned.clone();
                    go(body, &mut sb, live);
                }
                Cmd::Assert(e) => read(e, assigned, live),
                Cmd::Skip | Cmd::ClearMem => {}
            }
        }
    }
    let mut live = BTreeSet::new();
    go(block, &mut BTreeSet::new(), &mut live);
    live
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValidationError {
    #[error("reserved name `{0}` cannot be used in a source program")]
    ReservedName(String),
    #[error("`{0}` is not allowed in a source program")]
    TargetOnly(&'static str),
    #[error("`{0}` is not allowed in a target program")]
    SourceOnly(&'static str),
}

fn cmd_keyword(c: &Cmd) -> &'static str {
    match c {
        Cmd::Assign(..) => "assignment",
        Cmd::Load(..) => "load",
        Cmd::Store(..) => "store",
        Cmd::InitMsf => "init_msf",
        Cmd::UpdateMsf(_) => "update_msf",
        Cmd::Protect(..) => "protect",
        Cmd::If(..) => "if",
        Cmd::While(..) => "while",
        Cmd::Skip => "skip",
        Cmd::Assert(_) => "assert",
        Cmd::IndexedLoad(..) => "indexed load",
        Cmd::AppendStore(..) => "append store",
        Cmd::ClearMem => "clear_mem",
    }
}

/// A program of the source language.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SourceProgram(Block);

impl SourceProgram {
    pub fn new(body: Block) -> Result<SourceProgram, ValidationError> {
        for c in &body {
            let mut err = None;
            c.walk(&mut |c| {
                if err.is_some() {
                    return;
                }
                if matches!(
                    c,
                    Cmd::Assert(_) | Cmd::IndexedLoad(..) | Cmd::AppendStore(..) | Cmd::ClearMem
                ) {
                    err = Some(ValidationError::TargetOnly(cmd_keyword(c)));
                    return;
                }
                if c.exprs().iter().any(|e| e.uses_target_forms()) {
                    err = Some(ValidationError::TargetOnly("list expression"));
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
        if let Some(x) = block_vars(&body).into_iter().find(|x| is_reserved(x)) {
            return Err(ValidationError::ReservedName(x.to_string()));
        }
        Ok(SourceProgram(body))
    }

    pub fn body(&self) -> &[Cmd] {
        &self.0
    }

    pub fn into_body(self) -> Block {
        self.0
    }
}

/// A program of the target language.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TargetProgram(Block);

impl TargetProgram {
    pub fn new(body: Block) -> Result<TargetProgram, ValidationError> {
        for c in &body {
            let mut err = None;
            c.walk(&mut |c| {
                if err.is_none() && matches!(c, Cmd::InitMsf | Cmd::UpdateMsf(_) | Cmd::Protect(..)) {
                    err = Some(ValidationError::SourceOnly(cmd_keyword(c)));
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
        Ok(TargetProgram(body))
    }

    pub fn body(&self) -> &[Cmd] {
        &self.0
    }

    pub fn into_body(self) -> Block {
        self.0
    }

    pub fn has_asserts(&self) -> bool {
        let mut found = false;
        for c in &self.0 {
            c.walk(&mut |c| found |= matches!(c, Cmd::Assert(_)));
        }
        found
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_rejects_reserved_and_target_forms() {
        let bad = vec![Cmd::assign("ms", Expr::int(1))];
        assert_eq!(
            SourceProgram::new(bad),
            Err(ValidationError::ReservedName("ms".into()))
        );
        assert!(SourceProgram::new(vec![Cmd::Assert(Expr::bool(true))]).is_err());
        assert!(SourceProgram::new(vec![Cmd::assign("x", Expr::head("y"))]).is_err());
        assert!(TargetProgram::new(vec![Cmd::InitMsf]).is_err());
    }

    #[test]
    fn live_inputs_respects_definite_assignment() {
        let p = vec![
            Cmd::If(
                Expr::var("c"),
                vec![Cmd::assign("a", Expr::int(1))],
                vec![Cmd::assign("b", Expr::int(1))],
            ),
            Cmd::assign("z", Expr::bin(Binop::Add, Expr::var("a"), Expr::var("b"))),
            Cmd::assign("c", Expr::int(0)),
            Cmd::Protect(Ident::new("w"), Expr::var("z")),
        ];
        let live: Vec<String> = live_inputs(&p).iter().map(|x| x.to_string()).collect();
        assert_eq!(live, ["a", "b", "c", "msf"]);
    }
}
