//! Lexer and recursive-descent parser for `.sps` and `.spt` files.

use std::fmt;

use super::ast::{is_reserved, Binop, Block, Cmd, Expr, SourceProgram, TargetProgram, Unop};
use super::int::Int;
use super::value::{Ident, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(Int),
    Ident(String),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Int(i) => write!(f, "integer `{i}`"),
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

// Longest symbols first so that maximal munch works by linear scan.
const SYMBOLS: [&str; 30] = [
    "<-", "<+", "<=", ">=", "==", "!=", "&&", "||", "++", "=", "<", ">", "+", "-", "*", "/", "%",
    "&", "!", "?", ":", ";", "(", ")", "[", "]", "{", "}", ",", "@",
];

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start_col = col;
        if c.is_ascii_digit() {
            let s: String = chars[i..].iter().take_while(|c| c.is_ascii_digit()).collect();
            i += s.len();
            col += s.len();
            let v = s.parse::<Int>().map_err(|e| ParseError {
                line,
                col: start_col,
                message: e.to_string(),
            })?;
            out.push(Token { tok: Tok::Int(v), line, col: start_col });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let s: String = chars[i..]
                .iter()
                .take_while(|c| c.is_ascii_alphanumeric() || **c == '_')
                .collect();
            i += s.len();
            col += s.len();
            out.push(Token { tok: Tok::Ident(s), line, col: start_col });
            continue;
        }
        let sym = SYMBOLS.iter().find(|s| {
            let n = s.len();
            i + n <= chars.len() && chars[i..i + n].iter().copied().eq(s.chars())
        });
        match sym {
            Some(s) => {
                i += s.len();
                col += s.len();
                out.push(Token { tok: Tok::Sym(s), line, col: start_col });
            }
            None => {
                return Err(ParseError {
                    line,
                    col,
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

const KEYWORDS: [&str; 15] = [
    "if", "else", "while", "skip", "assert", "leak", "init_msf", "update_msf", "protect",
    "clear_mem", "hd", "tl", "log2", "true", "false",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Lang {
    Source,
    Target,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    lang: Lang,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, t: &Token, message: String) -> ParseError {
        ParseError { line: t.line, col: t.col, message }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(&self.peek().tok, Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(x) if x == s)
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.is_sym(s) {
            self.bump();
            Ok(())
        } else {
            let t = self.peek().clone();
            Err(self.error_at(&t, format!("expected `{s}`, found {}", t.tok)))
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        let t = self.bump();
        match &t.tok {
            Tok::Ident(s) if KEYWORDS.contains(&s.as_str()) => {
                Err(self.error_at(&t, format!("expected identifier, found keyword `{s}`")))
            }
            Tok::Ident(s) => {
                if self.lang == Lang::Source && is_reserved(s) {
                    return Err(self.error_at(
                        &t,
                        format!("reserved name `{s}` cannot be used in a source program"),
                    ));
                }
                Ok(Ident::new(s))
            }
            other => Err(self.error_at(&t, format!("expected identifier, found {other}"))),
        }
    }

    fn target_only(&self, t: &Token, what: &str) -> PResult<()> {
        if self.lang == Lang::Source {
            Err(self.error_at(t, format!("`{what}` is not allowed in a source program")))
        } else {
            Ok(())
        }
    }

    fn source_only(&self, t: &Token, what: &str) -> PResult<()> {
        if self.lang == Lang::Target {
            Err(self.error_at(t, format!("`{what}` is not allowed in a target program")))
        } else {
            Ok(())
        }
    }

    fn program(&mut self) -> PResult<Block> {
        let mut cmds = Vec::new();
        while self.peek().tok != Tok::Eof {
            cmds.push(self.cmd()?);
        }
        Ok(cmds)
    }

    fn block(&mut self) -> PResult<Block> {
        self.expect_sym("{")?;
        let mut cmds = Vec::new();
        while !self.is_sym("}") {
            if self.peek().tok == Tok::Eof {
                let t = self.peek().clone();
                return Err(self.error_at(&t, "expected `}`, found end of input".into()));
            }
            cmds.push(self.cmd()?);
        }
        self.bump();
        Ok(cmds)
    }

    fn cmd(&mut self) -> PResult<Cmd> {
        let t = self.peek().clone();
        let kw = match &t.tok {
            Tok::Ident(s) => Some(s.clone()),
            _ => None,
        };
        match kw.as_deref() {
            Some("if") => {
                self.bump();
                let e = self.expr()?;
                let a = self.block()?;
                let b = if self.is_kw("else") {
                    self.bump();
                    self.block()?
                } else {
                    Vec::new()
                };
                Ok(Cmd::If(e, a, b))
            }
            Some("while") => {
                self.bump();
                let e = self.expr()?;
                Ok(Cmd::While(e, self.block()?))
            }
            Some("skip") => {
                self.bump();
                self.expect_sym(";")?;
                Ok(Cmd::Skip)
            }
            Some("leak") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(";")?;
                Ok(Cmd::leak(e))
            }
            Some("assert") => {
                self.target_only(&t, "assert")?;
                self.bump();
                let e = self.expr()?;
                self.expect_sym(";")?;
                Ok(Cmd::Assert(e))
            }
            Some("clear_mem") => {
                self.target_only(&t, "clear_mem")?;
                self.bump();
                self.expect_sym(";")?;
                Ok(Cmd::ClearMem)
            }
            Some("init_msf") => {
                self.source_only(&t, "init_msf")?;
                self.bump();
                self.expect_sym(";")?;
                Ok(Cmd::InitMsf)
            }
            Some("update_msf") => {
                self.source_only(&t, "update_msf")?;
                self.bump();
                let e = self.expr()?;
                self.expect_sym(";")?;
                Ok(Cmd::UpdateMsf(e))
            }
            _ if self.is_sym("[") => {
                self.bump();
                let a = self.expr()?;
                self.expect_sym("]")?;
                let op = self.bump();
                let append = match op.tok {
                    Tok::Sym("<-") => false,
                    Tok::Sym("<+") => {
                        self.target_only(&op, "<+")?;
                        true
                    }
                    ref other => {
                        return Err(self.error_at(&op, format!("expected `<-` or `<+`, found {other}")))
                    }
                };
                let x = self.ident()?;
                self.expect_sym(";")?;
                Ok(if append { Cmd::AppendStore(a, x) } else { Cmd::Store(a, x) })
            }
            Some(_) => {
                let x = self.ident()?;
                let op = self.bump();
                match op.tok {
                    Tok::Sym("=") => {
                        if self.is_kw("protect") {
                            let pt = self.peek().clone();
                            self.source_only(&pt, "protect")?;
                            self.bump();
                            self.expect_sym("(")?;
                            let e = self.expr()?;
                            self.expect_sym(")")?;
                            self.expect_sym(";")?;
                            return Ok(Cmd::Protect(x, e));
                        }
                        let e = self.expr()?;
                        self.expect_sym(";")?;
                        Ok(Cmd::Assign(x, e))
                    }
                    Tok::Sym("<-") => {
                        self.expect_sym("[")?;
                        let a = self.expr()?;
                        self.expect_sym("]")?;
                        if self.is_sym("@") {
                            let at = self.bump();
                            self.target_only(&at, "@")?;
                            let n = self.expr()?;
                            self.expect_sym(";")?;
                            return Ok(Cmd::IndexedLoad(x, a, n));
                        }
                        self.expect_sym(";")?;
                        Ok(Cmd::Load(x, a))
                    }
                    ref other => Err(self.error_at(&op, format!("expected `=` or `<-`, found {other}"))),
                }
            }
            None => Err(self.error_at(&t, format!("expected a command, found {}", t.tok))),
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        let c = self.binary(1)?;
        if self.is_sym("?") {
            self.bump();
            let a = self.expr()?;
            self.expect_sym(":")?;
            let b = self.expr()?;
            return Ok(Expr::select(c, a, b));
        }
        Ok(c)
    }

    fn binop(&self) -> Option<Binop> {
        let Tok::Sym(s) = self.peek().tok else { return None };
        Some(match s {
            "+" => Binop::Add,
            "-" => Binop::Sub,
            "*" => Binop::Mul,
            "/" => Binop::Div,
            "%" => Binop::Mod,
            "&" => Binop::BitAnd,
            "++" => Binop::Concat,
            "<" => Binop::Lt,
            "<=" => Binop::Le,
            ">" => Binop::Gt,
            ">=" => Binop::Ge,
            "==" => Binop::Eq,
            "!=" => Binop::Ne,
            "&&" => Binop::And,
            "||" => Binop::Or,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            if op.precedence() < min_prec {
                break;
            }
            let t = self.bump();
            if op == Binop::Concat {
                self.target_only(&t, "++")?;
            }
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.is_sym("!") {
            self.bump();
            return Ok(Expr::not(self.unary()?));
        }
        if self.is_sym("-") {
            self.bump();
            if let Tok::Int(v) = &self.peek().tok {
                let v = v.neg();
                self.bump();
                return Ok(Expr::big(v));
            }
            return Ok(Expr::Unop(Unop::Neg, Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let t = self.bump();
        match &t.tok {
            Tok::Int(v) => Ok(Expr::big(v.clone())),
            Tok::Sym("(") => {
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Sym("[") => {
                self.target_only(&t, "list literal")?;
                let mut items = Vec::new();
                if !self.is_sym("]") {
                    items.push(self.expr()?);
                    while self.is_sym(",") {
                        self.bump();
                        items.push(self.expr()?);
                    }
                }
                self.expect_sym("]")?;
                Ok(Expr::List(items))
            }
            Tok::Ident(s) => match s.as_str() {
                "true" => Ok(Expr::Lit(Value::Bool(true))),
                "false" => Ok(Expr::Lit(Value::Bool(false))),
                "hd" | "tl" => {
                    self.target_only(&t, s)?;
                    self.expect_sym("(")?;
                    let x = self.ident()?;
                    self.expect_sym(")")?;
                    Ok(if s == "hd" { Expr::Head(x) } else { Expr::Tail(x) })
                }
                "log2" => {
                    self.expect_sym("(")?;
                    let e = self.expr()?;
                    self.expect_sym(")")?;
                    Ok(Expr::log2(e))
                }
                _ => {
                    self.pos -= 1;
                    Ok(Expr::Var(self.ident()?))
                }
            },
            other => Err(self.error_at(&t, format!("expected an expression, found {other}"))),
        }
    }
}

fn parse_block(src: &str, lang: Lang) -> PResult<Block> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, lang };
    p.program()
}

/// Parses a source program (`.sps`).
pub fn parse_source(src: &str) -> Result<SourceProgram, ParseError> {
    let body = parse_block(src, Lang::Source)?;
    SourceProgram::new(body).map_err(|e| ParseError { line: 1, col: 1, message: e.to_string() })
}

/// Parses a target program (`.spt`).
pub fn parse_target(src: &str) -> Result<TargetProgram, ParseError> {
    let body = parse_block(src, Lang::Target)?;
    TargetProgram::new(body).map_err(|e| ParseError { line: 1, col: 1, message: e.to_string() })
}

/// Parses a single expression in the target syntax (used for constraints).
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, lang: Lang::Target };
    let e = p.expr()?;
    let t = p.peek().clone();
    if t.tok != Tok::Eof {
        return Err(p.error_at(&t, format!("unexpected {} after expression", t.tok)));
    }
    Ok(e)
}
