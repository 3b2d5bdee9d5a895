//! The source and target languages: values, syntax, parsing, printing and
//! expression evaluation.

pub mod ast;
pub mod eval;
pub mod int;
pub mod parser;
pub mod pretty;
pub mod value;

pub use ast::{Binop, Block, Cmd, Expr, SourceProgram, TargetProgram, Unop, ValidationError};
pub use eval::{eval, eval_bool, eval_with, EvalError};
pub use int::Int;
pub use parser::{parse_expr, parse_source, parse_target, ParseError};
pub use pretty::{block_to_string, expr_to_string, source_to_string, target_to_string};
pub use value::{Ident, List, Memory, Value, VarMap};
