//! Speculation-passing style for speculative constant-time checking.
//!
//! Programs in a small imperative language are given a speculative semantics
//! in which an attacker steers execution with directives. The
//! speculation-passing transformation turns such a program into an ordinary
//! sequential one that receives the directives as input, so that speculative
//! constant-time reduces to plain constant-time. The crate provides both
//! semantics, the transformations, and testing-based checkers.

pub mod lang;
pub mod semantics;
pub mod transform;
pub mod checker;
pub mod corpus;
