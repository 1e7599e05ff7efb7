//! A linear lambda calculus with contextual modal types (staged code with
//! explicit substitutions) and session-typed channels.
//!
//! Pipeline: [`syntax::parse_program`] → [`typeck::check_program`] →
//! [`eval`] for sequential terms or [`runtime::run_config`] for `main`.

pub mod cli;
pub mod eval;
pub mod runtime;
pub mod subst;
pub mod syntax;
pub mod typeck;
pub mod types;

pub use syntax::{parse_program, parse_term, parse_type, pretty, Program, Term};
pub use typeck::{check_program, check_term, CheckedProgram, ErrorCode, TypeError};
