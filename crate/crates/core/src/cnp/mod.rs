//! The CNP fragment: program AST, textual syntax and evaluator.

mod ast;
mod eval;
mod syntax;

pub use ast::{args_of, ArgName, Binding, Mode, Program, Rename, Valence, IIF_OUT};
pub use eval::{evaluate, satisfies, values_equal, CompiledObservables, VALUE_TOLERANCE};
pub use syntax::parse_program;
