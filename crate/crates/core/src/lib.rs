//! Static analysis of logic programs with block declarations: modes, types,
//! termination and error freedom, plus an engine that runs them.

pub mod builtins;
pub mod corpus;
pub mod engine;
pub mod gen;
pub mod linear;
pub mod modes;
pub mod parser;
pub mod program;
pub mod term;
pub mod termination;
pub mod types;

pub use parser::{emit_program, parse_program, parse_query, parse_term, ParseError, ParseErrorKind};
pub use program::{Dir, Mode, Program, ProgramError, Query};
pub use term::{Atom, BlockDecl, BlockMark, Clause, Permutation, Pred, Subst, Term, Var};
pub use types::{TypeTable, Typed};
