//! Nez open-grammar engine.
//!
//! Nez grammars are parsing expression grammars extended with declarative
//! tree construction (`{e}`, `{$ e}`, `$(e)`, `#Tag`, `` `x` ``), a
//! parser-global symbol table for context-sensitive syntax (`<symbol A>`,
//! `<match A>`, `<is A>`, `<isa A>`, `<exists A>`, `<block e>`,
//! `<local A e>`), and boolean parsing conditions (`<if c>`, `<on c e>`).
//! Everything is declarative: one grammar file drives recognition and tree
//! construction with no host-language action code.
//!
//! Two engines share the same runtime pieces and agree exactly:
//!
//! * [`interp`] — a reference interpreter, used as the oracle;
//! * [`vm`] — a bytecode compiler plus stack-based parsing machine with
//!   packrat memoization (conditions must be eliminated first, see
//!   [`cond::eliminate`]).
//!
//! ```
//! let g = nez::parse_grammar("Val = { [0-9]+ #Int }").unwrap();
//! assert!(nez::validate(&g).is_ok());
//! let result = nez::parse(&g, b"42").unwrap();
//! let tree = result.tree().unwrap();
//! assert_eq!(tree.to_sexp(b"42"), "#Int['42']");
//! ```

pub mod astlog;
pub mod byteset;
pub mod cond;
pub mod desugar;
pub mod expr;
pub mod grammar;
pub mod interp;
pub mod result;
pub mod symtab;
pub mod syntax;
pub mod tree;
pub mod validate;
pub mod vm;

pub use astlog::{AstLog, AstLogError};
pub use byteset::ByteSet;
pub use cond::{collect_conditions, eliminate, ConditionState};
pub use desugar::{desugar, strip_ast_ops, DesugarMode};
pub use expr::Expression;
pub use grammar::Grammar;
pub use interp::{match_only, parse, Evaluator};
pub use result::{EvalError, Expected, ParseResult};
pub use symtab::SymbolTable;
pub use syntax::{format_grammar, parse_grammar, GrammarSyntaxError, SourceSpan};
pub use tree::Tree;
pub use validate::{validate, ValidationReport};
pub use vm::{assemble, compile, disassemble, Machine, Program};
