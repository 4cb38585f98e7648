//! Bytecode compilation and the stack-based parsing machine.

mod asm;
mod compile;
mod machine;
mod memo;
mod program;

pub use asm::{assemble, disassemble, AsmError};
pub use compile::{compile, CompileError, CompileOptions};
pub use machine::{Machine, RunMode, RunStats};
pub use memo::{MemoResult, MemoTable, DEFAULT_MEMO_CAPACITY};
pub use program::{Instruction, Program};
