//! The stack-based parsing machine.
//!
//! One unified frame stack carries call returns, backtrack points, saved
//! positions, symbol scopes, and tree transactions. Failure unwinds the
//! stack to the nearest backtrack frame, restoring position, symbol table,
//! and tree log from its snapshot; intermediate scope frames are resolved
//! on the way down so every stack stays consistent.

use crate::astlog::{AstLog, AstState};
use crate::result::{EvalError, Expected, FailureTracker, ParseResult};
use crate::symtab::SymbolTable;

use super::memo::{MemoResult, MemoTable, DEFAULT_MEMO_CAPACITY};
use super::program::{Instruction, Program};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    /// Build a tree on success.
    Parse,
    /// Recognition only; tree instructions are inert.
    Match,
}

/// Execution counters, used by benchmarks and the memoization tests.
#[derive(Debug, Clone, Default)]
pub struct RunStats {
    pub instructions: u64,
    /// Calls per production, indexed like `Program::productions`.
    pub production_calls: Vec<u64>,
    /// Hits per memo point.
    pub memo_hits: Vec<u64>,
    pub memo_misses: Vec<u64>,
}

impl RunStats {
    /// Number of times a production body actually ran (calls minus memo
    /// hits, which short-circuit before the body).
    pub fn body_evaluations(&self, program: &Program, production: &str) -> u64 {
        let calls = program
            .production_index(production)
            .map(|i| self.production_calls[i])
            .unwrap_or(0);
        let hits = program
            .memo_point_of(production)
            .map(|i| self.memo_hits[i])
            .unwrap_or(0);
        calls - hits
    }
}

/// A configured machine over one program. The program is immutable and
/// shareable; each run owns its state.
pub struct Machine<'p> {
    program: &'p Program,
    memo_enabled: bool,
    memo_capacity: usize,
    budget: Option<u64>,
}

impl<'p> Machine<'p> {
    pub fn new(program: &'p Program) -> Self {
        Machine {
            program,
            memo_enabled: true,
            memo_capacity: DEFAULT_MEMO_CAPACITY,
            budget: None,
        }
    }

    /// Turns memoization on or off; lookups always miss and stores are
    /// dropped when off.
    pub fn memo(mut self, enabled: bool) -> Self {
        self.memo_enabled = enabled;
        self
    }

    pub fn memo_capacity(mut self, capacity: usize) -> Self {
        self.memo_capacity = capacity;
        self
    }

    /// Caps the number of executed instructions.
    pub fn budget(mut self, instructions: u64) -> Self {
        self.budget = Some(instructions);
        self
    }

    pub fn run(&self, input: &[u8], mode: RunMode) -> Result<ParseResult, EvalError> {
        self.run_with_stats(input, mode).map(|(r, _)| r)
    }

    pub fn run_with_stats(
        &self,
        input: &[u8],
        mode: RunMode,
    ) -> Result<(ParseResult, RunStats), EvalError> {
        let mut exec = Exec {
            program: self.program,
            input,
            pos: 0,
            pc: self.program.entry,
            frames: Vec::new(),
            symtab: SymbolTable::new(),
            astlog: match mode {
                RunMode::Parse => AstLog::new(),
                RunMode::Match => AstLog::disabled(),
            },
            memo: MemoTable::new(self.memo_capacity),
            memo_enabled: self.memo_enabled,
            failures: FailureTracker::new(),
            stats: RunStats {
                production_calls: vec![0; self.program.productions.len()],
                memo_hits: vec![0; self.program.memo_points.len()],
                memo_misses: vec![0; self.program.memo_points.len()],
                ..RunStats::default()
            },
            budget: self.budget,
        };
        let result = exec.run(mode)?;
        Ok((result, exec.stats))
    }
}

#[derive(Debug)]
enum Frame {
    Call { ret: usize },
    Backtrack { alt: usize, pos: usize, sym_len: usize, ast: AstState },
    SymScope { sym_len: usize },
    PosSave { pos: usize },
    Tree { ast: AstState },
    AstScope { ast: AstState },
}

enum Step {
    Continue,
    Halted,
}

struct Exec<'p, 'i> {
    program: &'p Program,
    input: &'i [u8],
    pos: usize,
    pc: usize,
    frames: Vec<Frame>,
    symtab: SymbolTable,
    astlog: AstLog,
    memo: MemoTable,
    memo_enabled: bool,
    failures: FailureTracker,
    stats: RunStats,
    budget: Option<u64>,
}

impl Exec<'_, '_> {
    fn trap(&self, message: impl Into<String>) -> EvalError {
        EvalError::MachineTrap(message.into())
    }

    fn run(&mut self, mode: RunMode) -> Result<ParseResult, EvalError> {
        loop {
            if let Some(b) = self.budget {
                if self.stats.instructions >= b {
                    return Err(EvalError::StepBudgetExceeded);
                }
            }
            let instr = self
                .program
                .code
                .get(self.pc)
                .ok_or_else(|| self.trap(format!("pc {} out of range", self.pc)))?;
            self.stats.instructions += 1;
            self.pc += 1;
            match self.step(instr.clone(), mode)? {
                Step::Continue => {}
                Step::Halted => {
                    return Ok(match mode {
                        RunMode::Parse => ParseResult::Success {
                            consumed: self.pos,
                            tree: self.astlog.commit().ok(),
                        },
                        RunMode::Match => {
                            ParseResult::Success { consumed: self.pos, tree: None }
                        }
                    });
                }
            }
            if self.pc == FAILED {
                return Ok(std::mem::take(&mut self.failures).into_failure());
            }
        }
    }

    fn step(&mut self, instr: Instruction, _mode: RunMode) -> Result<Step, EvalError> {
        use Instruction::*;
        match instr {
            Nop => {}
            Fail => self.fail(),
            Alt { target } => self.frames.push(Frame::Backtrack {
                alt: target,
                pos: self.pos,
                sym_len: self.symtab.len(),
                ast: self.astlog.state(),
            }),
            Succ { target } => match self.frames.pop() {
                Some(Frame::Backtrack { .. }) => self.pc = target,
                other => return Err(self.trap(format!("succ over {other:?}"))),
            },
            Jump { target } => self.pc = target,
            Call { production } => {
                let entry = self
                    .program
                    .productions
                    .get(production as usize)
                    .ok_or_else(|| self.trap("call target out of range"))?;
                self.stats.production_calls[production as usize] += 1;
                self.frames.push(Frame::Call { ret: self.pc });
                self.pc = entry.offset;
            }
            Ret => self.do_ret()?,
            Pos => self.frames.push(Frame::PosSave { pos: self.pos }),
            Back => match self.frames.pop() {
                Some(Frame::PosSave { pos }) => self.pos = pos,
                other => return Err(self.trap(format!("back over {other:?}"))),
            },
            Skip { target } => {
                if !matches!(self.frames.last(), Some(Frame::Backtrack { .. })) {
                    return Err(self.trap("skip without a loop frame"));
                }
                let (cur_pos, cur_sym, cur_ast) =
                    (self.pos, self.symtab.len(), self.astlog.state());
                let mut progressed = false;
                if let Some(Frame::Backtrack { pos, sym_len, ast, .. }) = self.frames.last_mut() {
                    progressed = *pos != cur_pos || *sym_len != cur_sym || *ast != cur_ast;
                    if progressed {
                        // re-arm the loop frame at the end of this iteration
                        *pos = cur_pos;
                        *sym_len = cur_sym;
                        *ast = cur_ast;
                    }
                }
                if progressed {
                    self.pc = target;
                } else {
                    self.fail();
                }
            }
            Byte { byte } => {
                if self.input.get(self.pos) == Some(&byte) {
                    self.pos += 1;
                } else {
                    self.failures.record(self.pos, Expected::Byte(byte));
                    self.fail();
                }
            }
            Any => {
                if self.pos < self.input.len() {
                    self.pos += 1;
                } else {
                    self.failures.record(self.pos, Expected::Any);
                    self.fail();
                }
            }
            Set { class } => {
                let set = *self.program.class(class).ok_or_else(|| self.trap("bad class index"))?;
                if self.input.get(self.pos).is_some_and(|b| set.contains(*b)) {
                    self.pos += 1;
                } else {
                    self.failures.record(self.pos, Expected::Class(set));
                    self.fail();
                }
            }
            Str { string } => {
                let lit = self
                    .program
                    .string(string)
                    .ok_or_else(|| self.trap("bad string index"))?;
                let rest = &self.input[self.pos.min(self.input.len())..];
                // failures report byte-by-byte, like the uncoalesced form
                let matched = lit.iter().zip(rest.iter()).take_while(|(a, b)| a == b).count();
                if matched == lit.len() {
                    self.pos += lit.len();
                } else {
                    self.failures.record(self.pos + matched, Expected::Byte(lit[matched]));
                    self.fail();
                }
            }
            TPush => self.frames.push(Frame::Tree { ast: self.astlog.state() }),
            TLink { label } => {
                let label = self.label_name(label)?;
                match self.frames.last() {
                    Some(Frame::Tree { ast }) => {
                        if let Some(tree) = self.astlog.extract_subtree(*ast) {
                            self.astlog.op_link(label.as_deref(), tree);
                        }
                    }
                    other => return Err(self.trap(format!("tlink over {other:?}"))),
                }
            }
            TPop => match self.frames.pop() {
                Some(Frame::Tree { .. }) => {}
                other => return Err(self.trap(format!("tpop over {other:?}"))),
            },
            TLeftFold { label } => {
                let label = self.label_name(label)?;
                if self.astlog.has_finished_node() {
                    self.astlog
                        .op_fold(self.pos, label.as_deref())
                        .map_err(|e| self.trap(e.to_string()))?;
                } else {
                    // fold over the initial empty tree: a plain node
                    self.astlog.op_new(self.pos);
                }
            }
            TNew => self.astlog.op_new(self.pos),
            TCapture => self.astlog.op_capture(self.pos),
            TTag { tag } => {
                let tag = self.name(tag)?.to_string();
                self.astlog.op_tag(&tag);
            }
            TReplace { string } => {
                let bytes = self
                    .program
                    .string(string)
                    .ok_or_else(|| self.trap("bad string index"))?
                    .to_vec();
                self.astlog.op_replace(&bytes);
            }
            TStart => self.frames.push(Frame::AstScope { ast: self.astlog.state() }),
            TCommit => match self.frames.pop() {
                Some(Frame::AstScope { .. }) => {}
                other => return Err(self.trap(format!("tcommit over {other:?}"))),
            },
            TAbort => match self.frames.pop() {
                Some(Frame::AstScope { ast }) => self.astlog.restore(ast),
                other => return Err(self.trap(format!("tabort over {other:?}"))),
            },
            SOpen => self.frames.push(Frame::SymScope { sym_len: self.symtab.len() }),
            SClose => match self.frames.pop() {
                Some(Frame::SymScope { sym_len }) => self.symtab.truncate(sym_len),
                other => return Err(self.trap(format!("sclose over {other:?}"))),
            },
            SMask { name } => {
                let name = self.name(name)?.to_string();
                self.symtab.mask(&name);
            }
            Symbol { name } => {
                let name = self.name(name)?.to_string();
                match self.frames.pop() {
                    Some(Frame::PosSave { pos }) => {
                        let value = self.input[pos..self.pos].to_vec();
                        self.symtab.add(&name, &value);
                    }
                    other => return Err(self.trap(format!("symbol over {other:?}"))),
                }
            }
            Exists { name } => {
                let name = self.name(name)?.to_string();
                if self.symtab.count(&name) == 0 {
                    self.failures
                        .record(self.pos, Expected::Operator(format!("<exists {name}>")));
                    self.fail();
                }
            }
            IsDef { name, value } => {
                let name = self.name(name)?.to_string();
                let value = self
                    .program
                    .string(value)
                    .ok_or_else(|| self.trap("bad string index"))?
                    .to_vec();
                if !self.symtab.contains(&name, &value) {
                    let rendered = crate::syntax::literal_text(&value, b'\'');
                    self.failures.record(
                        self.pos,
                        Expected::Operator(format!("<exists {name} '{rendered}'>")),
                    );
                    self.fail();
                }
            }
            Match { name } => {
                let name = self.name(name)?.to_string();
                match self.symtab.top(&name) {
                    Some(z) if self.input[self.pos.min(self.input.len())..].starts_with(z) => {
                        self.pos += z.len();
                    }
                    _ => {
                        self.failures
                            .record(self.pos, Expected::Operator(format!("<match {name}>")));
                        self.fail();
                    }
                }
            }
            Is { name } | Isa { name } => {
                let is_exact = matches!(instr, Is { .. });
                let name = self.name(name)?.to_string();
                let start = match self.frames.pop() {
                    Some(Frame::PosSave { pos }) => pos,
                    other => return Err(self.trap(format!("is/isa over {other:?}"))),
                };
                let captured = &self.input[start..self.pos];
                let holds = if is_exact {
                    self.symtab.top(&name) == Some(captured)
                } else {
                    self.symtab.contains(&name, captured)
                };
                if !holds {
                    let op = if is_exact { "is" } else { "isa" };
                    self.failures
                        .record(start, Expected::Operator(format!("<{op} {name}>")));
                    self.fail();
                }
            }
            Lookup { memo, miss } | TLookup { memo, miss } => {
                let with_tree = matches!(instr, TLookup { .. });
                if !self.memo_enabled {
                    self.pc = miss;
                } else {
                    match self.memo.lookup(self.pos, memo).cloned() {
                        None => {
                            self.stats.memo_misses[memo as usize] += 1;
                            self.pc = miss;
                        }
                        Some(MemoResult::Fail) => {
                            self.stats.memo_hits[memo as usize] += 1;
                            self.fail();
                        }
                        Some(MemoResult::Success { consumed, segment }) => {
                            self.stats.memo_hits[memo as usize] += 1;
                            self.pos += consumed;
                            if with_tree {
                                if let Some(seg) = segment {
                                    self.astlog.append_segment(&seg);
                                }
                            }
                            self.do_ret()?;
                        }
                    }
                }
            }
            Memo { memo } | TMemo { memo } => {
                let with_tree = matches!(instr, TMemo { .. });
                match self.frames.pop() {
                    Some(Frame::Backtrack { pos, ast, .. }) => {
                        let segment = if with_tree && self.astlog.is_enabled() {
                            Some(std::rc::Rc::new(self.astlog.segment(ast.len())))
                        } else {
                            None
                        };
                        if self.memo_enabled {
                            self.memo.store(
                                pos,
                                memo,
                                MemoResult::Success { consumed: self.pos - pos, segment },
                            );
                        }
                    }
                    other => return Err(self.trap(format!("memo over {other:?}"))),
                }
            }
            MemoFail { memo } => {
                if self.memo_enabled {
                    self.memo.store(self.pos, memo, MemoResult::Fail);
                }
            }
            Exit => return Ok(Step::Halted),
        }
        Ok(Step::Continue)
    }

    fn do_ret(&mut self) -> Result<(), EvalError> {
        match self.frames.pop() {
            Some(Frame::Call { ret }) => {
                self.pc = ret;
                Ok(())
            }
            other => Err(self.trap(format!("ret over {other:?}"))),
        }
    }

    fn name(&self, idx: u32) -> Result<&str, EvalError> {
        self.program.name(idx).ok_or_else(|| self.trap("bad name index"))
    }

    fn label_name(&self, idx: Option<u32>) -> Result<Option<String>, EvalError> {
        Ok(match idx {
            Some(i) => Some(self.name(i)?.to_string()),
            None => None,
        })
    }

    /// Unwinds to the nearest backtrack frame, resolving scope frames on
    /// the way; with no such frame the parse has failed.
    fn fail(&mut self) {
        loop {
            match self.frames.pop() {
                None => {
                    self.pc = FAILED;
                    return;
                }
                Some(Frame::Call { .. } | Frame::PosSave { .. } | Frame::Tree { .. }) => {}
                Some(Frame::SymScope { sym_len }) => {
                    debug_assert!(sym_len <= self.symtab.len());
                    self.symtab.truncate(sym_len);
                }
                Some(Frame::AstScope { ast }) => {
                    debug_assert!(ast.len() <= self.astlog.len());
                    self.astlog.restore(ast);
                }
                Some(Frame::Backtrack { alt, pos, sym_len, ast }) => {
                    debug_assert!(sym_len <= self.symtab.len());
                    debug_assert!(ast.len() <= self.astlog.len());
                    self.pos = pos;
                    self.symtab.truncate(sym_len);
                    self.astlog.restore(ast);
                    self.pc = alt;
                    return;
                }
            }
        }
    }
}

/// Sentinel program counter meaning the whole parse failed.
const FAILED: usize = usize::MAX;
