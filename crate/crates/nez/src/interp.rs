//! Reference interpreter: recursive descent with backtracking over the
//! expression tree, driving the symbol table and the tree log directly.
//! This is the slow, obviously-correct engine the parsing machine is
//! checked against; it also evaluates conditions dynamically.
//!
//! Failure discipline: an expression that returns failure has already
//! restored position, symbol table, and tree log to its entry state, so
//! choice points need no cleanup of their own.

use std::collections::HashMap;

use crate::astlog::AstLog;
use crate::cond::ConditionState;
use crate::desugar::strip_ast_ops;
use crate::expr::Expression;
use crate::grammar::Grammar;
use crate::result::{EvalError, Expected, FailureTracker, ParseResult};
use crate::symtab::SymbolTable;
use crate::syntax::format_expression;

/// Default evaluation depth bound; a guard against runaway recursion, not a
/// tuning knob. Deep inputs should raise it and run on a thread with a
/// matching stack size.
pub const DEFAULT_MAX_DEPTH: usize = 2048;

/// Step budget for an input of `n` bytes. Exceeding it signals a grammar
/// bug (validation should have rejected unproductive loops).
pub fn default_step_budget(input_len: usize) -> u64 {
    256 * input_len as u64 + (1 << 16)
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    /// Record tree operations and commit a tree on success.
    pub build_tree: bool,
    /// Overrides the default step budget when set.
    pub step_budget: Option<u64>,
    pub max_depth: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { build_tree: true, step_budget: None, max_depth: DEFAULT_MAX_DEPTH }
    }
}

/// A reusable evaluator over one grammar. Conditions are evaluated
/// dynamically (all false initially), so both plain and condition-bearing
/// grammars run directly.
pub struct Evaluator<'g> {
    bodies: HashMap<&'g str, &'g Expression>,
    start: &'g str,
    options: EvalOptions,
}

impl<'g> Evaluator<'g> {
    pub fn new(grammar: &'g Grammar) -> Self {
        Self::with_options(grammar, EvalOptions::default())
    }

    pub fn with_options(grammar: &'g Grammar, options: EvalOptions) -> Self {
        Evaluator {
            bodies: grammar.iter().collect(),
            start: grammar.start(),
            options,
        }
    }

    /// Runs the start production from an empty table and empty log.
    pub fn run(&self, input: &[u8]) -> Result<ParseResult, EvalError> {
        let mut session = Session {
            bodies: &self.bodies,
            input,
            pos: 0,
            symtab: SymbolTable::new(),
            astlog: if self.options.build_tree { AstLog::new() } else { AstLog::disabled() },
            conditions: ConditionState::new(),
            steps: self.options.step_budget.unwrap_or_else(|| default_step_budget(input.len())),
            depth: 0,
            max_depth: self.options.max_depth,
            failures: FailureTracker::new(),
        };
        let start_body = self
            .bodies
            .get(self.start)
            .ok_or_else(|| EvalError::UndefinedNonterminal(self.start.to_string()))?;
        if session.eval(start_body)? {
            let tree = session.astlog.commit().ok();
            Ok(ParseResult::Success { consumed: session.pos, tree })
        } else {
            Ok(session.failures.into_failure())
        }
    }
}

/// Parses with tree construction.
pub fn parse(grammar: &Grammar, input: &[u8]) -> Result<ParseResult, EvalError> {
    Evaluator::new(grammar).run(input)
}

/// Recognition only: runs the tree-operator-stripped grammar with logging
/// disabled. Accepts the same inputs as [`parse`] at the same lengths.
pub fn match_only(grammar: &Grammar, input: &[u8]) -> Result<ParseResult, EvalError> {
    let stripped = strip_ast_ops(grammar);
    let options = EvalOptions { build_tree: false, ..EvalOptions::default() };
    Evaluator::with_options(&stripped, options).run(input)
}

struct Session<'g, 'i> {
    bodies: &'g HashMap<&'g str, &'g Expression>,
    input: &'i [u8],
    pos: usize,
    symtab: SymbolTable,
    astlog: AstLog,
    conditions: ConditionState,
    steps: u64,
    depth: usize,
    max_depth: usize,
    failures: FailureTracker,
}

impl Session<'_, '_> {
    fn eval(&mut self, e: &Expression) -> Result<bool, EvalError> {
        if self.steps == 0 {
            return Err(EvalError::StepBudgetExceeded);
        }
        self.steps -= 1;
        if self.depth >= self.max_depth {
            return Err(EvalError::DepthExceeded);
        }
        self.depth += 1;
        let result = self.eval_inner(e);
        self.depth -= 1;
        result
    }

    fn eval_inner(&mut self, e: &Expression) -> Result<bool, EvalError> {
        use Expression::*;
        match e {
            Empty => Ok(true),
            Byte(b) => {
                if self.input.get(self.pos) == Some(b) {
                    self.pos += 1;
                    Ok(true)
                } else {
                    self.failures.record(self.pos, Expected::Byte(*b));
                    Ok(false)
                }
            }
            Class(set) => {
                if self.input.get(self.pos).is_some_and(|b| set.contains(*b)) {
                    self.pos += 1;
                    Ok(true)
                } else {
                    self.failures.record(self.pos, Expected::Class(*set));
                    Ok(false)
                }
            }
            Any => {
                if self.pos < self.input.len() {
                    self.pos += 1;
                    Ok(true)
                } else {
                    self.failures.record(self.pos, Expected::Any);
                    Ok(false)
                }
            }
            Nonterminal(name) => self.call(name),
            Sequence(items) => {
                let pos = self.pos;
                let smark = self.symtab.checkpoint();
                let amark = self.astlog.checkpoint();
                for item in items {
                    if !self.eval(item)? {
                        self.pos = pos;
                        self.symtab.rollback(smark).expect("marks are LIFO");
                        self.astlog.rollback(amark).expect("marks are LIFO");
                        return Ok(false);
                    }
                }
                self.symtab.commit_scope(smark).expect("marks are LIFO");
                self.astlog.commit_scope(amark).expect("marks are LIFO");
                Ok(true)
            }
            Choice(alts) => {
                for alt in alts {
                    if self.eval(alt)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Repetition(inner) => {
                self.repeat(inner)?;
                Ok(true)
            }
            OneOrMore(inner) => {
                if !self.eval(inner)? {
                    return Ok(false);
                }
                self.repeat(inner)?;
                Ok(true)
            }
            Option(inner) => {
                self.eval(inner)?;
                Ok(true)
            }
            And(inner) => {
                // position resets; symbol and tree effects persist
                let pos = self.pos;
                if self.eval(inner)? {
                    self.pos = pos;
                    Ok(true)
                } else {
                    Ok(false)
                }
            }
            Not(inner) => {
                let pos = self.pos;
                let smark = self.symtab.checkpoint();
                let amark = self.astlog.checkpoint();
                let matched = self.eval(inner)?;
                self.pos = pos;
                self.symtab.rollback(smark).expect("marks are LIFO");
                self.astlog.rollback(amark).expect("marks are LIFO");
                Ok(!matched)
            }
            New(inner) => {
                let pos = self.pos;
                let amark = self.astlog.checkpoint();
                self.astlog.op_new(pos);
                if self.eval(inner)? {
                    self.astlog.op_capture(self.pos);
                    self.astlog.commit_scope(amark).expect("marks are LIFO");
                    Ok(true)
                } else {
                    self.astlog.rollback(amark).expect("marks are LIFO");
                    Ok(false)
                }
            }
            LeftFold(inner, label) => {
                let amark = self.astlog.checkpoint();
                if self.astlog.has_finished_node() {
                    self.astlog
                        .op_fold(self.pos, label.as_deref())
                        .expect("left node checked");
                } else {
                    // fold over the initial empty tree: a plain node
                    self.astlog.op_new(self.pos);
                }
                if self.eval(inner)? {
                    self.astlog.op_capture(self.pos);
                    self.astlog.commit_scope(amark).expect("marks are LIFO");
                    Ok(true)
                } else {
                    self.astlog.rollback(amark).expect("marks are LIFO");
                    Ok(false)
                }
            }
            Link(inner, label) => {
                let mark = self.astlog.state();
                if self.eval(inner)? {
                    if let Some(tree) = self.astlog.extract_subtree(mark) {
                        self.astlog.op_link(label.as_deref(), tree);
                    }
                    Ok(true)
                } else {
                    Ok(false)
                }
            }
            Tag(t) => {
                self.astlog.op_tag(t);
                Ok(true)
            }
            Replace(bytes) => {
                self.astlog.op_replace(bytes);
                Ok(true)
            }
            SymbolDef(name) => {
                let pos = self.pos;
                if self.call(name)? {
                    let value = self.input[pos..self.pos].to_vec();
                    self.symtab.add(name, &value);
                    Ok(true)
                } else {
                    Ok(false)
                }
            }
            Exists(_) | ExistsValue(_, _) => {
                let holds = match e {
                    Exists(name) => self.symtab.count(name) > 0,
                    ExistsValue(name, value) => self.symtab.contains(name, value),
                    _ => unreachable!(),
                };
                if holds {
                    Ok(true)
                } else {
                    self.fail_operator(self.pos, e);
                    Ok(false)
                }
            }
            Match(name) => match self.symtab.top(name) {
                Some(z) if self.input[self.pos..].starts_with(z) => {
                    self.pos += z.len();
                    Ok(true)
                }
                _ => {
                    self.fail_operator(self.pos, e);
                    Ok(false)
                }
            },
            Is(_) | Isa(_) => {
                let name = match e {
                    Is(n) | Isa(n) => n,
                    _ => unreachable!(),
                };
                let pos = self.pos;
                let smark = self.symtab.checkpoint();
                let amark = self.astlog.checkpoint();
                if !self.call(name)? {
                    self.symtab.rollback(smark).expect("marks are LIFO");
                    self.astlog.rollback(amark).expect("marks are LIFO");
                    return Ok(false);
                }
                let captured = &self.input[pos..self.pos];
                let holds = match e {
                    Is(_) => self.symtab.top(name) == Some(captured),
                    Isa(_) => self.symtab.contains(name, captured),
                    _ => unreachable!(),
                };
                if holds {
                    self.symtab.commit_scope(smark).expect("marks are LIFO");
                    self.astlog.commit_scope(amark).expect("marks are LIFO");
                    Ok(true)
                } else {
                    self.pos = pos;
                    self.symtab.rollback(smark).expect("marks are LIFO");
                    self.astlog.rollback(amark).expect("marks are LIFO");
                    self.fail_operator(pos, e);
                    Ok(false)
                }
            }
            Block(inner) => {
                // symbols defined inside are not referable outside
                let smark = self.symtab.checkpoint();
                let matched = self.eval(inner)?;
                self.symtab.rollback(smark).expect("marks are LIFO");
                Ok(matched)
            }
            Local(name, inner) => {
                let smark = self.symtab.checkpoint();
                self.symtab.mask(name);
                let matched = self.eval(inner)?;
                self.symtab.rollback(smark).expect("marks are LIFO");
                Ok(matched)
            }
            IfCond(name, wanted) => {
                if self.conditions.get(name) == *wanted {
                    Ok(true)
                } else {
                    self.fail_operator(self.pos, e);
                    Ok(false)
                }
            }
            OnCond(name, value, inner) => {
                let previous = self.conditions.set(name, *value);
                let result = self.eval(inner);
                self.conditions.restore(name, previous);
                result
            }
        }
    }

    fn call(&mut self, name: &str) -> Result<bool, EvalError> {
        let body = *self
            .bodies
            .get(name)
            .ok_or_else(|| EvalError::UndefinedNonterminal(name.to_string()))?;
        self.eval(body)
    }

    /// Greedy loop with a progress check: an iteration that consumes no
    /// input and changes no state ends the loop. Validated grammars never
    /// trigger the check; it guards data-dependent cases.
    fn repeat(&mut self, inner: &Expression) -> Result<(), EvalError> {
        loop {
            let pos = self.pos;
            let slen = self.symtab.len();
            let alen = self.astlog.len();
            let smark = self.symtab.checkpoint();
            let amark = self.astlog.checkpoint();
            if !self.eval(inner)? {
                self.pos = pos;
                self.symtab.rollback(smark).expect("marks are LIFO");
                self.astlog.rollback(amark).expect("marks are LIFO");
                return Ok(());
            }
            self.symtab.commit_scope(smark).expect("marks are LIFO");
            self.astlog.commit_scope(amark).expect("marks are LIFO");
            if self.pos == pos && self.symtab.len() == slen && self.astlog.len() == alen {
                return Ok(());
            }
        }
    }

    fn fail_operator(&mut self, pos: usize, e: &Expression) {
        self.failures.record(pos, Expected::Operator(format_expression(e)));
    }
}
