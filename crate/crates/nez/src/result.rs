//! Parse outcomes and farthest-failure tracking, shared by the interpreter
//! and the parsing machine.

use std::collections::BTreeSet;
use std::fmt;

use crate::byteset::ByteSet;
use crate::syntax::literal_text;
use crate::tree::Tree;

/// A terminal the parser was prepared to accept at the failure point.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Expected {
    Byte(u8),
    Class(ByteSet),
    Any,
    EndOfInput,
    /// Rendered operator text such as `<match A>` or `<if c>`.
    Operator(String),
}

impl fmt::Display for Expected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expected::Byte(b) => write!(f, "'{}'", literal_text(&[*b], b'\'')),
            Expected::Class(set) => write!(f, "{set}"),
            Expected::Any => write!(f, "."),
            Expected::EndOfInput => write!(f, "end of input"),
            Expected::Operator(s) => write!(f, "{s}"),
        }
    }
}

/// Renders an expected set as `{'a', [0-9], <match A>}`.
pub fn format_expected_set(set: &BTreeSet<Expected>) -> String {
    let items: Vec<String> = set.iter().map(|e| e.to_string()).collect();
    format!("{{{}}}", items.join(", "))
}

/// Greatest failure offset seen so far and what was expected there.
#[derive(Debug, Clone, Default)]
pub struct FailureTracker {
    offset: usize,
    expected: BTreeSet<Expected>,
    recorded: bool,
}

impl FailureTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, pos: usize, expected: Expected) {
        if !self.recorded || pos > self.offset {
            self.recorded = true;
            self.offset = pos;
            self.expected.clear();
            self.expected.insert(expected);
        } else if pos == self.offset {
            self.expected.insert(expected);
        }
    }

    pub fn into_failure(self) -> ParseResult {
        ParseResult::Failure { offset: self.offset, expected: self.expected }
    }
}

/// Outcome of a parse: how much input was consumed and, in tree mode, the
/// committed tree; or the farthest failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseResult {
    Success { consumed: usize, tree: Option<Tree> },
    Failure { offset: usize, expected: BTreeSet<Expected> },
}

impl ParseResult {
    pub fn is_success(&self) -> bool {
        matches!(self, ParseResult::Success { .. })
    }

    pub fn consumed(&self) -> Option<usize> {
        match self {
            ParseResult::Success { consumed, .. } => Some(*consumed),
            ParseResult::Failure { .. } => None,
        }
    }

    pub fn tree(&self) -> Option<&Tree> {
        match self {
            ParseResult::Success { tree, .. } => tree.as_ref(),
            ParseResult::Failure { .. } => None,
        }
    }
}

/// Hard evaluation faults. These indicate a grammar or engine defect, never
/// an ordinary parse failure.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("step budget exceeded")]
    StepBudgetExceeded,
    #[error("evaluation depth exceeded")]
    DepthExceeded,
    #[error("undefined nonterminal {0}")]
    UndefinedNonterminal(String),
    #[error("machine trap: {0}")]
    MachineTrap(String),
}
