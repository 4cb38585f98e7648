//! Transactional tree construction.
//!
//! Tree operators append records to a log instead of mutating trees, so
//! backtracking is truncation and a parse commits the surviving records
//! into one tree at the end. Connected subtrees (`$(e)`) are materialized
//! when the connector completes and carried inside their log record, which
//! keeps the log flat: at any moment it describes the construction of a
//! single node context.

use crate::tree::Tree;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LogRecord {
    /// Start of a `{e}` node at an input position.
    New { pos: usize },
    /// End of the current node; fixes its span.
    Capture { pos: usize },
    Tag { tag: String },
    Replace { bytes: Vec<u8> },
    /// A finished subtree connected as the next child.
    Link { label: Option<String>, tree: Tree },
    /// Start of a `{$ e}` node that takes the previously finished node as
    /// its first child.
    Fold { pos: usize, label: Option<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum AstLogError {
    #[error("stale mark: marks must be consumed in LIFO order")]
    StaleMark,
    #[error("commit without root: the log produced no node")]
    CommitWithoutRoot,
    #[error("left-fold without a preceding node")]
    FoldWithoutLeft,
}

/// Snapshot of the log used by engines for frame-based unwinding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AstState {
    len: usize,
    open_depth: usize,
    finished: bool,
}

impl AstState {
    pub fn len(&self) -> usize {
        self.len
    }
}

/// Scoped mark with LIFO discipline, the interpreter-facing counterpart of
/// [`AstState`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[must_use]
pub struct AstMark {
    depth: usize,
    state: AstState,
}

#[derive(Debug, Clone)]
pub struct AstLog {
    enabled: bool,
    records: Vec<LogRecord>,
    checkpoints: Vec<AstState>,
    /// Number of nodes opened and not yet captured.
    open_depth: usize,
    /// Whether a finished node is available (the left operand of a fold).
    finished: bool,
}

impl Default for AstLog {
    fn default() -> Self {
        Self::new()
    }
}

impl AstLog {
    pub fn new() -> Self {
        AstLog {
            enabled: true,
            records: Vec::new(),
            checkpoints: Vec::new(),
            open_depth: 0,
            finished: false,
        }
    }

    /// A log that ignores every operation; used for match-only parsing.
    pub fn disabled() -> Self {
        AstLog { enabled: false, ..Self::new() }
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    /// Whether a finished node is available as the left operand of a fold.
    /// A fold without one degenerates to a plain node (the engines wrap
    /// the initial empty tree), keeping recognition independent of tree
    /// state.
    pub fn has_finished_node(&self) -> bool {
        self.finished
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn push(&mut self, rec: LogRecord) {
        self.track(&rec);
        self.records.push(rec);
    }

    /// Derived-state update; mirrors exactly what replay does per record.
    fn track(&mut self, rec: &LogRecord) {
        match rec {
            LogRecord::New { .. } => self.open_depth += 1,
            LogRecord::Capture { .. } => {
                if self.open_depth > 0 {
                    self.open_depth -= 1;
                    self.finished = true;
                }
            }
            LogRecord::Tag { .. } | LogRecord::Replace { .. } => {}
            LogRecord::Link { .. } => {
                if self.open_depth == 0 {
                    self.finished = true;
                }
            }
            LogRecord::Fold { .. } => {
                self.finished = false;
                self.open_depth += 1;
            }
        }
    }

    pub fn op_new(&mut self, pos: usize) {
        if self.enabled {
            self.push(LogRecord::New { pos });
        }
    }

    pub fn op_capture(&mut self, pos: usize) {
        if self.enabled {
            self.push(LogRecord::Capture { pos });
        }
    }

    pub fn op_tag(&mut self, tag: &str) {
        if self.enabled {
            self.push(LogRecord::Tag { tag: tag.to_string() });
        }
    }

    pub fn op_replace(&mut self, bytes: &[u8]) {
        if self.enabled {
            self.push(LogRecord::Replace { bytes: bytes.to_vec() });
        }
    }

    /// Connects a finished subtree as the next child of the current node.
    pub fn op_link(&mut self, label: Option<&str>, tree: Tree) {
        if self.enabled {
            self.push(LogRecord::Link { label: label.map(str::to_string), tree });
        }
    }

    /// Starts a fold node that wraps the previously finished node. Fails
    /// when no finished node exists.
    pub fn op_fold(&mut self, pos: usize, label: Option<&str>) -> Result<(), AstLogError> {
        if !self.enabled {
            return Ok(());
        }
        if !self.finished {
            return Err(AstLogError::FoldWithoutLeft);
        }
        self.push(LogRecord::Fold { pos, label: label.map(str::to_string) });
        Ok(())
    }

    // -- scoped marks (interpreter path) ------------------------------------

    pub fn checkpoint(&mut self) -> AstMark {
        let state = self.state();
        self.checkpoints.push(state);
        AstMark { depth: self.checkpoints.len(), state }
    }

    fn consume_mark(&mut self, mark: AstMark) -> Result<AstState, AstLogError> {
        if self.checkpoints.len() != mark.depth || self.checkpoints.last() != Some(&mark.state) {
            return Err(AstLogError::StaleMark);
        }
        self.checkpoints.pop();
        Ok(mark.state)
    }

    /// Discards every record since `mark`.
    pub fn rollback(&mut self, mark: AstMark) -> Result<(), AstLogError> {
        let state = self.consume_mark(mark)?;
        self.restore(state);
        Ok(())
    }

    /// Closes the scope keeping its records.
    pub fn commit_scope(&mut self, mark: AstMark) -> Result<(), AstLogError> {
        self.consume_mark(mark)?;
        Ok(())
    }

    // -- raw snapshots (parsing machine path) --------------------------------

    pub fn state(&self) -> AstState {
        AstState { len: self.records.len(), open_depth: self.open_depth, finished: self.finished }
    }

    /// Truncates back to an earlier snapshot.
    pub fn restore(&mut self, state: AstState) {
        self.records.truncate(state.len);
        self.open_depth = state.open_depth;
        self.finished = state.finished;
    }

    // -- subtrees and memoization --------------------------------------------

    /// Replays the records after `mark` into a finished subtree, removing
    /// them from the log. Returns `None` when no node was produced there.
    pub fn extract_subtree(&mut self, mark: AstState) -> Option<Tree> {
        if !self.enabled {
            return None;
        }
        let mut replay = Replay::default();
        for rec in self.records.drain(mark.len..) {
            replay.apply(rec);
        }
        self.open_depth = mark.open_depth;
        self.finished = mark.finished;
        replay.finished
    }

    /// Clones the records after `from`, the tree payload of a memo entry.
    pub fn segment(&self, from: usize) -> Vec<LogRecord> {
        self.records[from..].to_vec()
    }

    /// Appends a memoized segment, replaying the derived-state updates.
    pub fn append_segment(&mut self, segment: &[LogRecord]) {
        if !self.enabled {
            return;
        }
        for rec in segment {
            self.push(rec.clone());
        }
    }

    /// Replays the whole log into the final tree.
    pub fn commit(&self) -> Result<Tree, AstLogError> {
        let mut replay = Replay::default();
        for rec in &self.records {
            replay.apply(rec.clone());
        }
        replay.finished.ok_or(AstLogError::CommitWithoutRoot)
    }
}

/// Replay state: a stack of open nodes plus the most recently finished one.
#[derive(Default)]
struct Replay {
    open: Vec<Tree>,
    finished: Option<Tree>,
}

impl Replay {
    fn apply(&mut self, rec: LogRecord) {
        match rec {
            LogRecord::New { pos } => self.open.push(Tree::new((pos, pos))),
            LogRecord::Capture { pos } => {
                if let Some(mut node) = self.open.pop() {
                    node.span.1 = pos;
                    self.finished = Some(node);
                }
            }
            LogRecord::Tag { tag } => {
                if let Some(node) = self.open.last_mut() {
                    node.tag = Some(tag);
                } else if let Some(node) = self.finished.as_mut() {
                    node.tag = Some(tag);
                }
            }
            LogRecord::Replace { bytes } => {
                if let Some(node) = self.open.last_mut() {
                    node.replaced = Some(bytes);
                } else if let Some(node) = self.finished.as_mut() {
                    node.replaced = Some(bytes);
                }
            }
            LogRecord::Link { label, tree } => {
                if let Some(node) = self.open.last_mut() {
                    node.children.push((label, tree));
                } else {
                    self.finished = Some(tree);
                }
            }
            LogRecord::Fold { pos, label } => {
                let left = self.finished.take();
                let mut node = Tree::new((pos, pos));
                if let Some(l) = left {
                    node.children.push((label, l));
                }
                self.open.push(node);
            }
        }
    }
}
