//! The parser-global symbol table: an append-only sequence of
//! (nonterminal, value) entries with checkpoint/rollback scoping and
//! per-name masking.
//!
//! Backtracking and scope exit share one mechanism: truncation to a
//! previously taken mark. Masking hides all earlier entries of one name
//! behind a sentinel entry, so removal on scope exit is plain truncation.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolEntry {
    pub name: String,
    pub value: Vec<u8>,
    /// Mask sentinels hide every earlier entry of `name` from queries.
    pub masked: bool,
}

/// Scoped mark. Consuming marks out of LIFO order raises [`StaleMark`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[must_use]
pub struct SymMark {
    depth: usize,
    len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("stale mark: marks must be consumed in LIFO order")]
pub struct StaleMark;

#[derive(Debug, Clone, Default)]
pub struct SymbolTable {
    entries: Vec<SymbolEntry>,
    checkpoints: Vec<usize>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of entries, including mask sentinels. Engines use this as a
    /// raw truncation point for their own frame stacks.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends `[name, value]`.
    pub fn add(&mut self, name: &str, value: &[u8]) {
        self.entries.push(SymbolEntry {
            name: name.to_string(),
            value: value.to_vec(),
            masked: false,
        });
    }

    /// Hides every current `name` entry until the enclosing scope unwinds.
    pub fn mask(&mut self, name: &str) {
        self.entries.push(SymbolEntry {
            name: name.to_string(),
            value: Vec::new(),
            masked: true,
        });
    }

    /// Most recently added unmasked value for `name`.
    pub fn top(&self, name: &str) -> Option<&[u8]> {
        for entry in self.entries.iter().rev() {
            if entry.name == name {
                if entry.masked {
                    return None;
                }
                return Some(&entry.value);
            }
        }
        None
    }

    /// Number of visible `name` entries.
    pub fn count(&self, name: &str) -> usize {
        let mut n = 0;
        for entry in self.entries.iter().rev() {
            if entry.name == name {
                if entry.masked {
                    break;
                }
                n += 1;
            }
        }
        n
    }

    /// True iff some visible `[name, value]` entry exists. Comparison is
    /// exact on raw bytes.
    pub fn contains(&self, name: &str, value: &[u8]) -> bool {
        for entry in self.entries.iter().rev() {
            if entry.name == name {
                if entry.masked {
                    return false;
                }
                if entry.value == value {
                    return true;
                }
            }
        }
        false
    }

    /// Opens a scope; pair with [`rollback`](Self::rollback) or
    /// [`commit_scope`](Self::commit_scope).
    pub fn checkpoint(&mut self) -> SymMark {
        self.checkpoints.push(self.entries.len());
        SymMark { depth: self.checkpoints.len(), len: self.entries.len() }
    }

    fn consume_mark(&mut self, mark: SymMark) -> Result<usize, StaleMark> {
        if self.checkpoints.len() != mark.depth || self.checkpoints.last() != Some(&mark.len) {
            return Err(StaleMark);
        }
        self.checkpoints.pop();
        Ok(mark.len)
    }

    /// Discards every entry added since `mark`.
    pub fn rollback(&mut self, mark: SymMark) -> Result<(), StaleMark> {
        let len = self.consume_mark(mark)?;
        self.entries.truncate(len);
        Ok(())
    }

    /// Closes the scope keeping its entries.
    pub fn commit_scope(&mut self, mark: SymMark) -> Result<(), StaleMark> {
        self.consume_mark(mark)?;
        Ok(())
    }

    /// Raw truncation to an entry count observed earlier. The parsing
    /// machine keeps its own frame stack and unwinds through this.
    pub fn truncate(&mut self, len: usize) {
        self.entries.truncate(len);
    }
}

impl fmt::Display for SymbolTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            if e.masked {
                write!(f, "[{}, <mask>]", e.name)?;
            } else {
                write!(f, "[{}, {}]", e.name, String::from_utf8_lossy(&e.value))?;
            }
        }
        Ok(())
    }
}
