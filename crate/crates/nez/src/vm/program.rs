//! Compiled program representation: a flat instruction sequence with
//! constant pools and resolved jump targets.

use crate::byteset::ByteSet;

/// One machine instruction. Jump targets are absolute code offsets; pool
/// operands index into the owning [`Program`]'s pools.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instruction {
    Nop,
    /// Unwind to the nearest backtrack frame.
    Fail,
    /// Push a backtrack frame; on failure control resumes at `target`.
    Alt { target: usize },
    /// Pop the backtrack frame and continue at `target`.
    Succ { target: usize },
    Jump { target: usize },
    Call { production: u32 },
    Ret,
    /// Push the current position (for `&e`, `<symbol>`, `<is>`, `<isa>`).
    Pos,
    /// Pop a saved position and restore it.
    Back,
    /// Loop control: with progress since the loop frame, re-arm it and jump
    /// to `target`, otherwise fail out of the loop.
    Skip { target: usize },
    Byte { byte: u8 },
    Any,
    /// Character class from the class pool.
    Set { class: u32 },
    /// Multi-byte literal from the string pool.
    Str { string: u32 },
    /// Open a subtree scope for a connector.
    TPush,
    /// Close the connector scope.
    TPop,
    /// Fold: new node wrapping the previously finished node.
    TLeftFold { label: Option<u32> },
    TNew,
    /// Extract the subtree built since the matching `tpush` and connect it.
    TLink { label: Option<u32> },
    TCapture,
    TTag { tag: u32 },
    TReplace { string: u32 },
    /// Open a tree transaction (around backtrack frames in tree regions).
    TStart,
    TCommit,
    TAbort,
    /// Open a symbol scope.
    SOpen,
    /// Close the symbol scope, discarding its entries.
    SClose,
    SMask { name: u32 },
    /// Pop a saved position and store the matched substring as a symbol.
    Symbol { name: u32 },
    Exists { name: u32 },
    /// `<exists A 'x'>`: containment of a specific value.
    IsDef { name: u32, value: u32 },
    Match { name: u32 },
    Is { name: u32 },
    Isa { name: u32 },
    /// Memo check without tree payload; `miss` is the body entry.
    Lookup { memo: u32, miss: usize },
    Memo { memo: u32 },
    MemoFail { memo: u32 },
    /// Memo check that also replays the stored tree segment.
    TLookup { memo: u32, miss: usize },
    TMemo { memo: u32 },
    /// Top-level success.
    Exit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductionEntry {
    pub name: String,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoPoint {
    pub production: String,
    /// Whether hits replay a tree segment (`tlookup`/`tmemo`).
    pub tree: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub code: Vec<Instruction>,
    /// Offset execution starts at.
    pub entry: usize,
    pub productions: Vec<ProductionEntry>,
    pub classes: Vec<ByteSet>,
    pub strings: Vec<Vec<u8>>,
    pub names: Vec<String>,
    pub memo_points: Vec<MemoPoint>,
}

impl Program {
    pub fn production_index(&self, name: &str) -> Option<usize> {
        self.productions.iter().position(|p| p.name == name)
    }

    pub fn memo_point_of(&self, name: &str) -> Option<usize> {
        self.memo_points.iter().position(|m| m.production == name)
    }

    pub(crate) fn class(&self, idx: u32) -> Option<&ByteSet> {
        self.classes.get(idx as usize)
    }

    pub(crate) fn string(&self, idx: u32) -> Option<&[u8]> {
        self.strings.get(idx as usize).map(Vec::as_slice)
    }

    pub(crate) fn name(&self, idx: u32) -> Option<&str> {
        self.names.get(idx as usize).map(String::as_str)
    }
}
