//! Constant-memory memoization: a fixed number of slots keyed by
//! (input position, memo point). Collisions overwrite — a lossy cache
//! costs time, never correctness, because every hit is verified against
//! the exact key.

use std::rc::Rc;

use crate::astlog::LogRecord;

pub const DEFAULT_MEMO_CAPACITY: usize = 4096;

const P1: u64 = 1_000_000_007;
const P2: u64 = 998_244_353;

#[derive(Debug, Clone, PartialEq)]
pub enum MemoResult {
    Fail,
    Success {
        consumed: usize,
        /// Tree log segment replayed on a hit; `None` for recognition-only
        /// memo points.
        segment: Option<Rc<Vec<LogRecord>>>,
    },
}

#[derive(Debug, Clone)]
struct Slot {
    key: (usize, u32),
    result: MemoResult,
    /// Monotone store counter; shows which entry survived a collision.
    stamp: u64,
}

#[derive(Debug)]
pub struct MemoTable {
    slots: Vec<Option<Slot>>,
    stores: u64,
}

impl MemoTable {
    pub fn new(capacity: usize) -> Self {
        MemoTable { slots: vec![None; capacity.max(1)], stores: 0 }
    }

    fn slot_of(&self, pos: usize, id: u32) -> usize {
        let h = (pos as u64).wrapping_mul(P1) ^ (id as u64).wrapping_mul(P2);
        (h % self.slots.len() as u64) as usize
    }

    pub fn lookup(&self, pos: usize, id: u32) -> Option<&MemoResult> {
        let slot = self.slots[self.slot_of(pos, id)].as_ref()?;
        if slot.key == (pos, id) {
            Some(&slot.result)
        } else {
            None
        }
    }

    pub fn store(&mut self, pos: usize, id: u32, result: MemoResult) {
        let idx = self.slot_of(pos, id);
        self.stores += 1;
        self.slots[idx] = Some(Slot { key: (pos, id), result, stamp: self.stores });
    }

    pub fn stores(&self) -> u64 {
        self.stores
    }

    /// Stamp of the live entry for a key, if it is the one stored.
    pub fn stamp_of(&self, pos: usize, id: u32) -> Option<u64> {
        let slot = self.slots[self.slot_of(pos, id)].as_ref()?;
        (slot.key == (pos, id)).then_some(slot.stamp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn store_then_lookup_hits() {
        let mut m = MemoTable::new(DEFAULT_MEMO_CAPACITY);
        m.store(5, 2, MemoResult::Success { consumed: 3, segment: None });
        assert_eq!(
            m.lookup(5, 2),
            Some(&MemoResult::Success { consumed: 3, segment: None })
        );
        m.store(7, 0, MemoResult::Fail);
        assert_eq!(m.lookup(7, 0), Some(&MemoResult::Fail));
    }

    #[test]
    fn fresh_table_misses() {
        let m = MemoTable::new(16);
        assert_eq!(m.lookup(0, 0), None);
    }

    #[test]
    fn colliding_store_overwrites() {
        // every key maps to the single slot
        let mut m = MemoTable::new(1);
        m.store(1, 0, MemoResult::Success { consumed: 1, segment: None });
        m.store(2, 0, MemoResult::Fail);
        assert_eq!(m.lookup(1, 0), None, "first entry evicted");
        assert_eq!(m.lookup(2, 0), Some(&MemoResult::Fail));
        assert_eq!(m.stores(), 2);
        assert_eq!(m.stamp_of(2, 0), Some(2), "survivor is the later store");
        assert_eq!(m.stamp_of(1, 0), None);
    }

    #[test]
    fn near_keys_verify_exactly() {
        let mut m = MemoTable::new(2);
        m.store(0, 0, MemoResult::Fail);
        assert_eq!(m.lookup(0, 1), None);
        assert_eq!(m.lookup(1, 0), None);
    }
}
