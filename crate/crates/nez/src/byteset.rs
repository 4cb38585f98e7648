//! Byte-class sets over the full 0..=255 alphabet.

use std::fmt;

/// A set of byte values, the payload of a character class expression.
///
/// Backed by a 256-bit bitmap so membership is branch-free and grammars
/// stay cheap to clone.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ByteSet([u64; 4]);

impl ByteSet {
    pub const fn empty() -> Self {
        ByteSet([0; 4])
    }

    pub fn full() -> Self {
        ByteSet([u64::MAX; 4])
    }

    pub fn single(b: u8) -> Self {
        let mut s = Self::empty();
        s.insert(b);
        s
    }

    /// Inclusive range of bytes.
    pub fn range(lo: u8, hi: u8) -> Self {
        let mut s = Self::empty();
        s.insert_range(lo, hi);
        s
    }

    pub fn insert(&mut self, b: u8) {
        self.0[(b >> 6) as usize] |= 1u64 << (b & 63);
    }

    pub fn insert_range(&mut self, lo: u8, hi: u8) {
        for b in lo..=hi {
            self.insert(b);
        }
    }

    pub fn contains(&self, b: u8) -> bool {
        self.0[(b >> 6) as usize] & (1u64 << (b & 63)) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == [0; 4]
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        (0..=255u8).filter(move |&b| self.contains(b))
    }

    /// Maximal runs of consecutive members, used for canonical rendering.
    pub fn runs(&self) -> Vec<(u8, u8)> {
        let mut runs = Vec::new();
        let mut cur: Option<(u8, u8)> = None;
        for b in self.iter() {
            match cur {
                Some((lo, hi)) if hi as u16 + 1 == b as u16 => cur = Some((lo, b)),
                Some(done) => {
                    runs.push(done);
                    cur = Some((b, b));
                }
                None => cur = Some((b, b)),
            }
        }
        if let Some(done) = cur {
            runs.push(done);
        }
        runs
    }
}

fn push_class_byte(out: &mut String, b: u8) {
    match b {
        b'\n' => out.push_str("\\n"),
        b'\r' => out.push_str("\\r"),
        b'\t' => out.push_str("\\t"),
        b'\\' => out.push_str("\\\\"),
        b']' => out.push_str("\\]"),
        b'-' => out.push_str("\\-"),
        b'\'' => out.push_str("\\'"),
        0x20..=0x7e => out.push(b as char),
        _ => out.push_str(&format!("\\x{b:02X}")),
    }
}

impl fmt::Display for ByteSet {
    /// Renders in grammar class notation, e.g. `[0-9A-Fa-f_]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::from("[");
        for (lo, hi) in self.runs() {
            match hi - lo {
                0 => push_class_byte(&mut out, lo),
                1 => {
                    push_class_byte(&mut out, lo);
                    push_class_byte(&mut out, hi);
                }
                _ => {
                    push_class_byte(&mut out, lo);
                    out.push('-');
                    push_class_byte(&mut out, hi);
                }
            }
        }
        out.push(']');
        f.write_str(&out)
    }
}

impl fmt::Debug for ByteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ByteSet({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_and_ranges() {
        let digits = ByteSet::range(b'0', b'9');
        assert!(digits.contains(b'0'));
        assert!(digits.contains(b'9'));
        assert!(!digits.contains(b'a'));
        assert_eq!(digits.len(), 10);
    }

    #[test]
    fn runs_coalesce() {
        let mut s = ByteSet::range(b'a', b'z');
        s.insert_range(b'A', b'Z');
        s.insert(b'_');
        assert_eq!(s.runs(), vec![(b'A', b'Z'), (b'_', b'_'), (b'a', b'z')]);
        assert_eq!(s.to_string(), "[A-Z_a-z]");
    }

    #[test]
    fn display_escapes() {
        let mut s = ByteSet::empty();
        s.insert(b'\n');
        s.insert(b']');
        s.insert(b'-');
        s.insert(0x00);
        assert_eq!(s.to_string(), "[\\x00\\n\\-\\]]");
    }

    #[test]
    fn two_element_run_prints_both() {
        let s = ByteSet::range(b'a', b'b');
        assert_eq!(s.to_string(), "[ab]");
    }
}
