//! Random grammar and input generation for differential testing.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use nez::{ByteSet, Expression, Grammar};

/// Controls which operator families the generator may emit.
#[derive(Clone, Copy)]
pub struct GenProfile {
    pub symbols: bool,
    pub trees: bool,
    pub conditions: bool,
}

impl GenProfile {
    /// Everything the language offers.
    pub fn full() -> Self {
        GenProfile { symbols: true, trees: true, conditions: true }
    }

    /// Conditions and trees but no symbol operators; condition elimination
    /// is exact on this fragment.
    pub fn conditions_only() -> Self {
        GenProfile { symbols: false, trees: true, conditions: true }
    }
}

pub struct GrammarGen {
    rng: ChaCha8Rng,
    profile: GenProfile,
}

const ALPHABET: &[u8] = b"ab01x";
const LABELS: [&str; 3] = ["left", "right", "item"];
const TAGS: [&str; 4] = ["A", "B", "Pair", "List"];
const CONDS: [&str; 2] = ["c0", "c1"];

impl GrammarGen {
    pub fn new(seed: u64, profile: GenProfile) -> Self {
        GrammarGen { rng: ChaCha8Rng::seed_from_u64(seed), profile }
    }

    /// Generates until a validating grammar appears.
    pub fn grammar(&mut self) -> Grammar {
        loop {
            let count = self.rng.gen_range(1..=6);
            let names: Vec<String> = (0..count).map(|i| format!("P{i}")).collect();
            let prods: Vec<(String, Expression)> = names
                .iter()
                .map(|n| (n.clone(), self.expr(&names, 3)))
                .collect();
            let Some(g) = Grammar::new(prods) else { continue };
            if nez::validate(&g).is_ok() {
                return g;
            }
        }
    }

    pub fn input(&mut self, max_len: usize) -> Vec<u8> {
        let len = self.rng.gen_range(0..=max_len);
        (0..len)
            .map(|_| {
                if self.rng.gen_bool(0.9) {
                    *ALPHABET.choose(&mut self.rng).unwrap()
                } else {
                    self.rng.gen()
                }
            })
            .collect()
    }

    fn name<'n>(&mut self, names: &'n [String]) -> &'n str {
        names.choose(&mut self.rng).unwrap()
    }

    fn label(&mut self) -> Option<String> {
        if self.rng.gen_bool(0.4) {
            Some(LABELS.choose(&mut self.rng).unwrap().to_string())
        } else {
            None
        }
    }

    fn byte(&mut self) -> u8 {
        *ALPHABET.choose(&mut self.rng).unwrap()
    }

    fn class(&mut self) -> ByteSet {
        let mut set = ByteSet::empty();
        for _ in 0..self.rng.gen_range(1..=3) {
            if self.rng.gen_bool(0.5) {
                set.insert(self.byte());
            } else {
                let (a, b) = (self.byte(), self.byte());
                set.insert_range(a.min(b), a.max(b));
            }
        }
        set
    }

    fn expr(&mut self, names: &[String], depth: usize) -> Expression {
        use Expression as E;
        if depth == 0 {
            return self.atom(names);
        }
        let d = depth - 1;
        let pick = self.rng.gen_range(0..100);
        match pick {
            0..=29 => self.atom(names),
            30..=41 => E::sequence((0..self.rng.gen_range(2..=3)).map(|_| self.expr(names, d)).collect()),
            42..=53 => E::choice((0..self.rng.gen_range(2..=3)).map(|_| self.expr(names, d)).collect()),
            54..=57 => E::Repetition(Box::new(self.expr(names, d))),
            58..=60 => E::OneOrMore(Box::new(self.expr(names, d))),
            61..=63 => E::Option(Box::new(self.expr(names, d))),
            64..=66 => E::And(Box::new(self.expr(names, d))),
            67..=69 => E::Not(Box::new(self.expr(names, d))),
            70..=84 if self.profile.trees => self.tree_op(names, d),
            85..=94 if self.profile.symbols => self.symbol_op(names, d),
            95..=99 if self.profile.conditions => self.condition_op(names, d),
            _ => self.atom(names),
        }
    }

    fn atom(&mut self, names: &[String]) -> Expression {
        use Expression as E;
        match self.rng.gen_range(0..10) {
            0 | 1 | 2 => E::Byte(self.byte()),
            3 | 4 => E::Class(self.class()),
            5 => E::Any,
            6 => E::Empty,
            7 => {
                let len = self.rng.gen_range(2..=3);
                let bytes: Vec<u8> = (0..len).map(|_| self.byte()).collect();
                E::literal(&bytes)
            }
            _ => E::Nonterminal(self.name(names).to_string()),
        }
    }

    fn tree_op(&mut self, names: &[String], depth: usize) -> Expression {
        use Expression as E;
        match self.rng.gen_range(0..6) {
            0 | 1 => E::New(Box::new(self.expr(names, depth))),
            2 => E::Link(Box::new(self.expr(names, depth)), self.label()),
            3 => E::LeftFold(Box::new(self.expr(names, depth)), self.label()),
            4 => E::Tag(TAGS.choose(&mut self.rng).unwrap().to_string()),
            _ => E::Replace(vec![self.byte()]),
        }
    }

    fn symbol_op(&mut self, names: &[String], depth: usize) -> Expression {
        use Expression as E;
        let name = self.name(names).to_string();
        match self.rng.gen_range(0..8) {
            0 | 1 => E::SymbolDef(name),
            2 => E::Exists(name),
            3 => E::ExistsValue(name, vec![self.byte()]),
            4 => E::Match(name),
            5 => E::Is(name),
            6 => E::Isa(name),
            _ => {
                if self.rng.gen_bool(0.5) {
                    E::Block(Box::new(self.expr(names, depth)))
                } else {
                    E::Local(name, Box::new(self.expr(names, depth)))
                }
            }
        }
    }

    fn condition_op(&mut self, names: &[String], depth: usize) -> Expression {
        use Expression as E;
        let cond = CONDS.choose(&mut self.rng).unwrap().to_string();
        if self.rng.gen_bool(0.5) {
            E::IfCond(cond, self.rng.gen_bool(0.5))
        } else {
            E::OnCond(cond, self.rng.gen_bool(0.5), Box::new(self.expr(names, depth)))
        }
    }
}
