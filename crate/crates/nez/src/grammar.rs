//! Grammar: an ordered set of named productions with a start symbol.

use indexmap::IndexMap;
use std::collections::BTreeSet;

use crate::expr::Expression;

/// A grammar is an ordered map of productions plus the start production.
/// The tag set is derived from the expressions on demand.
#[derive(Debug, Clone)]
pub struct Grammar {
    productions: IndexMap<String, Expression>,
    start: String,
}

impl Grammar {
    /// Builds a grammar from `(name, body)` pairs; the first production is
    /// the start symbol. Returns `None` on an empty list or duplicate names.
    pub fn new(productions: Vec<(String, Expression)>) -> Option<Grammar> {
        let start = productions.first()?.0.clone();
        let mut map = IndexMap::with_capacity(productions.len());
        for (name, body) in productions {
            if map.insert(name, body).is_some() {
                return None;
            }
        }
        Some(Grammar { productions: map, start })
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    /// Re-points the start symbol. Fails if `name` is not a production.
    pub fn set_start(&mut self, name: &str) -> Result<(), UnknownProduction> {
        if self.productions.contains_key(name) {
            self.start = name.to_string();
            Ok(())
        } else {
            Err(UnknownProduction(name.to_string()))
        }
    }

    pub fn body(&self, name: &str) -> Option<&Expression> {
        self.productions.get(name)
    }

    pub fn len(&self) -> usize {
        self.productions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.productions.is_empty()
    }

    /// Productions in definition order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &Expression)> {
        self.productions.iter().map(|(n, e)| (n.as_str(), e))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.productions.keys().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.productions.contains_key(name)
    }

    /// Every tag mentioned anywhere in the grammar.
    pub fn tags(&self) -> BTreeSet<String> {
        let mut tags = BTreeSet::new();
        for (_, body) in self.iter() {
            body.visit(&mut |e| {
                if let Expression::Tag(t) = e {
                    tags.insert(t.clone());
                }
            });
        }
        tags
    }

    /// Rebuilds every production body through `f`, keeping names and order.
    pub fn map_bodies(&self, mut f: impl FnMut(&str, &Expression) -> Expression) -> Grammar {
        Grammar {
            productions: self
                .productions
                .iter()
                .map(|(n, e)| (n.clone(), f(n, e)))
                .collect(),
            start: self.start.clone(),
        }
    }
}

/// Structural equality: same productions in the same order, same start.
impl PartialEq for Grammar {
    fn eq(&self, other: &Self) -> bool {
        self.start == other.start
            && self.productions.len() == other.productions.len()
            && self.productions.iter().zip(other.productions.iter()).all(|(a, b)| a == b)
    }
}

impl Eq for Grammar {}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown production: {0}")]
pub struct UnknownProduction(pub String);
