//! Parsing-expression tree: the PEG core plus tree-construction, symbol,
//! and condition operators.

use crate::byteset::ByteSet;

/// One parsing expression.
///
/// `Sequence` and `Choice` are kept n-ary; the [`Expression::sequence`] and
/// [`Expression::choice`] constructors normalize so that both always hold at
/// least two elements (singletons collapse to the element, an empty sequence
/// collapses to `Empty`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expression {
    /// `''` — always succeeds, consumes nothing.
    Empty,
    /// A single byte, e.g. one character of `'abc'`.
    Byte(u8),
    /// `[...]` character class over bytes.
    Class(ByteSet),
    /// `.` — any single byte.
    Any,
    /// Reference to a production.
    Nonterminal(String),
    Sequence(Vec<Expression>),
    /// Ordered choice.
    Choice(Vec<Expression>),
    /// `e*`
    Repetition(Box<Expression>),
    /// `e+`
    OneOrMore(Box<Expression>),
    /// `e?`
    Option(Box<Expression>),
    /// `&e` — succeeds where `e` does, consuming nothing. Symbol and tree
    /// effects of a successful attempt persist.
    And(Box<Expression>),
    /// `!e`
    Not(Box<Expression>),
    /// `{ e }` — construct a node capturing the substring matched by `e`.
    New(Box<Expression>),
    /// `{$ e}` / `{$label e}` — fold: new node takes the previously finished
    /// node as its first child.
    LeftFold(Box<Expression>, Option<String>),
    /// `$(e)` / `$label(e)` — connect the node built by `e` as the next child.
    Link(Box<Expression>, Option<String>),
    /// `#Tag`
    Tag(String),
    /// `` `text` `` — replace the captured string.
    Replace(Vec<u8>),
    /// `<symbol A>` — match `A`, then store the matched substring as an
    /// `A`-specialized symbol.
    SymbolDef(String),
    /// `<exists A>`
    Exists(String),
    /// `<exists A 'x'>`
    ExistsValue(String, Vec<u8>),
    /// `<match A>` — literally consume the most recent `A` symbol.
    Match(String),
    /// `<is A>` — match `A` and require equality with the most recent symbol.
    Is(String),
    /// `<isa A>` — match `A` and require containment in the stored symbols.
    Isa(String),
    /// `<block e>` — symbols defined inside are discarded at exit.
    Block(Box<Expression>),
    /// `<local A e>` — evaluate `e` with all current `A` symbols hidden.
    Local(String, Box<Expression>),
    /// `<if c>` / `<if !c>`
    IfCond(String, bool),
    /// `<on c e>` / `<on !c e>`
    OnCond(String, bool, Box<Expression>),
}

impl Expression {
    /// Normalizing sequence constructor: flattens nested sequences, drops
    /// `Empty` elements, and collapses down to `Empty`/the single element.
    pub fn sequence(items: Vec<Expression>) -> Expression {
        let mut flat = Vec::with_capacity(items.len());
        for item in items {
            match item {
                Expression::Empty => {}
                Expression::Sequence(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Expression::Empty,
            1 => flat.pop().unwrap(),
            _ => Expression::Sequence(flat),
        }
    }

    /// Normalizing choice constructor: flattens nested choices and collapses
    /// singletons. `Empty` alternatives are kept — they are meaningful.
    pub fn choice(items: Vec<Expression>) -> Expression {
        let mut flat = Vec::with_capacity(items.len());
        for item in items {
            match item {
                Expression::Choice(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Expression::Empty,
            1 => flat.pop().unwrap(),
            _ => Expression::Choice(flat),
        }
    }

    /// Multi-byte literal as a sequence of `Byte`s.
    pub fn literal(bytes: &[u8]) -> Expression {
        Expression::sequence(bytes.iter().map(|&b| Expression::Byte(b)).collect())
    }

    /// The canonical always-fail expression `!''`.
    pub fn never() -> Expression {
        Expression::Not(Box::new(Expression::Empty))
    }

    pub fn nonterminal(name: impl Into<String>) -> Expression {
        Expression::Nonterminal(name.into())
    }

    /// Immediate children, in order.
    pub fn children(&self) -> Vec<&Expression> {
        use Expression::*;
        match self {
            Sequence(es) | Choice(es) => es.iter().collect(),
            Repetition(e) | OneOrMore(e) | Option(e) | And(e) | Not(e) | New(e)
            | LeftFold(e, _) | Link(e, _) | Block(e) | Local(_, e) | OnCond(_, _, e) => {
                vec![e.as_ref()]
            }
            _ => Vec::new(),
        }
    }

    /// Applies `f` to every node of the expression tree, including `self`.
    pub fn visit(&self, f: &mut impl FnMut(&Expression)) {
        f(self);
        for child in self.children() {
            child.visit(f);
        }
    }

    /// Rebuilds the node with children mapped through `f`, re-normalizing
    /// sequences and choices.
    pub fn map_children(&self, f: &mut impl FnMut(&Expression) -> Expression) -> Expression {
        use Expression::*;
        match self {
            Sequence(es) => Expression::sequence(es.iter().map(|e| f(e)).collect()),
            Choice(es) => Expression::choice(es.iter().map(|e| f(e)).collect()),
            Repetition(e) => Repetition(Box::new(f(e))),
            OneOrMore(e) => OneOrMore(Box::new(f(e))),
            Option(e) => Option(Box::new(f(e))),
            And(e) => And(Box::new(f(e))),
            Not(e) => Not(Box::new(f(e))),
            New(e) => New(Box::new(f(e))),
            LeftFold(e, l) => LeftFold(Box::new(f(e)), l.clone()),
            Link(e, l) => Link(Box::new(f(e)), l.clone()),
            Block(e) => Block(Box::new(f(e))),
            Local(a, e) => Local(a.clone(), Box::new(f(e))),
            OnCond(c, v, e) => OnCond(c.clone(), *v, Box::new(f(e))),
            other => other.clone(),
        }
    }

    /// Name referenced by this node, if any, together with whether the
    /// reference invokes the production at the current position (as opposed
    /// to only naming a symbol-table key).
    pub fn referenced_name(&self) -> std::option::Option<(&str, bool)> {
        use Expression::*;
        match self {
            Nonterminal(n) | SymbolDef(n) | Is(n) | Isa(n) => Some((n, true)),
            Exists(n) | ExistsValue(n, _) | Match(n) | Local(n, _) => Some((n, false)),
            _ => None,
        }
    }

    /// True if any node in the tree satisfies the predicate.
    pub fn any_node(&self, pred: &mut impl FnMut(&Expression) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        self.children().into_iter().any(|c| c.any_node(pred))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_normalizes() {
        assert_eq!(Expression::sequence(vec![]), Expression::Empty);
        assert_eq!(
            Expression::sequence(vec![Expression::Byte(b'a')]),
            Expression::Byte(b'a')
        );
        // nested sequences flatten, empties drop
        let e = Expression::sequence(vec![
            Expression::Empty,
            Expression::sequence(vec![Expression::Byte(b'a'), Expression::Byte(b'b')]),
            Expression::Byte(b'c'),
        ]);
        assert_eq!(
            e,
            Expression::Sequence(vec![
                Expression::Byte(b'a'),
                Expression::Byte(b'b'),
                Expression::Byte(b'c'),
            ])
        );
    }

    #[test]
    fn choice_keeps_empty_alternatives() {
        let e = Expression::choice(vec![Expression::Empty, Expression::Empty]);
        assert_eq!(
            e,
            Expression::Choice(vec![Expression::Empty, Expression::Empty])
        );
    }

    #[test]
    fn never_is_not_empty() {
        let e = Expression::sequence(vec![Expression::never(), Expression::Byte(b'a')]);
        // Not('') must survive sequence normalization
        assert_eq!(
            e,
            Expression::Sequence(vec![Expression::never(), Expression::Byte(b'a')])
        );
    }
}
