//! Concrete `.nez` grammar syntax: text to [`Grammar`] and back.
//!
//! A grammar file is a list of `A = e` productions; the first production is
//! the start symbol. Whitespace is insignificant outside literals and
//! classes, `//` starts a line comment and `/* */` a block comment.

use std::fmt;

use crate::byteset::ByteSet;
use crate::expr::Expression;
use crate::grammar::Grammar;

/// Byte range in the source text with the line/column of its start.
/// Lines and columns are 1-based; columns count bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GrammarSyntaxError {
    #[error("{}:{}: syntax error: {message}, expected {}", span.line, span.column, format_expected(expected))]
    SyntaxError {
        span: SourceSpan,
        message: String,
        expected: Vec<String>,
    },
    #[error("{}:{}: duplicate production {name}", span.line, span.column)]
    DuplicateProduction { span: SourceSpan, name: String },
}

impl GrammarSyntaxError {
    pub fn span(&self) -> SourceSpan {
        match self {
            GrammarSyntaxError::SyntaxError { span, .. } => *span,
            GrammarSyntaxError::DuplicateProduction { span, .. } => *span,
        }
    }
}

fn format_expected(expected: &[String]) -> String {
    if expected.is_empty() {
        "nothing".to_string()
    } else {
        expected.join(" or ")
    }
}

/// Parses grammar text. The first production becomes the start symbol.
pub fn parse_grammar(text: &str) -> Result<Grammar, GrammarSyntaxError> {
    let mut reader = Reader::new(text.as_bytes());
    let mut productions: Vec<(String, Expression)> = Vec::new();
    reader.skip_trivia();
    while !reader.at_end() {
        let span = reader.span_here(0);
        let name = reader.expect_ident("production name")?;
        if productions.iter().any(|(n, _)| n == &name) {
            return Err(GrammarSyntaxError::DuplicateProduction { span, name });
        }
        reader.skip_trivia();
        reader.expect_byte(b'=', "=")?;
        reader.skip_trivia();
        let body = reader.parse_choice()?;
        productions.push((name, body));
        reader.skip_trivia();
    }
    if productions.is_empty() {
        return Err(reader.error("empty grammar", &["production"]));
    }
    // Grammar::new only fails on duplicates, which were rejected above.
    Ok(Grammar::new(productions).expect("productions are unique"))
}

struct Reader<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(src: &'a [u8]) -> Self {
        Reader { src, pos: 0 }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<u8> {
        self.src.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        Some(b)
    }

    fn span_here(&self, len: usize) -> SourceSpan {
        let end = (self.pos + len.max(1)).min(self.src.len().max(self.pos + 1));
        let (line, column) = line_col(self.src, self.pos);
        SourceSpan { start: self.pos, end, line, column }
    }

    fn error(&self, message: &str, expected: &[&str]) -> GrammarSyntaxError {
        GrammarSyntaxError::SyntaxError {
            span: self.span_here(1),
            message: message.to_string(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Consumes whitespace and comments.
    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(b' ' | b'\t' | b'\r' | b'\n') => {
                    self.pos += 1;
                }
                Some(b'/') if self.peek_at(1) == Some(b'/') => {
                    while let Some(b) = self.peek() {
                        self.pos += 1;
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                Some(b'/') if self.peek_at(1) == Some(b'*') => {
                    self.pos += 2;
                    while !self.at_end() {
                        if self.peek() == Some(b'*') && self.peek_at(1) == Some(b'/') {
                            self.pos += 2;
                            break;
                        }
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn expect_byte(&mut self, b: u8, what: &str) -> Result<(), GrammarSyntaxError> {
        if self.peek() == Some(b) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error("unexpected character", &[what]))
        }
    }

    fn at_ident_start(&self) -> bool {
        matches!(self.peek(), Some(b) if b.is_ascii_alphabetic() || b == b'_')
    }

    fn read_ident(&mut self) -> Option<String> {
        if !self.at_ident_start() {
            return None;
        }
        let start = self.pos;
        while matches!(self.peek(), Some(b) if b.is_ascii_alphanumeric() || b == b'_') {
            self.pos += 1;
        }
        Some(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn expect_ident(&mut self, what: &str) -> Result<String, GrammarSyntaxError> {
        self.read_ident()
            .ok_or_else(|| self.error("expected identifier", &[what]))
    }

    /// True when the next token is `Ident =`, i.e. a new production starts.
    fn at_production_boundary(&self) -> bool {
        if !self.at_ident_start() {
            return false;
        }
        let mut probe = Reader { src: self.src, pos: self.pos };
        probe.read_ident();
        probe.skip_trivia();
        probe.peek() == Some(b'=')
    }

    fn parse_choice(&mut self) -> Result<Expression, GrammarSyntaxError> {
        let mut alts = vec![self.parse_sequence()?];
        loop {
            self.skip_trivia();
            if self.peek() == Some(b'/') {
                self.pos += 1;
                self.skip_trivia();
                alts.push(self.parse_sequence()?);
            } else {
                break;
            }
        }
        Ok(Expression::choice(alts))
    }

    fn parse_sequence(&mut self) -> Result<Expression, GrammarSyntaxError> {
        let mut items = Vec::new();
        loop {
            self.skip_trivia();
            match self.peek() {
                None | Some(b')' | b'}' | b'>' | b'/') => break,
                Some(_) if self.at_production_boundary() => break,
                Some(_) => {}
            }
            items.push(self.parse_prefix()?);
        }
        if items.is_empty() {
            return Err(self.error("expected an expression", &["expression"]));
        }
        Ok(Expression::sequence(items))
    }

    fn parse_prefix(&mut self) -> Result<Expression, GrammarSyntaxError> {
        match self.peek() {
            Some(b'&') => {
                self.pos += 1;
                self.skip_trivia();
                Ok(Expression::And(Box::new(self.parse_prefix()?)))
            }
            Some(b'!') => {
                self.pos += 1;
                self.skip_trivia();
                Ok(Expression::Not(Box::new(self.parse_prefix()?)))
            }
            _ => self.parse_suffix(),
        }
    }

    fn parse_suffix(&mut self) -> Result<Expression, GrammarSyntaxError> {
        let mut e = self.parse_primary()?;
        loop {
            match self.peek() {
                Some(b'?') => {
                    self.pos += 1;
                    e = Expression::Option(Box::new(e));
                }
                Some(b'*') => {
                    self.pos += 1;
                    e = Expression::Repetition(Box::new(e));
                }
                Some(b'+') => {
                    self.pos += 1;
                    e = Expression::OneOrMore(Box::new(e));
                }
                _ => break,
            }
        }
        Ok(e)
    }

    fn parse_primary(&mut self) -> Result<Expression, GrammarSyntaxError> {
        match self.peek() {
            Some(b'\'') => {
                let bytes = self.parse_quoted(b'\'')?;
                Ok(Expression::literal(&bytes))
            }
            Some(b'`') => {
                let bytes = self.parse_quoted(b'`')?;
                Ok(Expression::Replace(bytes))
            }
            Some(b'[') => {
                let set = self.parse_class()?;
                Ok(Expression::Class(set))
            }
            Some(b'.') => {
                self.pos += 1;
                Ok(Expression::Any)
            }
            Some(b'(') => {
                self.pos += 1;
                self.skip_trivia();
                let e = self.parse_choice()?;
                self.skip_trivia();
                self.expect_byte(b')', ")")?;
                Ok(e)
            }
            Some(b'{') => self.parse_constructor(),
            Some(b'$') => self.parse_link(),
            Some(b'#') => {
                self.pos += 1;
                let name = self.expect_ident("tag name")?;
                Ok(Expression::Tag(name))
            }
            Some(b'<') => self.parse_angle(),
            Some(_) if self.at_ident_start() => {
                let name = self.read_ident().unwrap();
                Ok(Expression::Nonterminal(name))
            }
            _ => Err(self.error(
                "expected an expression",
                &["literal", "class", "(", "{", "$", "#", "<", "nonterminal"],
            )),
        }
    }

    fn parse_constructor(&mut self) -> Result<Expression, GrammarSyntaxError> {
        self.expect_byte(b'{', "{")?;
        if self.peek() == Some(b'$') {
            self.pos += 1;
            // label attaches directly to the `$`, no whitespace in between
            let label = self.read_ident();
            self.skip_trivia();
            let body = if self.peek() == Some(b'}') {
                Expression::Empty
            } else {
                self.parse_choice()?
            };
            self.skip_trivia();
            self.expect_byte(b'}', "}")?;
            Ok(Expression::LeftFold(Box::new(body), label))
        } else {
            self.skip_trivia();
            let body = if self.peek() == Some(b'}') {
                Expression::Empty
            } else {
                self.parse_choice()?
            };
            self.skip_trivia();
            self.expect_byte(b'}', "}")?;
            Ok(Expression::New(Box::new(body)))
        }
    }

    fn parse_link(&mut self) -> Result<Expression, GrammarSyntaxError> {
        self.expect_byte(b'$', "$")?;
        let label = self.read_ident();
        self.expect_byte(b'(', "(")?;
        self.skip_trivia();
        let body = self.parse_choice()?;
        self.skip_trivia();
        self.expect_byte(b')', ")")?;
        Ok(Expression::Link(Box::new(body), label))
    }

    fn parse_angle(&mut self) -> Result<Expression, GrammarSyntaxError> {
        self.expect_byte(b'<', "<")?;
        self.skip_trivia();
        let keyword = self.expect_ident("operator keyword")?;
        self.skip_trivia();
        let e = match keyword.as_str() {
            "symbol" => Expression::SymbolDef(self.expect_ident("nonterminal")?),
            "match" => Expression::Match(self.expect_ident("nonterminal")?),
            "is" => Expression::Is(self.expect_ident("nonterminal")?),
            "isa" => Expression::Isa(self.expect_ident("nonterminal")?),
            "exists" => {
                let name = self.expect_ident("nonterminal")?;
                self.skip_trivia();
                if self.peek() == Some(b'\'') {
                    let value = self.parse_quoted(b'\'')?;
                    Expression::ExistsValue(name, value)
                } else {
                    Expression::Exists(name)
                }
            }
            "block" => {
                let body = self.parse_choice()?;
                Expression::Block(Box::new(body))
            }
            "local" => {
                let name = self.expect_ident("nonterminal")?;
                self.skip_trivia();
                let body = self.parse_choice()?;
                Expression::Local(name, Box::new(body))
            }
            "if" => {
                let (name, value) = self.parse_condition_ref()?;
                Expression::IfCond(name, value)
            }
            "on" => {
                let (name, value) = self.parse_condition_ref()?;
                self.skip_trivia();
                let body = self.parse_choice()?;
                Expression::OnCond(name, value, Box::new(body))
            }
            _ => {
                return Err(self.error(
                    "unknown operator",
                    &["symbol", "exists", "match", "is", "isa", "block", "local", "if", "on"],
                ))
            }
        };
        self.skip_trivia();
        self.expect_byte(b'>', ">")?;
        Ok(e)
    }

    fn parse_condition_ref(&mut self) -> Result<(String, bool), GrammarSyntaxError> {
        let value = if self.peek() == Some(b'!') {
            self.pos += 1;
            self.skip_trivia();
            false
        } else {
            true
        };
        Ok((self.expect_ident("condition name")?, value))
    }

    /// Reads a quoted literal (`'...'` or `` `...` ``), returning raw bytes.
    fn parse_quoted(&mut self, quote: u8) -> Result<Vec<u8>, GrammarSyntaxError> {
        self.expect_byte(quote, &(quote as char).to_string())?;
        let mut out = Vec::new();
        loop {
            match self.peek() {
                None => return Err(self.error("unterminated literal", &["closing quote"])),
                Some(b) if b == quote => {
                    self.pos += 1;
                    return Ok(out);
                }
                Some(b'\\') => {
                    self.pos += 1;
                    out.push(self.parse_escape()?);
                }
                Some(b) => {
                    self.pos += 1;
                    out.push(b);
                }
            }
        }
    }

    fn parse_class(&mut self) -> Result<ByteSet, GrammarSyntaxError> {
        self.expect_byte(b'[', "[")?;
        let mut set = ByteSet::empty();
        loop {
            match self.peek() {
                None => return Err(self.error("unterminated class", &["]"])),
                Some(b']') => {
                    self.pos += 1;
                    return Ok(set);
                }
                Some(_) => {
                    let lo = self.parse_class_byte()?;
                    if self.peek() == Some(b'-') && self.peek_at(1) != Some(b']') {
                        self.pos += 1;
                        let hi = self.parse_class_byte()?;
                        if lo > hi {
                            return Err(self.error("inverted range in class", &["low-high"]));
                        }
                        set.insert_range(lo, hi);
                    } else {
                        set.insert(lo);
                    }
                }
            }
        }
    }

    fn parse_class_byte(&mut self) -> Result<u8, GrammarSyntaxError> {
        match self.bump() {
            None => Err(self.error("unterminated class", &["]"])),
            Some(b'\\') => self.parse_escape(),
            Some(b) => Ok(b),
        }
    }

    fn parse_escape(&mut self) -> Result<u8, GrammarSyntaxError> {
        match self.bump() {
            Some(b'n') => Ok(b'\n'),
            Some(b'r') => Ok(b'\r'),
            Some(b't') => Ok(b'\t'),
            Some(b'\\') => Ok(b'\\'),
            Some(b'\'') => Ok(b'\''),
            Some(b'`') => Ok(b'`'),
            Some(b']') => Ok(b']'),
            Some(b'-') => Ok(b'-'),
            Some(b'x') => {
                let hi = self.hex_digit()?;
                let lo = self.hex_digit()?;
                Ok(hi * 16 + lo)
            }
            _ => Err(self.error("unknown escape", &["n", "r", "t", "\\\\", "\\'", "\\xHH"])),
        }
    }

    fn hex_digit(&mut self) -> Result<u8, GrammarSyntaxError> {
        match self.bump() {
            Some(b @ b'0'..=b'9') => Ok(b - b'0'),
            Some(b @ b'a'..=b'f') => Ok(b - b'a' + 10),
            Some(b @ b'A'..=b'F') => Ok(b - b'A' + 10),
            _ => Err(self.error("bad hex escape", &["hex digit"])),
        }
    }
}

fn line_col(src: &[u8], offset: usize) -> (usize, usize) {
    let mut line = 1;
    let mut col = 1;
    for &b in &src[..offset.min(src.len())] {
        if b == b'\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

// ---------------------------------------------------------------------------
// Writer
// ---------------------------------------------------------------------------

/// Operator precedence levels used when printing: choice 1, sequence 2,
/// prefix 3, suffix 4, primary 5.
fn precedence(e: &Expression) -> u8 {
    use Expression::*;
    match e {
        Choice(_) => 1,
        Sequence(_) => 2,
        And(_) | Not(_) => 3,
        Repetition(_) | OneOrMore(_) | Option(_) => 4,
        _ => 5,
    }
}

/// Formats a grammar in canonical form: one production per line, start
/// production first, minimal parentheses. The output re-parses to a
/// structurally equal grammar.
pub fn format_grammar(g: &Grammar) -> String {
    let mut out = String::new();
    let start = g.start();
    if let Some(body) = g.body(start) {
        out.push_str(&format!("{} = {}\n", start, format_expression(body)));
    }
    for (name, body) in g.iter() {
        if name != start {
            out.push_str(&format!("{} = {}\n", name, format_expression(body)));
        }
    }
    out
}

/// Formats one expression with minimal parentheses.
pub fn format_expression(e: &Expression) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, 1);
    out
}

fn write_expr(out: &mut String, e: &Expression, required: u8) {
    if precedence(e) < required {
        out.push('(');
        write_expr(out, e, 1);
        out.push(')');
        return;
    }
    use Expression::*;
    match e {
        Empty => out.push_str("''"),
        Byte(b) => {
            out.push('\'');
            push_literal_byte(out, *b, b'\'');
            out.push('\'');
        }
        Class(set) => out.push_str(&set.to_string()),
        Any => out.push('.'),
        Nonterminal(n) => out.push_str(n),
        Sequence(items) => write_sequence(out, items),
        Choice(alts) => {
            for (i, alt) in alts.iter().enumerate() {
                if i > 0 {
                    out.push_str(" / ");
                }
                write_expr(out, alt, 2);
            }
        }
        Repetition(inner) => {
            write_expr(out, inner, 5);
            out.push('*');
        }
        OneOrMore(inner) => {
            write_expr(out, inner, 5);
            out.push('+');
        }
        Option(inner) => {
            write_expr(out, inner, 5);
            out.push('?');
        }
        And(inner) => {
            out.push('&');
            write_expr(out, inner, 4);
        }
        Not(inner) => {
            out.push('!');
            write_expr(out, inner, 4);
        }
        New(inner) => {
            out.push_str("{ ");
            write_expr(out, inner, 1);
            out.push_str(" }");
        }
        LeftFold(inner, label) => {
            out.push_str("{$");
            if let Some(l) = label {
                out.push_str(l);
            }
            out.push(' ');
            write_expr(out, inner, 1);
            out.push_str(" }");
        }
        Link(inner, label) => {
            out.push('$');
            if let Some(l) = label {
                out.push_str(l);
            }
            out.push('(');
            write_expr(out, inner, 1);
            out.push(')');
        }
        Tag(t) => {
            out.push('#');
            out.push_str(t);
        }
        Replace(bytes) => {
            out.push('`');
            for &b in bytes {
                push_literal_byte(out, b, b'`');
            }
            out.push('`');
        }
        SymbolDef(n) => out.push_str(&format!("<symbol {n}>")),
        Exists(n) => out.push_str(&format!("<exists {n}>")),
        ExistsValue(n, v) => {
            out.push_str(&format!("<exists {n} '"));
            for &b in v {
                push_literal_byte(out, b, b'\'');
            }
            out.push_str("'>");
        }
        Match(n) => out.push_str(&format!("<match {n}>")),
        Is(n) => out.push_str(&format!("<is {n}>")),
        Isa(n) => out.push_str(&format!("<isa {n}>")),
        Block(inner) => {
            out.push_str("<block ");
            write_expr(out, inner, 1);
            out.push('>');
        }
        Local(n, inner) => {
            out.push_str(&format!("<local {n} "));
            write_expr(out, inner, 1);
            out.push('>');
        }
        IfCond(c, true) => out.push_str(&format!("<if {c}>")),
        IfCond(c, false) => out.push_str(&format!("<if !{c}>")),
        OnCond(c, value, inner) => {
            out.push_str("<on ");
            if !*value {
                out.push('!');
            }
            out.push_str(c);
            out.push(' ');
            write_expr(out, inner, 1);
            out.push('>');
        }
    }
}

/// Sequence printer; adjacent byte elements coalesce into one literal.
fn write_sequence(out: &mut String, items: &[Expression]) {
    let mut first = true;
    let mut i = 0;
    while i < items.len() {
        if !first {
            out.push(' ');
        }
        first = false;
        if let Expression::Byte(_) = items[i] {
            out.push('\'');
            while let Some(Expression::Byte(b)) = items.get(i) {
                push_literal_byte(out, *b, b'\'');
                i += 1;
            }
            out.push('\'');
        } else {
            write_expr(out, &items[i], 3);
            i += 1;
        }
    }
}

/// Scans a quoted literal starting at `at` (which must hold the quote),
/// returning the unescaped payload and the index just past the closing
/// quote. Shared with the bytecode assembler.
pub(crate) fn scan_quoted(
    src: &[u8],
    at: usize,
    quote: u8,
) -> Result<(Vec<u8>, usize), GrammarSyntaxError> {
    let mut reader = Reader { src, pos: at };
    let payload = reader.parse_quoted(quote)?;
    Ok((payload, reader.pos))
}

/// Scans a `[...]` class starting at `at`; returns the set and the index
/// just past the closing bracket.
pub(crate) fn scan_class(src: &[u8], at: usize) -> Result<(ByteSet, usize), GrammarSyntaxError> {
    let mut reader = Reader { src, pos: at };
    let set = reader.parse_class()?;
    Ok((set, reader.pos))
}

/// Escaped literal body without the surrounding quotes.
pub(crate) fn literal_text(bytes: &[u8], quote: u8) -> String {
    let mut out = String::new();
    for &b in bytes {
        push_literal_byte(&mut out, b, quote);
    }
    out
}

fn push_literal_byte(out: &mut String, b: u8, quote: u8) {
    match b {
        b'\n' => out.push_str("\\n"),
        b'\r' => out.push_str("\\r"),
        b'\t' => out.push_str("\\t"),
        b'\\' => out.push_str("\\\\"),
        _ if b == quote => {
            out.push('\\');
            out.push(quote as char);
        }
        0x20..=0x7e => out.push(b as char),
        _ => out.push_str(&format!("\\x{b:02X}")),
    }
}

impl fmt::Display for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_grammar(self))
    }
}
