//! Shared fixtures: the bundled grammar corpus with inputs, and helpers to
//! run both engines on the same case.

#![allow(dead_code)]

pub mod gen;

use std::path::PathBuf;

use nez::vm::{CompileOptions, Machine, RunMode};
use nez::{EvalError, Grammar, ParseResult};

pub fn grammar_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../grammars")
}

pub fn load(file: &str) -> Grammar {
    let path = grammar_dir().join(file);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("read {path:?}: {e}"));
    let g = nez::parse_grammar(&text).unwrap_or_else(|e| panic!("parse {file}: {e}"));
    let report = nez::validate(&g);
    assert!(report.is_ok(), "{file} must validate:\n{report}");
    g
}

/// Every bundled grammar with a mix of accepting, partially-consuming, and
/// rejecting inputs.
pub fn corpus() -> Vec<(&'static str, Vec<&'static [u8]>)> {
    vec![
        (
            "math.nez",
            vec![
                b"1+2*3", b"7", b"1+", b"x", b"", b"12*34+5-6/7", b"1++2", b"9*",
            ],
        ),
        (
            "typedef.nez",
            vec![
                b"typedef int uint; uint",
                b"typedef long myint; myint",
                b"typedef int uint; float",
                b"typedef int uint; other",
                b"uint",
                b"typedef uint myint; myint",
            ],
        ),
        (
            "xml.nez",
            vec![
                b"<A><B></B></A>",
                b"<A><B></A></B>",
                b"<A></A>",
                b"<A></B>",
                b"<A><B></B><C></C></A>",
                b"",
                b"<A>",
            ],
        ),
        ("names.nez", vec![b"in include", b"ab ab", b"ab cd", b"x x", b"q"]),
        ("list.nez", vec![b"1+2+3", b"1", b"1+", b"x"]),
        ("binary.nez", vec![b"1+2+3", b"9", b"+"]),
        ("fold.nez", vec![b"1+2+3", b"1", b""]),
        ("replace.nez", vec![b"42=", b"7=", b"="]),
        ("spacing.nez", vec![b"a\nb|a b", b"a b|a\nb", b"x|y", b"|"]),
        (
            "lookahead.nez",
            vec![b"abc", b"aabbcc", b"aaabbbccc", b"aabbc", b"abcc", b"ab", b""],
        ),
        ("pathological.nez", vec![b"a", b"aaa", b"aaaaaaa", b"aa", b"aaaa", b""]),
    ]
}

/// Parses with the interpreter and the machine (memo on and off) and
/// requires identical results, returning the agreed outcome.
pub fn parse_both(g: &Grammar, input: &[u8]) -> Result<ParseResult, EvalError> {
    let eliminated = nez::eliminate(g);
    let oracle = nez::parse(&eliminated, input)?;
    let program = nez::compile(&eliminated, &CompileOptions::default())
        .expect("condition-free grammars compile");
    for memo in [true, false] {
        let vm = Machine::new(&program).memo(memo).run(input, RunMode::Parse)?;
        assert_eq!(
            vm, oracle,
            "engine divergence (memo={memo}) on input {:?}\ngrammar:\n{}",
            String::from_utf8_lossy(input),
            nez::format_grammar(g),
        );
    }
    Ok(oracle)
}

/// Runs a closure on a thread with a large stack; deep recursion in the
/// reference interpreter needs more than the default test stack.
pub fn with_big_stack<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> T {
    std::thread::Builder::new()
        .stack_size(256 << 20)
        .spawn(f)
        .expect("spawn worker")
        .join()
        .expect("worker panicked")
}
