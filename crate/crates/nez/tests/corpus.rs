//! Corpus-wide invariants: every bundled grammar round-trips through the
//! text form, parses identically on both engines, and survives the
//! grammar-to-grammar transformations unchanged in behavior.

mod common;

use common::{corpus, load, parse_both};
use nez::desugar::{desugar, DesugarMode};
use nez::interp::{EvalOptions, Evaluator};
use nez::vm::{CompileOptions, Machine, RunMode};
use nez::{eliminate, format_grammar, match_only, parse, parse_grammar, strip_ast_ops};

#[test]
fn corpus_validates_cleanly() {
    for (file, _) in corpus() {
        load(file);
    }
}

#[test]
fn corpus_round_trips_through_canonical_text() {
    for (file, _) in corpus() {
        let g = load(file);
        let text = format_grammar(&g);
        let back = parse_grammar(&text).unwrap_or_else(|e| panic!("{file} reparse: {e}"));
        assert_eq!(back, g, "{file} canonical form:\n{text}");
        assert_eq!(format_grammar(&back), text, "{file} formatting is a fixpoint");
    }
}

#[test]
fn corpus_agrees_across_engines() {
    for (file, inputs) in corpus() {
        let g = load(file);
        for input in inputs {
            parse_both(&g, input).unwrap_or_else(|e| panic!("{file} on {input:?}: {e}"));
        }
    }
}

#[test]
fn stripping_tree_operators_preserves_recognition() {
    for (file, inputs) in corpus() {
        let g = load(file);
        let stripped = strip_ast_ops(&g);
        assert!(nez::validate(&stripped).is_ok());
        for input in inputs {
            let full = parse(&g, input).unwrap();
            let bare = match_only(&g, input).unwrap();
            let direct = parse(&stripped, input).unwrap();
            assert_eq!(full.is_success(), bare.is_success(), "{file} on {input:?}");
            assert_eq!(full.consumed(), bare.consumed(), "{file} on {input:?}");
            assert_eq!(bare.is_success(), direct.is_success(), "{file} on {input:?}");
            assert_eq!(bare.consumed(), direct.consumed(), "{file} on {input:?}");
        }
    }
}

#[test]
fn desugared_forms_accept_the_same_language() {
    for (file, inputs) in corpus() {
        let g = load(file);
        let native = desugar(&g, DesugarMode::Native).unwrap();
        let full = desugar(&g, DesugarMode::Full).unwrap();
        assert!(nez::validate(&native).is_ok(), "{file} native");
        assert!(nez::validate(&full).is_ok(), "{file} full");
        for input in inputs {
            let a = parse(&g, input).unwrap();
            let b = parse(&native, input).unwrap();
            let c = parse(&full, input).unwrap();
            assert_eq!(a, b, "{file} native desugar on {input:?}");
            assert_eq!(a, c, "{file} full desugar on {input:?}");
        }
    }
}

#[test]
fn dynamic_conditions_match_eliminated_grammars() {
    for (file, inputs) in corpus() {
        let g = load(file);
        let eliminated = eliminate(&g);
        for (_, body) in eliminated.iter() {
            assert!(
                !body.any_node(&mut |e| matches!(
                    e,
                    nez::Expression::IfCond(_, _) | nez::Expression::OnCond(_, _, _)
                )),
                "{file}: condition operator survived elimination"
            );
        }
        let conditions = nez::collect_conditions(&g);
        if conditions.len() == 1 {
            assert!(
                eliminated.len() <= 2 * g.len(),
                "{file}: single-condition grammars at most double"
            );
        }
        for input in inputs {
            let dynamic = parse(&g, input).unwrap();
            let stat = parse(&eliminated, input).unwrap();
            assert_eq!(dynamic.is_success(), stat.is_success(), "{file} on {input:?}");
            assert_eq!(dynamic.consumed(), stat.consumed(), "{file} on {input:?}");
            assert_eq!(dynamic.tree(), stat.tree(), "{file} on {input:?}");
        }
    }
}

#[test]
fn memoization_is_invisible_in_results() {
    for (file, inputs) in corpus() {
        let g = eliminate(&load(file));
        let program = nez::compile(&g, &CompileOptions::default()).unwrap();
        for input in inputs {
            let on = Machine::new(&program).run(input, RunMode::Parse).unwrap();
            let off = Machine::new(&program).memo(false).run(input, RunMode::Parse).unwrap();
            assert_eq!(on, off, "{file} on {input:?}");
        }
    }
}

#[test]
fn validated_grammars_stay_within_step_budget_on_large_inputs() {
    // 64 KiB inputs; the budget is the default formula, exceeding it would
    // be a hard error. Deep fold chains produce deep trees, so this runs
    // on a big-stack worker like any large parse.
    common::with_big_stack(|| {
        let math = load("math.nez");
        let mut expr = String::from("1");
        while expr.len() < 64 * 1024 {
            expr.push_str("+2*34-5");
        }
        let r = parse(&math, expr.as_bytes()).unwrap();
        assert_eq!(r.consumed(), Some(expr.len()));

        let xml = load("xml.nez");
        let mut doc = String::from("<root>");
        while doc.len() < 64 * 1024 - 8 {
            doc.push_str("<ab></ab>");
        }
        doc.push_str("</root>");
        let options = EvalOptions { build_tree: false, ..EvalOptions::default() };
        let r = Evaluator::with_options(&xml, options).run(doc.as_bytes()).unwrap();
        assert_eq!(r.consumed(), Some(doc.len()));
    });
}

#[test]
fn eliminate_emits_parseable_canonical_output() {
    for (file, _) in corpus() {
        let g = load(file);
        let eliminated = eliminate(&g);
        let text = format_grammar(&eliminated);
        let back = parse_grammar(&text).unwrap_or_else(|e| panic!("{file}: {e}"));
        assert_eq!(back, eliminated, "{file}");
        assert!(nez::validate(&back).is_ok(), "{file}");
    }
}
