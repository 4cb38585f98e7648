//! Differential testing: the interpreter is the oracle, the parsing
//! machine must agree exactly — acceptance, consumed length, tree
//! structure, and failure reports — with memoization on and off.

mod common;

use common::gen::{GenProfile, GrammarGen};
use common::with_big_stack;
use nez::interp::{EvalOptions, Evaluator};
use nez::vm::{CompileOptions, Machine, RunMode};
use nez::{eliminate, format_grammar, strip_ast_ops, EvalError, Grammar};

const DEEP: usize = 1 << 16;

fn interp_deep(g: &Grammar, input: &[u8], build_tree: bool) -> Result<nez::ParseResult, EvalError> {
    let options = EvalOptions { build_tree, max_depth: DEEP, ..EvalOptions::default() };
    Evaluator::with_options(g, options).run(input)
}

/// Compares every engine configuration on one condition-free grammar.
/// Returns false when a hard error (budget, depth) made the case
/// incomparable.
fn compare_case(g: &Grammar, input: &[u8]) -> bool {
    let program = nez::compile(g, &CompileOptions::default()).expect("compiles");
    let budget = 64 * nez::interp::default_step_budget(input.len());

    let oracle = match interp_deep(g, input, true) {
        Ok(r) => r,
        Err(_) => return false,
    };
    for memo in [true, false] {
        match Machine::new(&program).memo(memo).budget(budget).run(input, RunMode::Parse) {
            Ok(vm) => assert_eq!(
                vm,
                oracle,
                "parse divergence (memo={memo}) on {input:?}\n{}",
                format_grammar(g)
            ),
            Err(_) => return false,
        }
    }

    // recognition path: stripped grammar, no tree construction
    let stripped = strip_ast_ops(g);
    let match_oracle = match interp_deep(&stripped, input, false) {
        Ok(r) => r,
        Err(_) => return false,
    };
    let match_program = nez::compile(&stripped, &CompileOptions::default()).expect("compiles");
    match Machine::new(&match_program).budget(budget).run(input, RunMode::Match) {
        Ok(vm) => assert_eq!(
            vm,
            match_oracle,
            "match divergence on {input:?}\n{}",
            format_grammar(g)
        ),
        Err(_) => return false,
    }

    // recognition and construction agree on acceptance and length
    assert_eq!(oracle.is_success(), match_oracle.is_success(), "{}", format_grammar(g));
    assert_eq!(oracle.consumed(), match_oracle.consumed(), "{}", format_grammar(g));
    true
}

#[test]
fn machine_matches_interpreter_on_random_grammars() {
    with_big_stack(|| {
        let mut generator = GrammarGen::new(0xBADC0FFEE, GenProfile::full());
        let mut compared = 0usize;
        let mut skipped = 0usize;
        while compared < 1200 {
            let g = generator.grammar();
            let eliminated = eliminate(&g);
            assert!(
                nez::validate(&eliminated).is_ok(),
                "elimination must preserve validity:\n{}",
                format_grammar(&g)
            );
            for _ in 0..4 {
                let input = generator.input(if compared % 8 == 0 { 256 } else { 96 });
                if compare_case(&eliminated, &input) {
                    compared += 1;
                } else {
                    skipped += 1;
                }
            }
        }
        assert!(
            skipped < compared / 4,
            "too many incomparable cases: {skipped} vs {compared}"
        );
        println!("compared {compared} cases ({skipped} skipped on hard errors)");
    });
}

#[test]
fn eliminated_conditions_behave_like_dynamic_ones() {
    with_big_stack(|| {
        let mut generator = GrammarGen::new(0x5EEDED, GenProfile::conditions_only());
        let mut compared = 0usize;
        while compared < 300 {
            let g = generator.grammar();
            if nez::collect_conditions(&g).is_empty() {
                continue;
            }
            let eliminated = eliminate(&g);
            assert!(nez::validate(&eliminated).is_ok());
            let program = nez::compile(&eliminated, &CompileOptions::default()).unwrap();
            for _ in 0..3 {
                let input = generator.input(96);
                let dynamic = match interp_deep(&g, &input, true) {
                    Ok(r) => r,
                    Err(_) => continue,
                };
                let statically = match interp_deep(&eliminated, &input, true) {
                    Ok(r) => r,
                    Err(_) => continue,
                };
                // failure reports may name different operators (an <if c>
                // becomes !''), so compare outcome, length, and tree
                assert_eq!(
                    dynamic.is_success(),
                    statically.is_success(),
                    "on {input:?}\ndynamic grammar:\n{}\neliminated:\n{}",
                    format_grammar(&g),
                    format_grammar(&eliminated)
                );
                assert_eq!(dynamic.consumed(), statically.consumed());
                assert_eq!(dynamic.tree(), statically.tree());
                if let Ok(vm) = Machine::new(&program).run(&input, RunMode::Parse) {
                    assert_eq!(vm, statically, "on {input:?}\n{}", format_grammar(&eliminated));
                }
                compared += 1;
            }
        }
        println!("compared {compared} condition cases");
    });
}

#[test]
fn eliminate_is_idempotent_on_random_grammars() {
    let mut generator = GrammarGen::new(7, GenProfile::conditions_only());
    for _ in 0..100 {
        let g = generator.grammar();
        let once = eliminate(&g);
        let twice = eliminate(&once);
        assert_eq!(once, twice, "\noriginal:\n{}", format_grammar(&g));
        let bound = 1usize << nez::collect_conditions(&g).len().min(16);
        assert!(once.len() <= bound * g.len(), "production-count bound violated");
    }
}

#[test]
fn round_trip_holds_on_random_grammars() {
    let mut generator = GrammarGen::new(99, GenProfile::full());
    for _ in 0..200 {
        let g = generator.grammar();
        let text = format_grammar(&g);
        let back = nez::parse_grammar(&text)
            .unwrap_or_else(|e| panic!("reparse failed: {e}\n{text}"));
        assert_eq!(back, g, "\n{text}");
    }
}
