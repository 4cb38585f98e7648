//! Sugar removal (`e?`, `e+`, and optionally `e*`) and stripping of tree
//! construction operators.

use crate::expr::Expression;
use crate::grammar::Grammar;
use crate::validate::{expr_nullable, nullable_set};

/// How far to take repetition rewriting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DesugarMode {
    /// `e?` and `e+` are rewritten; `e*` stays a native loop.
    #[default]
    Native,
    /// Additionally rewrites every `e*` into a fresh recursive production
    /// `A' = e A' / ''`.
    Full,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DesugarError {
    #[error("in {production}: repetition body can succeed without consuming input")]
    EmptyRepetitionBody { production: String },
}

/// Removes `Option` and `OneOrMore` everywhere; in [`DesugarMode::Full`]
/// also replaces `Repetition` with fresh recursive productions. The accepted
/// language is unchanged.
pub fn desugar(g: &Grammar, mode: DesugarMode) -> Result<Grammar, DesugarError> {
    let nullable = nullable_set(g);
    for (name, body) in g.iter() {
        let mut bad = false;
        body.visit(&mut |e| match e {
            Expression::Repetition(inner) | Expression::OneOrMore(inner)
                if expr_nullable(inner, &nullable) =>
            {
                bad = true;
            }
            _ => {}
        });
        if bad {
            return Err(DesugarError::EmptyRepetitionBody { production: name.to_string() });
        }
    }

    let mut out: Vec<(String, Expression)> = Vec::with_capacity(g.len());
    let mut extra: Vec<(String, Expression)> = Vec::new();
    for (name, body) in g.iter() {
        let rewritten = match mode {
            DesugarMode::Native => desugar_expr(body),
            DesugarMode::Full => {
                let mut namer = FreshNamer { grammar: g, base: name, counter: 0, taken: Vec::new() };
                full_desugar_expr(&desugar_expr(body), &mut namer, &mut extra)
            }
        };
        out.push((name.to_string(), rewritten));
    }
    out.extend(extra);
    Ok(Grammar::new(out).expect("generated names are fresh"))
}

/// `e?` becomes `e / ''` and `e+` becomes `e e*`.
pub fn desugar_expr(e: &Expression) -> Expression {
    match e {
        Expression::Option(inner) => {
            Expression::choice(vec![desugar_expr(inner), Expression::Empty])
        }
        Expression::OneOrMore(inner) => {
            let body = desugar_expr(inner);
            Expression::sequence(vec![
                body.clone(),
                Expression::Repetition(Box::new(body)),
            ])
        }
        other => other.map_children(&mut desugar_expr),
    }
}

struct FreshNamer<'g> {
    grammar: &'g Grammar,
    base: &'g str,
    counter: usize,
    taken: Vec<String>,
}

impl FreshNamer<'_> {
    fn fresh(&mut self) -> String {
        loop {
            let candidate = format!("{}__rep{}", self.base, self.counter);
            self.counter += 1;
            if !self.grammar.contains(&candidate) && !self.taken.contains(&candidate) {
                self.taken.push(candidate.clone());
                return candidate;
            }
        }
    }
}

fn full_desugar_expr(
    e: &Expression,
    namer: &mut FreshNamer<'_>,
    extra: &mut Vec<(String, Expression)>,
) -> Expression {
    match e {
        Expression::Repetition(inner) => {
            let body = full_desugar_expr(inner, namer, extra);
            let name = namer.fresh();
            let rec = Expression::choice(vec![
                Expression::sequence(vec![body, Expression::nonterminal(name.clone())]),
                Expression::Empty,
            ]);
            extra.push((name.clone(), rec));
            Expression::Nonterminal(name)
        }
        other => other.map_children(&mut |c| full_desugar_expr(c, namer, extra)),
    }
}

/// Removes every tree-construction operator: `{e}`, `{$ e}`, and `$(e)` are
/// replaced by their bodies, `#t` and `` `x` `` by the empty expression.
/// Symbol and condition operators are preserved. Acceptance is unchanged.
pub fn strip_ast_ops(g: &Grammar) -> Grammar {
    g.map_bodies(|_, body| strip_expr(body))
}

fn strip_expr(e: &Expression) -> Expression {
    match e {
        Expression::New(inner) | Expression::LeftFold(inner, _) | Expression::Link(inner, _) => {
            strip_expr(inner)
        }
        Expression::Tag(_) | Expression::Replace(_) => Expression::Empty,
        other => other.map_children(&mut strip_expr),
    }
}
