//! Grammar validation: undefined references, left recursion, and repetition
//! bodies that could loop without progress.

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::expr::Expression;
use crate::grammar::Grammar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    UndefinedNonterminal,
    LeftRecursion,
    EmptyRepetitionBody,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrorKind::UndefinedNonterminal => write!(f, "undefined-nonterminal"),
            ErrorKind::LeftRecursion => write!(f, "left-recursion"),
            ErrorKind::EmptyRepetitionBody => write!(f, "empty-repetition-body"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub production: String,
    pub kind: ErrorKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub production: String,
    pub message: String,
}

/// Outcome of [`validate`]. The grammar is usable iff `errors` is empty.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub errors: Vec<ValidationError>,
    pub warnings: Vec<Warning>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.errors {
            writeln!(f, "error[{}] in {}: {}", e.kind, e.production, e.message)?;
        }
        for w in &self.warnings {
            writeln!(f, "warning in {}: {}", w.production, w.message)?;
        }
        Ok(())
    }
}

/// Per-production nullability: true when the production can succeed without
/// consuming input. Computed as a least fixpoint; expressions that consult
/// the symbol table without a guaranteed consumption (match, predicates)
/// count as nullable.
pub fn nullable_set(g: &Grammar) -> HashMap<String, bool> {
    let mut nullable: HashMap<String, bool> = g.names().map(|n| (n.to_string(), false)).collect();
    loop {
        let mut changed = false;
        for (name, body) in g.iter() {
            if !nullable[name] && expr_nullable(body, &nullable) {
                nullable.insert(name.to_string(), true);
                changed = true;
            }
        }
        if !changed {
            return nullable;
        }
    }
}

/// Nullability of one expression given the current production estimates.
/// Undefined nonterminals are treated as non-nullable so reference errors
/// do not cascade.
pub fn expr_nullable(e: &Expression, prods: &HashMap<String, bool>) -> bool {
    use Expression::*;
    match e {
        Empty | Tag(_) | Replace(_) => true,
        Byte(_) | Class(_) | Any => false,
        Nonterminal(n) => prods.get(n).copied().unwrap_or(false),
        Sequence(items) => items.iter().all(|i| expr_nullable(i, prods)),
        Choice(alts) => alts.iter().any(|a| expr_nullable(a, prods)),
        Repetition(_) | Option(_) => true,
        OneOrMore(inner) => expr_nullable(inner, prods),
        And(_) | Not(_) => true,
        New(inner) | LeftFold(inner, _) | Link(inner, _) | Block(inner) | Local(_, inner)
        | OnCond(_, _, inner) => expr_nullable(inner, prods),
        // <symbol A>, <is A>, <isa A> consume exactly what A consumes
        SymbolDef(n) | Is(n) | Isa(n) => prods.get(n).copied().unwrap_or(false),
        // the stored symbol may be the empty string
        Match(_) => true,
        Exists(_) | ExistsValue(_, _) | IfCond(_, _) => true,
    }
}

/// Nonterminals that may be invoked before this expression consumes input.
fn leftmost_refs<'g>(
    e: &'g Expression,
    prods: &HashMap<String, bool>,
    out: &mut HashSet<&'g str>,
) {
    use Expression::*;
    match e {
        Nonterminal(n) | SymbolDef(n) | Is(n) | Isa(n) => {
            out.insert(n);
        }
        Sequence(items) => {
            for item in items {
                leftmost_refs(item, prods, out);
                if !expr_nullable(item, prods) {
                    break;
                }
            }
        }
        Choice(alts) => {
            for alt in alts {
                leftmost_refs(alt, prods, out);
            }
        }
        Repetition(inner) | OneOrMore(inner) | Option(inner) | And(inner) | Not(inner)
        | New(inner) | LeftFold(inner, _) | Link(inner, _) | Block(inner)
        | Local(_, inner) | OnCond(_, _, inner) => leftmost_refs(inner, prods, out),
        _ => {}
    }
}

/// Validates the grammar. Errors are data, not failures: the caller decides
/// how to surface them.
pub fn validate(g: &Grammar) -> ValidationReport {
    let mut report = ValidationReport::default();

    // undefined references, from any name-carrying operator
    for (prod, body) in g.iter() {
        let mut missing: Vec<String> = Vec::new();
        body.visit(&mut |e| {
            if let Some((name, _)) = e.referenced_name() {
                if !g.contains(name) && !missing.iter().any(|m| m == name) {
                    missing.push(name.to_string());
                }
            }
        });
        for name in missing {
            report.errors.push(ValidationError {
                production: prod.to_string(),
                kind: ErrorKind::UndefinedNonterminal,
                message: format!("reference to undefined nonterminal {name}"),
            });
        }
    }

    let nullable = nullable_set(g);

    // left recursion: a cycle in the leftmost-reachable-nonterminal relation
    let graph: HashMap<&str, HashSet<&str>> = g
        .iter()
        .map(|(name, body)| {
            let mut refs = HashSet::new();
            leftmost_refs(body, &nullable, &mut refs);
            (name, refs)
        })
        .collect();
    let mut reported: HashSet<&str> = HashSet::new();
    for (name, _) in g.iter() {
        if reported.contains(name) {
            continue;
        }
        if let Some(cycle) = find_cycle(name, &graph) {
            for member in &cycle {
                reported.insert(member);
            }
            report.errors.push(ValidationError {
                production: name.to_string(),
                kind: ErrorKind::LeftRecursion,
                message: format!("left recursion: {}", cycle.join(" -> ")),
            });
        }
    }

    // repetition bodies that can succeed without consuming input
    for (prod, body) in g.iter() {
        body.visit(&mut |e| match e {
            Expression::Repetition(inner) | Expression::OneOrMore(inner)
                if expr_nullable(inner, &nullable) =>
            {
                report.errors.push(ValidationError {
                    production: prod.to_string(),
                    kind: ErrorKind::EmptyRepetitionBody,
                    message: "repetition body can match without consuming input".to_string(),
                });
            }
            _ => {}
        });
    }

    // unreachable productions are legal but suspicious
    let mut reachable: HashSet<&str> = HashSet::new();
    let mut stack = vec![g.start()];
    while let Some(name) = stack.pop() {
        if !reachable.insert(name) {
            continue;
        }
        if let Some(body) = g.body(name) {
            body.visit(&mut |e| {
                if let Some((n, _)) = e.referenced_name() {
                    if let Some(body_name) = g.names().find(|&gn| gn == n) {
                        if !reachable.contains(body_name) {
                            stack.push(body_name);
                        }
                    }
                }
            });
        }
    }
    for (name, _) in g.iter() {
        if !reachable.contains(name) {
            report.warnings.push(Warning {
                production: name.to_string(),
                message: "unreachable from the start production".to_string(),
            });
        }
    }

    report
}

/// Cycle through `start` in the leftmost-reference graph, as a path
/// `start -> ... -> start`, if one exists.
fn find_cycle<'g>(start: &'g str, graph: &HashMap<&'g str, HashSet<&'g str>>) -> Option<Vec<&'g str>> {
    fn dfs<'g>(
        node: &'g str,
        target: &str,
        graph: &HashMap<&'g str, HashSet<&'g str>>,
        path: &mut Vec<&'g str>,
        visited: &mut HashSet<&'g str>,
    ) -> bool {
        if !visited.insert(node) {
            return false;
        }
        for &next in graph.get(node).into_iter().flatten() {
            if next == target {
                path.push(node);
                return true;
            }
            if dfs(next, target, graph, path, visited) {
                path.push(node);
                return true;
            }
        }
        false
    }

    let mut path = Vec::new();
    let mut visited = HashSet::new();
    if dfs(start, start, graph, &mut path, &mut visited) {
        path.reverse();
        path.push(start);
        let mut cycle = vec![start];
        cycle.extend(path.into_iter().skip(1));
        Some(cycle)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_grammar;

    fn report(text: &str) -> ValidationReport {
        validate(&parse_grammar(text).unwrap())
    }

    #[test]
    fn undefined_nonterminal_reported() {
        let r = report("A = B");
        assert_eq!(r.errors.len(), 1);
        assert_eq!(r.errors[0].kind, ErrorKind::UndefinedNonterminal);
        assert!(r.errors[0].message.contains('B'));
    }

    #[test]
    fn direct_left_recursion() {
        let r = report("A = A 'a'");
        assert!(r
            .errors
            .iter()
            .any(|e| e.kind == ErrorKind::LeftRecursion && e.production == "A"));
    }

    #[test]
    fn left_recursion_via_nullable_prefix() {
        let r = report("A = B A 'x'\nB = 'b'?");
        assert!(r.errors.iter().any(|e| e.kind == ErrorKind::LeftRecursion));
        // the cycle goes through the nullable B reference
        let r2 = report("A = B A 'x'\nB = 'b'");
        assert!(r2.is_ok(), "non-nullable prefix blocks the cycle: {r2}");
    }

    #[test]
    fn mutual_left_recursion_and_cycle_listing() {
        let r = report("A = B\nB = A");
        let err = r
            .errors
            .iter()
            .find(|e| e.kind == ErrorKind::LeftRecursion)
            .expect("cycle reported");
        assert!(err.message.contains("A -> B -> A") || err.message.contains("B -> A -> B"));
    }

    #[test]
    fn math_grammar_is_clean() {
        let r = report(
            "Expr = Prod {$left ('+' #Add / '-' #Sub) $right(Prod) }*\n\
             Prod = Val {$left ('*' #Mul / '/' #Div) $right(Val) }*\n\
             Val = { [0-9]+ #Int }",
        );
        assert!(r.is_ok(), "{r}");
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn nullable_repetition_body_rejected() {
        for text in ["A = ('a'?)*", "A = (!'x')*", "A = (<exists B>)*\nB = 'b'", "A = ''*"] {
            let r = report(text);
            assert!(
                r.errors.iter().any(|e| e.kind == ErrorKind::EmptyRepetitionBody),
                "expected empty-repetition-body for {text}"
            );
        }
    }

    #[test]
    fn match_counts_as_nullable() {
        // the stored symbol may be empty, so a bare <match> loop is rejected
        let r = report("A = <symbol B> (<match B>)*\nB = 'b'");
        assert!(r.errors.iter().any(|e| e.kind == ErrorKind::EmptyRepetitionBody));
    }

    #[test]
    fn unreachable_production_warns() {
        let r = report("A = 'a'\nDead = 'd'");
        assert!(r.is_ok());
        assert_eq!(r.warnings.len(), 1);
        assert_eq!(r.warnings[0].production, "Dead");
    }

    #[test]
    fn symbol_invocations_participate_in_left_recursion() {
        let r = report("A = <symbol A>");
        assert!(r.errors.iter().any(|e| e.kind == ErrorKind::LeftRecursion));
    }
}
