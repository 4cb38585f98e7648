//! Parsing conditions: dynamic evaluation state and static elimination.
//!
//! Conditions are boolean switches scoped by `<on c e>` and tested by
//! `<if c>`. They can be compiled away: each production is duplicated per
//! assignment of the conditions its expansion actually depends on, `<if>`
//! becomes `''` or `!''`, and `<on>` fixes the assignment for its body.
//! Elimination is what makes packrat memoization safe, since conditions
//! change parse results without consuming input.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::expr::Expression;
use crate::grammar::Grammar;

/// Dynamic condition store for direct interpretation. All conditions read
/// false until a surrounding `<on ...>` sets them.
#[derive(Debug, Clone, Default)]
pub struct ConditionState {
    values: HashMap<String, bool>,
}

impl ConditionState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> bool {
        self.values.get(name).copied().unwrap_or(false)
    }

    /// Sets a condition, returning the previous explicit entry for
    /// [`restore`](Self::restore) at scope exit.
    pub fn set(&mut self, name: &str, value: bool) -> Option<bool> {
        self.values.insert(name.to_string(), value)
    }

    pub fn restore(&mut self, name: &str, previous: Option<bool>) {
        match previous {
            Some(v) => {
                self.values.insert(name.to_string(), v);
            }
            None => {
                self.values.remove(name);
            }
        }
    }
}

/// Condition names occurring in any `<if>`/`<on>` of any production.
pub fn collect_conditions(g: &Grammar) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for (_, body) in g.iter() {
        body.visit(&mut |e| match e {
            Expression::IfCond(c, _) | Expression::OnCond(c, _, _) => {
                out.insert(c.clone());
            }
            _ => {}
        });
    }
    out
}

/// A truth assignment for a set of conditions.
pub type ConditionAssignment = BTreeMap<String, bool>;

/// Converts one expression under an assignment: `<if>` resolves to `''` or
/// `!''`, `<on>` refines the assignment for its body, nonterminal references
/// are renamed to the duplicate for the assignment restricted to the
/// conditions that production depends on. Everything else passes through
/// with converted children; in particular symbol operators keep their
/// original names, which double as symbol-table keys.
pub fn f_convert(e: &Expression, assignment: &ConditionAssignment) -> Expression {
    Eliminator::standalone_convert(e, assignment)
}

/// Eliminates every condition operator from the grammar. Only productions
/// reachable from the start production under the initial all-false
/// assignment are emitted; structurally identical duplicates are unified.
pub fn eliminate(g: &Grammar) -> Grammar {
    let conditions = collect_conditions(g);
    if conditions.is_empty() {
        return g.clone();
    }
    let mut elim = Eliminator::new(g);
    elim.run();
    let out = Grammar::new(elim.output).expect("duplicate names are impossible by construction");
    unify(&out)
}

struct Eliminator<'g> {
    grammar: &'g Grammar,
    /// Free conditions per production: conditions whose value can influence
    /// the production's expansion (not bound by an enclosing `<on>`).
    free: HashMap<String, BTreeSet<String>>,
    queue: VecDeque<(String, ConditionAssignment, String)>,
    emitted: BTreeSet<String>,
    output: Vec<(String, Expression)>,
}

impl<'g> Eliminator<'g> {
    fn new(g: &'g Grammar) -> Self {
        Eliminator {
            grammar: g,
            free: free_conditions(g),
            queue: VecDeque::new(),
            emitted: BTreeSet::new(),
            output: Vec::new(),
        }
    }

    fn standalone_convert(e: &Expression, assignment: &ConditionAssignment) -> Expression {
        // a throwaway context over an empty grammar: name resolution falls
        // back to suffixing with the full assignment
        let empty = Grammar::new(vec![("__f".to_string(), Expression::Empty)]).unwrap();
        let mut elim = Eliminator::new(&empty);
        elim.convert(e, assignment)
    }

    fn run(&mut self) {
        let start = self.grammar.start().to_string();
        let initial = self.restricted(&start, &ConditionAssignment::new());
        let start_name = self.duplicate_name(&start, &initial);
        self.enqueue(start.clone(), initial, start_name);
        while let Some((prod, assignment, emit_as)) = self.queue.pop_front() {
            let body = self
                .grammar
                .body(&prod)
                .cloned()
                .unwrap_or(Expression::Empty);
            let converted = self.convert(&body, &assignment);
            self.output.push((emit_as, converted));
        }
    }

    fn enqueue(&mut self, prod: String, assignment: ConditionAssignment, emit_as: String) {
        if self.emitted.insert(emit_as.clone()) {
            self.queue.push_back((prod, assignment, emit_as));
        }
    }

    /// Restricts an assignment to the conditions `prod` depends on, filling
    /// unknowns with false (the initial state of every condition).
    fn restricted(&self, prod: &str, assignment: &ConditionAssignment) -> ConditionAssignment {
        match self.free.get(prod) {
            Some(deps) => deps
                .iter()
                .map(|c| (c.clone(), assignment.get(c).copied().unwrap_or(false)))
                .collect(),
            None => ConditionAssignment::new(),
        }
    }

    /// `A` stays `A` when it depends on no conditions; otherwise the name
    /// encodes the assignment of exactly the conditions it depends on.
    fn duplicate_name(&self, prod: &str, restricted: &ConditionAssignment) -> String {
        if restricted.is_empty() {
            return prod.to_string();
        }
        let mut name = String::from(prod);
        for (cond, value) in restricted {
            name.push_str("__");
            if !value {
                name.push_str("not_");
            }
            name.push_str(cond);
        }
        // keep generated names clear of user productions
        while self.grammar.contains(&name) {
            name.push('_');
        }
        name
    }

    fn convert(&mut self, e: &Expression, assignment: &ConditionAssignment) -> Expression {
        use Expression::*;
        match e {
            IfCond(c, wanted) => {
                let value = assignment.get(c).copied().unwrap_or(false);
                if value == *wanted {
                    Empty
                } else {
                    Expression::never()
                }
            }
            OnCond(c, value, inner) => {
                let mut refined = assignment.clone();
                refined.insert(c.clone(), *value);
                self.convert(inner, &refined)
            }
            Nonterminal(name) => {
                let restricted = self.restricted(name, assignment);
                let new_name = self.duplicate_name(name, &restricted);
                self.enqueue(name.clone(), restricted, new_name.clone());
                Nonterminal(new_name)
            }
            // symbol operators keep the original name: it identifies both
            // the matcher production and the symbol-table key, so the
            // referenced production is emitted unrenamed under the default
            // assignment
            SymbolDef(name) | Exists(name) | Match(name) | Is(name) | Isa(name)
            | ExistsValue(name, _) | Local(name, _) => {
                let default = self.restricted(name, &ConditionAssignment::new());
                self.enqueue(name.clone(), default, name.clone());
                e.map_children(&mut |c| self.convert(c, assignment))
            }
            other => other.map_children(&mut |c| self.convert(c, assignment)),
        }
    }
}

/// Free conditions per production, as a least fixpoint over the call graph.
/// `<on c e>` binds `c` inside `e`.
fn free_conditions(g: &Grammar) -> HashMap<String, BTreeSet<String>> {
    fn free_of(
        e: &Expression,
        prods: &HashMap<String, BTreeSet<String>>,
        out: &mut BTreeSet<String>,
    ) {
        use Expression::*;
        match e {
            IfCond(c, _) => {
                out.insert(c.clone());
            }
            OnCond(c, _, inner) => {
                let mut inner_free = BTreeSet::new();
                free_of(inner, prods, &mut inner_free);
                inner_free.remove(c);
                out.extend(inner_free);
            }
            Nonterminal(n) | SymbolDef(n) | Is(n) | Isa(n) => {
                if let Some(deps) = prods.get(n) {
                    out.extend(deps.iter().cloned());
                }
            }
            other => {
                for child in other.children() {
                    free_of(child, prods, out);
                }
            }
        }
    }

    let mut free: HashMap<String, BTreeSet<String>> =
        g.names().map(|n| (n.to_string(), BTreeSet::new())).collect();
    loop {
        let mut changed = false;
        for (name, body) in g.iter() {
            let mut now = BTreeSet::new();
            free_of(body, &free, &mut now);
            if now != free[name] {
                free.insert(name.to_string(), now);
                changed = true;
            }
        }
        if !changed {
            return free;
        }
    }
}

/// Merges productions with structurally identical bodies, repointing
/// nonterminal references to the first occurrence. Names referenced by
/// symbol operators are semantic keys and are never merged away.
fn unify(g: &Grammar) -> Grammar {
    let mut symbol_keys: BTreeSet<String> = BTreeSet::new();
    for (_, body) in g.iter() {
        body.visit(&mut |e| {
            if let Some((name, _)) = e.referenced_name() {
                if !matches!(e, Expression::Nonterminal(_)) {
                    symbol_keys.insert(name.to_string());
                }
            }
        });
    }
    symbol_keys.insert(g.start().to_string());

    let mut current = g.clone();
    loop {
        let mut canonical: HashMap<&Expression, &str> = HashMap::new();
        let mut rename: HashMap<String, String> = HashMap::new();
        for (name, body) in current.iter() {
            match canonical.get(body) {
                Some(&keep) if !symbol_keys.contains(name) => {
                    rename.insert(name.to_string(), keep.to_string());
                }
                _ => {
                    canonical.insert(body, name);
                }
            }
        }
        if rename.is_empty() {
            return current;
        }
        let mut merged: Vec<(String, Expression)> = Vec::new();
        for (name, body) in current.iter() {
            if rename.contains_key(name) {
                continue;
            }
            let new_body = rename_refs(body, &rename);
            merged.push((name.to_string(), new_body));
        }
        current = Grammar::new(merged).expect("names stay unique");
    }
}

fn rename_refs(e: &Expression, rename: &HashMap<String, String>) -> Expression {
    match e {
        Expression::Nonterminal(n) => match rename.get(n) {
            Some(to) => Expression::Nonterminal(to.clone()),
            None => e.clone(),
        },
        other => other.map_children(&mut |c| rename_refs(c, rename)),
    }
}
