//! Expression-to-bytecode compilation.
//!
//! Compilation is inductive over the expression tree. Conditions must be
//! eliminated first: they invalidate memoization and have no instruction
//! encoding. Repetition compiles to a loop with a re-arming progress check
//! rather than recursion.

use std::collections::HashMap;

use crate::desugar::{desugar, DesugarError, DesugarMode};
use crate::expr::Expression;
use crate::grammar::Grammar;

use super::program::{Instruction, MemoPoint, ProductionEntry, Program};

#[derive(Debug, Clone)]
pub struct CompileOptions {
    /// Assign memo points and wrap them with lookup/memo instructions.
    pub memo: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions { memo: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error("in {production}: {construct} cannot be compiled; eliminate conditions first")]
    UnsupportedConstruct { production: String, construct: String },
    #[error(transparent)]
    Desugar(#[from] DesugarError),
}

/// Compiles a validated, condition-free grammar. `e?`/`e+` are desugared
/// internally, so callers only need [`crate::cond::eliminate`] beforehand.
pub fn compile(grammar: &Grammar, options: &CompileOptions) -> Result<Program, CompileError> {
    for (name, body) in grammar.iter() {
        let mut bad: Option<String> = None;
        body.visit(&mut |e| {
            if bad.is_none()
                && matches!(e, Expression::IfCond(_, _) | Expression::OnCond(_, _, _))
            {
                bad = Some(crate::syntax::format_expression(e));
            }
        });
        if let Some(construct) = bad {
            return Err(CompileError::UnsupportedConstruct {
                production: name.to_string(),
                construct,
            });
        }
    }

    let g = desugar(grammar, DesugarMode::Native)?;

    let touches_symbols = transitive_flag(&g, |e| {
        matches!(
            e,
            Expression::SymbolDef(_)
                | Expression::Exists(_)
                | Expression::ExistsValue(_, _)
                | Expression::Match(_)
                | Expression::Is(_)
                | Expression::Isa(_)
                | Expression::Block(_)
                | Expression::Local(_, _)
        )
    });
    let has_fold = transitive_flag(&g, |e| matches!(e, Expression::LeftFold(_, _)));
    let builds_tree = transitive_flag(&g, |e| {
        matches!(
            e,
            Expression::New(_)
                | Expression::LeftFold(_, _)
                | Expression::Link(_, _)
                | Expression::Tag(_)
                | Expression::Replace(_)
        )
    });

    // reference counts over every invocation site
    let mut refs: HashMap<&str, usize> = HashMap::new();
    for (_, body) in g.iter() {
        body.visit(&mut |e| {
            if let Some((name, true)) = e.referenced_name() {
                if let Some((key, _)) = g.iter().find(|(n, _)| *n == name) {
                    *refs.entry(key).or_insert(0) += 1;
                }
            }
        });
    }

    // Memo points: productions invoked from several sites whose memoized
    // outcome cannot depend on hidden state. Symbol-touching productions
    // would need the table in the key; fold-bearing ones check the
    // surrounding tree context at evaluation time. Both stay unmemoized.
    let mut memo_points = Vec::new();
    let mut memo_of: HashMap<&str, u32> = HashMap::new();
    if options.memo {
        for (name, _) in g.iter() {
            if refs.get(name).copied().unwrap_or(0) >= 2
                && !touches_symbols[name]
                && !has_fold[name]
            {
                memo_of.insert(name, memo_points.len() as u32);
                memo_points.push(MemoPoint {
                    production: name.to_string(),
                    tree: builds_tree[name],
                });
            }
        }
    }

    let mut emitter = Emitter::new(&g, &builds_tree);
    let start_idx = emitter.prod_index[g.start()];
    emitter.emit(Instruction::Call { production: start_idx });
    emitter.emit(Instruction::Exit);

    let mut productions = Vec::with_capacity(g.len());
    for (name, body) in g.iter() {
        productions.push(ProductionEntry { name: name.to_string(), offset: emitter.here() });
        match memo_of.get(name) {
            Some(&id) => {
                let tree = builds_tree[name];
                let body_start = emitter.fresh_label();
                let on_fail = emitter.fresh_label();
                if tree {
                    emitter.emit_patched(on_memo_tree(id), body_start);
                } else {
                    emitter.emit_patched(on_memo_plain(id), body_start);
                }
                emitter.bind(body_start);
                emitter.emit_patched(Instruction::Alt { target: usize::MAX }, on_fail);
                emitter.emit_expr(body);
                emitter.emit(if tree {
                    Instruction::TMemo { memo: id }
                } else {
                    Instruction::Memo { memo: id }
                });
                emitter.emit(Instruction::Ret);
                emitter.bind(on_fail);
                emitter.emit(Instruction::MemoFail { memo: id });
                emitter.emit(Instruction::Fail);
            }
            None => {
                emitter.emit_expr(body);
                emitter.emit(Instruction::Ret);
            }
        }
    }

    Ok(Program {
        code: emitter.finish(),
        entry: 0,
        productions,
        classes: emitter.classes,
        strings: emitter.strings,
        names: emitter.names,
        memo_points,
    })
}

fn on_memo_plain(id: u32) -> Instruction {
    Instruction::Lookup { memo: id, miss: usize::MAX }
}

fn on_memo_tree(id: u32) -> Instruction {
    Instruction::TLookup { memo: id, miss: usize::MAX }
}

/// Per-production flag: true when the body matches `direct` anywhere, or
/// when any invoked production does (least fixpoint over invocation edges).
fn transitive_flag(
    g: &Grammar,
    direct: impl Fn(&Expression) -> bool,
) -> HashMap<String, bool> {
    let mut flags: HashMap<String, bool> = g
        .iter()
        .map(|(name, body)| {
            let mut hit = false;
            body.visit(&mut |e| hit |= direct(e));
            (name.to_string(), hit)
        })
        .collect();
    loop {
        let mut changed = false;
        for (name, body) in g.iter() {
            if flags[name] {
                continue;
            }
            let mut hit = false;
            body.visit(&mut |e| {
                if let Some((n, true)) = e.referenced_name() {
                    hit |= flags.get(n).copied().unwrap_or(false);
                }
            });
            if hit {
                flags.insert(name.to_string(), true);
                changed = true;
            }
        }
        if !changed {
            return flags;
        }
    }
}

struct Emitter<'g> {
    code: Vec<Instruction>,
    labels: Vec<Option<usize>>,
    patches: Vec<(usize, usize)>,
    classes: Vec<crate::byteset::ByteSet>,
    strings: Vec<Vec<u8>>,
    names: Vec<String>,
    prod_index: HashMap<&'g str, u32>,
    builds_tree: &'g HashMap<String, bool>,
}

impl<'g> Emitter<'g> {
    fn new(g: &'g Grammar, builds_tree: &'g HashMap<String, bool>) -> Self {
        Emitter {
            code: Vec::new(),
            labels: Vec::new(),
            patches: Vec::new(),
            classes: Vec::new(),
            strings: Vec::new(),
            names: Vec::new(),
            prod_index: g
                .names()
                .enumerate()
                .map(|(i, n)| (n, i as u32))
                .collect(),
            builds_tree,
        }
    }

    fn here(&self) -> usize {
        self.code.len()
    }

    fn fresh_label(&mut self) -> usize {
        self.labels.push(None);
        self.labels.len() - 1
    }

    fn bind(&mut self, label: usize) {
        self.labels[label] = Some(self.code.len());
    }

    fn emit(&mut self, i: Instruction) {
        self.code.push(i);
    }

    /// Emits an instruction whose jump operand is patched to `label` later.
    fn emit_patched(&mut self, i: Instruction, label: usize) {
        self.patches.push((self.code.len(), label));
        self.code.push(i);
    }

    fn finish(&mut self) -> Vec<Instruction> {
        for (at, label) in self.patches.drain(..) {
            let target = self.labels[label].expect("label bound");
            match &mut self.code[at] {
                Instruction::Alt { target: t }
                | Instruction::Succ { target: t }
                | Instruction::Jump { target: t }
                | Instruction::Skip { target: t }
                | Instruction::Lookup { miss: t, .. }
                | Instruction::TLookup { miss: t, .. } => *t = target,
                other => unreachable!("patching non-jump {other:?}"),
            }
        }
        std::mem::take(&mut self.code)
    }

    fn intern_class(&mut self, set: crate::byteset::ByteSet) -> u32 {
        intern(&mut self.classes, set)
    }

    fn intern_string(&mut self, s: &[u8]) -> u32 {
        intern(&mut self.strings, s.to_vec())
    }

    fn intern_name(&mut self, n: &str) -> u32 {
        intern(&mut self.names, n.to_string())
    }

    /// True when an attempt of `e` may record tree operations, directly or
    /// through calls; such attempts get a tree transaction around their
    /// backtrack frame.
    fn is_tree_region(&self, e: &Expression) -> bool {
        e.any_node(&mut |n| match n {
            Expression::New(_)
            | Expression::LeftFold(_, _)
            | Expression::Link(_, _)
            | Expression::Tag(_)
            | Expression::Replace(_) => true,
            _ => match n.referenced_name() {
                Some((name, true)) => self.builds_tree.get(name).copied().unwrap_or(false),
                _ => false,
            },
        })
    }

    fn emit_expr(&mut self, e: &Expression) {
        use Expression::*;
        match e {
            Empty => self.emit(Instruction::Nop),
            Byte(b) => self.emit(Instruction::Byte { byte: *b }),
            Class(set) => {
                let class = self.intern_class(*set);
                self.emit(Instruction::Set { class });
            }
            Any => self.emit(Instruction::Any),
            Nonterminal(name) => {
                let production = self.prod_index[name.as_str()];
                self.emit(Instruction::Call { production });
            }
            Sequence(items) => self.emit_sequence(items),
            Choice(alts) => {
                let end = self.fresh_label();
                for alt in &alts[..alts.len() - 1] {
                    let next = self.fresh_label();
                    self.emit_patched(Instruction::Alt { target: usize::MAX }, next);
                    let tree = self.is_tree_region(alt);
                    if tree {
                        self.emit(Instruction::TStart);
                    }
                    self.emit_expr(alt);
                    if tree {
                        self.emit(Instruction::TCommit);
                    }
                    self.emit_patched(Instruction::Succ { target: usize::MAX }, end);
                    self.bind(next);
                }
                self.emit_expr(alts.last().expect("choice is non-empty"));
                self.bind(end);
            }
            Repetition(inner) => self.emit_loop(inner),
            OneOrMore(inner) => {
                // normally desugared away; kept for robustness
                self.emit_expr(inner);
                self.emit_loop(inner);
            }
            Option(inner) => {
                let end = self.fresh_label();
                self.emit_patched(Instruction::Alt { target: usize::MAX }, end);
                let tree = self.is_tree_region(inner);
                if tree {
                    self.emit(Instruction::TStart);
                }
                self.emit_expr(inner);
                if tree {
                    self.emit(Instruction::TCommit);
                }
                self.emit_patched(Instruction::Succ { target: usize::MAX }, end);
                self.bind(end);
            }
            And(inner) => {
                self.emit(Instruction::Pos);
                self.emit_expr(inner);
                self.emit(Instruction::Back);
            }
            Not(inner) => {
                let ok = self.fresh_label();
                self.emit_patched(Instruction::Alt { target: usize::MAX }, ok);
                let tree = self.is_tree_region(inner);
                if tree {
                    self.emit(Instruction::TStart);
                }
                self.emit_expr(inner);
                if tree {
                    self.emit(Instruction::TAbort);
                }
                let fail_at = self.fresh_label();
                self.emit_patched(Instruction::Succ { target: usize::MAX }, fail_at);
                self.bind(fail_at);
                self.emit(Instruction::Fail);
                self.bind(ok);
            }
            New(inner) => {
                self.emit(Instruction::TNew);
                self.emit_expr(inner);
                self.emit(Instruction::TCapture);
            }
            LeftFold(inner, label) => {
                let label = label.as_deref().map(|l| self.intern_name(l));
                self.emit(Instruction::TLeftFold { label });
                self.emit_expr(inner);
                self.emit(Instruction::TCapture);
            }
            Link(inner, label) => {
                let label = label.as_deref().map(|l| self.intern_name(l));
                self.emit(Instruction::TPush);
                self.emit_expr(inner);
                self.emit(Instruction::TLink { label });
                self.emit(Instruction::TPop);
            }
            Tag(t) => {
                let tag = self.intern_name(t);
                self.emit(Instruction::TTag { tag });
            }
            Replace(bytes) => {
                let string = self.intern_string(bytes);
                self.emit(Instruction::TReplace { string });
            }
            SymbolDef(name) => {
                let production = self.prod_index[name.as_str()];
                let name = self.intern_name(name);
                self.emit(Instruction::Pos);
                self.emit(Instruction::Call { production });
                self.emit(Instruction::Symbol { name });
            }
            Exists(name) => {
                let name = self.intern_name(name);
                self.emit(Instruction::Exists { name });
            }
            ExistsValue(name, value) => {
                let name = self.intern_name(name);
                let value = self.intern_string(value);
                self.emit(Instruction::IsDef { name, value });
            }
            Match(name) => {
                let name = self.intern_name(name);
                self.emit(Instruction::Match { name });
            }
            Is(name) | Isa(name) => {
                let production = self.prod_index[name.as_str()];
                let idx = self.intern_name(name);
                self.emit(Instruction::Pos);
                self.emit(Instruction::Call { production });
                self.emit(match e {
                    Is(_) => Instruction::Is { name: idx },
                    _ => Instruction::Isa { name: idx },
                });
            }
            Block(inner) => {
                self.emit(Instruction::SOpen);
                self.emit_expr(inner);
                self.emit(Instruction::SClose);
            }
            Local(name, inner) => {
                let name = self.intern_name(name);
                self.emit(Instruction::SOpen);
                self.emit(Instruction::SMask { name });
                self.emit_expr(inner);
                self.emit(Instruction::SClose);
            }
            IfCond(_, _) | OnCond(_, _, _) => {
                unreachable!("conditions are rejected before emission")
            }
        }
    }

    /// Adjacent byte elements coalesce into one `str` instruction.
    fn emit_sequence(&mut self, items: &[Expression]) {
        let mut i = 0;
        while i < items.len() {
            let mut run = Vec::new();
            while let Some(Expression::Byte(b)) = items.get(i) {
                run.push(*b);
                i += 1;
            }
            match run.len() {
                0 => {
                    self.emit_expr(&items[i]);
                    i += 1;
                }
                1 => self.emit(Instruction::Byte { byte: run[0] }),
                _ => {
                    let string = self.intern_string(&run);
                    self.emit(Instruction::Str { string });
                }
            }
        }
    }

    fn emit_loop(&mut self, inner: &Expression) {
        let end = self.fresh_label();
        let head = self.fresh_label();
        self.emit_patched(Instruction::Alt { target: usize::MAX }, end);
        self.bind(head);
        let tree = self.is_tree_region(inner);
        if tree {
            self.emit(Instruction::TStart);
        }
        self.emit_expr(inner);
        if tree {
            self.emit(Instruction::TCommit);
        }
        self.emit_patched(Instruction::Skip { target: usize::MAX }, head);
        self.bind(end);
    }
}

fn intern<T: PartialEq>(pool: &mut Vec<T>, value: T) -> u32 {
    match pool.iter().position(|v| *v == value) {
        Some(i) => i as u32,
        None => {
            pool.push(value);
            (pool.len() - 1) as u32
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_grammar;

    fn compiled(text: &str) -> Program {
        compile(&parse_grammar(text).unwrap(), &CompileOptions::default()).unwrap()
    }

    #[test]
    fn empty_compiles_to_nop() {
        let p = compiled("A = ''");
        assert_eq!(p.code[p.productions[0].offset], Instruction::Nop);
    }

    #[test]
    fn byte_row() {
        let p = compiled("A = 'a'");
        assert_eq!(p.code[p.productions[0].offset], Instruction::Byte { byte: b'a' });
        assert_eq!(p.code[p.productions[0].offset + 1], Instruction::Ret);
    }

    #[test]
    fn not_emits_alt_succ_fail() {
        let p = compiled("A = !'a'");
        let at = p.productions[0].offset;
        assert!(matches!(p.code[at], Instruction::Alt { .. }));
        assert_eq!(p.code[at + 1], Instruction::Byte { byte: b'a' });
        assert!(matches!(p.code[at + 2], Instruction::Succ { .. }));
        assert_eq!(p.code[at + 3], Instruction::Fail);
        // the alt target lands after the fail, the succ target on it
        if let (Instruction::Alt { target: a }, Instruction::Succ { target: s }) =
            (&p.code[at], &p.code[at + 2])
        {
            assert_eq!(*a, at + 4);
            assert_eq!(*s, at + 3);
        }
    }

    #[test]
    fn symbol_emits_pos_call_symbol() {
        let p = compiled("A = <symbol B>\nB = 'b'");
        let at = p.productions[0].offset;
        assert_eq!(p.code[at], Instruction::Pos);
        assert!(matches!(p.code[at + 1], Instruction::Call { .. }));
        assert!(matches!(p.code[at + 2], Instruction::Symbol { .. }));
    }

    #[test]
    fn byte_runs_coalesce_into_str() {
        let p = compiled("A = 'abc'");
        let at = p.productions[0].offset;
        assert_eq!(p.code[at], Instruction::Str { string: 0 });
        assert_eq!(p.strings[0], b"abc");
    }

    #[test]
    fn conditions_are_rejected() {
        let g = parse_grammar("A = <if c>").unwrap();
        let err = compile(&g, &CompileOptions::default()).unwrap_err();
        assert!(matches!(err, CompileError::UnsupportedConstruct { .. }));
    }

    #[test]
    fn memo_policy_requires_two_references_and_purity() {
        // A referenced twice and symbol-free: memoized
        let p = compiled("S = &(A 'x') A 'y'\nA = 'a'+");
        assert_eq!(p.memo_points.len(), 1);
        assert_eq!(p.memo_points[0].production, "A");
        assert!(!p.memo_points[0].tree);

        // referenced once: not memoized
        let p = compiled("S = A\nA = 'a'");
        assert!(p.memo_points.is_empty());

        // symbol-touching: not memoized
        let p = compiled("S = A A\nA = <exists B>\nB = 'b'");
        assert!(p.memo_points.is_empty());

        // fold-bearing: not memoized
        let p = compiled("S = A A\nA = B {$ '+' #T }*\nB = { 'b' #B }");
        assert!(p.memo_points.iter().all(|m| m.production != "A"));

        // tree-constructing memo points use the tree variants
        let p = compiled("S = &(A) A\nA = { 'a' #A }");
        assert_eq!(p.memo_points.len(), 1);
        assert!(p.memo_points[0].tree);
        let at = p.productions[p.production_index("A").unwrap()].offset;
        assert!(matches!(p.code[at], Instruction::TLookup { .. }));
    }

    #[test]
    fn memo_disabled_by_option() {
        let g = parse_grammar("S = &(A 'x') A 'y'\nA = 'a'+").unwrap();
        let p = compile(&g, &CompileOptions { memo: false }).unwrap();
        assert!(p.memo_points.is_empty());
        assert!(!p.code.iter().any(|i| matches!(i, Instruction::Lookup { .. })));
    }

    #[test]
    fn jump_targets_resolve_in_range() {
        let p = compiled(
            "Expr = Prod {$left ('+' #Add / '-' #Sub) $right(Prod) }*\n\
             Prod = Val {$left ('*' #Mul / '/' #Div) $right(Val) }*\n\
             Val = { [0-9]+ #Int }",
        );
        for i in &p.code {
            let t = match i {
                Instruction::Alt { target }
                | Instruction::Succ { target }
                | Instruction::Jump { target }
                | Instruction::Skip { target }
                | Instruction::Lookup { miss: target, .. }
                | Instruction::TLookup { miss: target, .. } => *target,
                _ => continue,
            };
            assert!(t < p.code.len(), "target {t} out of range");
        }
    }
}
