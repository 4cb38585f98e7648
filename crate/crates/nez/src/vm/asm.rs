//! Bytecode text form: one instruction per line, `label:` prefixes, `#`
//! comments. Production entry points are labeled with the production name;
//! compiler-internal targets use `.L<n>` labels. `assemble` inverts
//! `disassemble` exactly.

use std::collections::HashMap;

use crate::byteset::ByteSet;
use crate::syntax::{literal_text, scan_class, scan_quoted};

use super::program::{Instruction, MemoPoint, ProductionEntry, Program};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct AsmError {
    pub line: usize,
    pub message: String,
}

pub fn disassemble(program: &Program) -> String {
    use Instruction::*;
    // name every jump target
    let mut local_labels: HashMap<usize, String> = HashMap::new();
    let prod_at: HashMap<usize, &str> = program
        .productions
        .iter()
        .map(|p| (p.offset, p.name.as_str()))
        .collect();
    let mut targets: Vec<usize> = program
        .code
        .iter()
        .filter_map(|i| match i {
            Alt { target } | Succ { target } | Jump { target } | Skip { target }
            | Lookup { miss: target, .. } | TLookup { miss: target, .. } => Some(*target),
            _ => None,
        })
        .collect();
    targets.sort_unstable();
    targets.dedup();
    for t in targets {
        if !prod_at.contains_key(&t) {
            let n = local_labels.len();
            local_labels.insert(t, format!(".L{n}"));
        }
    }
    let label_of = |offset: usize| -> String {
        prod_at
            .get(&offset)
            .map(|s| s.to_string())
            .or_else(|| local_labels.get(&offset).cloned())
            .unwrap_or_else(|| format!("@{offset}"))
    };

    let mut out = String::new();
    for (at, instr) in program.code.iter().enumerate() {
        if let Some(name) = prod_at.get(&at) {
            out.push_str(name);
            out.push_str(":\n");
        }
        if let Some(l) = local_labels.get(&at) {
            out.push_str(l);
            out.push_str(":\n");
        }
        out.push_str("        ");
        let line = match instr {
            Nop => "nop".to_string(),
            Fail => "fail".to_string(),
            Alt { target } => format!("alt {}", label_of(*target)),
            Succ { target } => format!("succ {}", label_of(*target)),
            Jump { target } => format!("jump {}", label_of(*target)),
            Call { production } => format!(
                "call {}",
                program
                    .productions
                    .get(*production as usize)
                    .map(|p| p.name.as_str())
                    .unwrap_or("?")
            ),
            Ret => "ret".to_string(),
            Pos => "pos".to_string(),
            Back => "back".to_string(),
            Skip { target } => format!("skip {}", label_of(*target)),
            Byte { byte } => format!("byte {byte}"),
            Any => "any".to_string(),
            Set { class } => format!(
                "set {}",
                program.class(*class).copied().unwrap_or_else(ByteSet::empty)
            ),
            Str { string } => format!("str '{}'", quoted(program, *string)),
            TPush => "tpush".to_string(),
            TPop => "tpop".to_string(),
            TLeftFold { label } => match label {
                Some(l) => format!("tleftfold ${}", name_of(program, *l)),
                None => "tleftfold".to_string(),
            },
            TNew => "tnew".to_string(),
            TLink { label } => match label {
                Some(l) => format!("tlink ${}", name_of(program, *l)),
                None => "tlink".to_string(),
            },
            TCapture => "tcapture".to_string(),
            TTag { tag } => format!("ttag #{}", name_of(program, *tag)),
            TReplace { string } => format!("treplace '{}'", quoted(program, *string)),
            TStart => "tstart".to_string(),
            TCommit => "tcommit".to_string(),
            TAbort => "tabort".to_string(),
            SOpen => "sopen".to_string(),
            SClose => "sclose".to_string(),
            SMask { name } => format!("smask {}", name_of(program, *name)),
            Symbol { name } => format!("symbol {}", name_of(program, *name)),
            Exists { name } => format!("exists {}", name_of(program, *name)),
            IsDef { name, value } => format!(
                "isdef {} '{}'",
                name_of(program, *name),
                quoted(program, *value)
            ),
            Match { name } => format!("match {}", name_of(program, *name)),
            Is { name } => format!("is {}", name_of(program, *name)),
            Isa { name } => format!("isa {}", name_of(program, *name)),
            Lookup { memo, miss } => format!("lookup {memo} {}", label_of(*miss)),
            Memo { memo } => format!("memo {memo}"),
            MemoFail { memo } => format!("memofail {memo}"),
            TLookup { memo, miss } => format!("tlookup {memo} {}", label_of(*miss)),
            TMemo { memo } => format!("tmemo {memo}"),
            Exit => "exit".to_string(),
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}

fn name_of(program: &Program, idx: u32) -> &str {
    program.name(idx).unwrap_or("?")
}

fn quoted(program: &Program, idx: u32) -> String {
    literal_text(program.string(idx).unwrap_or(b""), b'\'')
}

#[derive(Debug, Clone)]
enum Token {
    Word(String),
    Quoted(Vec<u8>),
    Class(ByteSet),
}

/// One logical statement: labels bound here plus an optional instruction.
struct Statement {
    line: usize,
    labels: Vec<String>,
    tokens: Vec<Token>,
}

pub fn assemble(text: &str) -> Result<Program, AsmError> {
    let statements = tokenize(text)?;

    // pass 1: instruction offsets for every label
    let mut label_at: HashMap<String, usize> = HashMap::new();
    let mut offset = 0usize;
    for st in &statements {
        for l in &st.labels {
            if label_at.insert(l.clone(), offset).is_some() {
                return Err(AsmError { line: st.line, message: format!("duplicate label {l}") });
            }
        }
        if !st.tokens.is_empty() {
            offset += 1;
        }
    }

    // production table: non-local labels in offset order
    let mut productions: Vec<ProductionEntry> = label_at
        .iter()
        .filter(|(name, _)| !name.starts_with('.'))
        .map(|(name, &offset)| ProductionEntry { name: name.clone(), offset })
        .collect();
    productions.sort_by_key(|p| p.offset);

    // pass 2: instructions
    let mut asm = Assembler {
        label_at,
        classes: Vec::new(),
        strings: Vec::new(),
        names: Vec::new(),
        memo_seen: HashMap::new(),
    };
    let mut code = Vec::new();
    for st in &statements {
        if st.tokens.is_empty() {
            continue;
        }
        let instr = asm.instruction(st, &productions, code.len())?;
        code.push(instr);
    }

    // memo points, named after the production region holding the lookup
    let mut memo_points: Vec<MemoPoint> = Vec::new();
    let mut ids: Vec<(u32, MemoPoint)> = asm.memo_seen.drain().collect();
    ids.sort_by_key(|(id, _)| *id);
    for (id, point) in ids {
        if id as usize != memo_points.len() {
            return Err(AsmError { line: 0, message: format!("memo ids must be dense, missing {}", memo_points.len()) });
        }
        memo_points.push(point);
    }

    Ok(Program {
        code,
        entry: 0,
        productions,
        classes: asm.classes,
        strings: asm.strings,
        names: asm.names,
        memo_points,
    })
}

struct Assembler {
    label_at: HashMap<String, usize>,
    classes: Vec<ByteSet>,
    strings: Vec<Vec<u8>>,
    names: Vec<String>,
    memo_seen: HashMap<u32, MemoPoint>,
}

impl Assembler {
    fn instruction(
        &mut self,
        st: &Statement,
        productions: &[ProductionEntry],
        at: usize,
    ) -> Result<Instruction, AsmError> {
        use Instruction::*;
        let err = |message: String| AsmError { line: st.line, message };
        let mnemonic = match &st.tokens[0] {
            Token::Word(w) => w.as_str(),
            other => return Err(err(format!("expected mnemonic, got {other:?}"))),
        };
        let rest = &st.tokens[1..];
        let word = |i: usize| -> Result<&str, AsmError> {
            match rest.get(i) {
                Some(Token::Word(w)) => Ok(w.as_str()),
                other => Err(AsmError {
                    line: st.line,
                    message: format!("{mnemonic}: expected word operand, got {other:?}"),
                }),
            }
        };
        let quoted_op = |i: usize| -> Result<Vec<u8>, AsmError> {
            match rest.get(i) {
                Some(Token::Quoted(q)) => Ok(q.clone()),
                other => Err(AsmError {
                    line: st.line,
                    message: format!("{mnemonic}: expected quoted operand, got {other:?}"),
                }),
            }
        };
        let target = |this: &Self, i: usize| -> Result<usize, AsmError> {
            let w = word(i)?;
            this.label_at
                .get(w)
                .copied()
                .ok_or_else(|| AsmError { line: st.line, message: format!("undefined label {w}") })
        };
        let memo_id = |i: usize| -> Result<u32, AsmError> {
            word(i)?.parse().map_err(|_| AsmError {
                line: st.line,
                message: format!("{mnemonic}: bad memo id"),
            })
        };

        let instr = match mnemonic {
            "nop" => Nop,
            "fail" => Fail,
            "alt" => Alt { target: target(self, 0)? },
            "succ" => Succ { target: target(self, 0)? },
            "jump" => Jump { target: target(self, 0)? },
            "call" => {
                let name = word(0)?;
                let production = productions
                    .iter()
                    .position(|p| p.name == name)
                    .ok_or_else(|| err(format!("call to unknown production {name}")))?
                    as u32;
                Call { production }
            }
            "ret" => Ret,
            "pos" => Pos,
            "back" => Back,
            "skip" => Skip { target: target(self, 0)? },
            "byte" => match rest.first() {
                Some(Token::Word(w)) => Byte {
                    byte: w.parse().map_err(|_| err(format!("bad byte value {w}")))?,
                },
                Some(Token::Quoted(q)) if q.len() == 1 => Byte { byte: q[0] },
                other => return Err(err(format!("byte: bad operand {other:?}"))),
            },
            "any" => Any,
            "set" => match rest.first() {
                Some(Token::Class(set)) => Set { class: intern(&mut self.classes, *set) },
                other => return Err(err(format!("set: expected class, got {other:?}"))),
            },
            "str" => Str { string: intern(&mut self.strings, quoted_op(0)?) },
            "tpush" => TPush,
            "tpop" => TPop,
            "tleftfold" => TLeftFold { label: self.optional_label(rest, st.line)? },
            "tnew" => TNew,
            "tlink" => TLink { label: self.optional_label(rest, st.line)? },
            "tcapture" => TCapture,
            "ttag" => {
                let w = word(0)?;
                let tag = w.strip_prefix('#').unwrap_or(w);
                TTag { tag: intern(&mut self.names, tag.to_string()) }
            }
            "treplace" => TReplace { string: intern(&mut self.strings, quoted_op(0)?) },
            "tstart" => TStart,
            "tcommit" => TCommit,
            "tabort" => TAbort,
            "sopen" => SOpen,
            "sclose" => SClose,
            "smask" => SMask { name: self.intern_name(word(0)?) },
            "symbol" => Symbol { name: self.intern_name(word(0)?) },
            "exists" => Exists { name: self.intern_name(word(0)?) },
            "isdef" => IsDef {
                name: self.intern_name(word(0)?),
                value: intern(&mut self.strings, quoted_op(1)?),
            },
            "match" => Match { name: self.intern_name(word(0)?) },
            "is" => Is { name: self.intern_name(word(0)?) },
            "isa" => Isa { name: self.intern_name(word(0)?) },
            "lookup" | "tlookup" => {
                let memo = memo_id(0)?;
                let miss = target(self, 1)?;
                let tree = mnemonic == "tlookup";
                let production = self.region_of(productions, at);
                self.memo_seen.insert(memo, MemoPoint { production, tree });
                if tree {
                    TLookup { memo, miss }
                } else {
                    Lookup { memo, miss }
                }
            }
            "memo" => Memo { memo: memo_id(0)? },
            "tmemo" => TMemo { memo: memo_id(0)? },
            "memofail" => MemoFail { memo: memo_id(0)? },
            "exit" => Exit,
            other => return Err(err(format!("unknown instruction {other}"))),
        };
        Ok(instr)
    }

    fn optional_label(&mut self, rest: &[Token], line: usize) -> Result<Option<u32>, AsmError> {
        match rest.first() {
            None => Ok(None),
            Some(Token::Word(w)) if w.starts_with('$') => {
                Ok(Some(intern(&mut self.names, w[1..].to_string())))
            }
            other => Err(AsmError { line, message: format!("expected $label, got {other:?}") }),
        }
    }

    fn intern_name(&mut self, name: &str) -> u32 {
        intern(&mut self.names, name.to_string())
    }

    /// The production whose region contains code offset `at`.
    fn region_of(&self, productions: &[ProductionEntry], at: usize) -> String {
        productions
            .iter()
            .rev()
            .find(|p| p.offset <= at)
            .map(|p| p.name.clone())
            .unwrap_or_else(|| format!("memo{at}"))
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

fn tokenize(text: &str) -> Result<Vec<Statement>, AsmError> {
    let mut statements = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        // split on ';' outside quotes, so `byte 'a'; exit` works
        for part in split_statements(raw_line) {
            let st = tokenize_statement(&part, line_no)?;
            if !st.labels.is_empty() || !st.tokens.is_empty() {
                statements.push(st);
            }
        }
    }
    Ok(statements)
}

fn split_statements(line: &str) -> Vec<String> {
    let mut parts = Vec::new();
    let mut current = String::new();
    let mut quote: Option<char> = None;
    for c in line.chars() {
        match quote {
            Some(q) => {
                current.push(c);
                if c == q {
                    quote = None;
                }
            }
            None => match c {
                '\'' | '`' => {
                    quote = Some(c);
                    current.push(c);
                }
                ';' => {
                    parts.push(std::mem::take(&mut current));
                }
                // `#` outside quotes is a comment, except as the ttag operand
                '#' => {
                    if current.trim_end().ends_with("ttag") {
                        current.push(c);
                    } else {
                        parts.push(std::mem::take(&mut current));
                        return parts;
                    }
                }
                _ => current.push(c),
            },
        }
    }
    parts.push(current);
    parts
}

fn tokenize_statement(part: &str, line: usize) -> Result<Statement, AsmError> {
    let bytes = part.as_bytes();
    let mut labels = Vec::new();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b' ' | b'\t' => i += 1,
            b'\'' => {
                let (payload, end) = scan_quoted(bytes, i, b'\'')
                    .map_err(|e| AsmError { line, message: e.to_string() })?;
                tokens.push(Token::Quoted(payload));
                i = end;
            }
            b'[' => {
                let (set, end) = scan_class(bytes, i)
                    .map_err(|e| AsmError { line, message: e.to_string() })?;
                tokens.push(Token::Class(set));
                i = end;
            }
            _ => {
                let start = i;
                while i < bytes.len() && !matches!(bytes[i], b' ' | b'\t' | b'\'' | b'[') {
                    i += 1;
                }
                let word = &part[start..i];
                if let Some(label) = word.strip_suffix(':') {
                    if !tokens.is_empty() {
                        return Err(AsmError {
                            line,
                            message: format!("label {label} after instruction"),
                        });
                    }
                    labels.push(label.to_string());
                } else {
                    tokens.push(Token::Word(word.to_string()));
                }
            }
        }
    }
    Ok(Statement { line, labels, tokens })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_grammar;
    use crate::vm::{compile, CompileOptions};

    #[test]
    fn nop_program_round_trips() {
        let p = assemble("        nop\n        exit\n").unwrap();
        assert_eq!(p.code, vec![Instruction::Nop, Instruction::Exit]);
        let again = assemble(&disassemble(&p)).unwrap();
        assert_eq!(again, p);
    }

    #[test]
    fn compiled_math_grammar_round_trips() {
        let g = parse_grammar(
            "Expr = Prod {$left ('+' #Add / '-' #Sub) $right(Prod) }*\n\
             Prod = Val {$left ('*' #Mul / '/' #Div) $right(Val) }*\n\
             Val = { [0-9]+ #Int }",
        )
        .unwrap();
        let p = compile(&g, &CompileOptions::default()).unwrap();
        let text = disassemble(&p);
        let back = assemble(&text).unwrap();
        assert_eq!(back, p, "disassembly:\n{text}");
    }

    #[test]
    fn hand_written_byte_quote_form() {
        let p = assemble("byte 'a'; exit").unwrap();
        assert_eq!(p.code, vec![Instruction::Byte { byte: b'a' }, Instruction::Exit]);
    }

    #[test]
    fn comments_are_ignored() {
        let p = assemble("# header\n        nop # trailing\n        exit\n").unwrap();
        assert_eq!(p.code.len(), 2);
    }

    #[test]
    fn undefined_label_is_an_error() {
        let err = assemble("        alt nowhere\n").unwrap_err();
        assert_eq!(err.line, 1);
        assert!(err.message.contains("nowhere"));
    }

    #[test]
    fn memo_ids_rebuild_the_point_table() {
        let g = parse_grammar("S = &(A 'x') A 'y'\nA = 'a'+").unwrap();
        let p = compile(&g, &CompileOptions::default()).unwrap();
        let back = assemble(&disassemble(&p)).unwrap();
        assert_eq!(back.memo_points, p.memo_points);
    }
}
