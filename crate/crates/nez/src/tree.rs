//! Tree nodes produced by parsing: a tag, a captured input span, an
//! optional replacement string, and labeled children.

use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    pub tag: Option<String>,
    /// Byte offsets into the parsed input, `start <= end`.
    pub span: (usize, usize),
    /// Overrides the captured text when present.
    pub replaced: Option<Vec<u8>>,
    /// Children in connection order; labels are pass-through metadata.
    pub children: Vec<(Option<String>, Tree)>,
}

impl Tree {
    pub fn new(span: (usize, usize)) -> Tree {
        Tree { tag: None, span, replaced: None, children: Vec::new() }
    }

    /// The node's textual value: the replacement if set, otherwise the
    /// captured slice of the input.
    pub fn value<'a>(&'a self, input: &'a [u8]) -> &'a [u8] {
        match &self.replaced {
            Some(r) => r,
            None => &input[self.span.0.min(input.len())..self.span.1.min(input.len())],
        }
    }

    /// Single-line S-expression form: `#Tag[...]` with `label:` prefixes.
    /// Leaves print their value, inner nodes print children.
    pub fn to_sexp(&self, input: &[u8]) -> String {
        let mut out = String::new();
        self.write_sexp(input, &mut out);
        out
    }

    fn write_sexp(&self, input: &[u8], out: &mut String) {
        out.push('#');
        if let Some(tag) = &self.tag {
            out.push_str(tag);
        }
        out.push('[');
        if self.children.is_empty() {
            out.push('\'');
            out.push_str(&String::from_utf8_lossy(self.value(input)));
            out.push('\'');
        } else {
            for (i, (label, child)) in self.children.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                if let Some(l) = label {
                    out.push_str(l);
                    out.push_str(": ");
                }
                child.write_sexp(input, out);
            }
        }
        out.push(']');
    }

    /// JSON form: `{tag, value?, children: [{label?, ...}]}`. The value is
    /// present on leaves only, decoded lossily as UTF-8.
    pub fn to_json(&self, input: &[u8]) -> Value {
        let mut obj = serde_json::Map::new();
        obj.insert("tag".into(), match &self.tag {
            Some(t) => json!(t),
            None => Value::Null,
        });
        if self.children.is_empty() {
            obj.insert(
                "value".into(),
                json!(String::from_utf8_lossy(self.value(input))),
            );
        }
        obj.insert(
            "children".into(),
            Value::Array(
                self.children
                    .iter()
                    .map(|(label, child)| {
                        let mut c = child.to_json(input);
                        if let (Some(l), Some(map)) = (label, c.as_object_mut()) {
                            map.insert("label".into(), json!(l));
                        }
                        c
                    })
                    .collect(),
            ),
        );
        Value::Object(obj)
    }

    pub fn to_json_string(&self, input: &[u8]) -> String {
        self.to_json(input).to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(tag: &str, span: (usize, usize)) -> Tree {
        Tree { tag: Some(tag.into()), span, replaced: None, children: Vec::new() }
    }

    #[test]
    fn sexp_leaf_and_nested() {
        let input = b"ab";
        let t = Tree {
            tag: Some("Pair".into()),
            span: (0, 2),
            replaced: None,
            children: vec![
                (Some("left".into()), leaf("Char", (0, 1))),
                (None, leaf("Char", (1, 2))),
            ],
        };
        assert_eq!(t.to_sexp(input), "#Pair[left: #Char['a'] #Char['b']]");
    }

    #[test]
    fn replacement_wins_over_span() {
        let t = Tree {
            tag: Some("Int".into()),
            span: (0, 0),
            replaced: Some(b"0".to_vec()),
            children: Vec::new(),
        };
        assert_eq!(t.to_sexp(b""), "#Int['0']");
        assert_eq!(t.value(b""), b"0");
    }

    #[test]
    fn json_shape() {
        let input = b"7";
        let t = Tree {
            tag: Some("Num".into()),
            span: (0, 1),
            replaced: None,
            children: vec![(Some("d".into()), leaf("Digit", (0, 1)))],
        };
        let v = t.to_json(input);
        assert_eq!(v["tag"], "Num");
        assert!(v.get("value").is_none());
        assert_eq!(v["children"][0]["label"], "d");
        assert_eq!(v["children"][0]["value"], "7");
    }
}
