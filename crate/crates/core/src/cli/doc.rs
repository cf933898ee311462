//! Indentation tree: each line is `key: value`, `key:` or a bare item.
//! Children are indented with spaces deeper than their parent. `#` starts
//! a comment. The key ends at the first `:` outside brackets.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl InputError {
    pub fn at(line: usize, column: usize, message: impl Into<String>) -> InputError {
        InputError { line, column, message: message.into() }
    }
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for InputError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    /// `None` for bare items.
    pub key: Option<String>,
    pub value: String,
    pub line: usize,
    pub column: usize,
    /// Column of the first character of `value`.
    pub value_column: usize,
    pub children: Vec<Node>,
}

impl Node {
    pub fn err(&self, message: impl Into<String>) -> InputError {
        InputError::at(self.line, self.column, message)
    }

    pub fn value_err(&self, message: impl Into<String>) -> InputError {
        InputError::at(self.line, self.value_column, message)
    }

    pub fn key_str(&self) -> &str {
        self.key.as_deref().unwrap_or("")
    }

    pub fn child(&self, key: &str) -> Option<&Node> {
        self.children.iter().find(|c| c.key.as_deref() == Some(key))
    }

    pub fn require(&self, key: &str) -> Result<&Node, InputError> {
        self.child(key).ok_or_else(|| self.err(format!("missing field `{key}`")))
    }

    /// Rejects children whose key is not listed.
    pub fn only_fields(&self, allowed: &[&str]) -> Result<(), InputError> {
        for c in &self.children {
            match &c.key {
                Some(k) if allowed.contains(&k.as_str()) => {}
                Some(k) => return Err(c.err(format!("unexpected field `{k}`"))),
                None => return Err(c.err("expected `key: value`")),
            }
        }
        Ok(())
    }

    /// The value split at commas outside brackets, trimmed, empty parts
    /// dropped.
    pub fn list(&self) -> Vec<String> {
        split_top(&self.value, ',').into_iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
    }
}

/// Splits at `sep` where bracket depth is zero.
pub fn split_top(text: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i64;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            _ if c == sep && depth == 0 => {
                out.push(&text[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&text[start..]);
    out
}

fn char_col(line: &str, byte: usize) -> usize {
    line[..byte].chars().count() + 1
}

/// Parses a document whose first entry is `format-version: 1`. Returns the
/// top-level nodes after the version line.
pub fn parse_document(text: &str) -> Result<Vec<Node>, InputError> {
    let mut roots: Vec<Node> = Vec::new();
    // (indent, path of child indices from the root list)
    let mut stack: Vec<(usize, Vec<usize>)> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let body = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        if let Some(i) = body.find('\t') {
            return Err(InputError::at(line_no, char_col(raw, i), "tab character; indent with spaces"));
        }
        if body.trim().is_empty() {
            continue;
        }
        let indent = body.len() - body.trim_start().len();
        let content = body.trim_end();
        let item = &content[indent..];
        let mut depth = 0i64;
        let mut colon = None;
        for (i, c) in item.char_indices() {
            match c {
                '(' | '[' | '{' => depth += 1,
                ')' | ']' | '}' => {
                    depth -= 1;
                    if depth < 0 {
                        return Err(InputError::at(line_no, char_col(content, indent + i), "unbalanced bracket"));
                    }
                }
                ':' if depth == 0 && colon.is_none() => colon = Some(i),
                _ => {}
            }
        }
        if depth != 0 {
            return Err(InputError::at(line_no, char_col(content, content.len()), "unclosed bracket"));
        }
        let column = indent + 1;
        let node = match colon {
            Some(i) => {
                let key = item[..i].trim();
                if key.is_empty() {
                    return Err(InputError::at(line_no, column, "empty key"));
                }
                let rest = &item[i + 1..];
                let value = rest.trim();
                let lead = rest.len() - rest.trim_start().len();
                Node {
                    key: Some(key.to_string()),
                    value: value.to_string(),
                    line: line_no,
                    column,
                    value_column: char_col(content, indent + i + 1 + lead),
                    children: vec![],
                }
            }
            None => Node {
                key: None,
                value: item.to_string(),
                line: line_no,
                column,
                value_column: column,
                children: vec![],
            },
        };
        while let Some((ind, _)) = stack.last() {
            if *ind >= indent {
                stack.pop();
            } else {
                break;
            }
        }
        let path = match stack.last() {
            None => {
                if indent != 0 {
                    return Err(InputError::at(line_no, column, "top-level entry must not be indented"));
                }
                roots.push(node);
                vec![roots.len() - 1]
            }
            Some((_, parent_path)) => {
                let parent = node_at(&mut roots, parent_path);
                if parent.key.is_none() {
                    return Err(InputError::at(line_no, column, "bare items cannot have children"));
                }
                if let Some(sib) = parent.children.last() {
                    if sib.column != column {
                        return Err(InputError::at(line_no, column, "indentation does not match earlier siblings"));
                    }
                }
                parent.children.push(node);
                let mut p = parent_path.clone();
                p.push(parent.children.len() - 1);
                p
            }
        };
        stack.push((indent, path));
    }
    let mut it = roots.into_iter();
    let first = it.next().ok_or_else(|| InputError::at(1, 1, "empty document; expected `format-version: 1`"))?;
    if first.key.as_deref() != Some("format-version") {
        return Err(first.err("first entry must be `format-version`"));
    }
    if first.value != "1" {
        return Err(first.value_err(format!("unsupported format version `{}`", first.value)));
    }
    Ok(it.collect())
}

fn node_at<'a>(roots: &'a mut [Node], path: &[usize]) -> &'a mut Node {
    let mut n = &mut roots[path[0]];
    for &i in &path[1..] {
        n = &mut n.children[i];
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_and_columns() {
        let doc = "format-version: 1\n# comment\ncategory C:\n  objects: a, b\n  arrows:\n    f: a -> b  # trailing\n  [x:A] top |- bot\n";
        let nodes = parse_document(doc).unwrap();
        assert_eq!(nodes.len(), 1);
        let c = &nodes[0];
        assert_eq!(c.key_str(), "category C");
        assert_eq!(c.children.len(), 3);
        assert_eq!(c.children[0].list(), vec!["a", "b"]);
        assert_eq!(c.children[0].value_column, 12);
        assert_eq!(c.children[1].children[0].value, "a -> b");
        assert_eq!(c.children[2].key, None);
        assert_eq!(c.children[2].value, "[x:A] top |- bot");
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(parse_document("format-version: 1\nx:\n\ty: 1\n").unwrap_err().line, 3);
        let e = parse_document("format-version: 1\nx:\n    y: 1\n  z: 2\n").unwrap_err();
        assert_eq!((e.line, e.column), (4, 3));
        let e = parse_document("format-version: 2\n").unwrap_err();
        assert_eq!((e.line, e.column), (1, 17));
        assert!(parse_document("category C:\n").is_err());
        let e = parse_document("format-version: 1\nf: eq(a, b\n").unwrap_err();
        assert_eq!(e.line, 2);
    }
}
