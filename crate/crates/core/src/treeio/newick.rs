use std::collections::HashSet;

use super::{Node, PhyloTree};
use crate::error::{Error, Result};

fn parse_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse { offset, message: message.into() }
}

const SPECIAL: &[u8] = b"()[]':;,";

/// Byte offset of the first `;` outside quotes and comments.
pub(crate) fn find_terminator(s: &[u8], from: usize) -> Option<usize> {
    let mut i = from;
    while i < s.len() {
        match s[i] {
            b'\'' => {
                i += 1;
                while i < s.len() {
                    if s[i] == b'\'' {
                        if s.get(i + 1) == Some(&b'\'') {
                            i += 2;
                            continue;
                        }
                        break;
                    }
                    i += 1;
                }
            }
            b'[' => {
                while i < s.len() && s[i] != b']' {
                    i += 1;
                }
            }
            b';' => return Some(i),
            _ => {}
        }
        i += 1;
    }
    None
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    end: usize,
    nodes: Vec<Node>,
    seen: HashSet<String>,
}

impl<'a> Parser<'a> {
    fn skip_filler(&mut self) -> Result<()> {
        while self.pos < self.end {
            match self.s[self.pos] {
                c if c.is_ascii_whitespace() => self.pos += 1,
                b'[' => {
                    let start = self.pos;
                    while self.pos < self.end && self.s[self.pos] != b']' {
                        self.pos += 1;
                    }
                    if self.pos >= self.end {
                        return Err(parse_err(start, "unterminated comment"));
                    }
                    self.pos += 1;
                }
                _ => break,
            }
        }
        Ok(())
    }

    fn peek(&self) -> Option<u8> {
        (self.pos < self.end).then(|| self.s[self.pos])
    }

    fn unbalanced(&self) -> Error {
        // Balance can only be judged once the whole statement has been read.
        parse_err((self.end + 1).min(self.s.len()), "unbalanced parentheses: statement ends inside a group")
    }

    fn label(&mut self) -> Result<Option<String>> {
        self.skip_filler()?;
        match self.peek() {
            Some(b'\'') => {
                let start = self.pos;
                self.pos += 1;
                let mut out = Vec::new();
                loop {
                    match self.peek() {
                        None => return Err(parse_err(start, "unterminated quoted label")),
                        Some(b'\'') if self.s.get(self.pos + 1) == Some(&b'\'') => {
                            out.push(b'\'');
                            self.pos += 2;
                        }
                        Some(b'\'') => {
                            self.pos += 1;
                            break;
                        }
                        Some(c) => {
                            out.push(c);
                            self.pos += 1;
                        }
                    }
                }
                String::from_utf8(out).map(Some).map_err(|_| parse_err(start, "label is not valid UTF-8"))
            }
            Some(c) if !SPECIAL.contains(&c) && !c.is_ascii_whitespace() => {
                let start = self.pos;
                while let Some(c) = self.peek() {
                    if SPECIAL.contains(&c) || c.is_ascii_whitespace() {
                        break;
                    }
                    self.pos += 1;
                }
                std::str::from_utf8(&self.s[start..self.pos])
                    .map(|l| Some(l.to_string()))
                    .map_err(|_| parse_err(start, "label is not valid UTF-8"))
            }
            _ => Ok(None),
        }
    }

    fn length(&mut self, required: bool) -> Result<Option<f64>> {
        self.skip_filler()?;
        if self.peek() != Some(b':') {
            if required {
                return Err(parse_err(self.pos, "missing branch length"));
            }
            return Ok(None);
        }
        self.pos += 1;
        self.skip_filler()?;
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || matches!(c, b'+' | b'-' | b'.' | b'e' | b'E') {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("");
        if text.is_empty() {
            return Err(parse_err(start, "missing branch length"));
        }
        let value: f64 = text.parse().map_err(|_| parse_err(start, format!("invalid branch length '{text}'")))?;
        if !value.is_finite() || value < 0.0 {
            return Err(parse_err(start, format!("branch length {value} must be finite and >= 0")));
        }
        self.skip_filler()?;
        Ok(Some(value))
    }

    fn subtree(&mut self, is_root: bool) -> Result<usize> {
        self.skip_filler()?;
        let mut children = Vec::new();
        match self.peek() {
            None => return Err(if is_root { parse_err(self.pos, "empty tree") } else { self.unbalanced() }),
            Some(b'(') => {
                self.pos += 1;
                loop {
                    children.push(self.subtree(false)?);
                    self.skip_filler()?;
                    match self.peek() {
                        Some(b',') => self.pos += 1,
                        Some(b')') => {
                            self.pos += 1;
                            break;
                        }
                        None => return Err(self.unbalanced()),
                        Some(c) => {
                            return Err(parse_err(self.pos, format!("expected ',' or ')', found '{}'", c as char)))
                        }
                    }
                }
            }
            _ => {}
        }
        let label_at = self.pos;
        let label = self.label()?;
        if children.is_empty() {
            let Some(name) = &label else {
                return Err(parse_err(self.pos, "expected a leaf label or '('"));
            };
            if !self.seen.insert(name.clone()) {
                return Err(parse_err(label_at, format!("duplicate leaf label '{name}'")));
            }
        }
        let length = self.length(!is_root)?;
        self.nodes.push(Node { label, length, children, parent: None });
        Ok(self.nodes.len() - 1)
    }
}

/// Parses a single Newick statement terminated by `;`. Branch lengths are
/// required on every edge except the root edge; `[...]` comments are ignored.
pub fn parse_newick(text: &str) -> Result<PhyloTree> {
    let s = text.as_bytes();
    let end = find_terminator(s, 0).ok_or_else(|| parse_err(s.len(), "missing terminating ';'"))?;
    let mut p = Parser { s, pos: 0, end, nodes: Vec::new(), seen: HashSet::new() };
    let root = p.subtree(true)?;
    p.skip_filler()?;
    if let Some(c) = p.peek() {
        let msg = if c == b')' {
            "unbalanced parentheses: unmatched ')'".to_string()
        } else {
            format!("unexpected '{}' after tree", c as char)
        };
        return Err(parse_err(p.pos, msg));
    }
    if let Some(extra) = s[end + 1..].iter().position(|c| !c.is_ascii_whitespace()) {
        return Err(parse_err(end + 1 + extra, "unexpected text after ';'"));
    }
    PhyloTree::new(p.nodes, root).map_err(|e| parse_err(0, e.to_string()))
}

/// Parses every `;`-terminated statement in `text` (e.g. one tree per line).
pub fn parse_newick_many(text: &str) -> Result<Vec<PhyloTree>> {
    let s = text.as_bytes();
    let mut out = Vec::new();
    let mut start = 0;
    while let Some(end) = find_terminator(s, start) {
        let stmt = &text[start..=end];
        if stmt.trim() != ";" {
            let tree = parse_newick(stmt).map_err(|e| match e {
                Error::Parse { offset, message } => Error::Parse { offset: start + offset, message },
                other => other,
            })?;
            out.push(tree);
        }
        start = end + 1;
    }
    if !text[start..].trim().is_empty() {
        return Err(parse_err(s.len(), "missing terminating ';'"));
    }
    Ok(out)
}

fn write_label(out: &mut String, label: &str) {
    let plain = !label.is_empty() && label.bytes().all(|c| !SPECIAL.contains(&c) && !c.is_ascii_whitespace());
    if plain {
        out.push_str(label);
    } else {
        out.push('\'');
        out.push_str(&label.replace('\'', "''"));
        out.push('\'');
    }
}

fn write_node(tree: &PhyloTree, id: usize, out: &mut String) {
    let n = &tree.nodes()[id];
    if !n.children.is_empty() {
        out.push('(');
        for (k, &c) in n.children.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            write_node(tree, c, out);
        }
        out.push(')');
    }
    if let Some(l) = &n.label {
        write_label(out, l);
    }
    if let Some(len) = n.length {
        out.push(':');
        out.push_str(&len.to_string());
    }
}

/// Newick text with shortest round-trip branch lengths.
pub fn write_newick(tree: &PhyloTree) -> String {
    let mut out = String::new();
    write_node(tree, tree.root(), &mut out);
    out.push(';');
    out
}
