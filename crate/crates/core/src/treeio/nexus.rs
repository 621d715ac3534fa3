use std::collections::HashMap;

use super::newick::{find_terminator, parse_newick};
use super::PhyloTree;
use crate::error::{Error, Result};

fn line_of(text: &str, offset: usize) -> usize {
    text.as_bytes()[..offset.min(text.len())].iter().filter(|&&c| c == b'\n').count() + 1
}

fn nexus_err(text: &str, offset: usize, message: impl Into<String>) -> Error {
    Error::Nexus { line: line_of(text, offset), message: message.into() }
}

// Skips whitespace and bracketed comments, returning the comments seen.
fn skip_filler<'a>(s: &'a str, mut pos: usize, comments: &mut Vec<&'a str>) -> usize {
    let b = s.as_bytes();
    while pos < b.len() {
        if b[pos].is_ascii_whitespace() {
            pos += 1;
        } else if b[pos] == b'[' {
            let close = s[pos..].find(']').map_or(b.len(), |k| pos + k);
            comments.push(&s[pos + 1..close]);
            pos = (close + 1).min(b.len());
        } else {
            break;
        }
    }
    pos
}

fn word_end(s: &str, pos: usize) -> usize {
    s[pos..]
        .find(|c: char| c.is_whitespace() || matches!(c, '=' | ';' | '[' | ','))
        .map_or(s.len(), |k| pos + k)
}

fn parse_translate(text: &str, start: usize, body: &str, table: &mut HashMap<String, String>) -> Result<()> {
    for entry in body.split(',') {
        let entry = entry.trim();
        if entry.is_empty() {
            continue;
        }
        let mut parts = entry.splitn(2, char::is_whitespace);
        let key = parts.next().unwrap_or("");
        let label = parts.next().map(str::trim).unwrap_or("");
        if label.is_empty() {
            return Err(nexus_err(text, start, format!("translate entry '{entry}' has no label")));
        }
        let label = label
            .strip_prefix('\'')
            .and_then(|l| l.strip_suffix('\''))
            .map(|l| l.replace("''", "'"))
            .unwrap_or_else(|| label.to_string());
        table.insert(key.to_string(), label);
    }
    Ok(())
}

/// Trees from the `trees` block of a Nexus document, in file order, with
/// `translate` tokens replaced by their labels. Trees marked `[&U]` are
/// rejected because the distance vectors depend on the root.
pub fn parse_nexus_trees(text: &str) -> Result<Vec<(String, PhyloTree)>> {
    let b = text.as_bytes();
    let mut pos = 0;
    let mut in_trees = false;
    let mut saw_trees = false;
    let mut table: HashMap<String, String> = HashMap::new();
    let mut out = Vec::new();
    loop {
        let mut comments = Vec::new();
        let start = skip_filler(text, pos, &mut comments);
        if start >= b.len() {
            break;
        }
        let end = find_terminator(b, start).unwrap_or(b.len());
        pos = (end + 1).min(b.len());
        let stmt = &text[start..end];
        let kw_end = word_end(text, start).min(end);
        let keyword = text[start..kw_end].to_ascii_lowercase();
        if keyword == "#nexus" {
            // The header has no terminator of its own.
            pos = kw_end;
            continue;
        }
        if end == b.len() && !stmt.trim().is_empty() {
            return Err(nexus_err(text, start, "statement is missing its terminating ';'"));
        }
        match keyword.as_str() {
            "begin" => {
                in_trees = stmt[kw_end - start..].trim().eq_ignore_ascii_case("trees");
                saw_trees |= in_trees;
                if in_trees {
                    table.clear();
                }
            }
            "end" | "endblock" => in_trees = false,
            "translate" if in_trees => {
                parse_translate(text, start, &stmt[kw_end - start..], &mut table)?;
            }
            "tree" | "utree" if in_trees => {
                let mut c = Vec::new();
                let mut p = skip_filler(text, kw_end, &mut c);
                if b.get(p) == Some(&b'*') {
                    p = skip_filler(text, p + 1, &mut c);
                }
                let name_end = word_end(text, p).min(end);
                let name = text[p..name_end].trim_matches('\'').to_string();
                if name.is_empty() {
                    return Err(nexus_err(text, p, "tree statement has no name"));
                }
                let mut c = Vec::new();
                p = skip_filler(text, name_end, &mut c);
                if b.get(p) != Some(&b'=') {
                    return Err(nexus_err(text, p, format!("expected '=' after tree name '{name}'")));
                }
                let mut rooting = Vec::new();
                let body_start = skip_filler(text, p + 1, &mut rooting);
                let unrooted = keyword == "utree"
                    || rooting.iter().any(|c| c.trim().eq_ignore_ascii_case("&u"));
                if unrooted {
                    return Err(nexus_err(
                        text,
                        start,
                        format!("tree '{name}' is unrooted ([&U]); only rooted trees are supported"),
                    ));
                }
                let newick = &text[body_start..=end.min(b.len() - 1)];
                let mut tree = parse_newick(newick).map_err(|e| match e {
                    Error::Parse { offset, message } => {
                        nexus_err(text, body_start + offset, format!("tree '{name}': {message}"))
                    }
                    other => other,
                })?;
                if !table.is_empty() {
                    tree.relabel_leaves(|tok| match table.get(tok) {
                        Some(l) => Ok(l.clone()),
                        None if table.values().any(|v| v == tok) => Ok(tok.to_string()),
                        None => Err(nexus_err(
                            text,
                            start,
                            format!("tree '{name}': translate index '{tok}' not found"),
                        )),
                    })?;
                }
                out.push((name, tree));
            }
            _ => {}
        }
    }
    if !saw_trees {
        return Err(Error::Nexus { line: line_of(text, text.len()), message: "no trees block found".into() });
    }
    Ok(out)
}
