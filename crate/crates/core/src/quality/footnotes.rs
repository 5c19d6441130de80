use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::extract::ExtractedTable;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Footnote {
    pub marker: String,
    pub text: String,
}

/// Which markers introduce a footnote line and tag a cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FootnoteGrammar {
    pub symbols: Vec<String>,
    /// Also accept `[1]`, `[2]`, ...
    pub bracketed_numbers: bool,
}

impl Default for FootnoteGrammar {
    fn default() -> Self {
        FootnoteGrammar {
            symbols: vec!["*".into(), "†".into(), "‡".into()],
            bracketed_numbers: true,
        }
    }
}

static BRACKET_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\[\d+\])\s*(.+)$").unwrap());

/// Parses `* note`, `† note` or `[1] note`.
pub fn parse_footnote_line(line: &str, grammar: &FootnoteGrammar) -> Option<Footnote> {
    let line = line.trim();
    if grammar.bracketed_numbers {
        if let Some(c) = BRACKET_RE.captures(line) {
            return Some(Footnote {
                marker: c[1].to_string(),
                text: c[2].trim().to_string(),
            });
        }
    }
    let mut symbols: Vec<&String> = grammar.symbols.iter().filter(|s| !s.is_empty()).collect();
    symbols.sort_by_key(|s| std::cmp::Reverse(s.len()));
    symbols.into_iter().find_map(|sym| {
        let rest = line.strip_prefix(sym.as_str())?;
        if rest.starts_with(sym.as_str()) {
            return None;
        }
        let text = rest.trim();
        (!text.is_empty()).then(|| Footnote {
            marker: sym.clone(),
            text: text.to_string(),
        })
    })
}

/// Replaces a trailing marker in each cell with ` (<note text>)`.
pub fn merge_footnotes(mut table: ExtractedTable, notes: &[Footnote]) -> ExtractedTable {
    if notes.is_empty() {
        return table;
    }
    let mut ordered: Vec<&Footnote> = Vec::new();
    for n in notes.iter().filter(|n| !n.marker.is_empty()) {
        if !ordered.iter().any(|o| o.marker == n.marker) {
            ordered.push(n);
        }
    }
    ordered.sort_by_key(|n| std::cmp::Reverse(n.marker.len()));
    for cell in table.cells.iter_mut().flatten() {
        let trimmed = cell.trim_end();
        if let Some(note) = ordered.iter().find(|n| trimmed.ends_with(n.marker.as_str())) {
            let stem = trimmed[..trimmed.len() - note.marker.len()].trim();
            *cell = if stem.is_empty() {
                format!("({})", note.text)
            } else {
                format!("{stem} ({})", note.text)
            };
        }
    }
    table
}
