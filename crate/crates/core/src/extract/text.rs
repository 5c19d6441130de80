//! Recovering row/column structure from plain-text table dumps.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;

use super::ParsedTable;

static FIELD_SPLIT_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\t+| {2,}").unwrap());
static CAPTION_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(Table|TABLE)\s+\d+\s*[:.]").unwrap());

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("text table recovery failed: {0}")]
pub struct RecoveryError(pub String);

/// Turns an unstructured table text blob into a grid.
///
/// `Ok(None)` means the blob does not look like a table.
pub trait TextTableRecoverer: Send + Sync {
    fn name(&self) -> &str;
    fn recover(&self, raw: &str) -> Result<Option<Vec<Vec<String>>>, RecoveryError>;
}

/// Splits lines on tabs or runs of two or more spaces and accepts the blob
/// when enough lines agree on the modal field count.
#[derive(Debug, Clone)]
pub struct AlignedColumnRecoverer {
    pub min_agreement: f64,
}

impl Default for AlignedColumnRecoverer {
    fn default() -> Self {
        AlignedColumnRecoverer { min_agreement: 0.8 }
    }
}

impl TextTableRecoverer for AlignedColumnRecoverer {
    fn name(&self) -> &str {
        "aligned-columns"
    }

    fn recover(&self, raw: &str) -> Result<Option<Vec<Vec<String>>>, RecoveryError> {
        let rows: Vec<Vec<String>> = raw
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| FIELD_SPLIT_RE.split(l).map(str::to_string).collect())
            .collect();
        if rows.len() < 2 {
            return Ok(None);
        }
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for r in &rows {
            *counts.entry(r.len()).or_default() += 1;
        }
        // Largest width wins a tie for the mode.
        let (&width, &agreeing) = counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(b.0)))
            .expect("non-empty");
        if width < 2 || (agreeing as f64 / rows.len() as f64) + 1e-12 < self.min_agreement {
            return Ok(None);
        }
        let grid = rows
            .into_iter()
            .map(|mut r| {
                if r.len() > width {
                    let tail = r.split_off(width - 1).join(" ");
                    r.push(tail);
                }
                r.resize(width, String::new());
                r
            })
            .collect();
        Ok(Some(grid))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Recovery {
    Table(ParsedTable),
    NotATable,
    Failed(RecoveryError),
}

pub fn recover_text_table(raw: &str, recoverer: &dyn TextTableRecoverer) -> Recovery {
    match recoverer.recover(raw) {
        Ok(Some(cells)) if !cells.is_empty() && cells.iter().any(|r| !r.is_empty()) => {
            Recovery::Table(ParsedTable {
                cells,
                header_row_count: 1,
                caption: None,
                footnotes: Vec::new(),
                context: None,
            })
        }
        Ok(_) => Recovery::NotATable,
        Err(e) => Recovery::Failed(e),
    }
}

/// Splits a text dump into blank-line separated blocks; a leading
/// `Table N:` line becomes the block's caption.
pub fn split_text_blocks(body: &str) -> Vec<(Option<String>, String)> {
    let mut blocks = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    let mut flush = |current: &mut Vec<&str>| {
        if current.is_empty() {
            return;
        }
        let caption = CAPTION_RE
            .is_match(current[0].trim())
            .then(|| current.remove(0).trim().to_string());
        if !current.is_empty() {
            blocks.push((caption, current.join("\n")));
        }
        current.clear();
    };
    for line in body.lines() {
        if line.trim().is_empty() {
            flush(&mut current);
        } else {
            current.push(line);
        }
    }
    flush(&mut current);
    blocks
}
