use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Shorthand model names mapped to candidate canonical ids with download counts.
#[derive(Debug, Clone, Default)]
pub struct AliasTable {
    entries: HashMap<String, Vec<(String, u64)>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedId {
    pub id: String,
    pub resolved: bool,
}

impl AliasTable {
    pub fn insert(&mut self, shorthand: &str, canonical_id: &str, downloads: u64) {
        self.entries
            .entry(shorthand.to_string())
            .or_default()
            .push((canonical_id.to_string(), downloads));
    }

    pub fn candidates(&self, shorthand: &str) -> &[(String, u64)] {
        self.entries.get(shorthand).map_or(&[], Vec::as_slice)
    }

    /// Parses `shorthand<TAB>canonical_id<TAB>download_count` lines. A first
    /// line whose count column is not a number is treated as a header.
    pub fn parse_tsv(text: &str, path: &Path) -> Result<Self> {
        let mut table = AliasTable::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let bad = |message: String| Error::Record {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            if cols.len() != 3 {
                return Err(bad(format!("expected 3 columns, found {}", cols.len())));
            }
            match cols[2].trim().parse::<u64>() {
                Ok(n) => table.insert(cols[0].trim(), cols[1].trim(), n),
                Err(_) if i == 0 => continue,
                Err(e) => return Err(bad(format!("bad download count: {e}"))),
            }
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Ok(AliasTable::default());
        }
        Self::parse_tsv(&crate::io::read_to_string(path)?, path)
    }
}

/// Resolves a possibly-shorthand model name to a canonical `org/repo` id.
///
/// Names already containing `/` pass through. Shorthands resolve to the most
/// downloaded candidate, ties going to the lexicographically smallest id.
/// Unknown shorthands come back unchanged with `resolved = false`.
pub fn resolve_model_alias(name: &str, aliases: &AliasTable) -> ResolvedId {
    let name = name.trim();
    if name.contains('/') {
        return ResolvedId {
            id: name.to_string(),
            resolved: true,
        };
    }
    let best = aliases
        .candidates(name)
        .iter()
        .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(&a.0)));
    match best {
        Some((id, _)) => ResolvedId {
            id: id.clone(),
            resolved: true,
        },
        None => ResolvedId {
            id: name.to_string(),
            resolved: false,
        },
    }
}
