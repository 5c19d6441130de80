use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::CorpusTable;
use crate::ingestion::SourceKind;

/// Thresholds for dropping tables unsuitable for column-wise analysis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterProfile {
    pub min_body_rows: usize,
    pub min_cols: usize,
    /// Tables are kept only if found in at least one of these sources.
    pub allowed_sources: BTreeSet<SourceKind>,
}

impl Default for FilterProfile {
    fn default() -> Self {
        FilterProfile {
            min_body_rows: 1,
            min_cols: 2,
            allowed_sources: SourceKind::ALL
                .into_iter()
                .filter(|k| *k != SourceKind::S2Text)
                .collect(),
        }
    }
}

impl FilterProfile {
    /// Adds recovered plain-text tables, which are for ablations only.
    pub fn with_sources(mut self, extra: impl IntoIterator<Item = SourceKind>) -> Self {
        self.allowed_sources.extend(extra);
        self
    }
}

pub fn passes_filter(table: &CorpusTable, profile: &FilterProfile) -> bool {
    let t = &table.table;
    t.n_rows.saturating_sub(t.header_row_count) >= profile.min_body_rows
        && t.n_cols >= profile.min_cols
        && table
            .occurrences
            .iter()
            .any(|o| profile.allowed_sources.contains(&o.source_kind))
}

pub fn strategic_filter(corpus: Vec<CorpusTable>, profile: &FilterProfile) -> Vec<CorpusTable> {
    corpus
        .into_iter()
        .filter(|t| passes_filter(t, profile))
        .collect()
}
