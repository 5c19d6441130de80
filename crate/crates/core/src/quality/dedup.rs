use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ingestion::SourceKind;
use crate::table::{CanonicalTable, CorpusRecord, TableId};

fn normalize_cell(cell: &str) -> String {
    cell.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// SHA-256 over the grid shape, header row count and whitespace-normalized
/// cells, truncated to 128 bits. Case and symbols are significant.
pub fn content_hash(cells: &[Vec<String>], header_row_count: usize) -> TableId {
    let mut h = Sha256::new();
    let n_cols = cells.first().map_or(0, Vec::len);
    for n in [cells.len(), n_cols, header_row_count] {
        h.update((n as u64).to_le_bytes());
    }
    for cell in cells.iter().flatten() {
        let norm = normalize_cell(cell);
        h.update((norm.len() as u64).to_le_bytes());
        h.update(norm.as_bytes());
    }
    let digest = h.finalize();
    TableId::new(digest[..16].iter().map(|b| format!("{b:02x}")).collect::<String>())
}

/// One physical place a table was found.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Occurrence {
    pub doc_id: String,
    pub position: usize,
    pub source_kind: SourceKind,
    pub context_text: String,
}

/// A canonical table with its model links and every occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusTable {
    pub table: CanonicalTable,
    pub model_ids: BTreeSet<String>,
    pub occurrences: BTreeSet<Occurrence>,
}

impl CorpusTable {
    pub fn table_id(&self) -> &TableId {
        &self.table.table_id
    }

    pub fn source_kinds(&self) -> BTreeSet<SourceKind> {
        self.occurrences.iter().map(|o| o.source_kind).collect()
    }

    pub fn to_record(&self) -> CorpusRecord {
        CorpusRecord {
            table_id: self.table.table_id.clone(),
            source_kinds: self.source_kinds(),
            model_ids: self.model_ids.clone(),
            caption: self.table.caption.clone(),
            context_text: crate::search::build_metadata_context(self),
            header_row_count: self.table.header_row_count,
            n_rows: self.table.n_rows,
            n_cols: self.table.n_cols,
            cells: self.table.cells.clone(),
            augmentation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dedup {
    /// One table per id, sorted by id.
    pub corpus: Vec<CorpusTable>,
    /// Occurrences per table id before merging.
    pub frequencies: BTreeMap<TableId, usize>,
}

/// Merges tables with equal content hash, unioning model ids and occurrences.
/// The first table seen supplies the cell text.
pub fn dedup(tables: Vec<CorpusTable>) -> Dedup {
    let mut merged: BTreeMap<TableId, CorpusTable> = BTreeMap::new();
    for t in tables {
        match merged.get_mut(t.table_id()) {
            Some(existing) => {
                existing.model_ids.extend(t.model_ids);
                existing.occurrences.extend(t.occurrences);
            }
            None => {
                merged.insert(t.table_id().clone(), t);
            }
        }
    }
    let frequencies = merged
        .iter()
        .map(|(id, t)| (id.clone(), t.occurrences.len().max(1)))
        .collect();
    Dedup {
        corpus: merged.into_values().collect(),
        frequencies,
    }
}

/// `table_id<TAB>count` lines sorted by id.
pub fn frequency_tsv(frequencies: &BTreeMap<TableId, usize>) -> String {
    frequencies
        .iter()
        .map(|(id, n)| format!("{id}\t{n}\n"))
        .collect()
}

/// Number of tables per occurrence count.
pub fn frequency_histogram(frequencies: &BTreeMap<TableId, usize>) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for &n in frequencies.values() {
        *hist.entry(n).or_default() += 1;
    }
    hist
}
