//! Table types shared by every stage after quality control.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::augment::Variant;
use crate::ingestion::SourceKind;
use crate::quality::content_hash;

/// Content-hash identifier of a table, rendered as 32 lowercase hex digits.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TableId(String);

impl TableId {
    pub fn new(hex: impl Into<String>) -> Self {
        TableId(hex.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TableId {
    fn from(s: &str) -> Self {
        TableId(s.to_string())
    }
}

/// A rectangular, repaired table identified by its content hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalTable {
    pub table_id: TableId,
    pub cells: Vec<Vec<String>>,
    pub header_row_count: usize,
    pub caption: Option<String>,
    pub n_rows: usize,
    pub n_cols: usize,
}

impl CanonicalTable {
    /// Builds a table from a rectangular grid. Returns `None` for an empty or
    /// ragged grid.
    pub fn from_grid(
        cells: Vec<Vec<String>>,
        header_row_count: usize,
        caption: Option<String>,
    ) -> Option<Self> {
        let n_rows = cells.len();
        let n_cols = cells.first()?.len();
        if n_cols == 0 || cells.iter().any(|r| r.len() != n_cols) {
            return None;
        }
        let header_row_count = header_row_count.min(n_rows);
        Some(CanonicalTable {
            table_id: content_hash(&cells, header_row_count),
            cells,
            header_row_count,
            caption: caption.filter(|c| !c.trim().is_empty()),
            n_rows,
            n_cols,
        })
    }

    pub fn header_rows(&self) -> &[Vec<String>] {
        &self.cells[..self.header_row_count]
    }

    pub fn body_rows(&self) -> &[Vec<String>] {
        &self.cells[self.header_row_count..]
    }

    /// Checks the canonical invariants: rectangular, non-empty, id matches
    /// content, and no row or column made only of blank cells.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.n_rows == 0 || self.n_cols == 0 {
            return Err("empty grid".into());
        }
        if self.cells.len() != self.n_rows {
            return Err(format!("n_rows {} but {} rows", self.n_rows, self.cells.len()));
        }
        if let Some(r) = self.cells.iter().position(|r| r.len() != self.n_cols) {
            return Err(format!("row {r} is not {} wide", self.n_cols));
        }
        if self.header_row_count > self.n_rows {
            return Err("header_row_count exceeds n_rows".into());
        }
        if let Some(r) = self
            .cells
            .iter()
            .position(|r| r.iter().all(|c| c.trim().is_empty()))
        {
            return Err(format!("row {r} is empty"));
        }
        if let Some(c) =
            (0..self.n_cols).find(|&c| self.cells.iter().all(|r| r[c].trim().is_empty()))
        {
            return Err(format!("column {c} is empty"));
        }
        if content_hash(&self.cells, self.header_row_count) != self.table_id {
            return Err("table_id does not match content".into());
        }
        Ok(())
    }
}

/// Provenance of an augmented record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentationInfo {
    pub base_id: TableId,
    pub variant: Variant,
    pub seed: Option<u64>,
}

/// One line of the canonical (or augmented) corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub table_id: TableId,
    pub source_kinds: BTreeSet<SourceKind>,
    pub model_ids: BTreeSet<String>,
    pub caption: Option<String>,
    pub context_text: String,
    pub header_row_count: usize,
    pub n_rows: usize,
    pub n_cols: usize,
    pub cells: Vec<Vec<String>>,
    #[serde(flatten, default, skip_serializing_if = "Option::is_none")]
    pub augmentation: Option<AugmentationInfo>,
}

impl CorpusRecord {
    pub fn header_rows(&self) -> &[Vec<String>] {
        &self.cells[..self.header_row_count.min(self.cells.len())]
    }

    pub fn body_rows(&self) -> &[Vec<String>] {
        &self.cells[self.header_row_count.min(self.cells.len())..]
    }

    /// The corpus table this record derives from: `base_id` for augmented
    /// records, otherwise its own id.
    pub fn lineage_id(&self) -> &TableId {
        self.augmentation
            .as_ref()
            .map_or(&self.table_id, |a| &a.base_id)
    }

    pub fn canonical(&self) -> CanonicalTable {
        CanonicalTable {
            table_id: self.table_id.clone(),
            cells: self.cells.clone(),
            header_row_count: self.header_row_count,
            caption: self.caption.clone(),
            n_rows: self.n_rows,
            n_cols: self.n_cols,
        }
    }

    /// Values of column `col` below the header rows.
    pub fn body_column(&self, col: usize) -> impl Iterator<Item = &str> {
        self.body_rows().iter().map(move |r| r[col].as_str())
    }
}
