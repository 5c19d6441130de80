//! Semantic augmentations (transpose, header-to-cell) and seeded structural
//! perturbations (column/row shuffle, cell drop).

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::quality::content_hash;
use crate::table::{AugmentationInfo, CanonicalTable, CorpusRecord, TableId};

/// Identifier of the generator behind every stochastic variant. Persisted next
/// to augmented outputs.
pub const RNG_ALGORITHM: &str = "chacha8;seed=sha256(base_id|variant|seed_le)[..32]";

/// Separator between a fused header and its cell value.
pub const HEADER_SEPARATOR: &str = ": ";

pub const DEFAULT_DROP_RATE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Transpose,
    HeaderToCell,
    ShuffleCol,
    ShuffleRow,
    DropCell,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Transpose,
        Variant::HeaderToCell,
        Variant::ShuffleCol,
        Variant::ShuffleRow,
        Variant::DropCell,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Transpose => "transpose",
            Variant::HeaderToCell => "header_to_cell",
            Variant::ShuffleCol => "shuffle_col",
            Variant::ShuffleRow => "shuffle_row",
            Variant::DropCell => "drop_cell",
        }
    }

    /// Spelling used on the command line.
    pub fn flag_name(self) -> &'static str {
        match self {
            Variant::Transpose => "transpose",
            Variant::HeaderToCell => "header2cell",
            Variant::ShuffleCol => "shufflecol",
            Variant::ShuffleRow => "shufflerow",
            Variant::DropCell => "dropcell",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, Variant::ShuffleCol | Variant::ShuffleRow | Variant::DropCell)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s || v.flag_name() == s)
            .ok_or_else(|| format!("unknown variant `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AugmentError {
    #[error("table {0} has no header rows to fuse")]
    NoHeader(TableId),
    #[error("drop rate {0} is outside [0, 1)")]
    InvalidRate(f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentedTable {
    pub base_id: TableId,
    pub variant: Variant,
    pub seed: Option<u64>,
    pub cells: Vec<Vec<String>>,
    pub header_row_count: usize,
}

impl AugmentedTable {
    /// The augmented table as a corpus record inheriting the base record's
    /// linkage and context.
    pub fn to_record(&self, base: &CorpusRecord) -> CorpusRecord {
        CorpusRecord {
            table_id: content_hash(&self.cells, self.header_row_count),
            source_kinds: base.source_kinds.clone(),
            model_ids: base.model_ids.clone(),
            caption: base.caption.clone(),
            context_text: base.context_text.clone(),
            header_row_count: self.header_row_count,
            n_rows: self.cells.len(),
            n_cols: self.cells.first().map_or(0, Vec::len),
            cells: self.cells.clone(),
            augmentation: Some(AugmentationInfo {
                base_id: self.base_id.clone(),
                variant: self.variant,
                seed: self.seed,
            }),
        }
    }
}

fn rng_for(base_id: &TableId, variant: Variant, seed: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(base_id.as_str().as_bytes());
    h.update([0]);
    h.update(variant.as_str().as_bytes());
    h.update([0]);
    h.update(seed.to_le_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

fn augmented(t: &CanonicalTable, variant: Variant, seed: Option<u64>, cells: Vec<Vec<String>>, header_row_count: usize) -> AugmentedTable {
    AugmentedTable {
        base_id: t.table_id.clone(),
        variant,
        seed,
        cells,
        header_row_count,
    }
}

/// Pure grid transpose. The output has one header row (the former first
/// column) when the input had any header.
pub fn transpose(t: &CanonicalTable) -> AugmentedTable {
    let cells: Vec<Vec<String>> = (0..t.n_cols)
        .map(|c| t.cells.iter().map(|r| r[c].clone()).collect())
        .collect();
    let header = usize::from(t.header_row_count > 0);
    augmented(t, Variant::Transpose, None, cells, header)
}

/// Column header text: the column's non-empty header cells joined by a space.
pub fn column_header(t: &CanonicalTable, col: usize) -> String {
    t.header_rows()
        .iter()
        .map(|r| r[col].trim())
        .filter(|h| !h.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Prefixes each body cell with `<header>: `. Header rows are kept.
pub fn header_to_cell(t: &CanonicalTable) -> Result<AugmentedTable, AugmentError> {
    if t.header_row_count == 0 {
        return Err(AugmentError::NoHeader(t.table_id.clone()));
    }
    let headers: Vec<String> = (0..t.n_cols).map(|c| column_header(t, c)).collect();
    let mut cells = t.cells.clone();
    for row in &mut cells[t.header_row_count..] {
        for (cell, h) in row.iter_mut().zip(&headers) {
            *cell = format!("{h}{HEADER_SEPARATOR}{cell}");
        }
    }
    Ok(augmented(t, Variant::HeaderToCell, None, cells, t.header_row_count))
}

/// Applies a seeded column permutation to every row, headers included.
pub fn shuffle_columns(t: &CanonicalTable, seed: u64) -> AugmentedTable {
    let mut order: Vec<usize> = (0..t.n_cols).collect();
    order.shuffle(&mut rng_for(&t.table_id, Variant::ShuffleCol, seed));
    let cells = t
        .cells
        .iter()
        .map(|r| order.iter().map(|&c| r[c].clone()).collect())
        .collect();
    augmented(t, Variant::ShuffleCol, Some(seed), cells, t.header_row_count)
}

/// Applies a seeded permutation to the body rows; header rows stay first.
pub fn shuffle_rows(t: &CanonicalTable, seed: u64) -> AugmentedTable {
    let mut cells = t.cells.clone();
    cells[t.header_row_count..].shuffle(&mut rng_for(&t.table_id, Variant::ShuffleRow, seed));
    augmented(t, Variant::ShuffleRow, Some(seed), cells, t.header_row_count)
}

/// Blanks each body cell independently with probability `rate`.
pub fn drop_cells(t: &CanonicalTable, rate: f64, seed: u64) -> Result<AugmentedTable, AugmentError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(AugmentError::InvalidRate(rate));
    }
    let mut rng = rng_for(&t.table_id, Variant::DropCell, seed);
    let mut cells = t.cells.clone();
    for cell in cells[t.header_row_count..].iter_mut().flatten() {
        if rng.gen::<f64>() < rate {
            cell.clear();
        }
    }
    Ok(augmented(t, Variant::DropCell, Some(seed), cells, t.header_row_count))
}

/// Dispatches on `variant`; `seed` is ignored by deterministic variants.
pub fn augment(t: &CanonicalTable, variant: Variant, seed: u64, drop_rate: f64) -> Result<AugmentedTable, AugmentError> {
    match variant {
        Variant::Transpose => Ok(transpose(t)),
        Variant::HeaderToCell => header_to_cell(t),
        Variant::ShuffleCol => Ok(shuffle_columns(t, seed)),
        Variant::ShuffleRow => Ok(shuffle_rows(t, seed)),
        Variant::DropCell => drop_cells(t, drop_rate, seed),
    }
}
