//! Structural repair, strategic filtering and content-hash deduplication.

mod dedup;
mod filter;
mod footnotes;
mod repair;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::extract::{CorpusEntry, ExtractedTable};
use crate::table::CanonicalTable;

pub use dedup::{
    content_hash, dedup, frequency_histogram, frequency_tsv, CorpusTable, Dedup, Occurrence,
};
pub use filter::{passes_filter, strategic_filter, FilterProfile};
pub use footnotes::{merge_footnotes, parse_footnote_line, Footnote, FootnoteGrammar};
pub use repair::{normalize_alignment, prune_artifacts, stitch_groups, stitch_multipage};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityReport {
    pub input_tables: usize,
    pub padded_tables: usize,
    pub stitched_fragments: usize,
    pub pruned_away: usize,
    pub filtered_out: usize,
    pub output_tables: usize,
}

/// Pads, merges footnotes and prunes one table, then fixes its id.
pub fn canonicalize(table: ExtractedTable) -> Option<CanonicalTable> {
    let (table, _) = normalize_alignment(table);
    let notes = table.footnotes.clone();
    let table = prune_artifacts(merge_footnotes(table, &notes))?;
    CanonicalTable::from_grid(table.cells, table.header_row_count, table.caption)
}

/// Runs alignment, footnote merging, multi-page stitching, pruning and the
/// strategic filter over corpus entries. Output tables are not yet
/// deduplicated.
pub fn clean_entries(
    entries: Vec<CorpusEntry>,
    profile: &FilterProfile,
) -> (Vec<CorpusTable>, QualityReport) {
    let mut report = QualityReport {
        input_tables: entries.len(),
        ..Default::default()
    };

    let mut by_doc: BTreeMap<String, Vec<CorpusEntry>> = BTreeMap::new();
    for e in entries {
        by_doc.entry(e.table.origin.doc_id.clone()).or_default().push(e);
    }

    let mut out = Vec::new();
    for (_, mut doc_entries) in by_doc {
        doc_entries.sort_by_key(|e| e.table.origin.position);
        let prepared: Vec<ExtractedTable> = doc_entries
            .iter()
            .map(|e| {
                let (t, widths) = normalize_alignment(e.table.clone());
                if widths.iter().any(|&w| w != t.n_cols()) {
                    report.padded_tables += 1;
                }
                let notes = t.footnotes.clone();
                merge_footnotes(t, &notes)
            })
            .collect();

        for group in stitch_groups(&prepared) {
            report.stitched_fragments += group.len() - 1;
            let parts: Vec<&ExtractedTable> = group.iter().map(|&i| &prepared[i]).collect();
            let merged = repair::stitch_group(&parts);
            let head = &doc_entries[group[0]];
            let Some(pruned) = prune_artifacts(merged) else {
                report.pruned_away += 1;
                continue;
            };
            let Some(table) =
                CanonicalTable::from_grid(pruned.cells, pruned.header_row_count, pruned.caption)
            else {
                report.pruned_away += 1;
                continue;
            };
            let model_ids: BTreeSet<String> = group
                .iter()
                .flat_map(|&i| doc_entries[i].model_ids.iter().cloned())
                .collect();
            let corpus_table = CorpusTable {
                table,
                model_ids,
                occurrences: [Occurrence {
                    doc_id: head.table.origin.doc_id.clone(),
                    position: head.table.origin.position,
                    source_kind: head.table.source_kind,
                    context_text: head.context_text.clone(),
                }]
                .into(),
            };
            if passes_filter(&corpus_table, profile) {
                out.push(corpus_table);
            } else {
                report.filtered_out += 1;
            }
        }
    }
    report.output_tables = out.len();
    (out, report)
}
