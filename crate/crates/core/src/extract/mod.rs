//! Table parsing per source format and the per-card corpus walk.

mod html;
mod markdown;
mod text;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ingestion::{
    card_model_id, paper_file_stem, paper_refs_in_order, resolve_model_alias, split_front_matter,
    AliasTable, LinkKind, LinkRef, SourceDocument, SourceKind, TitleIndex,
};
use crate::quality::{Footnote, FootnoteGrammar};

pub use html::{extract_html_tables, HtmlTables};
pub use markdown::{
    extract_markdown_tables, extract_with_grammar, is_delimiter_row, markdown_prose,
    render_markdown, split_row,
};
pub(crate) use markdown::is_alignment_cell;
pub use text::{
    recover_text_table, split_text_blocks, AlignedColumnRecoverer, Recovery, RecoveryError,
    TextTableRecoverer,
};

/// A table as parsed from one format, before it is tied to a document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedTable {
    pub cells: Vec<Vec<String>>,
    pub header_row_count: usize,
    pub caption: Option<String>,
    pub footnotes: Vec<Footnote>,
    /// Format-specific context (caption plus in-text mentions for HTML).
    pub context: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TableOrigin {
    pub doc_id: String,
    pub position: usize,
}

/// A possibly ragged table with its document of origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractedTable {
    pub cells: Vec<Vec<String>>,
    pub header_row_count: usize,
    pub caption: Option<String>,
    #[serde(default)]
    pub footnotes: Vec<Footnote>,
    pub origin: TableOrigin,
    pub source_kind: SourceKind,
}

impl ExtractedTable {
    pub fn n_cols(&self) -> usize {
        self.cells.iter().map(Vec::len).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub table: ExtractedTable,
    pub model_ids: BTreeSet<String>,
    pub context_text: String,
}

/// Tables of one document with their context text.
#[derive(Debug, Clone, Default)]
pub struct DocumentTables {
    pub tables: Vec<(ExtractedTable, String)>,
    pub html_empty_skipped: usize,
    pub text_rejected: usize,
    pub text_failed: usize,
}

/// Parses every table in `doc` according to its source kind.
pub fn extract_document(
    doc: &SourceDocument,
    grammar: &FootnoteGrammar,
    recoverer: &dyn TextTableRecoverer,
) -> DocumentTables {
    let mut out = DocumentTables::default();
    let mut parsed: Vec<(ParsedTable, String)> = Vec::new();
    match doc.source_kind {
        kind if kind.is_markdown() => {
            let body = split_front_matter(&doc.body).1;
            let prose = markdown_prose(body);
            parsed = extract_with_grammar(body, grammar)
                .into_iter()
                .map(|t| (t, prose.clone()))
                .collect();
        }
        SourceKind::ArxivHtml => {
            let html = extract_html_tables(&doc.body);
            out.html_empty_skipped = html.empty_skipped;
            parsed = html
                .tables
                .into_iter()
                .map(|mut t| {
                    let ctx = t.context.take().unwrap_or_default();
                    (t, ctx)
                })
                .collect();
        }
        SourceKind::S2Text => {
            for (caption, raw) in split_text_blocks(&doc.body) {
                match recover_text_table(&raw, recoverer) {
                    Recovery::Table(mut t) => {
                        t.caption = caption;
                        let ctx = t.caption.clone().unwrap_or_default();
                        parsed.push((t, ctx));
                    }
                    Recovery::NotATable => out.text_rejected += 1,
                    Recovery::Failed(e) => {
                        log::warn!("{}: {e}", doc.doc_id);
                        out.text_failed += 1;
                    }
                }
            }
        }
        _ => {}
    }
    out.tables = parsed
        .into_iter()
        .filter(|(t, _)| !t.cells.is_empty() && t.cells.iter().any(|r| !r.is_empty()))
        .enumerate()
        .map(|(position, (t, ctx))| {
            let table = ExtractedTable {
                cells: t.cells,
                header_row_count: t.header_row_count,
                caption: t.caption,
                footnotes: t.footnotes,
                origin: TableOrigin {
                    doc_id: doc.doc_id.clone(),
                    position,
                },
                source_kind: doc.source_kind,
            };
            (table, ctx)
        })
        .collect();
    out
}

/// Outbound links per doc_id.
pub type LinkGraph = BTreeMap<String, Vec<LinkRef>>;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub cards: usize,
    pub entries: usize,
    /// Referenced papers or repositories with no document in the snapshot.
    pub missing_documents: BTreeSet<String>,
    pub html_empty_skipped: usize,
    pub text_rejected: usize,
    pub text_failed: usize,
}

/// Walks every model card: its own tables, then tables of each referenced
/// paper (HTML, then recovered text), then tables of each linked GitHub
/// README. Every table is linked to the card's model; a table reached from
/// several cards appears once with all their models.
pub fn build_corpus(
    docs: &[SourceDocument],
    links: &LinkGraph,
    aliases: &AliasTable,
    titles: &TitleIndex,
    grammar: &FootnoteGrammar,
    recoverer: &dyn TextTableRecoverer,
) -> (Vec<CorpusEntry>, CorpusReport) {
    let by_id: HashMap<&str, &SourceDocument> =
        docs.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    let extracted: HashMap<&str, DocumentTables> = docs
        .par_iter()
        .filter(|d| d.source_kind != SourceKind::DatasetCard)
        .map(|d| (d.doc_id.as_str(), extract_document(d, grammar, recoverer)))
        .collect();

    let mut report = CorpusReport::default();
    for t in extracted.values() {
        report.html_empty_skipped += t.html_empty_skipped;
        report.text_rejected += t.text_rejected;
        report.text_failed += t.text_failed;
    }

    let mut entries: Vec<CorpusEntry> = Vec::new();
    let mut slot: HashMap<TableOrigin, usize> = HashMap::new();
    let mut add_doc = |doc_id: &str, model_id: &str, entries: &mut Vec<CorpusEntry>| {
        let Some(doc_tables) = extracted.get(doc_id) else { return false };
        for (table, ctx) in &doc_tables.tables {
            match slot.get(&table.origin) {
                Some(&i) => {
                    entries[i].model_ids.insert(model_id.to_string());
                }
                None => {
                    slot.insert(table.origin.clone(), entries.len());
                    entries.push(CorpusEntry {
                        table: table.clone(),
                        model_ids: BTreeSet::from([model_id.to_string()]),
                        context_text: ctx.clone(),
                    });
                }
            }
        }
        true
    };

    for card in docs.iter().filter(|d| d.source_kind == SourceKind::ModelCard) {
        report.cards += 1;
        let model_id = resolve_model_alias(&card_model_id(card), aliases).id;
        let card_links = links.get(&card.doc_id).map_or(&[][..], Vec::as_slice);
        add_doc(&card.doc_id, &model_id, &mut entries);

        for paper in paper_refs_in_order(card_links, titles) {
            let stem = paper_file_stem(&paper);
            let html = format!("{stem}.html");
            let txt = format!("{stem}.txt");
            let found_html = by_id.contains_key(html.as_str()) && add_doc(&html, &model_id, &mut entries);
            let found_txt = by_id.contains_key(txt.as_str()) && add_doc(&txt, &model_id, &mut entries);
            if !found_html && !found_txt {
                report.missing_documents.insert(format!("paper:{paper}"));
            }
        }

        let mut seen: BTreeSet<&str> = BTreeSet::new();
        for link in card_links.iter().filter(|l| l.kind == LinkKind::GithubRepo) {
            let Some(repo) = link.canonical_id.as_deref() else { continue };
            if !seen.insert(repo) {
                continue;
            }
            let doc_id = format!("{}.md", repo.replace('/', "__"));
            let is_readme = by_id
                .get(doc_id.as_str())
                .is_some_and(|d| d.source_kind == SourceKind::GithubReadme);
            if !is_readme || !add_doc(&doc_id, &model_id, &mut entries) {
                report.missing_documents.insert(format!("github:{repo}"));
            }
        }
    }
    report.entries = entries.len();
    (entries, report)
}
