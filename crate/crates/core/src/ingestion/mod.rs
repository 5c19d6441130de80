//! Snapshot loading, link extraction and model identifier resolution.
//!
//! A snapshot is a plain directory:
//!
//! ```text
//! <root>/model_cards/*.md     model cards, file stem = model id with `/` as `__`
//! <root>/dataset_cards/*.md
//! <root>/github/*.md          READMEs, file stem = owner__repo
//! <root>/arxiv/*.html         paper HTML, file stem = arXiv id
//! <root>/s2/*.txt             raw table text blocks, file stem = paper id
//! <root>/meta/aliases.tsv     shorthand, canonical_id, download_count
//! <root>/meta/papers.jsonl    paper records with typed references
//! <root>/meta/models.jsonl    optional hand-curated model records
//! ```

mod aliases;
mod cards;
mod links;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use aliases::{resolve_model_alias, AliasTable, ResolvedId};
pub use cards::{
    build_model_records, card_metadata, card_model_id, paper_refs_in_order, split_front_matter,
    CardMetadata, ModelBuildReport, TitleIndex,
};
pub use links::{classify_link, extract_links, title_key, ExtractedLinks, LinkKind, LinkRef, PLACEHOLDER_ARXIV_ID};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    ModelCard,
    DatasetCard,
    GithubReadme,
    ArxivHtml,
    S2Text,
}

impl SourceKind {
    pub const ALL: [SourceKind; 5] = [
        SourceKind::ModelCard,
        SourceKind::DatasetCard,
        SourceKind::GithubReadme,
        SourceKind::ArxivHtml,
        SourceKind::S2Text,
    ];

    /// Snapshot subdirectory and file extension holding this kind.
    pub fn layout(self) -> (&'static str, &'static str) {
        match self {
            SourceKind::ModelCard => ("model_cards", "md"),
            SourceKind::DatasetCard => ("dataset_cards", "md"),
            SourceKind::GithubReadme => ("github", "md"),
            SourceKind::ArxivHtml => ("arxiv", "html"),
            SourceKind::S2Text => ("s2", "txt"),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::ModelCard => "model_card",
            SourceKind::DatasetCard => "dataset_card",
            SourceKind::GithubReadme => "github_readme",
            SourceKind::ArxivHtml => "arxiv_html",
            SourceKind::S2Text => "s2_text",
        }
    }

    /// Short code used in source-ablation subset names (`M+G+A`).
    pub fn code(self) -> &'static str {
        match self {
            SourceKind::ModelCard => "M",
            SourceKind::DatasetCard => "D",
            SourceKind::GithubReadme => "G",
            SourceKind::ArxivHtml => "A",
            SourceKind::S2Text => "SS",
        }
    }

    /// Whether tables in this kind of document are Markdown.
    pub fn is_markdown(self) -> bool {
        matches!(
            self,
            SourceKind::ModelCard | SourceKind::DatasetCard | SourceKind::GithubReadme
        )
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SourceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SourceKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s || k.code().eq_ignore_ascii_case(s) || k.layout().0 == s)
            .or(match s {
                "github" => Some(SourceKind::GithubReadme),
                "arxiv" => Some(SourceKind::ArxivHtml),
                "s2" => Some(SourceKind::S2Text),
                _ => None,
            })
            .ok_or_else(|| Error::Config(format!("unknown source kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceDocument {
    pub doc_id: String,
    pub source_kind: SourceKind,
    pub uri: String,
    pub body: String,
}

impl SourceDocument {
    pub fn stem(&self) -> &str {
        let ext = self.source_kind.layout().1;
        self.doc_id
            .strip_suffix(ext)
            .and_then(|s| s.strip_suffix('.'))
            .unwrap_or(&self.doc_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    Empty,
    Unreadable,
}

/// Documents loaded from a snapshot plus the files that were skipped.
#[derive(Debug, Default)]
pub struct LoadedDocuments {
    pub documents: Vec<SourceDocument>,
    pub skipped: Vec<(PathBuf, SkipReason)>,
}

/// The file stem used for a paper id (old-style arXiv ids contain `/`).
pub fn paper_file_stem(paper_id: &str) -> String {
    paper_id.replace('/', "__")
}

fn document_uri(kind: SourceKind, stem: &str) -> String {
    let slashed = stem.replace("__", "/");
    match kind {
        SourceKind::ModelCard => format!("https://huggingface.co/{slashed}"),
        SourceKind::DatasetCard => format!("https://huggingface.co/datasets/{slashed}"),
        SourceKind::GithubReadme => format!("https://github.com/{slashed}"),
        SourceKind::ArxivHtml => format!("https://arxiv.org/abs/{slashed}"),
        SourceKind::S2Text => format!("s2://{slashed}"),
    }
}

/// Loads every document of a snapshot in lexicographic relative-path order.
///
/// Zero-byte and unreadable (including non-UTF-8) files are skipped and
/// reported. A doc_id appearing twice is a data error.
pub fn load_snapshot(root: &Path) -> Result<LoadedDocuments> {
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "snapshot directory not found"),
        ));
    }
    let mut candidates: Vec<(String, PathBuf, SourceKind)> = Vec::new();
    for kind in SourceKind::ALL {
        let (dir, ext) = kind.layout();
        let dir_path = root.join(dir);
        if !dir_path.is_dir() {
            continue;
        }
        let entries = fs::read_dir(&dir_path).map_err(|e| Error::io(&dir_path, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&dir_path, e))?;
            let path = entry.path();
            if !path.is_file() || path.extension().and_then(|e| e.to_str()) != Some(ext) {
                continue;
            }
            let name = entry.file_name().to_string_lossy().into_owned();
            candidates.push((format!("{dir}/{name}"), path, kind));
        }
    }
    candidates.sort_by(|a, b| a.0.cmp(&b.0));

    let mut loaded = LoadedDocuments::default();
    let mut seen = std::collections::HashSet::new();
    for (_, path, kind) in candidates {
        let body = match fs::read(&path).map(String::from_utf8) {
            Ok(Ok(body)) => body,
            Ok(Err(_)) | Err(_) => {
                log::warn!("skipping unreadable file {}", path.display());
                loaded.skipped.push((path, SkipReason::Unreadable));
                continue;
            }
        };
        if body.trim().is_empty() {
            log::warn!("skipping empty file {}", path.display());
            loaded.skipped.push((path, SkipReason::Empty));
            continue;
        }
        let doc_id = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        if !seen.insert(doc_id.clone()) {
            return Err(Error::Data(format!("duplicate doc_id `{doc_id}` in snapshot")));
        }
        let (_, ext) = kind.layout();
        let stem = doc_id.strip_suffix(&format!(".{ext}")).unwrap_or(&doc_id);
        loaded.documents.push(SourceDocument {
            uri: document_uri(kind, stem),
            doc_id,
            source_kind: kind,
            body,
        });
    }
    Ok(loaded)
}
