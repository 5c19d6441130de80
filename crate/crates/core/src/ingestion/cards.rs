use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{resolve_model_alias, AliasTable, LinkKind, LinkRef, SourceDocument, SourceKind};
use crate::relatedness::{CitationIndex, ModelRecord};

/// Model id encoded in a model-card file stem (`org__repo` → `org/repo`).
pub fn card_model_id(doc: &SourceDocument) -> String {
    doc.stem().replace("__", "/")
}

/// Splits a leading `---` YAML block from a Markdown body.
pub fn split_front_matter(body: &str) -> (Option<&str>, &str) {
    let Some(rest) = body
        .strip_prefix("---\n")
        .or_else(|| body.strip_prefix("---\r\n"))
    else {
        return (None, body);
    };
    let mut offset = 0;
    for line in rest.split_inclusive('\n') {
        if line.trim_end() == "---" {
            return (Some(&rest[..offset]), &rest[offset + line.len()..]);
        }
        offset += line.len();
    }
    (None, body)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CardMetadata {
    pub base_models: Vec<String>,
    pub datasets: Vec<String>,
}

/// Reads `base_model` and `datasets` from card front matter. Unparseable YAML
/// yields empty metadata.
pub fn card_metadata(body: &str) -> CardMetadata {
    let Some(yaml) = split_front_matter(body).0 else {
        return CardMetadata::default();
    };
    let value: serde_yaml::Value = match serde_yaml::from_str(yaml) {
        Ok(v) => v,
        Err(e) => {
            log::warn!("unparseable card front matter: {e}");
            return CardMetadata::default();
        }
    };
    let strings = |key: &str| -> Vec<String> {
        match value.get(key) {
            Some(serde_yaml::Value::String(s)) => vec![s.trim().to_string()],
            Some(serde_yaml::Value::Sequence(items)) => items
                .iter()
                .filter_map(|v| v.as_str().map(|s| s.trim().to_string()))
                .collect(),
            _ => Vec::new(),
        }
        .into_iter()
        .filter(|s| !s.is_empty())
        .collect()
    };
    CardMetadata {
        base_models: strings("base_model"),
        datasets: strings("datasets"),
    }
}

/// Paper titles by normalized title key, for resolving BibTeX titles.
#[derive(Debug, Clone, Default)]
pub struct TitleIndex {
    by_key: BTreeMap<String, String>,
}

impl TitleIndex {
    pub fn new(papers: &CitationIndex) -> Self {
        let by_key = papers
            .papers()
            .filter(|p| !p.title.trim().is_empty())
            .map(|p| (super::title_key(&p.title), p.paper_id.clone()))
            .collect();
        TitleIndex { by_key }
    }

    pub fn paper_for(&self, key: &str) -> Option<&str> {
        self.by_key.get(key).map(String::as_str)
    }
}

/// Paper ids referenced by a document's links, in first-appearance order.
/// BibTeX titles count only when they match a known paper title.
pub fn paper_refs_in_order(links: &[LinkRef], titles: &TitleIndex) -> Vec<String> {
    let mut seen = BTreeSet::new();
    links
        .iter()
        .filter_map(|l| match l.kind {
            LinkKind::ArxivPaper => l.canonical_id.clone(),
            LinkKind::BibtexTitle => l
                .canonical_id
                .as_deref()
                .and_then(|k| titles.paper_for(k))
                .map(str::to_string),
            _ => None,
        })
        .filter(|p| seen.insert(p.clone()))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelBuildReport {
    pub cards: usize,
    pub unresolved_aliases: BTreeSet<String>,
    pub unmatched_bibtex_titles: usize,
}

/// Builds one record per model card from its links and front matter, then
/// merges curated records (which may describe models without cards).
pub fn build_model_records(
    docs: &[SourceDocument],
    links: &BTreeMap<String, Vec<LinkRef>>,
    aliases: &AliasTable,
    papers: &CitationIndex,
    curated: &[ModelRecord],
) -> (Vec<ModelRecord>, ModelBuildReport) {
    let titles = TitleIndex::new(papers);
    let mut report = ModelBuildReport::default();
    let mut records: BTreeMap<String, ModelRecord> = BTreeMap::new();
    let resolve = |name: &str, report: &mut ModelBuildReport| {
        let r = resolve_model_alias(name, aliases);
        if !r.resolved {
            report.unresolved_aliases.insert(r.id.clone());
        }
        r.id
    };

    for doc in docs.iter().filter(|d| d.source_kind == SourceKind::ModelCard) {
        report.cards += 1;
        let model_id = resolve(&card_model_id(doc), &mut report);
        let doc_links = links.get(&doc.doc_id).map_or(&[][..], Vec::as_slice);
        let meta = card_metadata(&doc.body);
        let mut record = ModelRecord::new(model_id.clone());
        record.papers = paper_refs_in_order(doc_links, &titles).into_iter().collect();
        report.unmatched_bibtex_titles += doc_links
            .iter()
            .filter(|l| {
                l.kind == LinkKind::BibtexTitle
                    && l.canonical_id.as_deref().and_then(|k| titles.paper_for(k)).is_none()
            })
            .count();
        for link in doc_links {
            let Some(id) = link.canonical_id.as_deref() else { continue };
            match link.kind {
                LinkKind::HfModel => {
                    let id = resolve(id, &mut report);
                    if id != model_id {
                        record.linked_models.insert(id);
                    }
                }
                LinkKind::HfDataset => {
                    record.datasets.insert(resolve_model_alias(id, aliases).id);
                }
                _ => {}
            }
        }
        for base in &meta.base_models {
            let id = resolve(base, &mut report);
            if id != model_id {
                record.base_models.insert(id);
            }
        }
        for ds in &meta.datasets {
            record.datasets.insert(resolve_model_alias(ds, aliases).id);
        }
        records
            .entry(model_id)
            .and_modify(|r| r.merge(&record))
            .or_insert(record);
    }
    for c in curated {
        records
            .entry(c.model_id.clone())
            .and_modify(|r| r.merge(c))
            .or_insert_with(|| c.clone());
    }
    (records.into_values().collect(), report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingestion::extract_links;
    use crate::relatedness::PaperRecord;

    fn card(doc_id: &str, body: &str) -> SourceDocument {
        SourceDocument {
            doc_id: doc_id.into(),
            source_kind: SourceKind::ModelCard,
            uri: String::new(),
            body: body.into(),
        }
    }

    #[test]
    fn front_matter_split() {
        let (fm, rest) = split_front_matter("---\na: 1\n---\nbody\n");
        assert_eq!(fm, Some("a: 1\n"));
        assert_eq!(rest, "body\n");
        assert_eq!(split_front_matter("no fm").0, None);
        assert_eq!(split_front_matter("---\nunterminated").0, None);
    }

    #[test]
    fn metadata_accepts_scalar_or_list() {
        let m = card_metadata("---\nbase_model: gpt2\ndatasets:\n  - squad\n  - glue\n---\n");
        assert_eq!(m.base_models, ["gpt2"]);
        assert_eq!(m.datasets, ["squad", "glue"]);
        assert_eq!(card_metadata("---\n: : :\n---\n"), CardMetadata::default());
    }

    #[test]
    fn records_from_cards() {
        let body = "---\nbase_model: gpt2\ndatasets: [squad]\n---\n\
            Paper: https://arxiv.org/abs/2001.00001 and template https://arxiv.org/abs/1910.09700\n\
            Sibling: https://huggingface.co/acme/other\n\
            Data: https://huggingface.co/datasets/org/extra\n\
            @article{k, title={Known Title}}\n@article{j, title={Unknown Title}}\n";
        let doc = card("acme__tuned.md", body);
        let links = BTreeMap::from([(doc.doc_id.clone(), extract_links(body).links)]);
        let mut aliases = AliasTable::default();
        aliases.insert("gpt2", "openai-community/gpt2", 10);
        let papers = CitationIndex::new([PaperRecord {
            paper_id: "2002.00002".into(),
            title: "Known title".into(),
            references: vec![],
        }])
        .unwrap();
        let (records, report) = build_model_records(&[doc], &links, &aliases, &papers, &[]);
        let r = &records[0];
        assert_eq!(r.model_id, "acme/tuned");
        assert_eq!(r.papers.iter().collect::<Vec<_>>(), ["2001.00001", "2002.00002"]);
        assert!(r.base_models.contains("openai-community/gpt2"));
        assert!(r.linked_models.contains("acme/other"));
        assert_eq!(r.datasets.iter().collect::<Vec<_>>(), ["org/extra", "squad"]);
        assert_eq!(report.unmatched_bibtex_titles, 1);
        assert!(report.unresolved_aliases.is_empty());
    }

    #[test]
    fn curated_records_merge() {
        let mut curated = ModelRecord::new("acme/tuned");
        curated.datasets.insert("glue".into());
        let base_only = ModelRecord::new("google/base");
        let (records, _) = build_model_records(
            &[card("acme__tuned.md", "no links")],
            &BTreeMap::new(),
            &AliasTable::default(),
            &CitationIndex::default(),
            &[curated, base_only],
        );
        assert_eq!(records.len(), 2);
        assert!(records[0].datasets.contains("glue"));
    }
}
