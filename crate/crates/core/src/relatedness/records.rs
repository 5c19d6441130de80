use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Intent {
    Methodology,
    Result,
    Background,
    Other,
}

impl Intent {
    /// Methodology and result citations count under the intent filter.
    pub fn is_substantive(self) -> bool {
        matches!(self, Intent::Methodology | Intent::Result)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reference {
    pub cited_id: String,
    #[serde(default)]
    pub intents: BTreeSet<Intent>,
    #[serde(default)]
    pub is_influential: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub paper_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub references: Vec<Reference>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub model_id: String,
    #[serde(default)]
    pub papers: BTreeSet<String>,
    #[serde(default)]
    pub linked_models: BTreeSet<String>,
    #[serde(default)]
    pub base_models: BTreeSet<String>,
    #[serde(default)]
    pub datasets: BTreeSet<String>,
}

impl ModelRecord {
    pub fn new(model_id: impl Into<String>) -> Self {
        ModelRecord {
            model_id: model_id.into(),
            ..Default::default()
        }
    }

    pub fn merge(&mut self, other: &ModelRecord) {
        self.papers.extend(other.papers.iter().cloned());
        self.linked_models.extend(other.linked_models.iter().cloned());
        self.base_models.extend(other.base_models.iter().cloned());
        self.datasets.extend(other.datasets.iter().cloned());
    }
}

/// Papers keyed by id.
#[derive(Debug, Clone, Default)]
pub struct CitationIndex {
    papers: BTreeMap<String, PaperRecord>,
}

impl CitationIndex {
    pub fn new(records: impl IntoIterator<Item = PaperRecord>) -> Result<Self> {
        let mut papers = BTreeMap::new();
        for p in records {
            if p.references.iter().any(|r| r.cited_id.is_empty()) {
                return Err(Error::Data(format!("paper {} has an empty cited_id", p.paper_id)));
            }
            if let Some(prev) = papers.insert(p.paper_id.clone(), p) {
                return Err(Error::Data(format!("duplicate paper_id {}", prev.paper_id)));
            }
        }
        Ok(CitationIndex { papers })
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Ok(CitationIndex::default());
        }
        Self::new(crate::io::read_jsonl::<PaperRecord>(path)?)
    }

    pub fn get(&self, paper_id: &str) -> Option<&PaperRecord> {
        self.papers.get(paper_id)
    }

    pub fn contains(&self, paper_id: &str) -> bool {
        self.papers.contains_key(paper_id)
    }

    pub fn papers(&self) -> impl Iterator<Item = &PaperRecord> {
        self.papers.values()
    }

    pub fn len(&self) -> usize {
        self.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }
}

/// Model records keyed by id. Unknown ids behave as records with no links.
#[derive(Debug, Clone, Default)]
pub struct ModelIndex {
    models: BTreeMap<String, ModelRecord>,
}

impl ModelIndex {
    pub fn new(records: impl IntoIterator<Item = ModelRecord>) -> Self {
        let mut models: BTreeMap<String, ModelRecord> = BTreeMap::new();
        for r in records {
            match models.get_mut(&r.model_id) {
                Some(existing) => existing.merge(&r),
                None => {
                    models.insert(r.model_id.clone(), r);
                }
            }
        }
        ModelIndex { models }
    }

    pub fn get(&self, model_id: &str) -> Option<&ModelRecord> {
        self.models.get(model_id)
    }

    pub fn records(&self) -> impl Iterator<Item = &ModelRecord> {
        self.models.values()
    }

    pub(crate) fn papers(&self, model_id: &str) -> impl Iterator<Item = &String> {
        self.get(model_id).into_iter().flat_map(|m| m.papers.iter())
    }

    pub(crate) fn base_models(&self, model_id: &str) -> Option<&BTreeSet<String>> {
        self.get(model_id).map(|m| &m.base_models)
    }

    /// Replaces every record's base models with its transitive ancestors.
    pub fn with_ancestor_closure(&self) -> ModelIndex {
        let mut models = self.models.clone();
        for (id, record) in models.iter_mut() {
            let mut seen = BTreeSet::new();
            let mut stack: Vec<String> = self.models[id].base_models.iter().cloned().collect();
            while let Some(b) = stack.pop() {
                if b == *id || !seen.insert(b.clone()) {
                    continue;
                }
                if let Some(parent) = self.models.get(&b) {
                    stack.extend(parent.base_models.iter().cloned());
                }
            }
            record.base_models = seen;
        }
        ModelIndex { models }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_record_json_shape() {
        let line = r#"{"paper_id":"p1","title":"T","references":[{"cited_id":"p2","intents":["methodology","background"],"is_influential":true}]}"#;
        let p: PaperRecord = serde_json::from_str(line).unwrap();
        assert!(p.references[0].intents.contains(&Intent::Methodology));
        assert!(p.references[0].is_influential);
    }

    #[test]
    fn duplicate_papers_rejected() {
        let p = PaperRecord { paper_id: "a".into(), title: String::new(), references: vec![] };
        assert!(CitationIndex::new([p.clone(), p]).is_err());
    }

    #[test]
    fn model_records_merge_on_duplicate_id() {
        let mut a = ModelRecord::new("m");
        a.datasets.insert("squad".into());
        let mut b = ModelRecord::new("m");
        b.papers.insert("p".into());
        let idx = ModelIndex::new([a, b]);
        let m = idx.get("m").unwrap();
        assert!(m.datasets.contains("squad") && m.papers.contains("p"));
    }

    #[test]
    fn ancestor_closure_follows_chain_and_survives_cycles() {
        let mut a = ModelRecord::new("a");
        a.base_models.insert("b".into());
        let mut b = ModelRecord::new("b");
        b.base_models.insert("c".into());
        let mut c = ModelRecord::new("c");
        c.base_models.insert("a".into());
        let closed = ModelIndex::new([a, b, c]).with_ancestor_closure();
        let anc: Vec<_> = closed.get("a").unwrap().base_models.iter().cloned().collect();
        assert_eq!(anc, ["b", "c"]);
    }
}
