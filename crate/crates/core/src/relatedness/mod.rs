//! Paper-, model- and dataset-level relatedness between models and its
//! projection onto tables.

mod graph;
mod records;
mod stats;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use graph::{
    build_table_graphs, model_relations, read_edges, write_edges, CoverageReport, GraphLabel,
    ModelRelations, RelatednessGraph, TableGraphs,
};
pub use records::{CitationIndex, Intent, ModelIndex, ModelRecord, PaperRecord, Reference};
pub use stats::{
    density_table, graph_density, positive_count_histogram, per_query_positive_counts, DensityRow,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    /// One paper cites the other.
    #[default]
    Direct,
    /// The reference lists share a cited work.
    Overlap,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Direct => "direct",
            Relation::Overlap => "overlap",
        }
    }
}

impl FromStr for Relation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct" => Ok(Relation::Direct),
            "overlap" => Ok(Relation::Overlap),
            _ => Err(format!("unknown relation `{s}` (expected direct or overlap)")),
        }
    }
}

/// Which citations count toward paper relatedness.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CitationFilter {
    pub relation: Relation,
    /// Keep only methodology or result citations.
    pub require_intent: bool,
    pub require_influential: bool,
}

impl CitationFilter {
    pub fn new(relation: Relation, require_intent: bool, require_influential: bool) -> Self {
        CitationFilter {
            relation,
            require_intent,
            require_influential,
        }
    }

    /// The eight citation graphs: two relations by four filter combinations.
    pub fn all_eight() -> Vec<CitationFilter> {
        let mut out = Vec::with_capacity(8);
        for relation in [Relation::Direct, Relation::Overlap] {
            for (i, f) in [(false, false), (true, false), (false, true), (true, true)] {
                out.push(CitationFilter::new(relation, i, f));
            }
        }
        out
    }

    /// File-name friendly name, e.g. `overlap_intent_influential`.
    pub fn descriptor(&self) -> String {
        let mut s = self.relation.as_str().to_string();
        if self.require_intent {
            s.push_str("_intent");
        }
        if self.require_influential {
            s.push_str("_influential");
        }
        s
    }

    pub fn keeps(&self, r: &Reference) -> bool {
        (!self.require_intent || r.intents.iter().any(|i| i.is_substantive()))
            && (!self.require_influential || r.is_influential)
    }
}

impl fmt::Display for CitationFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.descriptor())
    }
}

impl FromStr for CitationFilter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split('_');
        let relation = parts.next().unwrap_or_default().parse()?;
        let mut filter = CitationFilter::new(relation, false, false);
        for p in parts {
            match p {
                "intent" => filter.require_intent = true,
                "influential" => filter.require_influential = true,
                _ => return Err(format!("unknown citation filter `{s}`")),
            }
        }
        Ok(filter)
    }
}

/// Cited ids of `refs` passing `filter`.
pub fn filter_references<'a>(refs: &'a [Reference], filter: &CitationFilter) -> BTreeSet<&'a str> {
    refs.iter()
        .filter(|r| filter.keeps(r))
        .map(|r| r.cited_id.as_str())
        .collect()
}

/// Papers absent from the index are never related. Under `direct` a paper
/// is not related to itself.
pub fn papers_related(p_a: &str, p_b: &str, papers: &CitationIndex, filter: &CitationFilter) -> bool {
    let (Some(a), Some(b)) = (papers.get(p_a), papers.get(p_b)) else {
        return false;
    };
    let refs_a = filter_references(&a.references, filter);
    let refs_b = filter_references(&b.references, filter);
    match filter.relation {
        Relation::Direct => p_a != p_b && (refs_a.contains(p_b) || refs_b.contains(p_a)),
        Relation::Overlap => !refs_a.is_disjoint(&refs_b),
    }
}

pub fn models_related_paper(
    m_a: &str,
    m_b: &str,
    models: &ModelIndex,
    papers: &CitationIndex,
    filter: &CitationFilter,
) -> bool {
    models.papers(m_a).any(|p_a| {
        models
            .papers(m_b)
            .any(|p_b| papers_related(p_a, p_b, papers, filter))
    })
}

/// Explicit link, declared base model in either direction, or a shared base
/// model. A model is related to itself.
pub fn models_related_card(m_a: &str, m_b: &str, models: &ModelIndex) -> bool {
    if m_a == m_b {
        return true;
    }
    let empty = BTreeSet::new();
    let (a, b) = (models.get(m_a), models.get(m_b));
    let links = |m: Option<&ModelRecord>, other: &str| {
        m.is_some_and(|r| r.linked_models.contains(other) || r.base_models.contains(other))
    };
    let base_a = models.base_models(m_a).unwrap_or(&empty);
    let base_b = models.base_models(m_b).unwrap_or(&empty);
    links(a, m_b) || links(b, m_a) || !base_a.is_disjoint(base_b)
}

pub fn models_related_dataset(m_a: &str, m_b: &str, models: &ModelIndex) -> bool {
    match (models.get(m_a), models.get(m_b)) {
        (Some(a), Some(b)) => !a.datasets.is_disjoint(&b.datasets),
        _ => false,
    }
}
