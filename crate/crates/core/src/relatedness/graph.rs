use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{filter_references, CitationFilter, CitationIndex, ModelIndex, Relation};
use crate::error::{Error, Result};
use crate::table::{CorpusRecord, TableId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphLabel {
    Paper,
    Model,
    Dataset,
    All,
}

impl GraphLabel {
    pub const ALL: [GraphLabel; 4] = [GraphLabel::Paper, GraphLabel::Model, GraphLabel::Dataset, GraphLabel::All];

    pub fn as_str(self) -> &'static str {
        match self {
            GraphLabel::Paper => "paper",
            GraphLabel::Model => "model",
            GraphLabel::Dataset => "dataset",
            GraphLabel::All => "all",
        }
    }
}

impl fmt::Display for GraphLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GraphLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GraphLabel::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| format!("unknown graph `{s}` (expected paper, model, dataset or all)"))
    }
}

/// Undirected, loop-free graph over corpus tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelatednessGraph {
    pub label: GraphLabel,
    pub filter: CitationFilter,
    nodes: BTreeSet<TableId>,
    adjacency: BTreeMap<TableId, BTreeSet<TableId>>,
}

impl RelatednessGraph {
    /// Self-loops are dropped; both endpoints must be nodes.
    pub fn new(
        label: GraphLabel,
        filter: CitationFilter,
        nodes: impl IntoIterator<Item = TableId>,
        edges: impl IntoIterator<Item = (TableId, TableId)>,
    ) -> Result<Self> {
        let mut g = RelatednessGraph {
            label,
            filter,
            nodes: nodes.into_iter().collect(),
            adjacency: BTreeMap::new(),
        };
        for (a, b) in edges {
            if a == b {
                continue;
            }
            for id in [&a, &b] {
                if !g.nodes.contains(id) {
                    return Err(Error::Data(format!("edge endpoint {id} is not a corpus table")));
                }
            }
            g.adjacency.entry(a.clone()).or_default().insert(b.clone());
            g.adjacency.entry(b).or_default().insert(a);
        }
        Ok(g)
    }

    pub fn n_tables(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &TableId> {
        self.nodes.iter()
    }

    /// Edges as `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (&TableId, &TableId)> {
        self.adjacency
            .iter()
            .flat_map(|(a, ns)| ns.range(a..).filter(move |b| *b != a).map(move |b| (a, b)))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.values().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, id: &TableId) -> impl Iterator<Item = &TableId> {
        self.adjacency.get(id).into_iter().flatten()
    }

    pub fn degree(&self, id: &TableId) -> usize {
        self.adjacency.get(id).map_or(0, BTreeSet::len)
    }

    pub fn is_related(&self, a: &TableId, b: &TableId) -> bool {
        self.adjacency.get(a).is_some_and(|n| n.contains(b))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableGraphs {
    pub paper: RelatednessGraph,
    pub model: RelatednessGraph,
    pub dataset: RelatednessGraph,
    /// Union of the other three.
    pub all: RelatednessGraph,
}

impl TableGraphs {
    pub fn get(&self, label: GraphLabel) -> &RelatednessGraph {
        match label {
            GraphLabel::Paper => &self.paper,
            GraphLabel::Model => &self.model,
            GraphLabel::Dataset => &self.dataset,
            GraphLabel::All => &self.all,
        }
    }

    pub fn filter(&self) -> CitationFilter {
        self.paper.filter
    }
}

/// Related model pairs `(a, b)` with `a <= b`. A pair `(m, m)` means tables of
/// `m` relate to each other.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ModelRelations {
    pub paper: BTreeSet<(String, String)>,
    pub model: BTreeSet<(String, String)>,
    pub dataset: BTreeSet<(String, String)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub models: usize,
    pub models_without_record: BTreeSet<String>,
    pub papers_referenced: usize,
    pub papers_missing: BTreeSet<String>,
}

fn ordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

fn all_pairs(members: &BTreeSet<&str>, out: &mut BTreeSet<(String, String)>) {
    for (i, a) in members.iter().enumerate() {
        for b in members.iter().skip(i) {
            out.insert(ordered(a, b));
        }
    }
}

/// Relatedness among `universe` computed through inverted indices over
/// references, base models and datasets instead of a pairwise scan.
pub fn model_relations(
    universe: &BTreeSet<String>,
    models: &ModelIndex,
    papers: &CitationIndex,
    filter: &CitationFilter,
) -> (ModelRelations, CoverageReport) {
    let mut rel = ModelRelations::default();
    let mut coverage = CoverageReport {
        models: universe.len(),
        ..Default::default()
    };

    let mut paper_models: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut referenced: BTreeSet<&str> = BTreeSet::new();
    for m in universe {
        if models.get(m).is_none() {
            coverage.models_without_record.insert(m.clone());
        }
        for p in models.papers(m) {
            referenced.insert(p);
            if papers.contains(p) {
                paper_models.entry(p).or_default().insert(m);
            } else {
                coverage.papers_missing.insert(p.clone());
            }
        }
    }
    coverage.papers_referenced = referenced.len();

    match filter.relation {
        Relation::Direct => {
            for (p, citing_models) in &paper_models {
                let refs = filter_references(&papers.get(p).expect("indexed").references, filter);
                for c in refs {
                    if c == *p {
                        continue;
                    }
                    let Some(cited_models) = paper_models.get(c) else { continue };
                    for a in citing_models {
                        for b in cited_models {
                            rel.paper.insert(ordered(a, b));
                        }
                    }
                }
            }
        }
        Relation::Overlap => {
            let mut by_cited: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
            for (p, ms) in &paper_models {
                for c in filter_references(&papers.get(p).expect("indexed").references, filter) {
                    by_cited.entry(c).or_default().extend(ms.iter().copied());
                }
            }
            for ms in by_cited.values() {
                all_pairs(ms, &mut rel.paper);
            }
        }
    }

    let mut by_base: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut by_dataset: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for m in universe {
        rel.model.insert(ordered(m, m));
        let Some(record) = models.get(m) else { continue };
        for other in record.linked_models.iter().chain(&record.base_models) {
            if universe.contains(other) {
                rel.model.insert(ordered(m, other));
            }
        }
        for b in &record.base_models {
            by_base.entry(b).or_default().insert(m);
        }
        for d in &record.datasets {
            by_dataset.entry(d).or_default().insert(m);
        }
    }
    for ms in by_base.values() {
        all_pairs(ms, &mut rel.model);
    }
    for ms in by_dataset.values() {
        all_pairs(ms, &mut rel.dataset);
    }
    (rel, coverage)
}

fn expand(
    pairs: &BTreeSet<(String, String)>,
    tables_of: &BTreeMap<&str, Vec<&TableId>>,
    out: &mut BTreeSet<(TableId, TableId)>,
) {
    for (a, b) in pairs {
        let (Some(ta), Some(tb)) = (tables_of.get(a.as_str()), tables_of.get(b.as_str())) else {
            continue;
        };
        for x in ta {
            for y in tb {
                if x != y {
                    out.insert(if x < y { ((*x).clone(), (*y).clone()) } else { ((*y).clone(), (*x).clone()) });
                }
            }
        }
    }
}

/// Projects model relatedness onto tables: two tables relate when any pair of
/// their models does. Augmented records are ignored.
pub fn build_table_graphs(
    corpus: &[CorpusRecord],
    models: &ModelIndex,
    papers: &CitationIndex,
    filter: &CitationFilter,
) -> Result<(TableGraphs, CoverageReport)> {
    let base: Vec<&CorpusRecord> = corpus.iter().filter(|r| r.augmentation.is_none()).collect();
    let mut tables_of: BTreeMap<&str, Vec<&TableId>> = BTreeMap::new();
    for r in &base {
        for m in &r.model_ids {
            tables_of.entry(m).or_default().push(&r.table_id);
        }
    }
    let universe: BTreeSet<String> = tables_of.keys().map(|m| m.to_string()).collect();
    let (rel, coverage) = model_relations(&universe, models, papers, filter);

    let mut edges: [BTreeSet<(TableId, TableId)>; 3] = Default::default();
    expand(&rel.paper, &tables_of, &mut edges[0]);
    expand(&rel.model, &tables_of, &mut edges[1]);
    expand(&rel.dataset, &tables_of, &mut edges[2]);
    let union: BTreeSet<(TableId, TableId)> = edges.iter().flatten().cloned().collect();

    let nodes: Vec<TableId> = base.iter().map(|r| r.table_id.clone()).collect();
    let [paper, model, dataset] = edges;
    let graph = |label, e| RelatednessGraph::new(label, *filter, nodes.iter().cloned(), e);
    let graphs = TableGraphs {
        paper: graph(GraphLabel::Paper, paper)?,
        model: graph(GraphLabel::Model, model)?,
        dataset: graph(GraphLabel::Dataset, dataset)?,
        all: graph(GraphLabel::All, union)?,
    };
    Ok((graphs, coverage))
}

/// `a<TAB>b<TAB>label` lines, `a < b`, sorted.
pub fn write_edges(graphs: &TableGraphs) -> String {
    let mut lines: Vec<String> = GraphLabel::ALL
        .iter()
        .flat_map(|&l| {
            graphs
                .get(l)
                .edges()
                .map(move |(a, b)| format!("{a}\t{b}\t{l}\n"))
        })
        .collect();
    lines.sort();
    lines.concat()
}

pub fn read_edges(text: &str, nodes: &[TableId], filter: CitationFilter) -> Result<TableGraphs> {
    let mut edges: BTreeMap<GraphLabel, Vec<(TableId, TableId)>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [a, b, label] = fields[..] else {
            return Err(Error::Data(format!("edge line {}: expected 3 fields", i + 1)));
        };
        let label: GraphLabel = label.parse().map_err(|e| Error::Data(format!("edge line {}: {e}", i + 1)))?;
        edges.entry(label).or_default().push((a.into(), b.into()));
    }
    let mut graph = |label| {
        RelatednessGraph::new(label, filter, nodes.iter().cloned(), edges.remove(&label).unwrap_or_default())
    };
    Ok(TableGraphs {
        paper: graph(GraphLabel::Paper)?,
        model: graph(GraphLabel::Model)?,
        dataset: graph(GraphLabel::Dataset)?,
        all: graph(GraphLabel::All)?,
    })
}
