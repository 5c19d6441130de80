//! Precision@k against relatedness graphs, the augmented any-of-three
//! protocol, per-source ablations and report files.

mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::Variant;
use crate::ingestion::SourceKind;
use crate::relatedness::{GraphLabel, RelatednessGraph, TableGraphs};
use crate::search::{Method, SearchIndex};
use crate::table::{CorpusRecord, TableId};

pub use report::{emit_report, render_jsonl, render_text, EvalReport, EvalRow, RunMetadata};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryPolicy {
    AllTables,
    /// Skip queries with no related table; they cannot succeed.
    #[default]
    TablesWithPositives,
}

impl QueryPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            QueryPolicy::AllTables => "all_tables",
            QueryPolicy::TablesWithPositives => "tables_with_positives",
        }
    }
}

impl FromStr for QueryPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all_tables" => Ok(QueryPolicy::AllTables),
            "tables_with_positives" => Ok(QueryPolicy::TablesWithPositives),
            _ => Err(format!("unknown query policy `{s}`")),
        }
    }
}

/// A named set of source kinds, written as codes joined by `+` (`M+G+A`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceSubset {
    pub name: String,
    pub kinds: BTreeSet<SourceKind>,
}

impl SourceSubset {
    /// Every source kind; named `all`.
    pub fn all() -> Self {
        SourceSubset {
            name: "all".into(),
            kinds: SourceKind::ALL.into_iter().collect(),
        }
    }

    /// A table belongs to the subset when any of its sources does.
    pub fn contains(&self, r: &CorpusRecord) -> bool {
        !r.source_kinds.is_disjoint(&self.kinds)
    }
}

impl fmt::Display for SourceSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl FromStr for SourceSubset {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        if s == "all" {
            return Ok(SourceSubset::all());
        }
        let kinds = s
            .split('+')
            .map(|p| p.trim().parse::<SourceKind>())
            .collect::<crate::Result<BTreeSet<_>>>()?;
        let name = kinds.iter().map(|k| k.code()).collect::<Vec<_>>().join("+");
        Ok(SourceSubset { name, kinds })
    }
}

/// The table-resource subsets compared in the source ablation.
pub fn standard_subsets() -> Vec<SourceSubset> {
    ["M", "G", "A", "SS", "M+G", "M+G+A", "M+G+A+SS"]
        .iter()
        .map(|s| s.parse().expect("valid subset"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub methods: Vec<Method>,
    pub graphs: Vec<GraphLabel>,
    pub k: usize,
    pub policy: QueryPolicy,
    /// Run the base, transposed and header-fused query and count a success
    /// if any run hits.
    pub augmented: bool,
    /// Include union search in transposed runs.
    pub union_transpose: bool,
    pub subsets: Vec<SourceSubset>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            methods: Method::ALL.to_vec(),
            graphs: GraphLabel::ALL.to_vec(),
            k: 1,
            policy: QueryPolicy::default(),
            augmented: false,
            union_transpose: false,
            subsets: vec![SourceSubset::all()],
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub queries: usize,
    pub successes: usize,
    /// Augmented runs skipped because the variant was missing.
    pub skipped_runs: usize,
}

impl Outcome {
    pub fn precision(&self) -> Option<f64> {
        (self.queries > 0).then(|| self.successes as f64 / self.queries as f64)
    }
}

/// Whether any of the top `k` results is related to `query_id`. Augmented
/// candidates count through their base table.
pub fn hit(index: &SearchIndex, query: &CorpusRecord, query_id: &TableId, method: Method, graph: &RelatednessGraph, k: usize) -> bool {
    index
        .search(query, method, k)
        .results
        .iter()
        .any(|(id, _)| {
            let lineage = index.get(id).map_or(id, |r| r.lineage_id());
            graph.is_related(query_id, lineage)
        })
}

/// Base tables of `pool` that are scored as queries under `policy`.
pub fn query_set<'a>(pool: &'a [CorpusRecord], graph: &RelatednessGraph, policy: QueryPolicy) -> Vec<&'a CorpusRecord> {
    let ids: BTreeSet<&TableId> = pool.iter().map(|r| &r.table_id).collect();
    pool.iter()
        .filter(|r| r.augmentation.is_none())
        .filter(|r| match policy {
            QueryPolicy::AllTables => true,
            QueryPolicy::TablesWithPositives => graph.neighbors(&r.table_id).any(|n| ids.contains(n)),
        })
        .collect()
}

/// Fraction of policy-selected queries with a related table in the top `k`.
pub fn precision_at_k(index: &SearchIndex, graph: &RelatednessGraph, method: Method, k: usize, policy: QueryPolicy) -> Outcome {
    let queries = query_set(index.records(), graph, policy);
    let successes = queries
        .par_iter()
        .filter(|q| hit(index, q, &q.table_id, method, graph, k))
        .count();
    Outcome {
        queries: queries.len(),
        successes,
        skipped_runs: 0,
    }
}

/// Augmented records of the pool keyed by (base id, variant).
pub fn variant_lookup(pool: &[CorpusRecord]) -> BTreeMap<(&TableId, Variant), &CorpusRecord> {
    pool.iter()
        .filter_map(|r| r.augmentation.as_ref().map(|a| ((&a.base_id, a.variant), r)))
        .collect()
}

/// Runs `query`, then each requested variant of it; true if any run hits.
/// Returns the number of variant runs skipped for lack of a variant.
pub fn augmented_success(
    index: &SearchIndex,
    query: &CorpusRecord,
    variants: &[Variant],
    lookup: &BTreeMap<(&TableId, Variant), &CorpusRecord>,
    method: Method,
    graph: &RelatednessGraph,
    k: usize,
) -> (bool, usize) {
    let mut skipped = 0;
    if hit(index, query, &query.table_id, method, graph, k) {
        return (true, 0);
    }
    for &v in variants {
        match lookup.get(&(&query.table_id, v)) {
            Some(aug) => {
                if hit(index, aug, &query.table_id, method, graph, k) {
                    return (true, skipped);
                }
            }
            None => skipped += 1,
        }
    }
    (false, skipped)
}

/// Variants run for `method` in augmented mode.
pub fn protocol_variants(method: Method, union_transpose: bool) -> Vec<Variant> {
    if method == Method::Union && !union_transpose {
        vec![Variant::HeaderToCell]
    } else {
        vec![Variant::Transpose, Variant::HeaderToCell]
    }
}

pub fn augmented_precision(
    index: &SearchIndex,
    graph: &RelatednessGraph,
    method: Method,
    k: usize,
    policy: QueryPolicy,
    variants: &[Variant],
) -> Outcome {
    let lookup = variant_lookup(index.records());
    let queries = query_set(index.records(), graph, policy);
    let results: Vec<(bool, usize)> = queries
        .par_iter()
        .map(|q| augmented_success(index, q, variants, &lookup, method, graph, k))
        .collect();
    Outcome {
        queries: queries.len(),
        successes: results.iter().filter(|r| r.0).count(),
        skipped_runs: results.iter().map(|r| r.1).sum(),
    }
}

/// Evaluates every method, graph and source subset in `config`. Indices are
/// rebuilt per subset through `make_index`; a subset with fewer than two
/// base tables yields null rows.
pub fn evaluate(
    pool: &[CorpusRecord],
    graphs: &TableGraphs,
    config: &EvalConfig,
    make_index: &(dyn Fn(Vec<CorpusRecord>) -> SearchIndex + Sync),
) -> Vec<EvalRow> {
    let filter = graphs.filter();
    let mut rows = Vec::new();
    for subset in &config.subsets {
        let records: Vec<CorpusRecord> = pool.iter().filter(|r| subset.contains(r)).cloned().collect();
        let n_base = records.iter().filter(|r| r.augmentation.is_none()).count();
        let index = (n_base >= 2).then(|| make_index(records));
        for &method in &config.methods {
            for &label in &config.graphs {
                let outcome = index.as_ref().map(|index| {
                    let graph = graphs.get(label);
                    if config.augmented {
                        let variants = protocol_variants(method, config.union_transpose);
                        augmented_precision(index, graph, method, config.k, config.policy, &variants)
                    } else {
                        precision_at_k(index, graph, method, config.k, config.policy)
                    }
                });
                rows.push(EvalRow::new(method, label, &filter, subset, config, outcome));
            }
        }
    }
    rows
}
