//! The six retrieval methods: keyword, join and union search over table
//! content, and dense, sparse and hybrid retrieval over tables and metadata.

mod assignment;
mod bm25;
mod embedding;
mod vectors;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::quality::CorpusTable;
use crate::table::{CorpusRecord, TableId};
use crate::tokenize::tokenize;

pub use assignment::max_weight_matching;
pub use bm25::{Bm25Params, TermIndex, MAX_QUERY_TERMS};
pub use embedding::{dot, is_zero, normalize, EmbeddingProvider, HashingEmbedder, DEFAULT_DIM};
pub use vectors::VectorIndex;

pub const DEFAULT_HYBRID_CANDIDATES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Keyword,
    Join,
    Union,
    Dense,
    Sparse,
    Hybrid,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Keyword,
        Method::Join,
        Method::Union,
        Method::Dense,
        Method::Sparse,
        Method::Hybrid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Keyword => "keyword",
            Method::Join => "join",
            Method::Union => "union",
            Method::Dense => "dense",
            Method::Sparse => "sparse",
            Method::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method `{s}`"))
    }
}

/// Candidates in rank order. Scores are non-increasing, ties by ascending id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedResult {
    pub query_id: TableId,
    pub method: Method,
    pub results: Vec<(TableId, f64)>,
    /// Degenerate-input notes, e.g. a headerless keyword query.
    pub flags: Vec<String>,
}

impl RankedResult {
    pub fn ids(&self) -> impl Iterator<Item = &TableId> {
        self.results.iter().map(|(id, _)| id)
    }
}

/// Caption, then each row's non-empty cells separated by spaces, rows joined
/// by `[ROW]`.
pub fn serialize_table(t: &CorpusRecord) -> String {
    let mut parts: Vec<String> = Vec::new();
    if let Some(c) = t.caption.as_deref().map(str::trim).filter(|c| !c.is_empty()) {
        parts.push(c.to_string());
    }
    let rows: Vec<String> = t
        .cells
        .iter()
        .map(|r| {
            r.iter()
                .map(|c| c.trim())
                .filter(|c| !c.is_empty())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .filter(|r| !r.is_empty())
        .collect();
    if !rows.is_empty() {
        parts.push(rows.join(" [ROW] "));
    }
    parts.join(" ")
}

/// Context text of every occurrence in (doc_id, position) order, one per line.
pub fn build_metadata_context(table: &CorpusTable) -> String {
    let mut occ: Vec<_> = table.occurrences.iter().collect();
    occ.sort_by(|a, b| (&a.doc_id, a.position).cmp(&(&b.doc_id, b.position)));
    occ.iter()
        .map(|o| o.context_text.trim())
        .filter(|c| !c.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

/// Header and body cells, case-folded, as searched by keyword search.
pub fn keyword_haystack(t: &CorpusRecord) -> String {
    t.cells
        .iter()
        .flatten()
        .map(|c| c.trim())
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Distinct tokens of the header cells, or of the first row when the table
/// has no header (second value `true`).
pub fn keyword_query_tokens(q: &CorpusRecord) -> (Vec<String>, bool) {
    let (rows, fallback) = if q.header_row_count > 0 {
        (q.header_rows(), false)
    } else {
        (&q.cells[..q.cells.len().min(1)], true)
    };
    let mut seen = HashSet::new();
    let tokens = rows
        .iter()
        .flatten()
        .flat_map(|c| tokenize(c))
        .filter(|t| seen.insert(t.clone()))
        .collect();
    (tokens, fallback)
}

pub fn keyword_score(tokens: &[String], haystack: &str) -> f64 {
    tokens.iter().filter(|t| haystack.contains(t.as_str())).count() as f64
}

/// Distinct trimmed non-empty body values per column.
pub fn column_value_sets(t: &CorpusRecord) -> Vec<HashSet<String>> {
    (0..t.n_cols)
        .map(|c| {
            t.body_column(c)
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .map(str::to_string)
                .collect()
        })
        .collect()
}

/// Largest overlap between `keys` and any single column.
pub fn join_score(keys: &HashSet<String>, columns: &[HashSet<String>]) -> f64 {
    columns
        .iter()
        .map(|c| keys.iter().filter(|k| c.contains(*k)).count())
        .max()
        .unwrap_or(0) as f64
}

/// Body values of each column embedded as one text; headers excluded.
pub fn column_embeddings(t: &CorpusRecord, provider: &dyn EmbeddingProvider) -> Vec<Vec<f64>> {
    (0..t.n_cols)
        .map(|c| provider.embed(&t.body_column(c).collect::<Vec<_>>().join(" ")))
        .collect()
}

/// Optimal one-to-one column alignment under cosine similarity: the sum of
/// positive matched similarities over the larger column count.
pub fn union_score(query: &[Vec<f64>], candidate: &[Vec<f64>]) -> f64 {
    let denom = query.len().max(candidate.len());
    if denom == 0 {
        return 0.0;
    }
    let w: Vec<Vec<f64>> = query
        .iter()
        .map(|q| candidate.iter().map(|c| dot(q, c).max(0.0)).collect())
        .collect();
    let total: f64 = max_weight_matching(&w).into_iter().map(|(i, j)| w[i][j]).sum();
    total / denom as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub bm25: Bm25Params,
    pub hybrid_candidates: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            bm25: Bm25Params::default(),
            hybrid_candidates: DEFAULT_HYBRID_CANDIDATES,
        }
    }
}

/// Immutable indices over a pool of tables. Records are kept in id order and
/// a repeated id keeps its first record.
pub struct SearchIndex {
    records: Vec<CorpusRecord>,
    position: HashMap<TableId, usize>,
    provider: Box<dyn EmbeddingProvider>,
    config: SearchConfig,
    haystacks: Vec<String>,
    value_sets: Vec<Vec<HashSet<String>>>,
    columns: Vec<Vec<Vec<f64>>>,
    terms: TermIndex,
    content: VectorIndex,
    metadata: VectorIndex,
}

impl SearchIndex {
    pub fn build(records: Vec<CorpusRecord>, provider: Box<dyn EmbeddingProvider>, config: SearchConfig) -> Self {
        let mut seen = HashSet::new();
        let mut records: Vec<CorpusRecord> = records
            .into_iter()
            .filter(|r| seen.insert(r.table_id.clone()))
            .collect();
        records.sort_by(|a, b| a.table_id.cmp(&b.table_id));
        let position = records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.table_id.clone(), i))
            .collect();
        let p = provider.as_ref();
        let haystacks = records.par_iter().map(keyword_haystack).collect();
        let value_sets = records.par_iter().map(column_value_sets).collect();
        let columns = records.par_iter().map(|r| column_embeddings(r, p)).collect();
        let content_rows: Vec<(TableId, Vec<f64>)> = records
            .par_iter()
            .map(|r| (r.table_id.clone(), p.embed(&serialize_table(r))))
            .collect();
        let metadata_rows: Vec<(TableId, Vec<f64>)> = records
            .par_iter()
            .filter(|r| !r.context_text.trim().is_empty())
            .map(|r| (r.table_id.clone(), p.embed(&r.context_text)))
            .collect();
        let terms = TermIndex::build(
            records
                .iter()
                .filter(|r| !r.context_text.trim().is_empty())
                .map(|r| (&r.table_id, r.context_text.as_str())),
            config.bm25,
        );
        SearchIndex {
            content: VectorIndex::new(p.dim(), content_rows).expect("provider dimension"),
            metadata: VectorIndex::new(p.dim(), metadata_rows).expect("provider dimension"),
            records,
            position,
            provider,
            config,
            haystacks,
            value_sets,
            columns,
            terms,
        }
    }

    /// Replaces the table-content vectors, e.g. with vectors from an
    /// external encoder.
    pub fn with_content_vectors(mut self, vectors: VectorIndex) -> Self {
        self.content = vectors;
        self
    }

    pub fn records(&self) -> &[CorpusRecord] {
        &self.records
    }

    pub fn get(&self, id: &TableId) -> Option<&CorpusRecord> {
        self.position.get(id).map(|&i| &self.records[i])
    }

    pub fn provider(&self) -> &dyn EmbeddingProvider {
        self.provider.as_ref()
    }

    pub fn term_index(&self) -> &TermIndex {
        &self.terms
    }

    pub fn content_vectors(&self) -> &VectorIndex {
        &self.content
    }

    pub fn metadata_vectors(&self) -> &VectorIndex {
        &self.metadata
    }

    /// Candidates never returned for `query`: itself, equal content and any
    /// table of the same lineage.
    pub fn is_excluded(query: &CorpusRecord, candidate: &CorpusRecord) -> bool {
        candidate.table_id == query.table_id || candidate.lineage_id() == query.lineage_id()
    }

    fn rank(&self, query: &CorpusRecord, method: Method, scored: Vec<(TableId, f64)>, k: usize, flags: Vec<String>) -> RankedResult {
        let mut results: Vec<(TableId, f64)> = scored
            .into_iter()
            .filter(|(id, s)| *s > 0.0 && self.get(id).is_some_and(|c| !Self::is_excluded(query, c)))
            .collect();
        sort_ranking(&mut results);
        results.truncate(k);
        RankedResult {
            query_id: query.table_id.clone(),
            method,
            results,
            flags,
        }
    }

    fn scan(&self, score: impl Fn(usize) -> f64 + Sync) -> Vec<(TableId, f64)> {
        (0..self.records.len())
            .into_par_iter()
            .map(|i| (self.records[i].table_id.clone(), score(i)))
            .collect()
    }

    /// Top `k` candidates for `query` under `method`. The query need not be
    /// in the pool.
    pub fn search(&self, query: &CorpusRecord, method: Method, k: usize) -> RankedResult {
        let mut flags = Vec::new();
        let scored = match method {
            Method::Keyword => {
                let (tokens, fallback) = keyword_query_tokens(query);
                if fallback {
                    flags.push("headerless query: first row used as keywords".into());
                }
                self.scan(|i| keyword_score(&tokens, &self.haystacks[i]))
            }
            Method::Join => {
                let keys = query
                    .n_cols
                    .checked_sub(1)
                    .map(|c| column_value_sets(query).swap_remove(c))
                    .unwrap_or_default();
                if keys.is_empty() {
                    flags.push("right-most query column is empty".into());
                    Vec::new()
                } else {
                    self.scan(|i| join_score(&keys, &self.value_sets[i]))
                }
            }
            Method::Union => {
                let q = match self.position.get(&query.table_id) {
                    Some(&i) if self.records[i].cells == query.cells => self.columns[i].clone(),
                    _ => column_embeddings(query, self.provider()),
                };
                self.scan(|i| union_score(&q, &self.columns[i]))
            }
            Method::Dense => {
                let q = self.content_query_vector(query);
                match q {
                    Some(q) if !is_zero(&q) => self.content.cosine_all(&q),
                    _ => {
                        flags.push("query has no content vector".into());
                        Vec::new()
                    }
                }
            }
            Method::Sparse => self.sparse_scores(query, &mut flags),
            Method::Hybrid => return self.hybrid(query, k),
        };
        self.rank(query, method, scored, k, flags)
    }

    fn content_query_vector(&self, query: &CorpusRecord) -> Option<Vec<f64>> {
        if let Some(v) = self.content.get(&query.table_id) {
            return Some(v.to_vec());
        }
        let v = self.provider.embed(&serialize_table(query));
        (v.len() == self.content.dim()).then_some(v)
    }

    fn sparse_scores(&self, query: &CorpusRecord, flags: &mut Vec<String>) -> Vec<(TableId, f64)> {
        if query.context_text.trim().is_empty() {
            flags.push("query has no metadata context".into());
            return Vec::new();
        }
        self.terms.score(&query.context_text)
    }

    /// Sparse top candidates re-ranked by cosine of metadata embeddings.
    fn hybrid(&self, query: &CorpusRecord, k: usize) -> RankedResult {
        let mut first = self.search(query, Method::Sparse, self.config.hybrid_candidates);
        let q = self
            .metadata
            .get(&query.table_id)
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| self.provider.embed(&query.context_text));
        if is_zero(&q) {
            first.flags.push("query metadata embeds to the zero vector".into());
        }
        let mut results: Vec<(TableId, f64)> = first
            .results
            .into_iter()
            .map(|(id, _)| {
                let s = self.metadata.get(&id).map_or(0.0, |v| dot(&q, v));
                (id, s)
            })
            .collect();
        sort_ranking(&mut results);
        results.truncate(k);
        RankedResult {
            query_id: query.table_id.clone(),
            method: Method::Hybrid,
            results,
            flags: first.flags,
        }
    }
}

/// Score descending, then table id ascending.
pub fn sort_ranking(results: &mut [(TableId, f64)]) {
    results.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
}
