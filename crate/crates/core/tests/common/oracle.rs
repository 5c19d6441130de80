//! Brute-force reference implementations written straight from the scoring
//! and relatedness definitions, sharing no code with the crate beyond the
//! tokenizer and the embedding provider.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use modeltables::relatedness::{CitationFilter, Intent, ModelRecord, PaperRecord, Relation, RelatednessGraph};
use modeltables::search::{EmbeddingProvider, Method};
use modeltables::tokenize::tokenize;
use modeltables::CorpusRecord;

pub type Edge = (String, String);

pub fn edge(a: &str, b: &str) -> Edge {
    if a < b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

pub fn edge_set(g: &RelatednessGraph) -> BTreeSet<Edge> {
    g.edges().map(|(a, b)| edge(a.as_str(), b.as_str())).collect()
}

/// The table-pair double loop: tables relate when any model pair across them
/// does, per level. Returns paper, model, dataset and all edge sets.
pub fn pairwise_graphs(corpus: &[CorpusRecord], papers: &[PaperRecord], models: &[ModelRecord], f: &CitationFilter) -> [BTreeSet<Edge>; 4] {
    let paper_by_id: HashMap<&str, &PaperRecord> = papers.iter().map(|p| (p.paper_id.as_str(), p)).collect();
    let model_by_id: HashMap<&str, &ModelRecord> = models.iter().map(|m| (m.model_id.as_str(), m)).collect();
    let refs = |p: &str| -> BTreeSet<String> {
        paper_by_id[p]
            .references
            .iter()
            .filter(|r| !f.require_intent || r.intents.iter().any(|i| matches!(i, Intent::Methodology | Intent::Result)))
            .filter(|r| !f.require_influential || r.is_influential)
            .map(|r| r.cited_id.clone())
            .collect()
    };
    let papers_related = |a: &str, b: &str| -> bool {
        if !paper_by_id.contains_key(a) || !paper_by_id.contains_key(b) {
            return false;
        }
        match f.relation {
            Relation::Direct => a != b && (refs(a).contains(b) || refs(b).contains(a)),
            Relation::Overlap => !refs(a).is_disjoint(&refs(b)),
        }
    };
    let empty = ModelRecord::default();
    let rec = |m: &str| *model_by_id.get(m).unwrap_or(&&empty);
    let paper_rel = |a: &str, b: &str| {
        rec(a).papers.iter().any(|pa| rec(b).papers.iter().any(|pb| papers_related(pa, pb)))
    };
    let model_rel = |a: &str, b: &str| {
        let (ra, rb) = (rec(a), rec(b));
        a == b
            || ra.linked_models.contains(b)
            || rb.linked_models.contains(a)
            || ra.base_models.contains(b)
            || rb.base_models.contains(a)
            || !ra.base_models.is_disjoint(&rb.base_models)
    };
    let dataset_rel = |a: &str, b: &str| !rec(a).datasets.is_disjoint(&rec(b).datasets);

    let base: Vec<&CorpusRecord> = corpus.iter().filter(|r| r.augmentation.is_none()).collect();
    let mut out: [BTreeSet<Edge>; 4] = Default::default();
    for i in 0..base.len() {
        for j in i + 1..base.len() {
            let (ti, tj) = (base[i], base[j]);
            let any = |rel: &dyn Fn(&str, &str) -> bool| {
                ti.model_ids.iter().any(|a| tj.model_ids.iter().any(|b| rel(a, b)))
            };
            let e = edge(ti.table_id.as_str(), tj.table_id.as_str());
            let hits = [any(&paper_rel), any(&model_rel), any(&dataset_rel)];
            for (level, hit) in hits.into_iter().enumerate() {
                if hit {
                    out[level].insert(e.clone());
                    out[3].insert(e.clone());
                }
            }
        }
    }
    out
}

pub fn density_percent(n: usize, edges: usize) -> f64 {
    if n < 2 {
        0.0
    } else {
        100.0 * (2 * edges) as f64 / (n * (n - 1)) as f64
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb)
}

fn serialize(t: &CorpusRecord) -> String {
    let mut s = String::new();
    if let Some(c) = &t.caption {
        if !c.trim().is_empty() {
            s.push_str(c.trim());
        }
    }
    let mut first_row = true;
    for row in &t.cells {
        let vals: Vec<&str> = row.iter().map(|c| c.trim()).filter(|c| !c.is_empty()).collect();
        if vals.is_empty() {
            continue;
        }
        if !first_row {
            s.push_str(" [ROW]");
        }
        first_row = false;
        for v in vals {
            if !s.is_empty() {
                s.push(' ');
            }
            s.push_str(v);
        }
    }
    s
}

fn body_column(t: &CorpusRecord, c: usize) -> Vec<&str> {
    t.cells[t.header_row_count..].iter().map(|r| r[c].as_str()).collect()
}

fn value_set(t: &CorpusRecord, c: usize) -> HashSet<&str> {
    body_column(t, c).into_iter().map(str::trim).filter(|v| !v.is_empty()).collect()
}

/// Best one-to-one assignment weight, exhaustively over subsets.
fn best_assignment(w: &[Vec<f64>]) -> f64 {
    let m = w.first().map_or(0, Vec::len);
    let mut memo: HashMap<(usize, u32), f64> = HashMap::new();
    fn go(i: usize, used: u32, w: &[Vec<f64>], m: usize, memo: &mut HashMap<(usize, u32), f64>) -> f64 {
        if i == w.len() {
            return 0.0;
        }
        if let Some(&v) = memo.get(&(i, used)) {
            return v;
        }
        let mut best = go(i + 1, used, w, m, memo);
        for j in 0..m {
            if used & (1 << j) == 0 {
                best = best.max(w[i][j] + go(i + 1, used | (1 << j), w, m, memo));
            }
        }
        memo.insert((i, used), best);
        best
    }
    go(0, 0, w, m, &mut memo)
}

fn column_vectors(t: &CorpusRecord, p: &dyn EmbeddingProvider) -> Vec<Vec<f64>> {
    (0..t.n_cols).map(|c| p.embed(&body_column(t, c).join(" "))).collect()
}

pub struct Bm25 {
    pub k1: f64,
    pub b: f64,
}

fn bm25_scores(pool: &[CorpusRecord], query: &str, p: &Bm25) -> BTreeMap<String, f64> {
    let docs: Vec<(&str, Vec<String>)> = pool
        .iter()
        .filter(|r| !r.context_text.trim().is_empty())
        .map(|r| (r.table_id.as_str(), tokenize(&r.context_text)))
        .filter(|(_, t)| !t.is_empty())
        .collect();
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(|d| d.1.len()).sum::<usize>() as f64 / n;
    let mut terms: Vec<String> = Vec::new();
    for t in tokenize(query) {
        if !terms.contains(&t) {
            terms.push(t);
        }
    }
    terms.truncate(1024);
    let mut out = BTreeMap::new();
    for (id, toks) in &docs {
        let dl = toks.len() as f64;
        let mut score = 0.0;
        for t in &terms {
            let tf = toks.iter().filter(|x| *x == t).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let df = docs.iter().filter(|d| d.1.contains(t)).count() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            score += idf * tf * (p.k1 + 1.0) / (tf + p.k1 * (1.0 - p.b + p.b * dl / avgdl));
        }
        if score != 0.0 {
            out.insert(id.to_string(), score);
        }
    }
    out
}

fn eligible(q: &CorpusRecord, c: &CorpusRecord) -> bool {
    let lineage = |r: &CorpusRecord| r.augmentation.as_ref().map_or(r.table_id.clone(), |a| a.base_id.clone());
    c.table_id != q.table_id && lineage(c) != lineage(q)
}

fn sorted(mut v: Vec<(String, f64)>) -> Vec<(String, f64)> {
    v.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    v
}

/// The complete ranking of `pool` for `query` under `method`.
pub fn ranking(pool: &[CorpusRecord], query: &CorpusRecord, method: Method, p: &dyn EmbeddingProvider, bm25: &Bm25, hybrid_candidates: usize) -> Vec<(String, f64)> {
    let scored: Vec<(String, f64)> = match method {
        Method::Keyword => {
            let rows = if query.header_row_count > 0 { &query.cells[..query.header_row_count] } else { &query.cells[..1] };
            let mut tokens: Vec<String> = Vec::new();
            for t in rows.iter().flatten().flat_map(|c| tokenize(c)) {
                if !tokens.contains(&t) {
                    tokens.push(t);
                }
            }
            pool.iter()
                .map(|c| {
                    let text = c.cells.iter().flatten().cloned().collect::<Vec<_>>().join(" ").to_lowercase();
                    (c.table_id.to_string(), tokens.iter().filter(|t| text.contains(t.as_str())).count() as f64)
                })
                .collect()
        }
        Method::Join => {
            let keys = value_set(query, query.n_cols - 1);
            pool.iter()
                .map(|c| {
                    let best = (0..c.n_cols).map(|j| value_set(c, j).intersection(&keys).count()).max().unwrap_or(0);
                    (c.table_id.to_string(), best as f64)
                })
                .collect()
        }
        Method::Union => {
            let qc = column_vectors(query, p);
            pool.iter()
                .map(|c| {
                    let cc = column_vectors(c, p);
                    let w: Vec<Vec<f64>> = qc.iter().map(|a| cc.iter().map(|b| cosine(a, b).max(0.0)).collect()).collect();
                    (c.table_id.to_string(), best_assignment(&w) / qc.len().max(cc.len()) as f64)
                })
                .collect()
        }
        Method::Dense => {
            let q = p.embed(&serialize(query));
            pool.iter().map(|c| (c.table_id.to_string(), cosine(&q, &p.embed(&serialize(c))))).collect()
        }
        Method::Sparse | Method::Hybrid => {
            if query.context_text.trim().is_empty() {
                Vec::new()
            } else {
                bm25_scores(pool, &query.context_text, bm25).into_iter().collect()
            }
        }
    };
    let by_id: HashMap<String, &CorpusRecord> = pool.iter().map(|r| (r.table_id.to_string(), r)).collect();
    let kept = sorted(scored.into_iter().filter(|(id, s)| *s > 0.0 && eligible(query, by_id[id])).collect());
    if method != Method::Hybrid {
        return kept;
    }
    let q = p.embed(&query.context_text);
    sorted(
        kept.into_iter()
            .take(hybrid_candidates)
            .map(|(id, _)| {
                let s = cosine(&q, &p.embed(&by_id[&id].context_text));
                (id, s)
            })
            .collect(),
    )
}

/// Rankings agree when scores match position by position within `tol` and
/// ids match except inside runs of tied scores, where the id sets match.
pub fn compare_rankings(actual: &[(String, f64)], expected: &[(String, f64)], tol: f64) -> Result<(), String> {
    if actual.len() != expected.len() {
        return Err(format!("length {} vs expected {}", actual.len(), expected.len()));
    }
    for (i, (a, e)) in actual.iter().zip(expected).enumerate() {
        if (a.1 - e.1).abs() > tol {
            return Err(format!("rank {i}: score {} vs expected {}", a.1, e.1));
        }
    }
    let mut start = 0;
    while start < expected.len() {
        let mut end = start + 1;
        while end < expected.len() && (expected[end].1 - expected[start].1).abs() <= tol {
            end += 1;
        }
        if end - start == 1 {
            if actual[start].0 != expected[start].0 {
                return Err(format!("rank {start}: {} vs expected {}", actual[start].0, expected[start].0));
            }
        } else {
            let a: BTreeSet<&String> = actual[start..end].iter().map(|x| &x.0).collect();
            let e: BTreeSet<&String> = expected[start..end].iter().map(|x| &x.0).collect();
            if a != e {
                return Err(format!("tied ranks {start}..{end} differ"));
            }
        }
        start = end;
    }
    Ok(())
}
