use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Stage, StageOutcome, Workspace};
use crate::augment::{augment, RNG_ALGORITHM};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::eval::{evaluate, render_jsonl, render_text, EvalReport, RunMetadata};
use crate::extract::{build_corpus, AlignedColumnRecoverer, CorpusEntry, LinkGraph};
use crate::ingestion::{
    build_model_records, extract_links, load_snapshot, AliasTable, LinkRef, ModelBuildReport,
    SkipReason, TitleIndex,
};
use crate::io::{read_jsonl, read_to_string, sha256_hex, to_jsonl};
use crate::quality::{clean_entries, dedup, frequency_histogram, frequency_tsv, CorpusTable};
use crate::relatedness::{
    build_table_graphs, density_table, per_query_positive_counts, positive_count_histogram,
    read_edges, write_edges, CitationFilter, CitationIndex, GraphLabel, ModelIndex, ModelRecord,
    PaperRecord, TableGraphs,
};
use crate::search::{HashingEmbedder, Method, RankedResult, SearchConfig, SearchIndex, VectorIndex};
use crate::table::{CorpusRecord, TableId};

const DOCUMENTS: &str = "ingest/documents.jsonl";
const LINKS: &str = "ingest/links.jsonl";
const PAPERS: &str = "ingest/papers.jsonl";
const MODELS: &str = "ingest/models.jsonl";
const ALIASES: &str = "ingest/aliases.tsv";
const ENTRIES: &str = "extract/entries.jsonl";
const CLEANED: &str = "clean/tables.jsonl";
const CORPUS: &str = "dedup/corpus.jsonl";
const FREQUENCIES: &str = "dedup/frequencies.tsv";
const AUGMENTED: &str = "augment/augmented.jsonl";
const TERMS: &str = "index/terms.bin";
const CONTENT_VECTORS: &str = "index/content_vectors.tsv";
const METADATA_VECTORS: &str = "index/metadata_vectors.tsv";
const INDEX_META: &str = "index/index_meta.json";

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn hash_json<T: Serialize>(value: &T) -> String {
    sha256_hex(&serde_json::to_vec(value).expect("serializable"))
}

fn combined(digests: &[String]) -> String {
    sha256_hex(digests.join("\n").as_bytes())
}

fn files_under(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_dir() {
            files_under(root, &path, out)?;
        } else if path.is_file() {
            out.push(path.strip_prefix(root).expect("under root").to_path_buf());
        }
    }
    Ok(())
}

/// Hash over every file of the snapshot (relative path and content).
pub fn snapshot_hash(root: &Path) -> Result<String> {
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "snapshot directory not found"),
        ));
    }
    let mut files = Vec::new();
    files_under(root, root, &mut files)?;
    files.sort();
    let mut lines = String::new();
    for rel in files {
        let path = root.join(&rel);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        lines.push_str(&format!("{}\t{}\n", rel.to_string_lossy(), sha256_hex(&bytes)));
    }
    Ok(sha256_hex(lines.as_bytes()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LinkRecord {
    doc_id: String,
    links: Vec<LinkRef>,
}

#[derive(Debug, Serialize)]
struct IngestReport {
    documents: usize,
    skipped: Vec<(String, SkipReason)>,
    malformed_bibtex: usize,
    papers: usize,
    models: usize,
    model_cards: ModelBuildReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct IndexMeta {
    provider: String,
    dim: usize,
    records: usize,
    augmented_included: bool,
    external_vectors: bool,
    bm25_k1: f64,
    bm25_b: f64,
    hybrid_candidates: usize,
}

impl IndexMeta {
    fn search_config(&self) -> SearchConfig {
        SearchConfig {
            bm25: crate::search::Bm25Params {
                k1: self.bm25_k1,
                b: self.bm25_b,
            },
            hybrid_candidates: self.hybrid_candidates,
        }
    }
}

fn stage_key(stage: Stage, filter: &CitationFilter) -> String {
    format!("{stage}.{}", filter.descriptor())
}

fn stage_label(stage: Stage, filter: &CitationFilter) -> String {
    format!("{stage} ({})", filter.descriptor())
}

fn single(stage: Stage) -> (&'static str, String) {
    (stage.as_str(), stage.to_string())
}

/// Runs one stage. `snapshot` overrides the configured snapshot for
/// `ingest`.
pub fn run_stage(ws: &Workspace, stage: Stage, config: &Config, force: bool, snapshot: Option<&Path>) -> Result<StageOutcome> {
    match stage {
        Stage::Ingest => ingest(ws, config, force, snapshot),
        Stage::Extract => extract(ws, config, force),
        Stage::Clean => clean(ws, config, force),
        Stage::Dedup => dedup_stage(ws, force),
        Stage::Augment => augment_stage(ws, config, force),
        Stage::Relate => relate(ws, config, force),
        Stage::Index => index(ws, config, force),
        Stage::Search => Err(Error::Config("search needs a query: use search_query".into())),
        Stage::Eval => eval(ws, config, force),
        Stage::Stats => stats(ws, config, force),
    }
}

fn ingest(ws: &Workspace, config: &Config, force: bool, snapshot: Option<&Path>) -> Result<StageOutcome> {
    let root = snapshot
        .map(Path::to_path_buf)
        .or_else(|| config.snapshot.clone())
        .ok_or_else(|| Error::Config("no snapshot given: pass a path to ingest or set `snapshot` in the config".into()))?;
    let input = snapshot_hash(&root)?;
    ws.execute("ingest", input, hash_json(&()), force, || {
        let loaded = load_snapshot(&root)?;
        let meta = root.join("meta");
        let alias_path = meta.join("aliases.tsv");
        let alias_text = if alias_path.is_file() {
            read_to_string(&alias_path)?
        } else {
            "shorthand\tcanonical_id\tdownload_count\n".to_string()
        };
        let aliases = AliasTable::parse_tsv(&alias_text, &alias_path)?;
        let paper_path = meta.join("papers.jsonl");
        let papers: Vec<PaperRecord> = if paper_path.is_file() { read_jsonl(&paper_path)? } else { Vec::new() };
        let index = CitationIndex::new(papers)?;
        let model_path = meta.join("models.jsonl");
        let curated: Vec<ModelRecord> = if model_path.is_file() { read_jsonl(&model_path)? } else { Vec::new() };

        let extracted: Vec<(LinkRecord, usize)> = loaded
            .documents
            .par_iter()
            .map(|d| {
                let e = extract_links(&d.body);
                (LinkRecord { doc_id: d.doc_id.clone(), links: e.links }, e.malformed_bibtex)
            })
            .collect();
        let malformed_bibtex = extracted.iter().map(|e| e.1).sum();
        let links: Vec<LinkRecord> = extracted.into_iter().map(|e| e.0).collect();
        let graph: LinkGraph = links.iter().map(|l| (l.doc_id.clone(), l.links.clone())).collect();
        let (models, model_report) = build_model_records(&loaded.documents, &graph, &aliases, &index, &curated);
        let papers: Vec<PaperRecord> = index.papers().cloned().collect();

        let report = IngestReport {
            documents: loaded.documents.len(),
            skipped: loaded
                .skipped
                .iter()
                .map(|(p, r)| (p.strip_prefix(&root).unwrap_or(p).to_string_lossy().into_owned(), *r))
                .collect(),
            malformed_bibtex,
            papers: papers.len(),
            models: models.len(),
            model_cards: model_report,
        };
        let summary = format!(
            "{} documents ({} skipped), {} models, {} papers",
            report.documents,
            report.skipped.len(),
            report.models,
            report.papers
        );
        Ok((
            vec![
                (DOCUMENTS.into(), to_jsonl(&loaded.documents).into_bytes()),
                (LINKS.into(), to_jsonl(&links).into_bytes()),
                (PAPERS.into(), to_jsonl(&papers).into_bytes()),
                (MODELS.into(), to_jsonl(&models).into_bytes()),
                (ALIASES.into(), alias_text.into_bytes()),
                ("ingest/report.json".into(), json_bytes(&report)),
            ],
            summary,
        ))
    })
}

fn load_papers(ws: &Workspace) -> Result<CitationIndex> {
    CitationIndex::new(read_jsonl::<PaperRecord>(&ws.path(PAPERS))?)
}

fn load_models(ws: &Workspace, config: &Config) -> Result<ModelIndex> {
    let models = ModelIndex::new(read_jsonl::<ModelRecord>(&ws.path(MODELS))?);
    Ok(if config.ancestor_closure { models.with_ancestor_closure() } else { models })
}

fn extract(ws: &Workspace, config: &Config, force: bool) -> Result<StageOutcome> {
    let deps = ws.require(&[single(Stage::Ingest)])?;
    let grammar = config.footnote_grammar();
    ws.execute("extract", deps[0].digest(), hash_json(&grammar), force, || {
        let docs = read_jsonl(&ws.path(DOCUMENTS))?;
        let links: LinkGraph = read_jsonl::<LinkRecord>(&ws.path(LINKS))?
            .into_iter()
            .map(|l| (l.doc_id, l.links))
            .collect();
        let aliases = AliasTable::load(&ws.path(ALIASES))?;
        let titles = TitleIndex::new(&load_papers(ws)?);
        let (entries, report) = build_corpus(&docs, &links, &aliases, &titles, &grammar, &AlignedColumnRecoverer::default());
        let summary = format!(
            "{} tables from {} cards, {} referenced documents missing",
            entries.len(),
            report.cards,
            report.missing_documents.len()
        );
        Ok((
            vec![
                (ENTRIES.into(), to_jsonl(&entries).into_bytes()),
                ("extract/report.json".into(), json_bytes(&report)),
            ],
            summary,
        ))
    })
}

fn clean(ws: &Workspace, config: &Config, force: bool) -> Result<StageOutcome> {
    let deps = ws.require(&[single(Stage::Extract)])?;
    let profile = config.filter_profile();
    ws.execute("clean", deps[0].digest(), hash_json(&profile), force, || {
        let entries: Vec<CorpusEntry> = read_jsonl(&ws.path(ENTRIES))?;
        let (tables, report) = clean_entries(entries, &profile);
        let summary = format!(
            "{} of {} tables kept ({} stitched, {} emptied, {} filtered)",
            report.output_tables, report.input_tables, report.stitched_fragments, report.pruned_away, report.filtered_out
        );
        Ok((
            vec![
                (CLEANED.into(), to_jsonl(&tables).into_bytes()),
                ("clean/report.json".into(), json_bytes(&report)),
            ],
            summary,
        ))
    })
}

fn dedup_stage(ws: &Workspace, force: bool) -> Result<StageOutcome> {
    let deps = ws.require(&[single(Stage::Clean)])?;
    ws.execute("dedup", deps[0].digest(), hash_json(&()), force, || {
        let tables: Vec<CorpusTable> = read_jsonl(&ws.path(CLEANED))?;
        let total = tables.len();
        let out = dedup(tables);
        let records: Vec<CorpusRecord> = out.corpus.iter().map(CorpusTable::to_record).collect();
        let hist: String = std::iter::once("occurrences\ttables\n".to_string())
            .chain(frequency_histogram(&out.frequencies).iter().map(|(n, c)| format!("{n}\t{c}\n")))
            .collect();
        Ok((
            vec![
                (CORPUS.into(), to_jsonl(&records).into_bytes()),
                (FREQUENCIES.into(), frequency_tsv(&out.frequencies).into_bytes()),
                ("dedup/frequency_histogram.tsv".into(), hist.into_bytes()),
            ],
            format!("{} unique tables from {total}", records.len()),
        ))
    })
}

fn augment_stage(ws: &Workspace, config: &Config, force: bool) -> Result<StageOutcome> {
    let deps = ws.require(&[single(Stage::Dedup)])?;
    let variants = config.variant_list()?;
    let settings = serde_json::json!({
        "rng": RNG_ALGORITHM,
        "seed": config.seed,
        "variants": variants,
        "drop_rate": config.drop_rate,
    });
    ws.execute("augment", deps[0].digest(), hash_json(&settings), force, || {
        let corpus: Vec<CorpusRecord> = read_jsonl(&ws.path(CORPUS))?;
        let results: Vec<(Vec<CorpusRecord>, usize)> = corpus
            .par_iter()
            .map(|r| {
                let t = r.canonical();
                let mut out = Vec::new();
                let mut skipped = 0;
                for &v in &variants {
                    match augment(&t, v, config.seed, config.drop_rate) {
                        Ok(a) => out.push(a.to_record(r)),
                        Err(e) => {
                            log::debug!("{}: {e}", r.table_id);
                            skipped += 1;
                        }
                    }
                }
                (out, skipped)
            })
            .collect();
        let skipped: usize = results.iter().map(|r| r.1).sum();
        let augmented: Vec<CorpusRecord> = results.into_iter().flat_map(|r| r.0).collect();
        let mut meta = settings.clone();
        meta["records"] = augmented.len().into();
        meta["skipped"] = skipped.into();
        Ok((
            vec![
                (AUGMENTED.into(), to_jsonl(&augmented).into_bytes()),
                ("augment/augment_meta.json".into(), json_bytes(&meta)),
            ],
            format!("{} augmented tables ({skipped} skipped)", augmented.len()),
        ))
    })
}

fn relate(ws: &Workspace, config: &Config, force: bool) -> Result<StageOutcome> {
    let deps = ws.require(&[single(Stage::Ingest), single(Stage::Dedup)])?;
    let filter = config.citation_filter();
    let settings = (filter, config.ancestor_closure);
    let input = combined(&[deps[0].digest(), deps[1].digest()]);
    ws.execute(&stage_key(Stage::Relate, &filter), input, hash_json(&settings), force, || {
        let corpus: Vec<CorpusRecord> = read_jsonl(&ws.path(CORPUS))?;
        let (graphs, coverage) = build_table_graphs(&corpus, &load_models(ws, config)?, &load_papers(ws)?, &filter)?;
        let d = filter.descriptor();
        let summary = GraphLabel::ALL
            .iter()
            .map(|&l| format!("{l} {}", graphs.get(l).edge_count()))
            .collect::<Vec<_>>()
            .join(", ");
        Ok((
            vec![
                (format!("relate/edges__{d}.tsv"), write_edges(&graphs).into_bytes()),
                (format!("relate/coverage__{d}.json"), json_bytes(&coverage)),
            ],
            format!("edges: {summary}"),
        ))
    })
}

fn base_pool(ws: &Workspace, with_augmented: bool) -> Result<Vec<CorpusRecord>> {
    let mut pool: Vec<CorpusRecord> = read_jsonl(&ws.path(CORPUS))?;
    if with_augmented {
        pool.extend(read_jsonl::<CorpusRecord>(&ws.path(AUGMENTED))?);
    }
    Ok(pool)
}

fn index(ws: &Workspace, config: &Config, force: bool) -> Result<StageOutcome> {
    let deps = ws.require(&[single(Stage::Dedup)])?;
    let augment = ws.completed(Stage::Augment.as_str())?;
    let external = match &config.vectors {
        Some(p) => Some(read_to_string(p)?),
        None => None,
    };
    let mut inputs = vec![deps[0].digest()];
    inputs.extend(augment.as_ref().map(|a| a.digest()));
    inputs.extend(external.as_ref().map(|t| sha256_hex(t.as_bytes())));
    let meta = IndexMeta {
        provider: HashingEmbedder { dim: config.embedding_dim }.name_owned(),
        dim: config.embedding_dim,
        records: 0,
        augmented_included: augment.is_some(),
        external_vectors: external.is_some(),
        bm25_k1: config.bm25_k1,
        bm25_b: config.bm25_b,
        hybrid_candidates: config.hybrid_candidates,
    };
    ws.execute(Stage::Index.as_str(), combined(&inputs), hash_json(&meta), force, || {
        let pool = base_pool(ws, meta.augmented_included)?;
        let mut idx = SearchIndex::build(pool, Box::new(HashingEmbedder { dim: meta.dim }), meta.search_config());
        if let Some(text) = &external {
            let vectors = VectorIndex::from_text(text)?;
            let missing = idx.records().iter().filter(|r| vectors.get(&r.table_id).is_none()).count();
            if missing > 0 {
                log::warn!("{missing} tables have no imported vector and are unreachable by dense search");
            }
            idx = idx.with_content_vectors(vectors);
        }
        let meta = IndexMeta {
            records: idx.records().len(),
            ..meta.clone()
        };
        Ok((
            vec![
                (TERMS.into(), idx.term_index().to_bytes()),
                (CONTENT_VECTORS.into(), idx.content_vectors().to_text().into_bytes()),
                (METADATA_VECTORS.into(), idx.metadata_vectors().to_text().into_bytes()),
                (INDEX_META.into(), json_bytes(&meta)),
            ],
            format!("{} tables indexed ({} with metadata)", meta.records, idx.term_index().len()),
        ))
    })
}

trait OwnedName {
    fn name_owned(&self) -> String;
}

impl OwnedName for HashingEmbedder {
    fn name_owned(&self) -> String {
        crate::search::EmbeddingProvider::name(self).to_string()
    }
}

/// The indexed pool and a search index equivalent to the persisted one.
fn open_index(ws: &Workspace) -> Result<(Vec<CorpusRecord>, impl Fn(Vec<CorpusRecord>) -> SearchIndex + Sync)> {
    let meta: IndexMeta = serde_json::from_str(&read_to_string(&ws.path(INDEX_META))?)
        .map_err(|e| Error::Data(format!("{INDEX_META}: {e}")))?;
    let pool = base_pool(ws, meta.augmented_included)?;
    let vectors = if meta.external_vectors {
        Some(VectorIndex::from_text(&read_to_string(&ws.path(CONTENT_VECTORS))?)?)
    } else {
        None
    };
    let (dim, search_config) = (meta.dim, meta.search_config());
    let make = move |records: Vec<CorpusRecord>| {
        let idx = SearchIndex::build(records, Box::new(HashingEmbedder { dim }), search_config);
        match &vectors {
            Some(v) => idx.with_content_vectors(v.clone()),
            None => idx,
        }
    };
    Ok((pool, make))
}

/// Answers one query against the built index.
pub fn search_query(ws: &Workspace, query: &TableId, method: Method, k: usize) -> Result<RankedResult> {
    ws.require(&[single(Stage::Dedup), single(Stage::Index)])?;
    let (pool, make) = open_index(ws)?;
    let idx = make(pool);
    let q = idx
        .get(query)
        .cloned()
        .ok_or_else(|| Error::Data(format!("table {query} is not in the index")))?;
    Ok(idx.search(&q, method, k))
}

fn load_graphs(ws: &Workspace, corpus: &[CorpusRecord], filter: CitationFilter) -> Result<TableGraphs> {
    let text = read_to_string(&ws.path(&format!("relate/edges__{}.tsv", filter.descriptor())))?;
    let nodes: Vec<TableId> = corpus.iter().map(|r| r.table_id.clone()).collect();
    read_edges(&text, &nodes, filter)
}

fn eval(ws: &Workspace, config: &Config, force: bool) -> Result<StageOutcome> {
    let filter = config.citation_filter();
    let deps = ws.require(&[
        single(Stage::Dedup),
        (&stage_key(Stage::Relate, &filter), stage_label(Stage::Relate, &filter)),
        single(Stage::Index),
    ])?;
    let eval_config = config.eval_config()?;
    let settings = serde_json::json!({ "eval": eval_config, "filter": filter, "seed": config.seed });
    let config_hash = hash_json(&settings);
    let input = combined(&deps.iter().map(|d| d.digest()).collect::<Vec<_>>());
    ws.execute(&stage_key(Stage::Eval, &filter), input, config_hash.clone(), force, || {
        let corpus: Vec<CorpusRecord> = read_jsonl(&ws.path(CORPUS))?;
        let graphs = load_graphs(ws, &corpus, filter)?;
        let (pool, make) = open_index(ws)?;
        let rows = evaluate(&pool, &graphs, &eval_config, &make);
        let report = EvalReport {
            run: RunMetadata {
                tool_version: super::TOOL_VERSION.into(),
                corpus_hash: deps[0].outputs.get(CORPUS).cloned().unwrap_or_default(),
                config_hash,
                seed: config.seed,
                augmented: eval_config.augmented,
            },
            rows,
        };
        let stem = format!("eval/report__{}", filter.descriptor());
        Ok((
            vec![
                (format!("{stem}.jsonl"), render_jsonl(&report).into_bytes()),
                (format!("{stem}.txt"), render_text(&report).into_bytes()),
            ],
            format!("{} report rows", report.rows.len()),
        ))
    })
}

fn stats(ws: &Workspace, config: &Config, force: bool) -> Result<StageOutcome> {
    let deps = ws.require(&[single(Stage::Ingest), single(Stage::Dedup)])?;
    let filter = config.citation_filter();
    let input = combined(&[deps[0].digest(), deps[1].digest()]);
    let settings = (filter, config.ancestor_closure);
    ws.execute(&stage_key(Stage::Stats, &filter), input, hash_json(&settings), force, || {
        let corpus: Vec<CorpusRecord> = read_jsonl(&ws.path(CORPUS))?;
        let models = load_models(ws, config)?;
        let papers = load_papers(ws)?;

        let mut density = String::from("graph\tfilter\tn_tables\tedges\tnonzero_entries\tdensity_percent\n");
        let mut active = None;
        for f in CitationFilter::all_eight() {
            let (graphs, _) = build_table_graphs(&corpus, &models, &papers, &f)?;
            for row in density_table(&graphs) {
                let filter_independent = matches!(row.graph, GraphLabel::Model | GraphLabel::Dataset);
                if filter_independent && f != CitationFilter::default() {
                    continue;
                }
                let name = if filter_independent { "-".to_string() } else { row.filter.clone() };
                density.push_str(&format!(
                    "{}\t{name}\t{}\t{}\t{}\t{:.4}\n",
                    row.graph, row.n_tables, row.edges, row.nonzero_entries, row.density_percent
                ));
            }
            if f == filter {
                active = Some(graphs);
            }
        }
        let graphs = active.expect("active filter is one of the eight");

        let counts: BTreeMap<GraphLabel, BTreeMap<TableId, usize>> = GraphLabel::ALL
            .iter()
            .map(|&l| (l, per_query_positive_counts(graphs.get(l))))
            .collect();
        let mut per_table = String::from("table_id\tpaper\tmodel\tdataset\tall\n");
        for r in &corpus {
            let c: Vec<String> = GraphLabel::ALL.iter().map(|l| counts[l][&r.table_id].to_string()).collect();
            per_table.push_str(&format!("{}\t{}\n", r.table_id, c.join("\t")));
        }
        let mut hist = String::from("graph\trelated_tables\ttables\n");
        for (l, c) in &counts {
            for (n, tables) in positive_count_histogram(c) {
                hist.push_str(&format!("{l}\t{n}\t{tables}\n"));
            }
        }
        let freq_text = read_to_string(&ws.path("dedup/frequency_histogram.tsv"))?;
        let d = filter.descriptor();
        let sources: BTreeSet<String> = corpus.iter().flat_map(|r| r.source_kinds.iter().map(|k| k.to_string())).collect();
        Ok((
            vec![
                ("stats/density.tsv".into(), density.into_bytes()),
                ("stats/table_frequency.tsv".into(), freq_text.into_bytes()),
                (format!("stats/positive_counts__{d}.tsv"), per_table.into_bytes()),
                (format!("stats/positive_histogram__{d}.tsv"), hist.into_bytes()),
            ],
            format!("{} tables from sources {}", corpus.len(), sources.into_iter().collect::<Vec<_>>().join(",")),
        ))
    })
}
