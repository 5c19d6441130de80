//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if any
//! criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::oracle::{self, Bm25, Edge};
use modeltables::augment::{column_header, header_to_cell, shuffle_columns, shuffle_rows, drop_cells, transpose, HEADER_SEPARATOR};
use modeltables::config::Config;
use modeltables::eval::{augmented_precision, augmented_success, hit, precision_at_k, query_set, variant_lookup, QueryPolicy};
use modeltables::extract::{extract_markdown_tables, render_markdown, CorpusEntry, ExtractedTable, TableOrigin};
use modeltables::ingestion::SourceKind;
use modeltables::pipeline::Workspace;
use modeltables::quality::{clean_entries, dedup, prune_artifacts, CorpusTable, FilterProfile};
use modeltables::relatedness::{
    build_table_graphs, graph_density, CitationFilter, CitationIndex, GraphLabel, ModelIndex, ModelRecord, PaperRecord,
    RelatednessGraph, Relation, TableGraphs,
};
use modeltables::search::{HashingEmbedder, Method, SearchConfig, SearchIndex, TermIndex};
use modeltables::{CanonicalTable, CorpusRecord, TableId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(), String>;
type Criterion = fn(&Fixture) -> Check;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

struct Fixture {
    _dir: tempfile::TempDir,
    ws: Workspace,
    corpus: Vec<CorpusRecord>,
    pool: Vec<CorpusRecord>,
    papers: Vec<PaperRecord>,
    models: Vec<ModelRecord>,
}

impl Fixture {
    fn build() -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        let ws = common::run_pipeline(dir.path(), &Config::default());
        let corpus = common::corpus(&ws);
        let mut pool = corpus.clone();
        pool.extend(common::augmented(&ws));
        Fixture {
            papers: common::papers(&ws),
            models: common::models(&ws),
            _dir: dir,
            ws,
            corpus,
            pool,
        }
    }

    fn graphs(&self, f: &CitationFilter) -> TableGraphs {
        let models = ModelIndex::new(self.models.clone());
        let papers = CitationIndex::new(self.papers.clone()).unwrap();
        build_table_graphs(&self.corpus, &models, &papers, f).unwrap().0
    }

    fn index(&self) -> SearchIndex {
        SearchIndex::build(self.pool.clone(), Box::new(HashingEmbedder::default()), SearchConfig::default())
    }
}

fn graph_edges(graphs: &TableGraphs) -> [BTreeSet<Edge>; 4] {
    GraphLabel::ALL.map(|l| oracle::edge_set(graphs.get(l)))
}

fn c1_pairwise_equivalence(fx: &Fixture) -> Check {
    ensure(fx.corpus.len() <= 50, || format!("fixture has {} tables", fx.corpus.len()))?;
    let start = Instant::now();
    for f in CitationFilter::all_eight() {
        let got = graph_edges(&fx.graphs(&f));
        let want = oracle::pairwise_graphs(&fx.corpus, &fx.papers, &fx.models, &f);
        for (i, label) in GraphLabel::ALL.iter().enumerate() {
            ensure(got[i] == want[i], || {
                format!("{f} {label}: {} edges vs {} from the double loop", got[i].len(), want[i].len())
            })?;
        }
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(5), || format!("took {took:?}"))
}

fn c2_filter_monotonicity(_: &Fixture) -> Check {
    for seed in 0..100u64 {
        let world = common::random_world(&mut ChaCha8Rng::seed_from_u64(seed));
        let (models, papers) = (world.model_index(), world.citation_index());
        for relation in [Relation::Direct, Relation::Overlap] {
            let edges = |intent, infl| {
                let g = build_table_graphs(&world.corpus, &models, &papers, &CitationFilter::new(relation, intent, infl))
                    .unwrap()
                    .0;
                [oracle::edge_set(&g.paper), oracle::edge_set(&g.all)]
            };
            let (none, intent, infl, both) = (edges(false, false), edges(true, false), edges(false, true), edges(true, true));
            for g in 0..2 {
                let chains = [(&both[g], &intent[g]), (&intent[g], &none[g]), (&both[g], &infl[g]), (&infl[g], &none[g])];
                for (small, large) in chains {
                    ensure(small.is_subset(large), || format!("seed {seed} {}: containment broken", relation.as_str()))?;
                }
            }
        }
    }
    Ok(())
}

fn c3_density(fx: &Fixture) -> Check {
    let id = |i: usize| TableId::new(format!("{i:032x}"));
    let f = CitationFilter::default();
    let three = RelatednessGraph::new(GraphLabel::Paper, f, (0..3).map(id), [(id(0), id(1))]).map_err(|e| e.to_string())?;
    let d = graph_density(&three);
    ensure((d.density_percent - 100.0 / 3.0).abs() < 1e-12 && format!("{:.2}", d.density_percent) == "33.33", || {
        format!("3-node/1-edge density {}", d.density_percent)
    })?;
    ensure(d.nonzero_entries == 2, || format!("nonzero entries {}", d.nonzero_entries))?;
    let k4_edges: Vec<(TableId, TableId)> = (0..4).flat_map(|a| (a + 1..4).map(move |b| (id(a), id(b)))).collect();
    let k4 = RelatednessGraph::new(GraphLabel::All, f, (0..4).map(id), k4_edges).map_err(|e| e.to_string())?;
    ensure(graph_density(&k4).density_percent == 100.0, || format!("K4 density {}", graph_density(&k4).density_percent))?;

    let check_bounds = |graphs: &TableGraphs, what: &str| -> Check {
        let counts = [graphs.paper.edge_count(), graphs.model.edge_count(), graphs.dataset.edge_count()];
        let all = graphs.all.edge_count();
        let (max, sum) = (*counts.iter().max().unwrap(), counts.iter().sum::<usize>());
        ensure(max <= all && all <= sum, || format!("{what}: |all| = {all} outside [{max}, {sum}]"))?;
        for g in [&graphs.paper, &graphs.model, &graphs.dataset, &graphs.all] {
            let want = oracle::density_percent(g.n_tables(), g.edge_count());
            ensure((graph_density(g).density_percent - want).abs() < 1e-12, || format!("{what}: density mismatch"))?;
        }
        Ok(())
    };
    for f in CitationFilter::all_eight() {
        check_bounds(&fx.graphs(&f), &format!("fixture {f}"))?;
    }
    for seed in 0..100u64 {
        let world = common::random_world(&mut ChaCha8Rng::seed_from_u64(seed));
        for f in CitationFilter::all_eight() {
            let g = build_table_graphs(&world.corpus, &world.model_index(), &world.citation_index(), &f).unwrap().0;
            check_bounds(&g, &format!("seed {seed} {f}"))?;
        }
    }
    Ok(())
}

fn c4_search_oracle(fx: &Fixture) -> Check {
    let index = fx.index();
    let provider = HashingEmbedder::default();
    let config = SearchConfig::default();
    let bm25 = Bm25 {
        k1: config.bm25.k1,
        b: config.bm25.b,
    };
    let pool = index.records();
    let mut compared = 0;
    for q in &fx.corpus {
        for method in Method::ALL {
            let got: Vec<(String, f64)> = index
                .search(q, method, pool.len())
                .results
                .into_iter()
                .map(|(id, s)| (id.to_string(), s))
                .collect();
            let want = oracle::ranking(pool, q, method, &provider, &bm25, config.hybrid_candidates);
            oracle::compare_rankings(&got, &want, 1e-9).map_err(|e| format!("{method} query {}: {e}", q.table_id))?;
            if method == Method::Hybrid {
                let sparse: BTreeSet<TableId> = index.search(q, Method::Sparse, 100).ids().cloned().collect();
                let hybrid = index.search(q, Method::Hybrid, pool.len());
                ensure(hybrid.ids().all(|id| sparse.contains(id)), || format!("hybrid escapes sparse top-100 for {}", q.table_id))?;
            }
            compared += 1;
        }
    }
    ensure(compared == fx.corpus.len() * 6, || "not every query was compared".into())
}

fn random_table(rng: &mut ChaCha8Rng) -> Option<CanonicalTable> {
    let (rows, cols) = (rng.gen_range(1..7), rng.gen_range(1..7));
    let header = rng.gen_range(0..3);
    CanonicalTable::from_grid(common::random_grid(rng, rows, cols), header, None)
}

fn c5_augmentation_algebra(_: &Fixture) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut tested = 0;
    while tested < 1000 {
        let Some(t) = random_table(&mut rng) else { continue };
        tested += 1;
        let tt = transpose(&t);
        let back = CanonicalTable::from_grid(tt.cells.clone(), tt.header_row_count, None).unwrap();
        ensure(transpose(&back).cells == t.cells, || "transpose is not an involution".into())?;

        if t.header_row_count > 0 {
            let h = header_to_cell(&t).map_err(|e| e.to_string())?;
            ensure(h.cells[..t.header_row_count] == t.cells[..t.header_row_count], || "header rows changed".into())?;
            for (r, row) in h.cells.iter().enumerate().skip(t.header_row_count) {
                for (c, cell) in row.iter().enumerate() {
                    let prefix = format!("{}{HEADER_SEPARATOR}", column_header(&t, c));
                    let restored = cell.strip_prefix(&prefix);
                    ensure(restored == Some(t.cells[r][c].as_str()), || format!("cell ({r}, {c}) not reversible"))?;
                }
            }
        } else {
            ensure(header_to_cell(&t).is_err(), || "headerless table fused".into())?;
        }

        let seed = rng.gen::<u64>();
        let sc = shuffle_columns(&t, seed);
        let mut cols_before: Vec<Vec<&String>> = (0..t.n_cols).map(|c| t.cells.iter().map(|r| &r[c]).collect()).collect();
        let mut cols_after: Vec<Vec<&String>> = (0..t.n_cols).map(|c| sc.cells.iter().map(|r| &r[c]).collect()).collect();
        cols_before.sort();
        cols_after.sort();
        ensure(cols_before == cols_after, || "column shuffle changed the column multiset".into())?;

        let sr = shuffle_rows(&t, seed);
        let hc = t.header_row_count;
        ensure(sr.cells[..hc] == t.cells[..hc], || "row shuffle moved header rows".into())?;
        let mut body_before = t.cells[hc..].to_vec();
        let mut body_after = sr.cells[hc..].to_vec();
        body_before.sort();
        body_after.sort();
        ensure(body_before == body_after, || "row shuffle changed the row multiset".into())?;

        let dc = drop_cells(&t, 0.3, seed).map_err(|e| e.to_string())?;
        for (a, b) in dc.cells.iter().flatten().zip(t.cells.iter().flatten()) {
            ensure(a.is_empty() || a == b, || "drop_cells altered a kept cell".into())?;
        }
        ensure(
            shuffle_columns(&t, seed).cells == sc.cells
                && shuffle_rows(&t, seed).cells == sr.cells
                && drop_cells(&t, 0.3, seed).unwrap().cells == dc.cells,
            || "seeded variant is not deterministic".into(),
        )?;
    }
    Ok(())
}

fn random_ragged_entries(rng: &mut ChaCha8Rng, n: usize) -> Vec<CorpusEntry> {
    const CELLS: [&str; 8] = ["a", "b", "91.2", "", "  ", "x y", "c", "†"];
    (0..n)
        .map(|i| {
            let rows = rng.gen_range(0..6);
            let cells = (0..rows)
                .map(|_| (0..rng.gen_range(0..5)).map(|_| CELLS.choose(rng).unwrap().to_string()).collect())
                .collect();
            CorpusEntry {
                table: ExtractedTable {
                    cells,
                    header_row_count: rng.gen_range(0..3),
                    caption: None,
                    footnotes: Vec::new(),
                    origin: TableOrigin {
                        doc_id: format!("model_cards/d{}.md", i % 7),
                        position: i,
                    },
                    source_kind: SourceKind::ModelCard,
                },
                model_ids: [format!("org/m{}", i % 3)].into_iter().collect(),
                context_text: String::new(),
            }
        })
        .collect()
}

fn c6_quality_idempotence(fx: &Fixture) -> Check {
    let cleaned: Vec<CorpusTable> = modeltables::io::read_jsonl(&fx.ws.path("clean/tables.jsonl")).map_err(|e| e.to_string())?;
    let once = dedup(cleaned.clone());
    ensure(dedup(once.corpus.clone()).corpus == once.corpus, || "dedup not idempotent on the fixture".into())?;
    for r in &fx.corpus {
        r.canonical().check_invariants().map_err(|e| format!("fixture table {}: {e}", r.table_id))?;
    }
    let entries: Vec<CorpusEntry> = modeltables::io::read_jsonl(&fx.ws.path("extract/entries.jsonl")).map_err(|e| e.to_string())?;
    for e in &entries {
        let p = prune_artifacts(e.table.clone());
        ensure(p.clone().and_then(prune_artifacts) == p, || "prune not idempotent on the fixture".into())?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let entries = random_ragged_entries(&mut rng, 1000);
    for e in &entries {
        let p = prune_artifacts(e.table.clone());
        ensure(p.clone().and_then(prune_artifacts) == p, || "prune not idempotent on a ragged table".into())?;
    }
    let (tables, _) = clean_entries(entries, &FilterProfile::default());
    for t in &tables {
        t.table.check_invariants().map_err(|e| format!("ragged table: {e}"))?;
    }
    let once = dedup(tables.clone());
    let mut reversed = tables;
    reversed.reverse();
    ensure(dedup(once.corpus.clone()) == once, || "dedup not idempotent on ragged tables".into())?;
    ensure(dedup(reversed).corpus.len() == once.corpus.len(), || "dedup depends on order".into())
}

fn c7_markdown_round_trip(_: &Fixture) -> Check {
    const CELLS: [&str; 10] = [
        "bert",
        "a | b",
        "x|y",
        "0.911 (macro-averaged)",
        "F1 (dev set, † 3 seeds)",
        "MNLI-m/mm",
        "91.2",
        "[link](https://example.org)",
        "`code`",
        "",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut tested = 0;
    while tested < 1000 {
        let (rows, cols) = (rng.gen_range(2..7), rng.gen_range(1..6));
        let grid: Vec<Vec<String>> = (0..rows)
            .map(|_| (0..cols).map(|_| CELLS.choose(&mut rng).unwrap().to_string()).collect())
            .collect();
        let Some(t) = CanonicalTable::from_grid(grid, 1, None) else { continue };
        if t.check_invariants().is_err() {
            continue;
        }
        tested += 1;
        let md = render_markdown(&t.cells, 1);
        let parsed = extract_markdown_tables(&md);
        ensure(parsed.len() == 1, || format!("{} tables parsed from\n{md}", parsed.len()))?;
        ensure(parsed[0].cells == t.cells && parsed[0].header_row_count == 1, || format!("round trip changed\n{md}"))?;
    }
    Ok(())
}

fn c8_protocol_reductions(fx: &Fixture) -> Check {
    let index = fx.index();
    let graphs = fx.graphs(&CitationFilter::default());
    let lookup = variant_lookup(index.records());
    let policy = QueryPolicy::default();
    for label in GraphLabel::ALL {
        let g = graphs.get(label);
        for method in Method::ALL {
            for q in query_set(index.records(), g, policy) {
                let (aug, skipped) = augmented_success(&index, q, &[], &lookup, method, g, 1);
                ensure(aug == hit(&index, q, &q.table_id, method, g, 1) && skipped == 0, || {
                    format!("{method}/{label}: variant-free protocol differs for {}", q.table_id)
                })?;
            }
            let plain = precision_at_k(&index, g, method, 1, policy);
            ensure(augmented_precision(&index, g, method, 1, policy, &[]) == plain, || format!("{method}/{label}: P@1 differs"))?;
            let mut prev = plain;
            for k in 2..=10 {
                let cur = precision_at_k(&index, g, method, k, policy);
                ensure(cur.queries == prev.queries && cur.successes >= prev.successes, || {
                    format!("{method}/{label}: P@{k} < P@{}", k - 1)
                })?;
                prev = cur;
            }
        }
    }
    Ok(())
}

fn workspace_files(root: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for sub in ["dedup", "relate", "index", "eval", "augment", "stats", "clean", "extract", "ingest"] {
        let dir = root.join(sub);
        let mut names: Vec<_> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
        names.sort();
        for p in names {
            out.insert(format!("{sub}/{}", p.file_name().unwrap().to_string_lossy()), fs::read(&p).unwrap());
        }
    }
    out
}

fn c9_determinism(_: &Fixture) -> Check {
    let start = Instant::now();
    let config = Config {
        seed: 7,
        ..Config::default()
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ws_a = common::run_pipeline(a.path(), &config);
    drop(common::run_pipeline(b.path(), &config));
    let (fa, fb) = (workspace_files(a.path()), workspace_files(b.path()));
    ensure(fa.keys().eq(fb.keys()), || "runs wrote different file sets".into())?;
    for key in ["dedup/corpus.jsonl", "relate/edges__direct.tsv", "index/terms.bin", "eval/report__direct.jsonl"] {
        ensure(fa.contains_key(key), || format!("{key} missing"))?;
    }
    for (name, bytes) in &fa {
        ensure(fb[name] == *bytes, || format!("{name} differs between runs"))?;
    }

    let mut pool = common::corpus(&ws_a);
    pool.extend(common::augmented(&ws_a));
    let rebuilt = SearchIndex::build(pool, Box::new(HashingEmbedder::default()), SearchConfig::default());
    ensure(rebuilt.term_index().to_bytes() == fa["index/terms.bin"], || "term index regeneration differs".into())?;
    ensure(
        TermIndex::from_bytes(&fa["index/terms.bin"]).map_err(|e| e.to_string())?.to_bytes() == fa["index/terms.bin"],
        || "term index does not round-trip".into(),
    )?;
    ensure(rebuilt.content_vectors().to_text().as_bytes() == fa["index/content_vectors.tsv"], || {
        "content vector regeneration differs".into()
    })?;
    let took = start.elapsed();
    ensure(took < Duration::from_secs(60), || format!("took {took:?}"))
}

/// Forty tables in eight clusters. Tables of one cluster report the same
/// benchmark family with model-specific values and share a base model; column
/// labels are drawn from synonyms independently of the cluster.
fn glue_style_fixture() -> (Vec<CorpusRecord>, ModelIndex) {
    const FAMILIES: [[&str; 6]; 8] = [
        ["MNLI", "QQP", "QNLI", "SST-2", "CoLA", "RTE"],
        ["BoolQ", "CB", "COPA", "MultiRC", "ReCoRD", "WiC"],
        ["SQuAD", "NewsQA", "TriviaQA", "SearchQA", "HotpotQA", "NaturalQuestions"],
        ["CNN/DM", "XSum", "Gigaword", "Newsroom", "Multi-News", "BigPatent"],
        ["WMT14 En-De", "WMT14 En-Fr", "WMT16 En-Ro", "IWSLT14 De-En", "WMT19 En-Ru", "FLORES"],
        ["ImageNet", "CIFAR-10", "CIFAR-100", "Places365", "iNaturalist", "Food-101"],
        ["LibriSpeech clean", "LibriSpeech other", "CommonVoice", "TED-LIUM", "VoxPopuli", "Switchboard"],
        ["HumanEval", "MBPP", "APPS", "CodeContests", "DS-1000", "MultiPL-E"],
    ];
    const METRICS: [&str; 8] = ["accuracy", "exact match", "EM/F1", "ROUGE-L", "BLEU", "top-1", "WER", "pass@1"];
    const TASK: [&str; 3] = ["Task", "Dataset", "Benchmark"];
    const METRIC: [&str; 3] = ["Metric", "Measure", "Criterion"];
    const SCORE: [&str; 3] = ["Score", "Result", "Value"];
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut records = Vec::new();
    let mut models = Vec::new();
    for (c, family) in FAMILIES.iter().enumerate() {
        for i in 0..5 {
            let model = format!("lab{c}/model-{i}");
            let mut rec = ModelRecord::new(model.clone());
            rec.base_models.insert(format!("lab{c}/base"));
            models.push(rec);
            let mut tasks: Vec<&str> = family.to_vec();
            tasks.shuffle(&mut rng);
            let mut cells = vec![vec![
                TASK.choose(&mut rng).unwrap().to_string(),
                METRIC.choose(&mut rng).unwrap().to_string(),
                SCORE.choose(&mut rng).unwrap().to_string(),
            ]];
            for task in &tasks[..rng.gen_range(4..=6)] {
                cells.push(vec![task.to_string(), METRICS[c].to_string(), format!("{:.1}", rng.gen_range(20.0..99.0))]);
            }
            let t = CanonicalTable::from_grid(cells, 1, None).unwrap();
            records.push(CorpusRecord {
                table_id: t.table_id.clone(),
                source_kinds: [SourceKind::ModelCard].into_iter().collect(),
                model_ids: [model].into_iter().collect(),
                caption: None,
                context_text: String::new(),
                header_row_count: 1,
                n_rows: t.n_rows,
                n_cols: t.n_cols,
                cells: t.cells,
                augmentation: None,
            });
        }
    }
    (records, ModelIndex::new(models))
}

fn c10_trend(_: &Fixture) -> Check {
    let (records, models) = glue_style_fixture();
    ensure(records.len() == 40, || format!("{} tables", records.len()))?;
    let graphs = build_table_graphs(&records, &models, &CitationIndex::new(Vec::new()).unwrap(), &CitationFilter::default())
        .unwrap()
        .0;
    let index = SearchIndex::build(records, Box::new(HashingEmbedder::default()), SearchConfig::default());
    let p1 = |m| precision_at_k(&index, &graphs.model, m, 1, QueryPolicy::default()).precision().unwrap_or(0.0);
    let (union, dense, keyword) = (p1(Method::Union), p1(Method::Dense), p1(Method::Keyword));
    let summary = format!("union {union:.3}, dense {dense:.3}, keyword {keyword:.3}");
    ensure(union >= 0.8 && dense >= 0.8 && keyword < union.min(dense), || summary.clone())?;
    println!("      P@1 {summary}");
    Ok(())
}

fn main() {
    let fixture = Fixture::build();
    let criteria: [(&str, Criterion); 10] = [
        ("relatedness graphs equal the table-pair double loop", c1_pairwise_equivalence),
        ("citation filter monotonicity", c2_filter_monotonicity),
        ("density formula and union bounds", c3_density),
        ("search rankings equal brute-force scorers", c4_search_oracle),
        ("augmentation algebra", c5_augmentation_algebra),
        ("quality-control idempotence", c6_quality_idempotence),
        ("markdown round trip", c7_markdown_round_trip),
        ("protocol reductions", c8_protocol_reductions),
        ("end-to-end determinism", c9_determinism),
        ("semantic methods beat keyword search on clustered tables", c10_trend),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(|| check(&fixture)))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("PASS {:>2}. {name} ({secs:.2}s)", i + 1),
            Err(e) => {
                failures += 1;
                println!("FAIL {:>2}. {name} ({secs:.2}s): {e}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
