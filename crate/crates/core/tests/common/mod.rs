//! Shared fixtures for the integration and acceptance tests.
#![allow(dead_code)]

pub mod oracle;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use modeltables::config::Config;
use modeltables::io::read_jsonl;
use modeltables::pipeline::{run_stage, Stage, Workspace};
use modeltables::relatedness::{CitationIndex, Intent, ModelIndex, ModelRecord, PaperRecord, Reference};
use modeltables::{CanonicalTable, CorpusRecord};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixture_snapshot() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/snapshot")
}

/// Every stage in order on the bundled snapshot (eval and relate under the
/// configured filter).
pub fn run_pipeline(dir: &Path, config: &Config) -> Workspace {
    let ws = Workspace::open(dir).expect("workspace");
    let snapshot = fixture_snapshot();
    for stage in Stage::ALL {
        if stage == Stage::Search {
            continue;
        }
        let snap = (stage == Stage::Ingest).then_some(snapshot.as_path());
        run_stage(&ws, stage, config, false, snap).unwrap_or_else(|e| panic!("{stage}: {e}"));
    }
    ws
}

pub fn corpus(ws: &Workspace) -> Vec<CorpusRecord> {
    read_jsonl(&ws.path("dedup/corpus.jsonl")).unwrap()
}

pub fn augmented(ws: &Workspace) -> Vec<CorpusRecord> {
    read_jsonl(&ws.path("augment/augmented.jsonl")).unwrap()
}

pub fn papers(ws: &Workspace) -> Vec<PaperRecord> {
    read_jsonl(&ws.path("ingest/papers.jsonl")).unwrap()
}

pub fn models(ws: &Workspace) -> Vec<ModelRecord> {
    read_jsonl(&ws.path("ingest/models.jsonl")).unwrap()
}

/// A corpus record with distinct content for each `i`.
pub fn record(i: usize, model_ids: impl IntoIterator<Item = String>) -> CorpusRecord {
    let cells = vec![vec!["id".to_string(), "n".to_string()], vec![format!("t{i}"), i.to_string()]];
    let t = CanonicalTable::from_grid(cells, 1, None).unwrap();
    CorpusRecord {
        table_id: t.table_id.clone(),
        source_kinds: BTreeSet::new(),
        model_ids: model_ids.into_iter().collect(),
        caption: None,
        context_text: String::new(),
        header_row_count: t.header_row_count,
        n_rows: t.n_rows,
        n_cols: t.n_cols,
        cells: t.cells,
        augmentation: None,
    }
}

/// A random citation world: papers (some cited works absent), models with
/// papers, links, base models and datasets, and tables over those models.
pub struct World {
    pub papers: Vec<PaperRecord>,
    pub models: Vec<ModelRecord>,
    pub corpus: Vec<CorpusRecord>,
}

impl World {
    pub fn citation_index(&self) -> CitationIndex {
        CitationIndex::new(self.papers.clone()).unwrap()
    }

    pub fn model_index(&self) -> ModelIndex {
        ModelIndex::new(self.models.clone())
    }
}

fn some_of<T: Clone>(rng: &mut ChaCha8Rng, pool: &[T], max: usize) -> Vec<T> {
    let n = rng.gen_range(0..=max.min(pool.len()));
    pool.choose_multiple(rng, n).cloned().collect()
}

pub fn random_world(rng: &mut ChaCha8Rng) -> World {
    let n_papers = rng.gen_range(2..10);
    let cited: Vec<String> = (0..n_papers + 3).map(|i| format!("p{i}")).collect();
    let intents = [Intent::Methodology, Intent::Result, Intent::Background, Intent::Other];
    let papers = (0..n_papers)
        .map(|i| PaperRecord {
            paper_id: format!("p{i}"),
            title: String::new(),
            references: some_of(rng, &cited, 4)
                .into_iter()
                .map(|c| Reference {
                    cited_id: c,
                    intents: some_of(rng, &intents, 2).into_iter().collect(),
                    is_influential: rng.gen_bool(0.4),
                })
                .collect(),
        })
        .collect();

    let n_models = rng.gen_range(2..9);
    let ids: Vec<String> = (0..n_models).map(|i| format!("org/m{i}")).collect();
    let bases: Vec<String> = ids.iter().cloned().chain(["org/base".to_string()]).collect();
    let datasets: Vec<String> = (0..4).map(|i| format!("d{i}")).collect();
    let paper_pool: Vec<String> = (0..n_papers + 1).map(|i| format!("p{i}")).collect();
    let mut models = Vec::new();
    for id in &ids {
        if !rng.gen_bool(0.9) {
            continue;
        }
        let mut m = ModelRecord::new(id.clone());
        m.papers = some_of(rng, &paper_pool, 2).into_iter().collect();
        if rng.gen_bool(0.2) {
            m.linked_models = some_of(rng, &ids, 1).into_iter().collect();
        }
        if rng.gen_bool(0.3) {
            m.base_models = some_of(rng, &bases, 1).into_iter().filter(|b| b != id).collect();
        }
        if rng.gen_bool(0.5) {
            m.datasets = some_of(rng, &datasets, 2).into_iter().collect();
        }
        models.push(m);
    }

    let n_tables = rng.gen_range(2..14);
    let corpus = (0..n_tables)
        .map(|i| {
            let mut m = some_of(rng, &ids, 2);
            if m.is_empty() {
                m.push(ids.choose(rng).unwrap().clone());
            }
            record(i, m)
        })
        .collect();
    World { papers, models, corpus }
}

/// A random grid of short cells drawn from a small alphabet, so that
/// duplicates and shared tokens are common.
pub fn random_grid(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<String>> {
    const WORDS: [&str; 10] = ["bert", "glue", "91.2", "acc", "f1", "sst-2", "base", "x", "1,024", "lr"];
    (0..rows)
        .map(|_| (0..cols).map(|_| WORDS.choose(rng).unwrap().to_string()).collect())
        .collect()
}
