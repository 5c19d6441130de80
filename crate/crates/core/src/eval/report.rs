use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EvalConfig, Outcome, SourceSubset};
use crate::error::Result;
use crate::io::write_atomic;
use crate::relatedness::{CitationFilter, GraphLabel};
use crate::search::Method;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub method: Method,
    pub graph: GraphLabel,
    pub filter: String,
    pub subset: String,
    pub k: usize,
    pub policy: String,
    pub queries: usize,
    pub successes: usize,
    pub precision: Option<f64>,
}

impl EvalRow {
    pub fn new(
        method: Method,
        graph: GraphLabel,
        filter: &CitationFilter,
        subset: &SourceSubset,
        config: &EvalConfig,
        outcome: Option<Outcome>,
    ) -> Self {
        let outcome = outcome.unwrap_or_default();
        EvalRow {
            method,
            graph,
            filter: filter.descriptor(),
            subset: subset.name.clone(),
            k: config.k,
            policy: config.policy.as_str().into(),
            queries: outcome.queries,
            successes: outcome.successes,
            precision: outcome.precision(),
        }
    }
}

/// Provenance written as the first report line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool_version: String,
    pub corpus_hash: String,
    pub config_hash: String,
    pub seed: u64,
    pub augmented: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub run: RunMetadata,
    pub rows: Vec<EvalRow>,
}

pub fn render_jsonl(report: &EvalReport) -> String {
    let mut out = serde_json::to_string(&serde_json::json!({ "run": report.run })).expect("serializable");
    out.push('\n');
    for row in &report.rows {
        out.push_str(&serde_json::to_string(row).expect("serializable"));
        out.push('\n');
    }
    out
}

fn cell(row: &EvalRow) -> String {
    match row.precision {
        Some(p) => format!("{p:.4} ({}/{})", row.successes, row.queries),
        None => "-".into(),
    }
}

/// One block per (subset, filter, k): methods down, graphs across.
pub fn render_text(report: &EvalReport) -> String {
    let r = &report.run;
    let mut out = format!(
        "corpus {}  config {}  seed {}  augmented {}\n",
        r.corpus_hash, r.config_hash, r.seed, r.augmented
    );
    let mut groups: BTreeMap<(String, String, usize, String), Vec<&EvalRow>> = BTreeMap::new();
    for row in &report.rows {
        groups
            .entry((row.subset.clone(), row.filter.clone(), row.k, row.policy.clone()))
            .or_default()
            .push(row);
    }
    for ((subset, filter, k, policy), rows) in groups {
        let mut graphs: Vec<GraphLabel> = rows.iter().map(|r| r.graph).collect();
        graphs.sort();
        graphs.dedup();
        let mut methods: Vec<Method> = rows.iter().map(|r| r.method).collect();
        methods.sort();
        methods.dedup();

        let mut table: Vec<Vec<String>> = vec![std::iter::once("method".to_string())
            .chain(graphs.iter().map(|g| g.to_string()))
            .collect()];
        for m in &methods {
            let mut line = vec![m.to_string()];
            for g in &graphs {
                let c = rows.iter().find(|r| r.method == *m && r.graph == *g);
                line.push(c.map_or_else(|| "-".into(), |r| cell(r)));
            }
            table.push(line);
        }
        let widths: Vec<usize> = (0..table[0].len())
            .map(|c| table.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        out.push_str(&format!("\nsubset {subset}  filter {filter}  P@{k}  policy {policy}\n"));
        for line in table {
            let padded: Vec<String> = line
                .iter()
                .zip(&widths)
                .map(|(v, w)| format!("{v:<w$}"))
                .collect();
            out.push_str(padded.join("  ").trim_end());
            out.push('\n');
        }
    }
    out
}

/// Writes `<stem>.jsonl` and `<stem>.txt` under `dir`.
pub fn emit_report(report: &EvalReport, dir: &Path, stem: &str) -> Result<()> {
    write_atomic(&dir.join(format!("{stem}.jsonl")), render_jsonl(report).as_bytes())?;
    write_atomic(&dir.join(format!("{stem}.txt")), render_text(report).as_bytes())
}
