//! Run configuration: a flat TOML file whose keys mirror the command-line
//! flags. Flags override the file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::{Variant, DEFAULT_DROP_RATE};
use crate::error::{Error, Result};
use crate::eval::{EvalConfig, QueryPolicy, SourceSubset};
use crate::ingestion::SourceKind;
use crate::quality::{FilterProfile, FootnoteGrammar};
use crate::relatedness::{CitationFilter, GraphLabel, Relation};
use crate::search::{Bm25Params, Method, SearchConfig, DEFAULT_DIM, DEFAULT_HYBRID_CANDIDATES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Snapshot directory, relative paths resolve against the working
    /// directory.
    pub snapshot: Option<PathBuf>,
    pub seed: u64,

    pub footnote_symbols: Vec<String>,
    pub footnote_brackets: bool,
    pub min_body_rows: usize,
    pub min_cols: usize,
    /// Keep recovered plain-text tables (ablation only).
    pub include_s2: bool,

    pub variants: Vec<String>,
    pub drop_rate: f64,

    pub relation: Relation,
    pub intent: bool,
    pub influential: bool,
    pub ancestor_closure: bool,

    pub embedding_dim: usize,
    pub bm25_k1: f64,
    pub bm25_b: f64,
    pub hybrid_candidates: usize,
    /// External table-content vectors imported by `index`.
    pub vectors: Option<PathBuf>,

    pub methods: Vec<String>,
    pub graphs: Vec<String>,
    pub k: usize,
    pub policy: String,
    pub augmented: bool,
    pub union_transpose: bool,
    /// Source subsets evaluated, e.g. `["all", "M", "M+G"]`.
    pub sources: Vec<String>,
}

impl Default for Config {
    fn default() -> Self {
        let grammar = FootnoteGrammar::default();
        let profile = FilterProfile::default();
        Config {
            snapshot: None,
            seed: 0,
            footnote_symbols: grammar.symbols,
            footnote_brackets: grammar.bracketed_numbers,
            min_body_rows: profile.min_body_rows,
            min_cols: profile.min_cols,
            include_s2: false,
            variants: vec!["transpose".into(), "header2cell".into()],
            drop_rate: DEFAULT_DROP_RATE,
            relation: Relation::Direct,
            intent: false,
            influential: false,
            ancestor_closure: false,
            embedding_dim: DEFAULT_DIM,
            bm25_k1: Bm25Params::default().k1,
            bm25_b: Bm25Params::default().b,
            hybrid_candidates: DEFAULT_HYBRID_CANDIDATES,
            vectors: None,
            methods: Method::ALL.iter().map(|m| m.to_string()).collect(),
            graphs: GraphLabel::ALL.iter().map(|g| g.to_string()).collect(),
            k: 1,
            policy: QueryPolicy::default().as_str().into(),
            augmented: false,
            union_transpose: false,
            sources: vec!["all".into()],
        }
    }
}

fn parse_all<T: std::str::FromStr<Err = String>>(items: &[String], what: &str) -> Result<Vec<T>> {
    items
        .iter()
        .map(|s| s.parse::<T>().map_err(|e| Error::Config(format!("{what}: {e}"))))
        .collect()
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let config: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Config::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.drop_rate) {
            return Err(Error::Config(format!("drop_rate {} is outside [0, 1)", self.drop_rate)));
        }
        if self.embedding_dim == 0 {
            return Err(Error::Config("embedding_dim must be positive".into()));
        }
        if self.hybrid_candidates == 0 {
            return Err(Error::Config("hybrid_candidates must be positive".into()));
        }
        if self.min_cols == 0 {
            return Err(Error::Config("min_cols must be positive".into()));
        }
        self.variant_list()?;
        self.eval_config()?;
        Ok(())
    }

    pub fn citation_filter(&self) -> CitationFilter {
        CitationFilter::new(self.relation, self.intent, self.influential)
    }

    pub fn footnote_grammar(&self) -> FootnoteGrammar {
        FootnoteGrammar {
            symbols: self.footnote_symbols.clone(),
            bracketed_numbers: self.footnote_brackets,
        }
    }

    pub fn filter_profile(&self) -> FilterProfile {
        let profile = FilterProfile {
            min_body_rows: self.min_body_rows,
            min_cols: self.min_cols,
            ..Default::default()
        };
        if self.include_s2 {
            profile.with_sources([SourceKind::S2Text])
        } else {
            profile
        }
    }

    pub fn variant_list(&self) -> Result<BTreeSet<Variant>> {
        Ok(parse_all::<Variant>(&self.variants, "variant")?.into_iter().collect())
    }

    pub fn search_config(&self) -> SearchConfig {
        SearchConfig {
            bm25: Bm25Params {
                k1: self.bm25_k1,
                b: self.bm25_b,
            },
            hybrid_candidates: self.hybrid_candidates,
        }
    }

    pub fn eval_config(&self) -> Result<EvalConfig> {
        let subsets = self
            .sources
            .iter()
            .map(|s| s.parse::<SourceSubset>())
            .collect::<Result<Vec<_>>>()?;
        let graphs = parse_all::<GraphLabel>(&self.graphs, "graph")?;
        if graphs.is_empty() {
            return Err(Error::Config("at least one graph is required".into()));
        }
        Ok(EvalConfig {
            methods: parse_all(&self.methods, "method")?,
            graphs,
            k: self.k,
            policy: self.policy.parse().map_err(Error::Config)?,
            augmented: self.augmented,
            union_transpose: self.union_transpose,
            subsets,
        })
    }

    /// Canonical TOML rendering, used for config hashes.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip() {
        let c = Config::default();
        assert_eq!(Config::parse(&c.to_toml()).unwrap(), c);
        assert_eq!(Config::parse("").unwrap(), c);
    }

    #[test]
    fn flat_keys_parse() {
        let c = Config::parse("seed = 7\nrelation = \"overlap\"\nintent = true\nk = 3\nsources = [\"M\", \"M+G\"]\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.citation_filter().descriptor(), "overlap_intent");
        let eval = c.eval_config().unwrap();
        assert_eq!(eval.k, 3);
        assert_eq!(eval.subsets[1].name, "M+G");
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for bad in ["k = 0", "drop_rate = 1.0", "unknown_key = 1", "methods = [\"bogus\"]", "relation = \"sideways\""] {
            let err = Config::parse(bad).unwrap_err();
            assert_eq!(err.exit_code(), 1, "{bad}");
        }
    }
}
