//! Table corpus construction and table-relatedness benchmarking over model-lake
//! snapshots.
//!
//! The pipeline runs in stages, each a module of this crate:
//!
//! 1. [`ingestion`]: load a snapshot directory, pull links and BibTeX titles out
//!    of documents, and build model records.
//! 2. [`extract`]: parse Markdown, HTML and plain-text tables and link each one
//!    to the model cards that reach it.
//! 3. [`quality`]: repair structural defects, filter, and deduplicate by content hash.
//! 4. [`augment`]: transpose, header-to-cell fusion and seeded structural perturbations.
//! 5. [`relatedness`]: paper-, model- and dataset-level ground-truth graphs over tables.
//! 6. [`search`]: keyword, join, union, dense, sparse and hybrid table search.
//! 7. [`eval`]: Precision@k against the ground-truth graphs and report emission.
//!
//! [`pipeline`] wires the stages to an on-disk workspace with a manifest so that
//! each stage is resumable.

pub mod augment;
pub mod config;
pub mod error;
pub mod eval;
pub mod extract;
pub mod ingestion;
pub mod io;
pub mod pipeline;
pub mod quality;
pub mod relatedness;
pub mod search;
pub mod table;
pub mod tokenize;

pub use error::{Error, Result};
pub use table::{CanonicalTable, CorpusRecord, TableId};
