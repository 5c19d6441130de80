use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use modeltables::config::Config;
use modeltables::pipeline::{run_stage, search_query, Stage, StageOutcome, Workspace, CONFIG_FILE};
use modeltables::relatedness::Relation;
use modeltables::search::Method;
use modeltables::{Error, TableId};

#[derive(Parser, Debug)]
#[command(name = "modeltables", version, about = "Build a table corpus from a model-lake snapshot and benchmark table search")]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Opts {
    /// Workspace directory holding stage outputs and the manifest.
    #[arg(long, global = true, default_value = "workspace")]
    workspace: PathBuf,
    /// Config file (default: config.toml inside the workspace, if present).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Re-run the stage even if its inputs are unchanged.
    #[arg(long, global = true)]
    force: bool,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Citation relation: direct or overlap.
    #[arg(long, global = true)]
    relation: Option<String>,
    /// Keep only methodology/result citations.
    #[arg(long, global = true)]
    intent: bool,
    /// Keep only influential citations.
    #[arg(long, global = true)]
    influential: bool,
    /// Ground-truth graph(s) for eval: paper, model, dataset, all.
    #[arg(long, global = true, value_delimiter = ',')]
    graph: Vec<String>,
    /// Search method(s): keyword, join, union, dense, sparse, hybrid.
    #[arg(long, global = true, value_delimiter = ',')]
    method: Vec<String>,
    /// Augmentation variant(s): transpose, header2cell, shufflecol, shufflerow, dropcell.
    #[arg(long, global = true, value_delimiter = ',')]
    variant: Vec<String>,
    #[arg(short = 'k', long = "k", global = true)]
    k: Option<usize>,
    /// Source subsets, e.g. `all,M,M+G`.
    #[arg(long, global = true, value_delimiter = ',')]
    sources: Vec<String>,
    /// External table-content vectors (`dim N` header, then `id<TAB>floats`).
    #[arg(long, global = true)]
    vectors: Option<PathBuf>,
    /// Evaluate with the augmented-query protocol.
    #[arg(long, global = true)]
    augmented: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load a snapshot directory into the workspace.
    Ingest {
        /// Snapshot directory (overrides `snapshot` in the config).
        snapshot: Option<PathBuf>,
    },
    /// Extract tables and link them to model cards.
    Extract,
    /// Repair, stitch, prune and filter tables.
    Clean,
    /// Deduplicate tables by content hash.
    Dedup,
    /// Generate augmented table variants.
    Augment,
    /// Build the ground-truth relatedness graphs.
    Relate,
    /// Build the sparse and dense search indices.
    Index,
    /// Answer one query table.
    Search {
        #[arg(long)]
        query: String,
    },
    /// Compute Precision@k and write the report.
    Eval,
    /// Graph densities and distribution files.
    Stats,
}

fn load_config(opts: &Opts) -> Result<Config, Error> {
    let default_path = opts.workspace.join(CONFIG_FILE);
    let mut config = match &opts.config {
        Some(p) => Config::load(p)?,
        None if default_path.is_file() => Config::load(&default_path)?,
        None => Config::default(),
    };
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    if let Some(r) = &opts.relation {
        config.relation = r.parse::<Relation>().map_err(|e| Error::Config(format!("--relation: {e}")))?;
    }
    config.intent |= opts.intent;
    config.influential |= opts.influential;
    config.augmented |= opts.augmented;
    if !opts.graph.is_empty() {
        config.graphs = opts.graph.clone();
    }
    if !opts.method.is_empty() {
        config.methods = opts.method.clone();
    }
    if !opts.variant.is_empty() {
        config.variants = opts.variant.clone();
    }
    if let Some(k) = opts.k {
        config.k = k;
    }
    if !opts.sources.is_empty() {
        config.sources = opts.sources.clone();
    }
    if let Some(v) = &opts.vectors {
        config.vectors = Some(v.clone());
    }
    config.validate()?;
    Ok(config)
}

fn report(stage: &str, outcome: StageOutcome) {
    match outcome {
        StageOutcome::Ran { outputs, summary } => {
            println!("{stage}: {summary}");
            for o in outputs {
                println!("  wrote {o}");
            }
        }
        StageOutcome::UpToDate => println!("{stage}: up to date"),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let config = load_config(&cli.opts)?;
    let ws = Workspace::open(&cli.opts.workspace)?;
    let force = cli.opts.force;
    let (stage, snapshot): (Stage, Option<&Path>) = match &cli.command {
        Command::Ingest { snapshot } => (Stage::Ingest, snapshot.as_deref()),
        Command::Extract => (Stage::Extract, None),
        Command::Clean => (Stage::Clean, None),
        Command::Dedup => (Stage::Dedup, None),
        Command::Augment => (Stage::Augment, None),
        Command::Relate => (Stage::Relate, None),
        Command::Index => (Stage::Index, None),
        Command::Eval => (Stage::Eval, None),
        Command::Stats => (Stage::Stats, None),
        Command::Search { query } => {
            let method = match cli.opts.method.as_slice() {
                [] => Method::Keyword,
                [m] => m.parse::<Method>().map_err(|e| Error::Config(format!("--method: {e}")))?,
                _ => return Err(Error::Config("search takes a single --method".into())),
            };
            let ranked = search_query(&ws, &TableId::new(query.clone()), method, config.k)?;
            for flag in &ranked.flags {
                eprintln!("note: {flag}");
            }
            for (rank, (id, score)) in ranked.results.iter().enumerate() {
                println!("{}\t{id}\t{score:.6}", rank + 1);
            }
            return Ok(());
        }
    };
    let outcome = run_stage(&ws, stage, &config, force, snapshot)?;
    report(stage.as_str(), outcome);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
