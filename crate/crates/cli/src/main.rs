//! netemb: embed graphs, classify nodes, search hyperparameters, and
//! emit the benchmark's CSV artifacts.

mod commands;
mod config;
mod io;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use netemb::graph::TaskKind;
use netemb::search::{ClassifierKind, Method};

/// Failures split by exit code: usage errors (1), data errors (2),
/// numeric failures (3).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(netemb::Error),
}

impl From<netemb::Error> for CliError {
    fn from(e: netemb::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "netemb",
    version,
    about = "Node-embedding benchmark: embed, evaluate, search, sweep, report"
)]
struct Cli {
    #[command(flatten)]
    globals: GlobalArgs,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct GlobalArgs {
    /// JSON config file; flags override its keys
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dataset name used in output rows (default: edge file stem)
    #[arg(long, global = true)]
    dataset: Option<String>,
    /// Edge list: "src dst [weight]" per line
    #[arg(long, global = true)]
    edges: Option<PathBuf>,
    /// Label file: "node_id label[,label...]" per line
    #[arg(long, global = true)]
    labels: Option<PathBuf>,
    /// binary, multiclass, or multilabel
    #[arg(long, global = true)]
    task: Option<TaskKind>,
    /// Treat edges as directed
    #[arg(long, global = true)]
    directed: Option<bool>,
    /// Read the third edge column as a weight
    #[arg(long, global = true)]
    weighted: Option<bool>,
    /// strict (unknown label IDs fail) or intersect (they are skipped)
    #[arg(long, global = true)]
    label_mode: Option<String>,
    /// node2vec, line, grarep, or dngr
    #[arg(long, global = true)]
    method: Option<Method>,
    /// logreg or forest
    #[arg(long, global = true)]
    classifier: Option<ClassifierKind>,
    /// Train/val/test fractions, e.g. 0.5,0.25,0.25
    #[arg(long, global = true)]
    fractions: Option<String>,
    /// Search trial count
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Master seed; every random choice derives from it
    #[arg(long = "seed", global = true)]
    master_seed: Option<u64>,
    /// Worker threads (NETEMB_WORKERS overrides)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Single-threaded training kernels for byte-identical outputs
    #[arg(long, global = true)]
    deterministic: Option<bool>,
    /// Multi-label decision rule: top_k or threshold:<t>
    #[arg(long, global = true)]
    rule: Option<String>,
    /// Directory for output files and the score log
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Embedding parameter override, name=value (repeatable)
    #[arg(long = "param", global = true)]
    params: Vec<String>,
    /// Classifier parameter override, name=value (repeatable)
    #[arg(long = "classifier-param", global = true)]
    classifier_params: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Embed the graph and write vectors as CSV
    Embed {
        /// Embedding dimension (shorthand for --param d=N)
        #[arg(long)]
        dim: Option<usize>,
        /// Output CSV path
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Embed (or load an embedding), train the classifier, score one split
    Evaluate {
        /// Reuse a saved embedding CSV instead of embedding
        #[arg(long)]
        embedding: Option<PathBuf>,
        /// Split to score: val or test
        #[arg(long, default_value = "test")]
        on: String,
        /// Also write the single score row to this CSV
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Random hyperparameter search with one final test evaluation
    Search {
        /// Trial log CSV path
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Score a fixed embedding at growing training fractions
    Sweep {
        /// Split to score: val or test
        #[arg(long, default_value = "test")]
        on: String,
        /// Sweep CSV path
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Bin search trials by embedding dimension
    DimensionStudy {
        /// Existing trial log to bin; omitted = run the configured search
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output CSV path
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Most-frequent-label reference score on the test split
    Baseline,
    /// Aggregate the score log into a methods-by-datasets table
    Report {
        /// Directory holding scores.csv (default: --out-dir)
        #[arg(long)]
        results_dir: Option<PathBuf>,
        /// Output CSV path
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn overrides_from(g: &GlobalArgs) -> config::Overrides {
    config::Overrides {
        dataset: g.dataset.clone(),
        edges: g.edges.clone(),
        labels: g.labels.clone(),
        task: g.task,
        directed: g.directed,
        weighted: g.weighted,
        label_mode: g.label_mode.clone(),
        method: g.method,
        classifier: g.classifier,
        fractions: g.fractions.clone(),
        trials: g.trials,
        master_seed: g.master_seed,
        workers: g.workers,
        deterministic: g.deterministic,
        rule: g.rule.clone(),
        out_dir: g.out_dir.clone(),
        params: g.params.clone(),
        classifier_params: g.classifier_params.clone(),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let file = match &cli.globals.config {
        Some(path) => config::load_config(path)?,
        None => config::FileConfig::default(),
    };
    let settings = config::resolve(file, overrides_from(&cli.globals))?;
    let workers = std::env::var("NETEMB_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .or(settings.workers);
    if let Some(w) = workers {
        // ignore the error when a pool already exists (tests call run twice)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build_global();
    }
    match cli.cmd {
        Cmd::Embed { dim, output } => commands::cmd_embed(&settings, dim, output),
        Cmd::Evaluate { embedding, on, output } => {
            commands::cmd_evaluate(&settings, embedding, &on, output)
        }
        Cmd::Search { output } => commands::cmd_search(&settings, output),
        Cmd::Sweep { on, output } => commands::cmd_sweep(&settings, &on, output),
        Cmd::DimensionStudy { input, output } => {
            commands::cmd_dimension_study(&settings, input, output)
        }
        Cmd::Baseline => commands::cmd_baseline(&settings),
        Cmd::Report { results_dir, output } => {
            commands::cmd_report(&settings, results_dir, output)
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = match run(cli) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Core(e)) => {
            eprintln!("error: {e}");
            match e.kind() {
                netemb::ErrorKind::Data => 2,
                netemb::ErrorKind::Numeric => 3,
            }
        }
    };
    std::process::exit(code);
}
