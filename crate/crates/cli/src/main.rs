//! `sociface` command line. Exit codes: 0 success, 1 runtime error, 2 usage
//! error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "sociface",
    version,
    about = "Social-context face identity engine"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthetic corpus tools.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Run one experiment and write `<name>.csv` and `<name>.json`.
    Exp(ExpArgs),
    /// Social store tools.
    #[command(subcommand)]
    Store(StoreCmd),
    /// Scripted dialogue runs.
    #[command(subcommand)]
    Dialogue(DialogueCmd),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

/// Where the corpus spec comes from.
#[derive(Debug, Clone, Args)]
struct SpecArgs {
    /// Corpus spec JSON; the built-in default when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Overrides the spec's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum CorpusCmd {
    /// Write the spec, a manifest and sample PNGs under `--out`.
    Gen {
        /// Corpus spec JSON (see `corpus spec`).
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "corpus")]
        out: PathBuf,
    },
    /// Print the default corpus spec.
    Spec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Experiment {
    Threshold,
    Window,
    Cost,
    Transfer,
}

impl Experiment {
    fn name(self) -> &'static str {
        match self {
            Experiment::Threshold => "threshold",
            Experiment::Window => "window",
            Experiment::Cost => "cost",
            Experiment::Transfer => "transfer",
        }
    }
}

#[derive(Debug, Args)]
struct ExpArgs {
    experiment: Experiment,
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, default_value = "reports")]
    out: PathBuf,
    /// Decision threshold for the window sweep.
    #[arg(long)]
    theta: Option<f64>,
    /// Evidence window for the threshold sweep.
    #[arg(long)]
    window: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum StoreCmd {
    /// Merge a social export (store document layout) into the store file.
    Ingest {
        #[arg(long)]
        store: PathBuf,
        export: PathBuf,
    },
    /// Print a query result as JSON.
    Query {
        #[arg(long)]
        store: PathBuf,
        #[command(subcommand)]
        query: Query,
    },
}

#[derive(Debug, Subcommand)]
enum Query {
    /// Person card and friend list.
    Person { id: String },
    /// Mutual friends of two persons.
    Mutual { a: String, b: String },
    /// Interaction records of a person.
    Memory { id: String },
}

#[derive(Debug, Subcommand)]
enum DialogueCmd {
    /// Run the scripted demo encounter and print its transcript.
    Demo {
        /// Print the transcript as JSON.
        #[arg(long)]
        json: bool,
        /// Also write transcript.txt and the resulting store.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    bind: String,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[command(flatten)]
    spec: SpecArgs,
    /// Store file; created from the corpus identities when missing.
    #[arg(long)]
    store: Option<PathBuf>,
    /// Report directory for experiment runs.
    #[arg(long, default_value = "reports")]
    out: PathBuf,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    window: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Corpus(CorpusCmd::Gen { spec, seed, out }) => commands::corpus_gen(
            &SpecArgs {
                spec: Some(spec),
                seed,
            },
            &out,
        ),
        Command::Corpus(CorpusCmd::Spec) => commands::corpus_spec(),
        Command::Exp(args) => commands::exp(&args),
        Command::Store(StoreCmd::Ingest { store, export }) => {
            commands::store_ingest(&store, &export)
        }
        Command::Store(StoreCmd::Query { store, query }) => commands::store_query(&store, &query),
        Command::Dialogue(DialogueCmd::Demo { json, out }) => {
            commands::dialogue_demo(json, out.as_deref())
        }
        Command::Serve(args) => commands::serve(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
