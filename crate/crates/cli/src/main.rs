//! `gram-mover` command-line front end.

mod artifacts;
mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use config::Settings;
use error::CliError;

#[derive(Parser)]
#[command(name = "gram-mover", version, about = "Near-duplicate recipe detection with character n-gram mover's distance")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Train (or load) instruction embeddings and train ingredient embeddings.
    TrainEmbeddings,
    /// Prepare the training-side histograms for retrieval.
    BuildIndex,
    /// Retrieve nearest training recipes and filter by ingredients distance.
    ExtractCandidates,
    /// Extract candidates with the tf-idf cosine baseline.
    Baseline,
    /// Leave-one-out grid search of the pair classifiers.
    Classify,
    /// Per-method label counts and pairs found by a single method.
    Report,
    /// Generate a synthetic corpus with planted near-duplicates.
    SynthCorpus,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::TrainEmbeddings => "train-embeddings",
            Command::BuildIndex => "build-index",
            Command::ExtractCandidates => "extract-candidates",
            Command::Baseline => "baseline",
            Command::Classify => "classify",
            Command::Report => "report",
            Command::SynthCorpus => "synth-corpus",
        }
    }
}

#[derive(Args)]
struct GlobalArgs {
    /// key = value settings file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Worker threads; 1 gives bitwise-reproducible runs.
    #[arg(long, global = true, env = "GRAM_MOVER_THREADS")]
    threads: Option<usize>,

    #[arg(long, global = true, value_name = "PATH")]
    corpus: Option<String>,

    /// Split date (YYYY-MM-DD); later recipes form the test side.
    #[arg(long, global = true, value_name = "DATE")]
    cutoff: Option<String>,

    /// word or gram3.
    #[arg(long, global = true)]
    granularity: Option<String>,

    /// train-sgns or load-vectors.
    #[arg(long, global = true)]
    embedding_source: Option<String>,

    /// Pretrained vector file for load-vectors.
    #[arg(long, global = true, value_name = "PATH")]
    vectors: Option<String>,

    /// cosine or euclidean.
    #[arg(long, global = true)]
    metric: Option<String>,

    #[arg(long, global = true)]
    k: Option<String>,

    /// Largest ingredients distance kept.
    #[arg(long, global = true)]
    threshold: Option<String>,

    #[arg(long, global = true)]
    seed: Option<String>,

    #[arg(long, global = true, value_name = "DIR")]
    output_dir: Option<String>,

    /// Gold label file (JSON Lines of query_id, candidate_id, label).
    #[arg(long, global = true, value_name = "PATH")]
    gold: Option<String>,

    /// Label given to pairs missing from the gold file.
    #[arg(long, global = true, value_name = "LABEL")]
    unlisted_as: Option<String>,

    /// Any other setting, as KEY=VALUE.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl GlobalArgs {
    fn settings(&self) -> Result<Settings, CliError> {
        let mut settings = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                Settings::parse_file(&text, path)?
            }
            None => Settings::default(),
        };
        let mut cli = Settings::default();
        cli.apply_assignments(&self.set)?;
        let named = [
            ("corpus", &self.corpus),
            ("cutoff", &self.cutoff),
            ("granularity", &self.granularity),
            ("embedding_source", &self.embedding_source),
            ("vectors", &self.vectors),
            ("metric", &self.metric),
            ("k", &self.k),
            ("threshold", &self.threshold),
            ("seed", &self.seed),
            ("output_dir", &self.output_dir),
            ("gold", &self.gold),
            ("unlisted_as", &self.unlisted_as),
        ];
        for (key, value) in named {
            if let Some(v) = value {
                cli.set(key, v.clone())?;
            }
        }
        settings.merge(cli);
        Ok(settings)
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.global.threads {
        if threads == 0 {
            return Err(CliError::Config("field `threads`: must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("field `threads`: {e}")))?;
    }
    let config = cli.global.settings()?.resolve()?;
    match cli.command {
        Command::TrainEmbeddings => commands::train_embeddings(&config),
        Command::BuildIndex => commands::build_index(&config),
        Command::ExtractCandidates => commands::extract(&config),
        Command::Baseline => commands::baseline(&config),
        Command::Classify => commands::classify(&config),
        Command::Report => commands::report(&config),
        Command::SynthCorpus => commands::synth_corpus(&config),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}
