//! `faithsum`: corpus generation, corruption, training and evaluation.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use faithsum_core::corruption::Policy;

#[derive(Parser)]
#[command(name = "faithsum", version, about = "Contrastive training for faithful summarization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled synthetic corpus from a TOML spec.
    GenerateCorpus(GenerateArgs),
    /// Split a corpus into train and test files.
    SplitCorpus(SplitArgs),
    /// Corrupt reference summaries into training triplets.
    BuildTriplets(TripletArgs),
    /// Train a model on triplets.
    Train(TrainArgs),
    /// Generate summaries for a corpus and score them.
    Evaluate(EvaluateArgs),
    /// Compare a baseline evaluation with a treated one.
    Compare(CompareArgs),
}

#[derive(Args)]
pub struct GenerateArgs {
    /// Corpus spec (TOML). Defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the spec's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Corpus JSONL; gazetteer and lexicon TSV files are written beside it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 0.85)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub train_out: PathBuf,
    #[arg(long)]
    pub test_out: PathBuf,
}

#[derive(Args)]
pub struct TripletArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub gazetteer: PathBuf,
    #[arg(long)]
    pub lexicon: PathBuf,
    /// ENTITY_ONLY, DEFECT_ONLY or RANDOM_EITHER.
    #[arg(long, default_value_t = Policy::RandomEither)]
    pub policy: Policy,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Size of the corpus-wide fallback entity list.
    #[arg(long, default_value_t = faithsum_core::corruption::DEFAULT_TOP_K)]
    pub top_k: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Samples that could not be corrupted (default: `<out>.skipped.jsonl`).
    #[arg(long)]
    pub skip_log: Option<PathBuf>,
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub triplets: PathBuf,
    /// Skip log from build-triplets; these samples train with the ordinary loss.
    #[arg(long)]
    pub skipped: Option<PathBuf>,
    /// Training config (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for checkpoints, history and manifest.
    #[arg(long)]
    pub out: PathBuf,
    /// Continue from this checkpoint instead of a fresh initialization. Its
    /// vocabulary is kept and its dimensions must match the config.
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// Corpus used to rebuild negatives each epoch when the config sets
    /// `resample_negatives`.
    #[arg(long, requires_all = ["gazetteer", "lexicon"])]
    pub resample_corpus: Option<PathBuf>,
    #[arg(long)]
    pub gazetteer: Option<PathBuf>,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Labeled corpus or `{id, source, reference}` JSONL.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub gazetteer: PathBuf,
    #[arg(long)]
    pub lexicon: PathBuf,
    /// Evaluation JSON; verdicts go to `<out>.verdicts.jsonl`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub baseline: PathBuf,
    #[arg(long)]
    pub treated: PathBuf,
    /// Report JSON; a text table goes to `<out>.txt`.
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenerateCorpus(a) => commands::generate_corpus(a),
        Command::SplitCorpus(a) => commands::split_corpus(a),
        Command::BuildTriplets(a) => commands::build_triplets(a),
        Command::Train(a) => commands::train(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Compare(a) => commands::compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
