use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ner_forge::augment::Strategy;
use ner_forge::{EntityClass, TagScheme};

#[derive(Debug, Parser)]
#[command(name = "ner-forge", version, about = "NER augmentation, evaluation and annotation correction")]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Suppress progress messages on stderr.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    /// Format of the report printed on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Tagging scheme of CoNLL inputs.
    #[arg(long, global = true, default_value = "auto")]
    pub scheme: TagScheme,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate mention-replacement examples.
    Augment(AugmentArgs),
    /// Score predictions against gold annotations.
    Eval(EvalArgs),
    /// Compare consistent errors of two groups of runs.
    DiffErrors(DiffErrorsArgs),
    /// Write context windows as JSON lines.
    Window(WindowArgs),
    /// Flag likely annotation errors.
    Flag(FlagArgs),
    /// Apply review decisions to a corpus.
    Apply(ApplyArgs),
    /// Serve the review API and UI.
    Review(ReviewArgs),
    /// Train the averaged-perceptron tagger.
    Train(TrainArgs),
    /// Tag a corpus or a windows file with a trained model.
    Tag(TagArgs),
    /// Corpus, inventory and name-overlap statistics.
    #[command(subcommand)]
    Stats(StatsCommand),
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Name inventory (JSON).
    #[arg(long)]
    pub inventory: PathBuf,
    /// Generated examples per original sentence, e.g. 0.1.
    #[arg(long, allow_hyphen_values = true)]
    pub rate: String,
    #[arg(long, default_value = "add")]
    pub strategy: Strategy,
    /// Entity class whose mentions are replaced.
    #[arg(long, default_value = "PER")]
    pub target: EntityClass,
    #[arg(long)]
    pub output: PathBuf,
    /// Replacement log (JSON lines).
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, conflicts_with = "runs", required_unless_present = "runs")]
    pub pred: Option<PathBuf>,
    /// Directory of prediction files, one per run.
    #[arg(long)]
    pub runs: Option<PathBuf>,
    /// Classes to score; others are ignored in gold and predictions.
    #[arg(long, value_delimiter = ',')]
    pub classes: Vec<EntityClass>,
}

#[derive(Debug, Args)]
pub struct DiffErrorsArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub runs_a: PathBuf,
    #[arg(long)]
    pub runs_b: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub top: usize,
    #[arg(long, value_delimiter = ',')]
    pub classes: Vec<EntityClass>,
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Sentences of context on each side.
    #[arg(long)]
    pub size: usize,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct FlagArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Character-name list, one name per line.
    #[arg(long)]
    pub names: PathBuf,
    /// Model predictions for the same corpus.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
    /// Flag PER spans containing any lowercase token.
    #[arg(long)]
    pub strict_capitalization: bool,
}

#[derive(Debug, Args)]
pub struct ApplyArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub flags: PathBuf,
    #[arg(long)]
    pub decisions: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReviewArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub flags: PathBuf,
    /// Decisions file; created if missing, appended to otherwise.
    #[arg(long)]
    pub decisions: PathBuf,
    #[arg(long, env = "NER_FORGE_PORT", default_value_t = 7878)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
    /// Directory of static UI assets.
    #[arg(long)]
    pub assets: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    #[arg(long)]
    pub max_presentations: Option<usize>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct TagArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// CoNLL file, or a windows file ending in `.jsonl`.
    #[arg(long)]
    pub input: PathBuf,
    /// Sentences of context on each side (CoNLL input only).
    #[arg(long, default_value_t = 0)]
    pub context: usize,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    /// Share of PER tokens matching a name set exactly, partially or not at all.
    Overlap {
        #[arg(long)]
        eval: PathBuf,
        #[arg(long)]
        names: PathBuf,
        /// Shortest substring kept in the subword vocabulary.
        #[arg(long, default_value_t = 3)]
        min_len: usize,
    },
    /// Category sizes of a name inventory.
    Inventory {
        #[arg(long)]
        inventory: PathBuf,
    },
    /// Sentence, token and mention counts of a corpus.
    Corpus {
        #[arg(long)]
        input: PathBuf,
    },
}
