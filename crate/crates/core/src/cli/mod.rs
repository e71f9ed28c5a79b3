//! Command-line front end. Every subcommand reads files, calls the library
//! and writes outputs carrying a manifest.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use certainty::Error;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_EXTERNAL: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "certainty", version, about = "Scientific-finding certainty pipeline", args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Serialize)]
pub struct Global {
    /// TOML file whose keys mirror the flags. Top-level keys apply to every
    /// subcommand, `[name]` tables to one. Flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "FILE")]
    pub hedge_lexicon: Option<PathBuf>,
    #[arg(long, global = true, value_name = "FILE")]
    pub verb_lexicon: Option<PathBuf>,
    #[arg(long, global = true, value_name = "FILE")]
    pub stopwords: Option<PathBuf>,
    /// Abbreviations that never end a sentence.
    #[arg(long, global = true, value_name = "FILE")]
    pub abbreviations: Option<PathBuf>,
    /// How hedge entries are matched.
    #[arg(long, global = true, value_enum)]
    pub hedge_match: Option<HedgeMatch>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HedgeMatch {
    Token,
    Phrase,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Bow,
    Hedge,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    HedgeStratified,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(untagged)]
pub enum Command {
    /// Validate raw exports, filter news and write a corpus directory.
    Ingest(IngestArgs),
    /// Extract abstract and news findings from a corpus directory.
    Extract(ExtractArgs),
    /// Draw a hedge-stratified annotation sample.
    Sample(SampleArgs),
    /// Split annotated findings into train/val/test.
    Split(SplitArgs),
    /// Fit a scorer and save it as JSON.
    Train(TrainArgs),
    /// Score findings with a saved model or an external scorer.
    Score(ScoreArgs),
    /// Correlation and F1 of scores against annotations.
    Eval(EvalArgs),
    /// Krippendorff's alpha per annotation task.
    Agreement(AgreementArgs),
    /// Pair news findings with abstract findings of the same paper.
    Match(MatchArgs),
    /// Run regressions and descriptive figures.
    Analyze(AnalyzeArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Extract(_) => "extract",
            Command::Sample(_) => "sample",
            Command::Split(_) => "split",
            Command::Train(_) => "train",
            Command::Score(_) => "score",
            Command::Eval(_) => "eval",
            Command::Agreement(_) => "agreement",
            Command::Match(_) => "match",
            Command::Analyze(_) => "analyze",
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct IngestArgs {
    #[arg(long, value_name = "FILE")]
    pub news: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub papers: PathBuf,
    #[arg(long, value_name = "DIR")]
    #[serde(skip)]
    pub out: PathBuf,
    /// Drop news articles longer than this many words.
    #[arg(long, default_value_t = certainty::corpus::DEFAULT_NEWS_LENGTH_CUTOFF)]
    pub length_cutoff: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct ExtractArgs {
    #[arg(long, value_name = "DIR")]
    pub corpus: PathBuf,
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct SampleArgs {
    #[arg(long, value_name = "FILE")]
    pub findings: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "hedge-stratified")]
    pub strategy: Strategy,
    /// Stratum shares for 0, 1 and 2+ hedges.
    #[arg(long, value_delimiter = ',', action = clap::ArgAction::Set, default_values_t = certainty::evalkit::DEFAULT_STRATA_PROPORTIONS)]
    pub proportions: Vec<f64>,
    /// Write the sampled findings here; the stratum report always goes to stdout.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct SplitArgs {
    #[arg(long, value_name = "FILE")]
    pub annotations: PathBuf,
    /// Ids of the random evaluation set, one per line; kept out of the split.
    #[arg(long, value_name = "FILE")]
    pub random_set: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct TrainArgs {
    #[arg(long, value_name = "FILE")]
    pub findings: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub annotations: PathBuf,
    #[arg(long, value_enum)]
    pub model: ModelKind,
    #[arg(long, value_name = "FILE")]
    pub split: PathBuf,
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long, default_value_t = certainty::scoring::bow::DEFAULT_RIDGE_PENALTY)]
    pub ridge_penalty: f64,
    #[arg(long, default_value_t = certainty::scoring::bow::DEFAULT_VOCAB_CAPACITY)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = 3)]
    pub max_ngram: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct ScoreArgs {
    #[arg(long, value_name = "FILE")]
    pub findings: PathBuf,
    /// Saved model from `train`.
    #[arg(long, value_name = "FILE", conflicts_with = "external", required_unless_present = "external")]
    pub model: Option<PathBuf>,
    /// External scorer: a command line, or `tcp://host:port`.
    #[arg(long, value_name = "CMD|ADDR")]
    pub external: Option<String>,
    #[arg(long, default_value_t = 30_000)]
    pub timeout_ms: u64,
    #[arg(long, default_value_t = 32)]
    pub max_in_flight: usize,
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    #[arg(long, value_name = "FILE")]
    pub scores: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub annotations: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub split: PathBuf,
    /// Aspect classes averaged into the mean F1.
    #[arg(long, value_delimiter = ',', action = clap::ArgAction::Set, default_values = ["certain", "uncertain"])]
    pub f1_classes: Vec<String>,
    /// Write the CSV report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct AgreementArgs {
    #[arg(long, value_name = "FILE")]
    pub annotations: PathBuf,
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct MatchArgs {
    #[arg(long, value_name = "DIR")]
    pub corpus: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub findings: PathBuf,
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long, default_value_t = certainty::matching::DEFAULT_MIN_OVERLAP)]
    pub min_overlap: usize,
    #[arg(long, default_value_t = certainty::matching::DEFAULT_MIN_JACCARD)]
    pub min_jaccard: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct AnalyzeArgs {
    /// Comma-separated analyses (rq1..rq5, fig2, fig3) or `all`.
    #[arg(long, value_delimiter = ',', action = clap::ArgAction::Set, required = true)]
    pub rq: Vec<String>,
    /// Work directory holding papers.jsonl, news.jsonl, findings.jsonl,
    /// scores.jsonl, pairs.jsonl and optionally annotations.jsonl.
    #[arg(long = "in", value_name = "DIR")]
    pub input: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub findings: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub scores: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub pairs: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub annotations: Option<PathBuf>,
    /// Heteroskedasticity-robust (HC1) standard errors.
    #[arg(long)]
    pub robust_se: bool,
    #[arg(long, value_name = "DIR")]
    #[serde(skip)]
    pub out: PathBuf,
}

/// A failure with its exit code and the machine-readable kind.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub kind: String,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_USAGE,
            kind: "usage".into(),
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": { "kind": self.kind, "message": self.message, "exit_code": self.code } }).to_string()
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match e {
            Error::Transport(_) => EXIT_EXTERNAL,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

/// Parses `argv` (config file applied), runs the subcommand and returns the
/// process exit code. Help and version requests print and return 0.
pub fn run(argv: Vec<String>) -> i32 {
    match parse(argv).and_then(|cli| commands::dispatch(&cli)) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("{}", f.to_json());
            f.code
        }
    }
}

fn try_parse(argv: &[String]) -> Result<Cli, Failure> {
    Cli::try_parse_from(argv).map_err(|e| {
        use clap::error::ErrorKind;
        if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
            let _ = e.print();
            std::process::exit(if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand { EXIT_USAGE } else { 0 });
        }
        let text = e.to_string();
        let message: Vec<&str> = text
            .lines()
            .map(str::trim)
            .take_while(|l| !l.is_empty() && !l.starts_with("Usage:"))
            .collect();
        Failure::usage(message.join(" ").trim_start_matches("error: "))
    })
}

fn parse(argv: Vec<String>) -> Result<Cli, Failure> {
    use clap::CommandFactory;
    let commands: Vec<String> = Cli::command().get_subcommands().map(|c| c.get_name().to_string()).collect();
    try_parse(&config::inject(argv, &commands)?)
}
