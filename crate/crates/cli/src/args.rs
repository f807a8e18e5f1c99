use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use figura_core::pos::Pos;

/// Offline metaphor pipeline and dialogue service.
#[derive(Debug, Parser)]
#[command(name = "figura", version)]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Override one configuration value; repeatable, applied after FIGURA_* variables.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE", value_parser = parse_assignment)]
    pub overrides: Vec<(String, String)>,

    #[command(subcommand)]
    pub command: Command,
}

fn parse_assignment(s: &str) -> Result<(String, String), String> {
    let (key, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected SECTION.KEY=VALUE, got `{s}`"))?;
    if !key.contains('.') {
        return Err(format!("expected SECTION.KEY=VALUE, got `{s}`"));
    }
    Ok((key.trim().to_string(), value.to_string()))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Utterance-containment word frequencies from a chat log.
    Freq(FreqArgs),
    /// Select target and source concepts.
    Lexicon(LexiconArgs),
    /// Rank connecting words for one target and source.
    Connect(ConnectArgs),
    /// Generate metaphors for every target and source pair.
    Generate(GenerateArgs),
    /// Write an annotation sheet for generated metaphors.
    ExportAnnotations(ExportArgs),
    /// Follow-up statistics from an event log.
    Replay(ReplayArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

/// Flags that stand in for `data.*` configuration keys.
#[derive(Debug, Default, Args)]
pub struct DataFlags {
    #[arg(long, value_name = "PATH")]
    pub embeddings: Option<PathBuf>,
    /// Word to part-of-speech table.
    #[arg(long = "pos-table", value_name = "PATH")]
    pub pos_table: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub frequency: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub concreteness: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub stopwords: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub templates: Option<PathBuf>,
}

impl DataFlags {
    pub fn overrides(&self) -> Vec<(String, String)> {
        [
            ("embeddings", &self.embeddings),
            ("pos", &self.pos_table),
            ("frequency", &self.frequency),
            ("concreteness", &self.concreteness),
            ("corpus", &self.corpus),
            ("stopwords", &self.stopwords),
            ("templates", &self.templates),
        ]
        .into_iter()
        .filter_map(|(key, path)| Some((format!("data.{key}"), path.as_ref()?.display().to_string())))
        .collect()
    }
}

#[derive(Debug, Args)]
pub struct FreqArgs {
    /// Chat log, one utterance per line.
    #[arg(long, value_name = "PATH")]
    pub chat: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LexiconArgs {
    /// Theme words seeding the target set.
    #[arg(long, value_name = "PATH")]
    pub themes: PathBuf,
    #[arg(long = "targets-out", value_name = "PATH")]
    pub targets_out: PathBuf,
    #[arg(long = "sources-out", value_name = "PATH")]
    pub sources_out: PathBuf,
    #[arg(long = "expansion-k", default_value_t = 5)]
    pub expansion_k: usize,
    #[arg(long = "min-freq", default_value_t = 1e-5)]
    pub min_freq: f64,
    #[arg(long = "top-by-freq", default_value_t = 10_000)]
    pub top_by_freq: usize,
    #[arg(long = "top-by-conc", default_value_t = 3_000)]
    pub top_by_conc: usize,
    #[command(flatten)]
    pub data: DataFlags,
}

#[derive(Debug, Args)]
pub struct ConnectArgs {
    #[arg(long)]
    pub target: String,
    #[arg(long)]
    pub source: String,
    #[arg(long)]
    pub pos: Pos,
    /// Defaults to `pipeline.k`.
    #[arg(long)]
    pub k: Option<usize>,
    /// Write rows here instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataFlags,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Target word list; defaults to `data.targets`.
    #[arg(long, value_name = "PATH")]
    pub targets: Option<PathBuf>,
    /// Source word list; defaults to `data.sources`.
    #[arg(long, value_name = "PATH")]
    pub sources: Option<PathBuf>,
    /// Restrict connectors to one part of speech.
    #[arg(long)]
    pub pos: Option<Pos>,
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[command(flatten)]
    pub data: DataFlags,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Metaphor records, JSON lines.
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long, value_name = "PATH")]
    pub log: PathBuf,
    /// Write the statistics as JSON here.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Defaults to `service.bind`.
    #[arg(long)]
    pub bind: Option<String>,
    /// Metaphor records offered in conversation; defaults to `data.inventory`.
    #[arg(long, value_name = "PATH")]
    pub inventory: Option<PathBuf>,
    /// Defaults to `service.event_log`.
    #[arg(long = "event-log", value_name = "PATH")]
    pub event_log: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataFlags,
}
