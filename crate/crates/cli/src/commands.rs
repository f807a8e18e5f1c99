use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use figura_core::config::Config;
use figura_core::connector::rank_connecting_words;
use figura_core::embedding::{load_embeddings_file, EmbeddingStore, LoadOptions};
use figura_core::events::{read_events_file, record_and_report};
use figura_core::lexicon::{select_sources, select_targets, SourceParams, TargetParams};
use figura_core::pipeline::{batch_generate, read_records, write_records, BatchRequest};
use figura_core::tables::{
    open, read_concreteness_table, read_frequency_table, read_pos_table, read_word_list,
    utterance_frequencies, write_frequency_table, PosTable,
};
use figura_service::AppState;

use crate::args::{
    ConnectArgs, ExportArgs, FreqArgs, GenerateArgs, LexiconArgs, ReplayArgs, ServeArgs,
};
use crate::error::CliError;

pub const ANNOTATION_HEADER: [&str; 5] = ["id", "text", "smoothness", "properness", "novelty"];

/// Output written through a temporary sibling and renamed into place, so an
/// interrupted run never leaves a truncated file behind.
struct Output {
    path: PathBuf,
    partial: PathBuf,
    writer: BufWriter<File>,
}

impl Output {
    fn create(path: &Path) -> Result<Self, CliError> {
        let mut name = path.file_name().unwrap_or_default().to_os_string();
        name.push(".partial");
        let partial = path.with_file_name(name);
        let file = File::create(&partial).map_err(CliError::file(path))?;
        Ok(Self {
            path: path.to_path_buf(),
            partial,
            writer: BufWriter::new(file),
        })
    }

    fn commit(self) -> Result<(), CliError> {
        let Output {
            path,
            partial,
            writer,
        } = self;
        writer
            .into_inner()
            .map_err(|e| e.into_error())
            .and_then(|f| f.sync_all())
            .and_then(|_| std::fs::rename(&partial, &path))
            .map_err(CliError::file(&path))
    }
}

fn required(path: &Option<PathBuf>, key: &str) -> Result<PathBuf, CliError> {
    path.clone().ok_or_else(|| {
        CliError::Usage(format!("no path for `data.{key}`; pass a flag or set it in the configuration"))
    })
}

fn word_list(path: &Path, lowercase: bool) -> Result<Vec<String>, CliError> {
    read_word_list(open(path)?, lowercase).map_err(CliError::within(path))
}

fn store_and_pos(config: &Config) -> Result<(EmbeddingStore, PosTable), CliError> {
    let lowercase = config.pipeline.lowercase;
    let embeddings = required(&config.data.embeddings, "embeddings")?;
    let store = load_embeddings_file(&embeddings, LoadOptions { lowercase })
        .map_err(CliError::within(&embeddings))?;
    let pos_path = required(&config.data.pos, "pos")?;
    let pos = read_pos_table(open(&pos_path)?, lowercase).map_err(CliError::within(&pos_path))?;
    Ok((store, pos))
}

pub fn freq(config: &Config, args: &FreqArgs) -> Result<String, CliError> {
    let table = utterance_frequencies(open(&args.chat)?, config.pipeline.lowercase)
        .map_err(CliError::within(&args.chat))?;
    let mut out = Output::create(&args.out)?;
    write_frequency_table(&mut out.writer, &table)?;
    out.commit()?;
    Ok(format!("freq: {} words -> {}", table.len(), args.out.display()))
}

pub fn lexicon(config: &Config, args: &LexiconArgs) -> Result<String, CliError> {
    let lowercase = config.pipeline.lowercase;
    let (store, pos) = store_and_pos(config)?;
    let freq_path = required(&config.data.frequency, "frequency")?;
    let freq = read_frequency_table(open(&freq_path)?, lowercase).map_err(CliError::within(&freq_path))?;
    let conc_path = required(&config.data.concreteness, "concreteness")?;
    let (concreteness, clamped) =
        read_concreteness_table(open(&conc_path)?, lowercase).map_err(CliError::within(&conc_path))?;
    for d in &clamped {
        tracing::warn!("{}: {d}", conc_path.display());
    }
    let themes = word_list(&args.themes, lowercase)?;
    let targets = select_targets(
        &themes,
        &store,
        &freq,
        TargetParams {
            expansion_k: args.expansion_k,
            min_freq: args.min_freq,
        },
    )?;
    let sources = select_sources(
        &freq,
        &pos,
        &concreteness,
        SourceParams {
            top_by_freq: args.top_by_freq,
            top_by_conc: args.top_by_conc,
        },
    )?;
    for (path, words) in [
        (&args.targets_out, targets.words().collect::<Vec<_>>()),
        (&args.sources_out, sources.words().collect()),
    ] {
        let mut out = Output::create(path)?;
        for w in words {
            writeln!(out.writer, "{w}").map_err(CliError::file(path))?;
        }
        out.commit()?;
    }
    Ok(format!(
        "lexicon: {} targets -> {}, {} sources -> {}",
        targets.entries.len(),
        args.targets_out.display(),
        sources.entries.len(),
        args.sources_out.display()
    ))
}

pub fn connect(config: &Config, args: &ConnectArgs) -> Result<String, CliError> {
    let (store, pos) = store_and_pos(config)?;
    let params = config.pipeline_params();
    let k = args.k.unwrap_or(params.k);
    let target = store.normalize(&args.target).into_owned();
    let source = store.normalize(&args.source).into_owned();
    let ranking = rank_connecting_words(&store, &target, &source, args.pos, &pos, k, params.beta)?;
    for d in &ranking.diagnostics {
        tracing::warn!("{d}");
    }
    let mut rows = String::from("word\ttotal\tdist_target\tdist_source\timbalance\n");
    for c in &ranking.candidates {
        let s = &c.score;
        rows.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            c.word, s.total, s.dist_target, s.dist_source, s.imbalance
        ));
    }
    let summary = format!(
        "connect: {} {} connectors for {target} and {source}",
        ranking.candidates.len(),
        args.pos
    );
    match &args.out {
        Some(path) => {
            let mut out = Output::create(path)?;
            out.writer.write_all(rows.as_bytes()).map_err(CliError::file(path))?;
            out.commit()?;
            Ok(format!("{summary} -> {}", path.display()))
        }
        None => {
            print!("{rows}");
            Ok(summary)
        }
    }
}

pub fn generate(config: &Config, args: &GenerateArgs) -> Result<String, CliError> {
    let lowercase = config.pipeline.lowercase;
    let targets_path = args.targets.clone().map_or_else(|| required(&config.data.targets, "targets"), Ok)?;
    let sources_path = args.sources.clone().map_or_else(|| required(&config.data.sources, "sources"), Ok)?;
    let request = BatchRequest {
        targets: word_list(&targets_path, lowercase)?,
        sources: word_list(&sources_path, lowercase)?,
        pos: args.pos,
        limit: args.limit,
    };
    let resources = config.load_resources()?;
    let records = batch_generate(&resources, &request, &config.pipeline_params())?;
    let mut out = Output::create(&args.out)?;
    write_records(&mut out.writer, &records)?;
    out.commit()?;
    Ok(format!(
        "generate: {} metaphors from {} targets x {} sources -> {}",
        records.len(),
        request.targets.len(),
        request.sources.len(),
        args.out.display()
    ))
}

pub fn export_annotations(args: &ExportArgs) -> Result<String, CliError> {
    let records = read_records(open(&args.input)?).map_err(CliError::within(&args.input))?;
    let out = Output::create(&args.out)?;
    let csv_err = |source| CliError::Csv {
        path: args.out.clone(),
        source,
    };
    let mut sheet = csv::Writer::from_writer(out.writer);
    sheet.write_record(ANNOTATION_HEADER).map_err(csv_err)?;
    for r in &records {
        sheet
            .write_record([r.metaphor.id.as_str(), r.metaphor.text.as_str(), "", "", ""])
            .map_err(csv_err)?;
    }
    let writer = sheet.into_inner().map_err(|e| CliError::file(&args.out)(e.into_error()))?;
    Output {
        path: out.path,
        partial: out.partial,
        writer,
    }
    .commit()?;
    Ok(format!("export-annotations: {} rows -> {}", records.len(), args.out.display()))
}

pub fn replay(args: &ReplayArgs) -> Result<String, CliError> {
    let report = read_events_file(&args.log)?;
    if report.torn_tail {
        tracing::warn!(path = %args.log.display(), "ignored a torn final event");
    }
    let stats = record_and_report(&report.events).map_err(|e| {
        CliError::Core(figura_core::Error::Data(format!("{}: {e}", args.log.display())))
    })?;
    let mut summary = format!("replay: {} events;", report.events.len());
    for (name, s) in [
        ("literal", stats.literal),
        ("one_round", stats.one_round),
        ("two_round", stats.two_round),
    ] {
        summary.push_str(&format!(" {name} {}/{} ({:.2})", s.followed_up, s.delivered, s.rate));
    }
    if let Some(path) = &args.out {
        let mut out = Output::create(path)?;
        serde_json::to_writer_pretty(&mut out.writer, &stats)
            .map_err(|e| CliError::Core(figura_core::Error::Data(e.to_string())))?;
        out.writer.write_all(b"\n").map_err(CliError::file(path))?;
        out.commit()?;
    }
    Ok(summary)
}

pub fn serve(config: &Config, _args: &ServeArgs) -> Result<String, CliError> {
    let state = Arc::new(AppState::from_config(config)?);
    let bind = config.service.bind.clone();
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Startup(figura_service::StartupError::Serve(e)))?;
    println!("serve: listening on {bind}");
    runtime.block_on(figura_service::serve(state, &bind))?;
    Ok("serve: stopped".to_string())
}
