//! Readers for the tab-separated lexical tables and plain word lists.
//!
//! All inputs are UTF-8, one record per line. Blank lines and lines starting
//! with `#` are ignored.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::pos::Pos;

pub type FrequencyTable = HashMap<String, f64>;
pub type ConcretenessTable = HashMap<String, f64>;
pub type PosTable = HashMap<String, Pos>;

pub const CONCRETENESS_MIN: f64 = 1.0;
pub const CONCRETENESS_MAX: f64 = 5.0;

pub fn open(path: impl AsRef<Path>) -> Result<BufReader<File>> {
    let path = path.as_ref();
    File::open(path).map(BufReader::new).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn key(token: &str, lowercase: bool) -> String {
    if lowercase {
        token.to_lowercase()
    } else {
        token.to_string()
    }
}

/// Yields `(line number, line)` for every non-blank, non-comment line.
fn records<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Err(e) => Some(Err(Error::load(i + 1, format!("unreadable line ({e})")))),
            Ok(l) => {
                let trimmed = l.trim();
                if trimmed.is_empty() || trimmed.starts_with('#') {
                    None
                } else {
                    Some(Ok((i + 1, trimmed.to_string())))
                }
            }
        })
}

fn two_columns(line_no: usize, line: &str) -> Result<(&str, &str)> {
    let mut cols = line.split('\t');
    match (cols.next(), cols.next(), cols.next()) {
        (Some(a), Some(b), None) if !a.trim().is_empty() => Ok((a.trim(), b.trim())),
        _ => Err(Error::load(line_no, "expected `token<TAB>value`")),
    }
}

/// `token<TAB>frequency`, frequency in `[0, 1]`.
pub fn read_frequency_table<R: BufRead>(reader: R, lowercase: bool) -> Result<FrequencyTable> {
    let mut table = FrequencyTable::new();
    for record in records(reader) {
        let (line_no, line) = record?;
        let (token, value) = two_columns(line_no, &line)?;
        let freq: f64 = value
            .parse()
            .map_err(|_| Error::load(line_no, format!("bad frequency `{value}`")))?;
        if !(0.0..=1.0).contains(&freq) {
            return Err(Error::load(line_no, format!("frequency {freq} outside [0, 1]")));
        }
        table.entry(key(token, lowercase)).or_insert(freq);
    }
    Ok(table)
}

/// `token<TAB>rating`. Ratings outside the 1–5 scale are clamped; each clamp
/// is reported in the returned diagnostics.
pub fn read_concreteness_table<R: BufRead>(
    reader: R,
    lowercase: bool,
) -> Result<(ConcretenessTable, Vec<String>)> {
    let mut table = ConcretenessTable::new();
    let mut diagnostics = Vec::new();
    for record in records(reader) {
        let (line_no, line) = record?;
        let (token, value) = two_columns(line_no, &line)?;
        let raw: f64 = value
            .parse()
            .map_err(|_| Error::load(line_no, format!("bad rating `{value}`")))?;
        if !raw.is_finite() {
            return Err(Error::load(line_no, format!("bad rating `{value}`")));
        }
        let rating = raw.clamp(CONCRETENESS_MIN, CONCRETENESS_MAX);
        if rating != raw {
            let msg = format!("line {line_no}: rating {raw} for `{token}` clamped to {rating}");
            tracing::warn!("{msg}");
            diagnostics.push(msg);
        }
        table.entry(key(token, lowercase)).or_insert(rating);
    }
    Ok((table, diagnostics))
}

/// `token<TAB>pos`, one tag per token.
pub fn read_pos_table<R: BufRead>(reader: R, lowercase: bool) -> Result<PosTable> {
    let mut table = PosTable::new();
    for record in records(reader) {
        let (line_no, line) = record?;
        let (token, value) = two_columns(line_no, &line)?;
        let pos: Pos = value
            .parse()
            .map_err(|_| Error::load(line_no, format!("unknown part of speech `{value}`")))?;
        table.entry(key(token, lowercase)).or_insert(pos);
    }
    Ok(table)
}

/// One token per line (first whitespace-separated field), order preserved,
/// duplicates dropped.
pub fn read_word_list<R: BufRead>(reader: R, lowercase: bool) -> Result<Vec<String>> {
    let mut seen = HashSet::new();
    let mut words = Vec::new();
    for record in records(reader) {
        let (_, line) = record?;
        let token = line.split_whitespace().next().unwrap_or_default();
        let token = key(token, lowercase);
        if seen.insert(token.clone()) {
            words.push(token);
        }
    }
    Ok(words)
}

pub fn read_word_set<R: BufRead>(reader: R, lowercase: bool) -> Result<HashSet<String>> {
    Ok(read_word_list(reader, lowercase)?.into_iter().collect())
}

/// Fraction of utterances (one per line, blank lines skipped) that contain
/// each word at least once.
pub fn utterance_frequencies<R: BufRead>(reader: R, lowercase: bool) -> Result<FrequencyTable> {
    let mut counts: HashMap<String, u64> = HashMap::new();
    let mut utterances = 0u64;
    for line in reader.lines() {
        let line = line?;
        let mut words: Vec<String> = line
            .split(|c: char| !(c.is_alphanumeric() || c == '\''))
            .map(|t| key(t.trim_matches('\''), lowercase))
            .filter(|t| !t.is_empty())
            .collect();
        if words.is_empty() {
            continue;
        }
        utterances += 1;
        words.sort_unstable();
        words.dedup();
        for w in words {
            *counts.entry(w).or_default() += 1;
        }
    }
    if utterances == 0 {
        return Err(Error::EmptyInput("chat log has no utterances".into()));
    }
    Ok(counts
        .into_iter()
        .map(|(w, c)| (w, c as f64 / utterances as f64))
        .collect())
}

/// Writes `token<TAB>frequency` by descending frequency, ties lexicographic.
pub fn write_frequency_table<W: Write>(mut out: W, table: &FrequencyTable) -> Result<()> {
    let mut rows: Vec<(&String, &f64)> = table.iter().collect();
    rows.sort_by(|a, b| b.1.total_cmp(a.1).then_with(|| a.0.cmp(b.0)));
    for (word, freq) in rows {
        writeln!(out, "{word}\t{freq}")?;
    }
    Ok(())
}
