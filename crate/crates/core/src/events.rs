//! Append-only JSON-lines event log and follow-up accounting.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::dialogue::ExpressionForm;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    /// A session was created.
    Session,
    /// A user message arrived.
    Message,
    Delivery,
    #[serde(rename = "followup")]
    FollowUp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub ts: DateTime<Utc>,
    pub session: String,
    pub kind: EventKind,
    #[serde(default)]
    pub form: Option<ExpressionForm>,
    #[serde(default)]
    pub metaphor_id: Option<String>,
}

impl Event {
    pub fn new(
        ts: DateTime<Utc>,
        session: &str,
        kind: EventKind,
        form: Option<ExpressionForm>,
        metaphor_id: Option<String>,
    ) -> Self {
        Self {
            ts,
            session: session.to_string(),
            kind,
            form,
            metaphor_id,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FormStats {
    pub delivered: u64,
    /// Never exceeds `delivered`.
    pub followed_up: u64,
    pub rate: f64,
}

impl FormStats {
    fn refresh(&mut self) {
        self.rate = if self.delivered == 0 {
            0.0
        } else {
            self.followed_up as f64 / self.delivered as f64
        };
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FollowUpStats {
    pub literal: FormStats,
    pub one_round: FormStats,
    pub two_round: FormStats,
}

impl FollowUpStats {
    pub fn form(&self, form: ExpressionForm) -> &FormStats {
        match form {
            ExpressionForm::Literal => &self.literal,
            ExpressionForm::OneRound => &self.one_round,
            ExpressionForm::TwoRound => &self.two_round,
        }
    }

    fn form_mut(&mut self, form: ExpressionForm) -> &mut FormStats {
        match form {
            ExpressionForm::Literal => &mut self.literal,
            ExpressionForm::OneRound => &mut self.one_round,
            ExpressionForm::TwoRound => &mut self.two_round,
        }
    }

    pub fn total_delivered(&self) -> u64 {
        ExpressionForm::ALL.iter().map(|f| self.form(*f).delivered).sum()
    }
}

/// Incremental form of [`record_and_report`].
#[derive(Debug, Clone, Default)]
pub struct StatsAccumulator {
    open: HashMap<String, Vec<(Option<String>, ExpressionForm)>>,
    stats: FollowUpStats,
    ingested: usize,
}

impl StatsAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rejects deliveries without a form and follow-ups that match no open
    /// delivery of the same session; state is unchanged on error.
    pub fn ingest(&mut self, event: &Event) -> Result<()> {
        let position = self.ingested + 1;
        match event.kind {
            EventKind::Delivery => {
                let form = event.form.ok_or_else(|| {
                    Error::Data(format!(
                        "event {position}: delivery in session `{}` has no form",
                        event.session
                    ))
                })?;
                self.open
                    .entry(event.session.clone())
                    .or_default()
                    .push((event.metaphor_id.clone(), form));
                let s = self.stats.form_mut(form);
                s.delivered += 1;
                s.refresh();
            }
            EventKind::FollowUp => {
                let open = self.open.get_mut(&event.session);
                let found = open.and_then(|list| {
                    let i = list.iter().position(|(id, form)| {
                        (event.metaphor_id.is_none() || *id == event.metaphor_id)
                            && event.form.is_none_or(|f| f == *form)
                    })?;
                    Some(list.remove(i).1)
                });
                let form = found.ok_or_else(|| {
                    Error::Data(format!(
                        "event {position}: follow-up in session `{}` references no open delivery{}",
                        event.session,
                        event
                            .metaphor_id
                            .as_deref()
                            .map(|id| format!(" of `{id}`"))
                            .unwrap_or_default()
                    ))
                })?;
                let s = self.stats.form_mut(form);
                s.followed_up += 1;
                s.refresh();
            }
            EventKind::Session | EventKind::Message => {}
        }
        self.ingested += 1;
        Ok(())
    }

    pub fn stats(&self) -> FollowUpStats {
        self.stats
    }
}

pub fn record_and_report<'a>(events: impl IntoIterator<Item = &'a Event>) -> Result<FollowUpStats> {
    let mut acc = StatsAccumulator::new();
    for e in events {
        acc.ingest(e)?;
    }
    Ok(acc.stats())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReadReport {
    pub events: Vec<Event>,
    /// Set when a final line without newline failed to parse.
    pub torn_tail: bool,
}

/// Parses a JSON-lines log. A malformed final line without a terminating
/// newline is an interrupted append and is dropped; any other malformed line
/// is a data error naming its line number.
pub fn read_events<R: BufRead>(mut reader: R) -> Result<ReadReport> {
    let mut report = ReadReport::default();
    let mut line = String::new();
    let mut line_no = 0;
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        line_no += 1;
        let terminated = line.ends_with('\n');
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        match serde_json::from_str::<Event>(text) {
            Ok(e) => report.events.push(e),
            Err(_) if !terminated => {
                tracing::warn!(line = line_no, "dropping torn final event");
                report.torn_tail = true;
            }
            Err(e) => return Err(Error::Data(format!("malformed event at line {line_no}: {e}"))),
        }
    }
    Ok(report)
}

pub fn read_events_file(path: impl AsRef<Path>) -> Result<ReadReport> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| Error::Data(format!("cannot open event log {}: {e}", path.display())))?;
    read_events(BufReader::new(file))
}

/// Appends events to a JSON-lines file, one flushed line per event.
#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: File,
}

impl EventLog {
    /// Opens for append. A torn final line (no terminating newline) is cut
    /// off so the log stays replayable.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new().create(true).read(true).append(true).open(&path)?;
        let bytes = std::fs::read(&path)?;
        if bytes.last().is_some_and(|b| *b != b'\n') {
            let keep = bytes.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
            if serde_json::from_slice::<Event>(&bytes[keep..]).is_ok() {
                file.write_all(b"\n")?;
            } else {
                tracing::warn!(path = %path.display(), dropped = bytes.len() - keep, "truncating torn event");
                file.set_len(keep as u64)?;
            }
        }
        Ok(Self { path, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, events: &[Event]) -> Result<()> {
        let mut buf = Vec::new();
        for e in events {
            serde_json::to_writer(&mut buf, e).map_err(|e| Error::Data(e.to_string()))?;
            buf.push(b'\n');
        }
        self.file.write_all(&buf)?;
        self.file.flush()?;
        Ok(())
    }
}
