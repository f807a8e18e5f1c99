use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, RwLock};

use chrono::Utc;
use tokio::sync::Mutex;

use figura_core::config::Config;
use figura_core::dialogue::{DialogueEngine, Session};
use figura_core::events::{read_events_file, Event, EventKind, EventLog, FollowUpStats, StatsAccumulator};
use figura_core::pipeline::{read_records, MetaphorRecord, PipelineParams, Resources};
use figura_core::tables::open;
use figura_core::{Error, Result};

use crate::error::ApiError;
use crate::{MessageReply, SessionDescriptor};

/// The event log and the statistics derived from it, updated together.
#[derive(Debug, Default)]
struct Ledger {
    log: Option<EventLog>,
    stats: StatsAccumulator,
}

impl Ledger {
    fn record(&mut self, events: &[Event]) -> Result<()> {
        if let Some(log) = self.log.as_mut() {
            log.append(events)?;
        }
        for e in events {
            self.stats.ingest(e)?;
        }
        Ok(())
    }
}

pub struct AppState {
    resources: Option<Arc<Resources>>,
    inventory: Option<Arc<Vec<MetaphorRecord>>>,
    engine: Option<DialogueEngine>,
    pipeline_params: PipelineParams,
    base_seed: u64,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    ledger: Mutex<Ledger>,
}

/// Per-session generator seed: FNV-1a over the base seed and the id.
pub fn session_seed(base_seed: u64, session_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in base_seed.to_le_bytes().iter().chain(session_id.as_bytes()) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Reads the JSON-lines metaphor inventory.
pub fn load_inventory(path: &Path) -> Result<Vec<MetaphorRecord>> {
    read_records(open(path)?)
        .map_err(|e| Error::Data(format!("inventory {}: {e}", path.display())))
}

impl AppState {
    /// Without resources or inventory the service still starts; the routes
    /// that need them answer with an internal error.
    pub fn new(
        resources: Option<Resources>,
        inventory: Option<Vec<MetaphorRecord>>,
        config: &Config,
    ) -> Result<Self> {
        let engine = match (&resources, &inventory) {
            (Some(r), Some(records)) => Some(DialogueEngine::new(
                records.iter().map(|m| m.metaphor.clone()).collect(),
                records.iter().map(|m| m.forms.clone()).collect(),
                &r.store,
                config.dialogue_config(),
            )?),
            _ => None,
        };
        Ok(Self {
            resources: resources.map(Arc::new),
            inventory: inventory.map(Arc::new),
            engine,
            pipeline_params: config.pipeline_params(),
            base_seed: config.dialogue.seed,
            sessions: RwLock::new(HashMap::new()),
            ledger: Mutex::new(Ledger::default()),
        })
    }

    /// Loads everything named in the configuration and replays the event
    /// log, restoring sessions and statistics.
    pub fn from_config(config: &Config) -> Result<Self> {
        let resources = config.load_resources()?;
        let inventory = config.data.inventory.as_deref().map(load_inventory).transpose()?;
        let mut state = Self::new(Some(resources), inventory, config)?;
        if let Some(path) = &config.service.event_log {
            state.attach_log(path)?;
        }
        Ok(state)
    }

    /// Replays an existing log (if any) and appends to it from now on.
    pub fn attach_log(&mut self, path: &Path) -> Result<()> {
        let events = if path.exists() {
            read_events_file(path)?.events
        } else {
            Vec::new()
        };
        let ledger = self.ledger.get_mut();
        for e in &events {
            ledger.stats.ingest(e)?;
        }
        let mut by_session: HashMap<&str, Vec<&Event>> = HashMap::new();
        for e in &events {
            by_session.entry(e.session.as_str()).or_default().push(e);
        }
        let sessions = self.sessions.get_mut().expect("session registry poisoned");
        for (id, evs) in by_session {
            if evs.iter().any(|e| e.kind == EventKind::Session) {
                let seed = session_seed(self.base_seed, id);
                let session = Session::restore(id, seed, evs.iter().copied());
                sessions.insert(id.to_string(), Arc::new(Mutex::new(session)));
            }
        }
        tracing::info!(events = events.len(), sessions = sessions.len(), "event log replayed");
        ledger.log = Some(EventLog::open(path)?);
        Ok(())
    }

    pub fn resources(&self) -> Option<Arc<Resources>> {
        self.resources.clone()
    }

    pub fn inventory(&self) -> Option<Arc<Vec<MetaphorRecord>>> {
        self.inventory.clone()
    }

    pub fn pipeline_params(&self) -> &PipelineParams {
        &self.pipeline_params
    }

    pub fn session(&self, id: &str) -> Option<Arc<Mutex<Session>>> {
        self.sessions.read().expect("session registry poisoned").get(id).cloned()
    }

    pub async fn metrics(&self) -> FollowUpStats {
        self.ledger.lock().await.stats.stats()
    }

    pub async fn create_session(&self) -> Result<SessionDescriptor, ApiError> {
        if self.engine.is_none() {
            return Err(ApiError::internal(
                "sessions need an embedding store and a metaphor inventory",
            ));
        }
        let id = uuid::Uuid::new_v4().to_string();
        let created_at = Utc::now();
        let session = Session::new(id.clone(), session_seed(self.base_seed, &id));
        self.ledger
            .lock()
            .await
            .record(&[Event::new(created_at, &id, EventKind::Session, None, None)])?;
        self.sessions
            .write()
            .expect("session registry poisoned")
            .insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(SessionDescriptor {
            session_id: id,
            created_at,
        })
    }

    pub async fn post_message(
        &self,
        session: &Mutex<Session>,
        text: &str,
    ) -> Result<MessageReply, ApiError> {
        let (engine, resources) = match (&self.engine, &self.resources) {
            (Some(e), Some(r)) => (e, r),
            _ => return Err(ApiError::internal("dialogue engine is not loaded")),
        };
        let mut session = session.lock().await;
        // Work on a copy so a failed append leaves the session untouched.
        let mut next = session.clone();
        let (decision, turn) = engine.respond(&mut next, text, &resources.store, &resources.stopwords)?;
        self.ledger.lock().await.record(&turn.events)?;
        *session = next;
        Ok(MessageReply {
            text: turn.reply.clone(),
            triggered: decision.triggered,
            form: decision.form,
            state: turn.state.name().to_string(),
            kind: turn.kind,
            metaphor_id: decision.metaphor_id,
            relevance: decision.relevance,
        })
    }
}
