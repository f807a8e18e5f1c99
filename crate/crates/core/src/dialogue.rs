//! Conversation-time delivery of metaphors.
//!
//! A session is a two-state machine. From `Idle` a triggered metaphor is
//! delivered as a literal sentence, a one-round metaphor, or the prompt of a
//! two-round metaphor; the last moves the session to `AwaitingFollowUp`,
//! where the next user message receives the reveal.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::events::{Event, EventKind};
use crate::generator::{ExpressionForms, GeneratedMetaphor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpressionForm {
    Literal,
    OneRound,
    TwoRound,
}

impl ExpressionForm {
    pub const ALL: [ExpressionForm; 3] = [
        ExpressionForm::Literal,
        ExpressionForm::OneRound,
        ExpressionForm::TwoRound,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExpressionForm::Literal => "literal",
            ExpressionForm::OneRound => "one_round",
            ExpressionForm::TwoRound => "two_round",
        }
    }
}

impl fmt::Display for ExpressionForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExpressionForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExpressionForm::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown expression form `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum SessionState {
    Idle,
    AwaitingFollowUp {
        metaphor_id: String,
        form: ExpressionForm,
        /// Always below the follow-up window.
        turns_waited: u32,
    },
}

impl SessionState {
    pub fn is_idle(&self) -> bool {
        matches!(self, SessionState::Idle)
    }

    pub fn name(&self) -> &'static str {
        match self {
            SessionState::Idle => "idle",
            SessionState::AwaitingFollowUp { .. } => "awaiting_follow_up",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    User,
    Bot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub speaker: Speaker,
    pub text: String,
    pub ts: DateTime<Utc>,
}

/// A delivery whose follow-up window is still open.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpenDelivery {
    pub metaphor_id: String,
    pub form: ExpressionForm,
    pub turns_waited: u32,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    pub state: SessionState,
    pub transcript: Vec<TranscriptEntry>,
    pub rng_seed: u64,
    open_delivery: Option<OpenDelivery>,
    rng: ChaCha8Rng,
}

impl Session {
    pub fn new(id: impl Into<String>, rng_seed: u64) -> Self {
        Self {
            id: id.into(),
            state: SessionState::Idle,
            transcript: Vec::new(),
            rng_seed,
            open_delivery: None,
            rng: ChaCha8Rng::seed_from_u64(rng_seed),
        }
    }

    /// Rebuilds a session from its logged events: one form draw per delivery
    /// keeps the generator in step, and a delivery not yet followed by a user
    /// message stays open.
    pub fn restore<'a>(
        id: impl Into<String>,
        rng_seed: u64,
        events: impl IntoIterator<Item = &'a Event>,
    ) -> Self {
        let mut session = Session::new(id, rng_seed);
        for event in events {
            if event.session != session.id {
                continue;
            }
            match event.kind {
                EventKind::Message => {
                    session.open_delivery = None;
                    session.state = SessionState::Idle;
                }
                EventKind::Delivery => {
                    session.draw_form();
                    if let (Some(metaphor_id), Some(form)) = (&event.metaphor_id, event.form) {
                        session.open_delivery = Some(OpenDelivery {
                            metaphor_id: metaphor_id.clone(),
                            form,
                            turns_waited: 0,
                        });
                        if form == ExpressionForm::TwoRound {
                            session.state = SessionState::AwaitingFollowUp {
                                metaphor_id: metaphor_id.clone(),
                                form,
                                turns_waited: 0,
                            };
                        }
                    }
                }
                EventKind::Session | EventKind::FollowUp => {}
            }
        }
        session
    }

    pub fn open_delivery(&self) -> Option<&OpenDelivery> {
        self.open_delivery.as_ref()
    }

    fn draw_form(&mut self) -> ExpressionForm {
        ExpressionForm::ALL[self.rng.random_range(0..ExpressionForm::ALL.len())]
    }

    fn push(&mut self, speaker: Speaker, text: &str, now: DateTime<Utc>) -> DateTime<Utc> {
        let ts = self.transcript.last().map_or(now, |last| last.ts.max(now));
        self.transcript.push(TranscriptEntry {
            speaker,
            text: text.to_string(),
            ts,
        });
        ts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriggerParams {
    pub keyword_weight: f64,
    pub topic_weight: f64,
    pub qa_weight: f64,
    pub threshold: f64,
    /// Neighbours of the target that also count as keyword matches.
    pub keyword_neighbors: usize,
}

impl Default for TriggerParams {
    fn default() -> Self {
        Self {
            keyword_weight: 0.5,
            topic_weight: 0.4,
            qa_weight: 0.1,
            threshold: 0.5,
            keyword_neighbors: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriggerFeatures {
    pub keyword_match: bool,
    pub topic_similarity: f64,
    pub qa_relevance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerDecision {
    pub triggered: bool,
    pub metaphor_id: Option<String>,
    pub form: Option<ExpressionForm>,
    pub relevance: f64,
    pub features: TriggerFeatures,
}

impl TriggerDecision {
    pub fn not_triggered(relevance: f64, features: TriggerFeatures) -> Self {
        Self {
            triggered: false,
            metaphor_id: None,
            form: None,
            relevance,
            features,
        }
    }
}

const SECOND_PERSON: [&str; 5] = ["you", "your", "yours", "yourself", "u"];
const INTERROGATIVES: [&str; 16] = [
    "what", "why", "how", "who", "whom", "whose", "where", "when", "which", "do", "does", "did",
    "are", "can", "could", "will",
];

/// Lowercased alphanumeric tokens (apostrophes kept inside words).
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .map(|t| t.trim_matches('\'').to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

/// A question addressed to the bot: interrogative form plus a second-person word.
pub fn is_question_to_bot(text: &str) -> bool {
    let tokens = tokenize(text);
    let interrogative = text.contains('?')
        || tokens
            .first()
            .is_some_and(|t| INTERROGATIVES.contains(&t.as_str()));
    interrogative && tokens.iter().any(|t| SECOND_PERSON.contains(&t.as_str()))
}

/// Scores utterances against a fixed inventory. Keyword sets are computed
/// once per inventory.
#[derive(Debug, Clone)]
pub struct TriggerScorer {
    ids: Vec<String>,
    targets: Vec<String>,
    keywords: Vec<HashSet<String>>,
    params: TriggerParams,
}

impl TriggerScorer {
    pub fn new(inventory: &[GeneratedMetaphor], store: &EmbeddingStore, params: TriggerParams) -> Self {
        let mut keywords = Vec::with_capacity(inventory.len());
        let mut targets = Vec::with_capacity(inventory.len());
        for m in inventory {
            let target = m.triplet.target.to_lowercase();
            let mut set: HashSet<String> = [target.clone()].into();
            if params.keyword_neighbors > 0 {
                if let Ok(nn) = store.nearest_neighbors(&target, params.keyword_neighbors, None) {
                    set.extend(nn.into_iter().map(|(w, _)| w));
                }
            }
            keywords.push(set);
            targets.push(target);
        }
        Self {
            ids: inventory.iter().map(|m| m.id.clone()).collect(),
            targets,
            keywords,
            params,
        }
    }

    pub fn params(&self) -> &TriggerParams {
        &self.params
    }

    /// Picks the most relevant metaphor (first in inventory order on ties) and
    /// draws a form from the session generator only when triggering.
    pub fn score(
        &self,
        utterance: &str,
        session: &mut Session,
        store: &EmbeddingStore,
        stopwords: &HashSet<String>,
    ) -> TriggerDecision {
        let tokens = tokenize(utterance);
        let qa_relevance = if is_question_to_bot(utterance) { 0.0 } else { 1.0 };
        let content: Vec<&str> = tokens
            .iter()
            .map(String::as_str)
            .filter(|t| !stopwords.contains(*t) && store.contains(t))
            .collect();

        let mut best: Option<(usize, f64, TriggerFeatures)> = None;
        for (i, target) in self.targets.iter().enumerate() {
            let keyword_match = tokens.iter().any(|t| self.keywords[i].contains(t));
            let distances: Vec<f64> = content
                .iter()
                .filter_map(|t| store.semantic_distance(t, target).ok())
                .collect();
            let topic_similarity = if distances.is_empty() {
                0.0
            } else {
                (1.0 - distances.iter().sum::<f64>() / distances.len() as f64).clamp(0.0, 1.0)
            };
            let p = &self.params;
            let relevance = (p.keyword_weight * f64::from(u8::from(keyword_match))
                + p.topic_weight * topic_similarity
                + p.qa_weight * qa_relevance)
                .clamp(0.0, 1.0);
            if best.as_ref().is_none_or(|(_, r, _)| relevance > *r) {
                best = Some((
                    i,
                    relevance,
                    TriggerFeatures {
                        keyword_match,
                        topic_similarity,
                        qa_relevance,
                    },
                ));
            }
        }

        let Some((i, relevance, features)) = best else {
            tracing::warn!("trigger scoring against an empty inventory");
            return TriggerDecision::not_triggered(
                0.0,
                TriggerFeatures {
                    keyword_match: false,
                    topic_similarity: 0.0,
                    qa_relevance,
                },
            );
        };
        if relevance < self.params.threshold || !session.state.is_idle() {
            return TriggerDecision::not_triggered(relevance, features);
        }
        TriggerDecision {
            triggered: true,
            metaphor_id: Some(self.ids[i].clone()),
            form: Some(session.draw_form()),
            relevance,
            features,
        }
    }
}

/// One-shot scoring; builds the keyword sets on every call.
pub fn score_trigger(
    utterance: &str,
    session: &mut Session,
    inventory: &[GeneratedMetaphor],
    store: &EmbeddingStore,
    stopwords: &HashSet<String>,
    params: TriggerParams,
) -> TriggerDecision {
    TriggerScorer::new(inventory, store, params).score(utterance, session, store, stopwords)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplyKind {
    Fallback,
    Literal,
    OneRound,
    TwoRoundPrompt,
    TwoRoundReveal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub reply: String,
    pub kind: ReplyKind,
    pub state: SessionState,
    /// Events produced by this turn: the message, then any follow-up, then
    /// any delivery.
    pub events: Vec<Event>,
}

impl Turn {
    pub fn triggered_form(&self) -> Option<ExpressionForm> {
        self.events
            .iter()
            .find(|e| e.kind == EventKind::Delivery)
            .and_then(|e| e.form)
    }
}

/// Handles one user message. `forms` must be the forms of the triggered
/// metaphor when idle, or of the pending metaphor when awaiting a follow-up.
pub fn advance(
    session: &mut Session,
    user_utterance: &str,
    decision: &TriggerDecision,
    forms: Option<&ExpressionForms>,
    fallback: &str,
) -> Result<Turn> {
    advance_at(session, user_utterance, decision, forms, fallback, Utc::now())
}

pub fn advance_at(
    session: &mut Session,
    user_utterance: &str,
    decision: &TriggerDecision,
    forms: Option<&ExpressionForms>,
    fallback: &str,
    now: DateTime<Utc>,
) -> Result<Turn> {
    let triggered = if decision.triggered {
        let (Some(id), Some(form)) = (&decision.metaphor_id, decision.form) else {
            return Err(Error::Protocol("triggered decision without metaphor or form".into()));
        };
        if !session.state.is_idle() {
            return Err(Error::Protocol(format!(
                "session `{}` is awaiting a follow-up and cannot take a new metaphor",
                session.id
            )));
        }
        let forms = forms.ok_or_else(|| {
            Error::Protocol(format!("no expression forms supplied for `{id}`"))
        })?;
        Some((id.clone(), form, forms))
    } else {
        None
    };
    let pending_forms = match &session.state {
        SessionState::AwaitingFollowUp { metaphor_id, .. } => Some(forms.ok_or_else(|| {
            Error::Protocol(format!("no expression forms supplied for pending `{metaphor_id}`"))
        })?),
        SessionState::Idle => None,
    };

    let ts = session.push(Speaker::User, user_utterance, now);
    let sid = session.id.clone();
    let mut events = vec![Event::new(ts, &sid, EventKind::Message, None, None)];
    if let Some(open) = session.open_delivery.take() {
        events.push(Event::new(
            ts,
            &sid,
            EventKind::FollowUp,
            Some(open.form),
            Some(open.metaphor_id),
        ));
    }

    let (reply, kind) = if let Some(forms) = pending_forms {
        session.state = SessionState::Idle;
        (forms.two_round.reveal.clone(), ReplyKind::TwoRoundReveal)
    } else if let Some((id, form, forms)) = triggered {
        events.push(Event::new(ts, &sid, EventKind::Delivery, Some(form), Some(id.clone())));
        session.open_delivery = Some(OpenDelivery {
            metaphor_id: id.clone(),
            form,
            turns_waited: 0,
        });
        match form {
            ExpressionForm::Literal => (forms.literal.clone(), ReplyKind::Literal),
            ExpressionForm::OneRound => (forms.one_round.clone(), ReplyKind::OneRound),
            ExpressionForm::TwoRound => {
                session.state = SessionState::AwaitingFollowUp {
                    metaphor_id: id,
                    form,
                    turns_waited: 0,
                };
                (forms.two_round.prompt.clone(), ReplyKind::TwoRoundPrompt)
            }
        }
    } else {
        (fallback.to_string(), ReplyKind::Fallback)
    };
    session.push(Speaker::Bot, &reply, now);
    Ok(Turn {
        reply,
        kind,
        state: session.state.clone(),
        events,
    })
}

/// A turn passes without a user message. Once `follow_up_window` turns have
/// passed, the open delivery expires and a pending reveal is dropped.
pub fn elapse_turn(session: &mut Session, follow_up_window: u32) {
    if let Some(open) = session.open_delivery.as_mut() {
        open.turns_waited += 1;
        if open.turns_waited >= follow_up_window {
            session.open_delivery = None;
        }
    }
    if let SessionState::AwaitingFollowUp { turns_waited, .. } = &mut session.state {
        *turns_waited += 1;
        if *turns_waited >= follow_up_window {
            session.state = SessionState::Idle;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueConfig {
    pub trigger: TriggerParams,
    pub follow_up_window: u32,
    pub fallback: String,
}

impl Default for DialogueConfig {
    fn default() -> Self {
        Self {
            trigger: TriggerParams::default(),
            follow_up_window: 1,
            fallback: "I see. Tell me more.".into(),
        }
    }
}

/// Inventory, forms and scorer bundled for answering user messages.
#[derive(Debug, Clone)]
pub struct DialogueEngine {
    inventory: Vec<GeneratedMetaphor>,
    forms: Vec<ExpressionForms>,
    scorer: TriggerScorer,
    config: DialogueConfig,
}

impl DialogueEngine {
    pub fn new(
        inventory: Vec<GeneratedMetaphor>,
        forms: Vec<ExpressionForms>,
        store: &EmbeddingStore,
        config: DialogueConfig,
    ) -> Result<Self> {
        if inventory.len() != forms.len() {
            return Err(Error::InvalidParameter(format!(
                "{} metaphors but {} expression-form sets",
                inventory.len(),
                forms.len()
            )));
        }
        let scorer = TriggerScorer::new(&inventory, store, config.trigger);
        Ok(Self {
            inventory,
            forms,
            scorer,
            config,
        })
    }

    pub fn inventory(&self) -> &[GeneratedMetaphor] {
        &self.inventory
    }

    pub fn config(&self) -> &DialogueConfig {
        &self.config
    }

    pub fn forms_of(&self, metaphor_id: &str) -> Option<&ExpressionForms> {
        self.inventory
            .iter()
            .position(|m| m.id == metaphor_id)
            .map(|i| &self.forms[i])
    }

    /// Scores and answers one user message.
    pub fn respond(
        &self,
        session: &mut Session,
        utterance: &str,
        store: &EmbeddingStore,
        stopwords: &HashSet<String>,
    ) -> Result<(TriggerDecision, Turn)> {
        let decision = self.scorer.score(utterance, session, store, stopwords);
        let forms_id = match (&session.state, &decision.metaphor_id) {
            (SessionState::AwaitingFollowUp { metaphor_id, .. }, _) => Some(metaphor_id.as_str()),
            (SessionState::Idle, Some(id)) => Some(id.as_str()),
            (SessionState::Idle, None) => None,
        };
        let forms = match forms_id {
            Some(id) => Some(self.forms_of(id).ok_or_else(|| {
                Error::Protocol(format!("metaphor `{id}` is not in the inventory"))
            })?),
            None => None,
        };
        let turn = advance(session, utterance, &decision, forms, &self.config.fallback)?;
        Ok((decision, turn))
    }
}
