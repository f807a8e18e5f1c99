//! Connecting-word scoring.
//!
//! A good connecting word `X` for a target `T` and a source `V` is close to
//! both and about equally close to each:
//!
//! ```text
//! connecting(X | T, V) = dist(T, X) + dist(V, X) + ln(|dist(T, X) - dist(V, X)| + beta)
//! ```
//!
//! Lower is better. Ranking additionally requires connectivity: `X` must be
//! closer to each of `T` and `V` than they are to each other.

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::pos::Pos;
use crate::tables::PosTable;

pub const DEFAULT_BETA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub dist_target: f64,
    pub dist_source: f64,
    pub imbalance: f64,
    pub beta: f64,
    pub total: f64,
}

impl ScoreBreakdown {
    pub fn from_distances(dist_target: f64, dist_source: f64, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        let imbalance = (dist_target - dist_source).abs();
        Ok(Self {
            dist_target,
            dist_source,
            imbalance,
            beta,
            total: dist_target + dist_source + (imbalance + beta).ln(),
        })
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectingCandidate {
    pub target: String,
    pub source: String,
    pub word: String,
    pub pos: Pos,
    pub score: ScoreBreakdown,
}

/// Ranked candidates plus any diagnostic explaining an empty result.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ranking {
    pub candidates: Vec<ConnectingCandidate>,
    pub diagnostics: Vec<String>,
}

pub fn connecting_score(
    store: &EmbeddingStore,
    target: &str,
    source: &str,
    word: &str,
    beta: f64,
) -> Result<ScoreBreakdown> {
    check_beta(beta)?;
    let dist_target = store.semantic_distance(target, word)?;
    let dist_source = store.semantic_distance(source, word)?;
    ScoreBreakdown::from_distances(dist_target, dist_source, beta)
}

/// Scores every vocabulary word tagged `pos` and returns the `k` best that
/// pass the connectivity screen, ascending by total with ties broken by word.
pub fn rank_connecting_words(
    store: &EmbeddingStore,
    target: &str,
    source: &str,
    pos: Pos,
    pos_table: &PosTable,
    k: usize,
    beta: f64,
) -> Result<Ranking> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    check_beta(beta)?;
    let t = store.index_of(target)?;
    let v = store.index_of(source)?;
    let span = store.distance_by_index(t, v);

    let mut scored = Vec::new();
    for x in 0..store.len() {
        if x == t || x == v {
            continue;
        }
        let word = store.token_at(x);
        if pos_table.get(word) != Some(&pos) {
            continue;
        }
        let dist_target = store.distance_by_index(t, x);
        let dist_source = store.distance_by_index(v, x);
        if !(dist_target < span && dist_source < span) {
            continue;
        }
        scored.push((ScoreBreakdown::from_distances(dist_target, dist_source, beta)?, x));
    }
    scored.sort_by(|a, b| {
        a.0.total
            .total_cmp(&b.0.total)
            .then_with(|| store.token_at(a.1).cmp(store.token_at(b.1)))
    });
    scored.truncate(k);

    let target = store.token_at(t).to_string();
    let source = store.token_at(v).to_string();
    let mut diagnostics = Vec::new();
    if scored.is_empty() {
        let msg = format!("no {pos} candidate lies between `{target}` and `{source}`");
        tracing::debug!("{msg}");
        diagnostics.push(msg);
    }
    let candidates = scored
        .into_iter()
        .map(|(score, x)| ConnectingCandidate {
            target: target.clone(),
            source: source.clone(),
            word: store.token_at(x).to_string(),
            pos,
            score,
        })
        .collect();
    Ok(Ranking {
        candidates,
        diagnostics,
    })
}
