//! Connector scoring, corpus validation and rendering chained over
//! (target, source) pairs.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::connector::{rank_connecting_words, ScoreBreakdown, DEFAULT_BETA};
use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::evidence::{
    count_adjective_patterns, find_relation_sentences, rank_explanations, validate_adjective,
    AdjectiveThresholds, CorpusIndex, PatternCounts, Relation, ValidityParams,
};
use crate::generator::{ExpressionForms, GeneratedMetaphor, Generator, MetaphorTriplet, AS_AS};
use crate::pos::Pos;
use crate::tables::PosTable;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineParams {
    /// Candidates kept per (target, source, POS).
    pub k: usize,
    pub beta: f64,
    pub adjective_thresholds: AdjectiveThresholds,
    pub validity: ValidityParams,
    pub adjective_template: String,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            k: 5,
            beta: DEFAULT_BETA,
            adjective_thresholds: AdjectiveThresholds::default(),
            validity: ValidityParams::default(),
            adjective_template: AS_AS.to_string(),
        }
    }
}

/// Everything the pipeline reads.
#[derive(Debug, Clone)]
pub struct Resources {
    pub store: EmbeddingStore,
    pub pos_table: PosTable,
    pub corpus: CorpusIndex,
    pub stopwords: HashSet<String>,
    pub generator: Generator,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatchRequest {
    pub targets: Vec<String>,
    pub sources: Vec<String>,
    /// All content categories when absent.
    pub pos: Option<Pos>,
    /// Maximum number of metaphors returned.
    pub limit: Option<usize>,
}

/// One generated metaphor with its provenance; the JSON-lines output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaphorRecord {
    pub schema_version: u32,
    #[serde(flatten)]
    pub metaphor: GeneratedMetaphor,
    pub score: ScoreBreakdown,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjective_counts: Option<PatternCounts>,
    pub forms: ExpressionForms,
}

/// Runs every (target, source, POS) combination and returns records sorted
/// by connecting score ascending, ties by target, source, connector.
pub fn batch_generate(
    resources: &Resources,
    request: &BatchRequest,
    params: &PipelineParams,
) -> Result<Vec<MetaphorRecord>> {
    let store = &resources.store;
    for word in request.targets.iter().chain(&request.sources) {
        if !store.contains(word) {
            return Err(Error::UnknownToken(word.clone()));
        }
    }
    if request.limit == Some(0) {
        return Ok(Vec::new());
    }
    let categories: Vec<Pos> = match request.pos {
        Some(p) if p.is_content() => vec![p],
        Some(p) => {
            return Err(Error::InvalidParameter(format!("`{p}` is not a connector category")))
        }
        None => Pos::CONTENT.to_vec(),
    };

    let mut out = Vec::new();
    for target in &request.targets {
        for source in &request.sources {
            let target = store.normalize(target).into_owned();
            let source = store.normalize(source).into_owned();
            if target == source {
                continue;
            }
            for &pos in &categories {
                let ranking = rank_connecting_words(
                    store,
                    &target,
                    &source,
                    pos,
                    &resources.pos_table,
                    params.k,
                    params.beta,
                )?;
                for candidate in ranking.candidates {
                    if let Some(record) =
                        realize(resources, params, &target, &source, &candidate.word, pos, candidate.score)?
                    {
                        out.push(record);
                    }
                }
            }
        }
    }
    out.sort_by(|a, b| {
        let (ta, tb) = (&a.metaphor.triplet, &b.metaphor.triplet);
        a.score
            .total
            .total_cmp(&b.score.total)
            .then_with(|| ta.target.cmp(&tb.target))
            .then_with(|| ta.source.cmp(&tb.source))
            .then_with(|| ta.connector.cmp(&tb.connector))
    });
    if let Some(limit) = request.limit {
        out.truncate(limit);
    }
    Ok(out)
}

/// Validates one candidate against the corpus and renders it; `None` when
/// the corpus does not support it.
fn realize(
    resources: &Resources,
    params: &PipelineParams,
    target: &str,
    source: &str,
    connector: &str,
    pos: Pos,
    score: ScoreBreakdown,
) -> Result<Option<MetaphorRecord>> {
    let generator = &resources.generator;
    let mut triplet = MetaphorTriplet {
        target: target.to_string(),
        source: source.to_string(),
        connector: connector.to_string(),
        pos,
        evidence: None,
    };
    let (metaphor, adjective_counts) = match pos {
        Pos::Adjective => {
            let counts = count_adjective_patterns(&resources.corpus, connector, target, source);
            if !validate_adjective(counts, params.adjective_thresholds) {
                return Ok(None);
            }
            (
                generator.render_adjective(&triplet, &params.adjective_template)?,
                Some(counts),
            )
        }
        Pos::Verb | Pos::Noun => {
            let relation = if pos == Pos::Verb {
                Relation::SubjectVerb
            } else {
                Relation::SubjectPredicateObject
            };
            let corpus = &resources.corpus;
            let source_hits = find_relation_sentences(corpus, connector, source, relation, params.validity);
            if source_hits.is_empty() {
                return Ok(None);
            }
            let target_hits = find_relation_sentences(corpus, connector, target, relation, params.validity);
            let ranked = rank_explanations(&resources.store, target_hits, source, &resources.stopwords);
            let mut rendered = None;
            for evidence in ranked {
                triplet.evidence = Some(evidence);
                match generator.render_with_explanation(&triplet) {
                    Ok(m) => {
                        rendered = Some(m);
                        break;
                    }
                    Err(Error::Precondition(reason)) => {
                        tracing::debug!(%reason, "skipping evidence sentence");
                    }
                    Err(e) => return Err(e),
                }
            }
            match rendered {
                Some(m) => (m, None),
                None => return Ok(None),
            }
        }
        Pos::Other => return Ok(None),
    };
    let forms = generator.expression_forms(&metaphor)?;
    Ok(Some(MetaphorRecord {
        schema_version: SCHEMA_VERSION,
        metaphor,
        score,
        adjective_counts,
        forms,
    }))
}

/// Writes one record per line.
pub fn write_records<W: Write>(mut out: W, records: &[MetaphorRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| Error::Data(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads JSON-lines records; blank lines are skipped, and records of another
/// schema version are rejected.
pub fn read_records<R: BufRead>(reader: R) -> Result<Vec<MetaphorRecord>> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: MetaphorRecord = serde_json::from_str(&line)
            .map_err(|e| Error::load(i + 1, format!("bad metaphor record ({e})")))?;
        if record.schema_version != SCHEMA_VERSION {
            return Err(Error::load(
                i + 1,
                format!("schema version {} (expected {SCHEMA_VERSION})", record.schema_version),
            ));
        }
        records.push(record);
    }
    Ok(records)
}
