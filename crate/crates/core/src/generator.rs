//! Sentence rendering for validated (target, source, connector) triplets.
//!
//! Templates use the placeholders `{T}` (target), `{V}` (source), `{ADJ}`
//! (adjective connector), `{CLAUSE}` (explanation clause) and `{ART}`. The
//! article placeholder expands to `"a "`, `"an "` or nothing, chosen by the
//! word that follows it and by whether the source is a mass noun.

use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evidence::EvidenceSentence;
use crate::pos::Pos;

pub const JUST_LIKE: &str = "just_like";
pub const AS_AS: &str = "as_as";
pub const LIKE_A: &str = "like_a";
pub const EXPLANATION: &str = "explanation";
pub const COMPARISON: &str = "comparison";
pub const PROMPT: &str = "prompt";
pub const REVEAL_ADJECTIVE: &str = "reveal_adjective";
pub const REVEAL_CLAUSE: &str = "reveal_clause";
pub const LITERAL_ADJECTIVE: &str = "literal_adjective";
pub const LITERAL_CLAUSE: &str = "literal_clause";

pub const ADJECTIVE_TEMPLATES: [&str; 3] = [JUST_LIKE, AS_AS, LIKE_A];

const PLACEHOLDERS: [&str; 5] = ["{T}", "{V}", "{ADJ}", "{CLAUSE}", "{ART}"];

const DEFAULT_TEMPLATES: [(&str, &str); 10] = [
    (JUST_LIKE, "{T} is {ADJ}, just like {ART}{V}."),
    (AS_AS, "{T} is as {ADJ} as {ART}{V}."),
    (LIKE_A, "{T} is like {ART}{ADJ} {V}."),
    (EXPLANATION, "{T} is like {ART}{V}, {CLAUSE}."),
    (COMPARISON, "{T} is like {ART}{V}"),
    (PROMPT, "I heard that {T} is like {ART}{V}. Do you know why?"),
    (REVEAL_ADJECTIVE, "Because both are {ADJ}."),
    (REVEAL_CLAUSE, "Because {T} {CLAUSE}."),
    (LITERAL_ADJECTIVE, "{T} is {ADJ}."),
    (LITERAL_CLAUSE, "{T} {CLAUSE}."),
];

const DEFAULT_MASS_NOUNS: [&str; 22] = [
    "math", "salary", "money", "water", "music", "time", "love", "chicken", "sportswear",
    "advice", "information", "rice", "bread", "coffee", "tea", "milk", "homework", "furniture",
    "luggage", "weather", "traffic", "football",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    patterns: BTreeMap<String, String>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self {
            patterns: DEFAULT_TEMPLATES
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }
}

impl TemplateSet {
    /// Reads `identifier = pattern` lines over the defaults. Unknown
    /// placeholders are rejected.
    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        let mut set = Self::default();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::load(line_no, format!("unreadable line ({e})")))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((id, pattern)) = line.split_once('=') else {
                return Err(Error::load(line_no, "expected `identifier = pattern`"));
            };
            let (id, pattern) = (id.trim(), pattern.trim());
            if id.is_empty() || pattern.is_empty() {
                return Err(Error::load(line_no, "empty identifier or pattern"));
            }
            check_placeholders(pattern).map_err(|p| Error::load(line_no, format!("unknown placeholder `{p}`")))?;
            set.patterns.insert(id.to_string(), pattern.to_string());
        }
        Ok(set)
    }

    pub fn get(&self, id: &str) -> Option<&str> {
        self.patterns.get(id).map(String::as_str)
    }
}

fn check_placeholders(pattern: &str) -> std::result::Result<(), String> {
    let mut rest = pattern;
    while let Some(start) = rest.find('{') {
        let Some(len) = rest[start..].find('}') else {
            return Err(rest[start..].to_string());
        };
        let ph = &rest[start..start + len + 1];
        if !PLACEHOLDERS.contains(&ph) {
            return Err(ph.to_string());
        }
        rest = &rest[start + len + 1..];
    }
    Ok(())
}

/// Chooses `a`, `an`, or no article.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArticleRule {
    pub mass_nouns: HashSet<String>,
}

impl Default for ArticleRule {
    fn default() -> Self {
        Self {
            mass_nouns: DEFAULT_MASS_NOUNS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl ArticleRule {
    /// Article (with trailing space) for `next_word` in a phrase headed by `source`.
    pub fn article(&self, source: &str, next_word: &str) -> &'static str {
        if self.mass_nouns.contains(&source.to_lowercase()) {
            return "";
        }
        match next_word.chars().next().map(|c| c.to_ascii_lowercase()) {
            Some('a' | 'e' | 'i' | 'o' | 'u') => "an ",
            _ => "a ",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaphorTriplet {
    pub target: String,
    pub source: String,
    pub connector: String,
    pub pos: Pos,
    /// Required for verb and noun connectors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<EvidenceSentence>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedMetaphor {
    pub id: String,
    pub triplet: MetaphorTriplet,
    pub template_id: String,
    pub text: String,
    /// The "T is like V" clause, without final punctuation.
    pub comparison: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoRound {
    pub prompt: String,
    pub reveal: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpressionForms {
    pub literal: String,
    pub one_round: String,
    pub two_round: TwoRound,
}

#[derive(Debug, Clone, Default)]
pub struct Generator {
    pub templates: TemplateSet,
    pub articles: ArticleRule,
}

struct Slots<'a> {
    target: &'a str,
    source: &'a str,
    adjective: &'a str,
    clause: &'a str,
}

impl Generator {
    pub fn new(templates: TemplateSet, articles: ArticleRule) -> Self {
        Self {
            templates,
            articles,
        }
    }

    fn fill(&self, template_id: &str, slots: &Slots<'_>) -> Result<String> {
        let pattern = self
            .templates
            .get(template_id)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown template `{template_id}`")))?;
        let filled = pattern
            .replace("{T}", slots.target)
            .replace("{V}", slots.source)
            .replace("{ADJ}", slots.adjective)
            .replace("{CLAUSE}", slots.clause);
        let mut out = String::with_capacity(filled.len() + 4);
        let mut rest = filled.as_str();
        while let Some(pos) = rest.find("{ART}") {
            out.push_str(&rest[..pos]);
            rest = &rest[pos + "{ART}".len()..];
            let next_word = rest.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("");
            out.push_str(self.articles.article(slots.source, next_word));
        }
        out.push_str(rest);
        Ok(out)
    }

    fn comparison(&self, t: &MetaphorTriplet) -> Result<String> {
        self.fill(
            COMPARISON,
            &Slots {
                target: &t.target,
                source: &t.source,
                adjective: "",
                clause: "",
            },
        )
    }

    pub fn render_adjective(
        &self,
        triplet: &MetaphorTriplet,
        template_id: &str,
    ) -> Result<GeneratedMetaphor> {
        if triplet.pos != Pos::Adjective {
            return Err(Error::Precondition(format!(
                "`{}` is a {}, not an adjective",
                triplet.connector, triplet.pos
            )));
        }
        if !ADJECTIVE_TEMPLATES.contains(&template_id) {
            return Err(Error::InvalidParameter(format!(
                "unknown adjective template `{template_id}`"
            )));
        }
        let text = capitalize(&self.fill(
            template_id,
            &Slots {
                target: &triplet.target,
                source: &triplet.source,
                adjective: &triplet.connector,
                clause: "",
            },
        )?);
        Ok(GeneratedMetaphor {
            id: metaphor_id(triplet, template_id),
            comparison: self.comparison(triplet)?,
            triplet: triplet.clone(),
            template_id: template_id.to_string(),
            text,
            explanation: None,
        })
    }

    pub fn render_with_explanation(&self, triplet: &MetaphorTriplet) -> Result<GeneratedMetaphor> {
        if !matches!(triplet.pos, Pos::Verb | Pos::Noun) {
            return Err(Error::Precondition(format!(
                "`{}` is a {}; explanations need a verb or noun connector",
                triplet.connector, triplet.pos
            )));
        }
        let evidence = triplet.evidence.as_ref().ok_or_else(|| {
            Error::Precondition(format!("no evidence sentence for `{}`", triplet.connector))
        })?;
        let clause = explanation_clause(evidence, &triplet.connector)?;
        let text = capitalize(&self.fill(
            EXPLANATION,
            &Slots {
                target: &triplet.target,
                source: &triplet.source,
                adjective: "",
                clause: &clause,
            },
        )?);
        Ok(GeneratedMetaphor {
            id: metaphor_id(triplet, EXPLANATION),
            comparison: self.comparison(triplet)?,
            triplet: triplet.clone(),
            template_id: EXPLANATION.to_string(),
            text,
            explanation: Some(clause),
        })
    }

    /// Literal baseline, one-round and two-round renderings of a metaphor.
    pub fn expression_forms(&self, m: &GeneratedMetaphor) -> Result<ExpressionForms> {
        let t = &m.triplet;
        let slots = Slots {
            target: &t.target,
            source: &t.source,
            adjective: &t.connector,
            clause: m.explanation.as_deref().unwrap_or(""),
        };
        let literal = match &m.explanation {
            Some(_) => self.fill(LITERAL_CLAUSE, &slots)?,
            None => self.fill(LITERAL_ADJECTIVE, &slots)?,
        };
        let reveal = match &m.explanation {
            Some(_) => self.fill(REVEAL_CLAUSE, &slots)?,
            None => self.fill(REVEAL_ADJECTIVE, &slots)?,
        };
        Ok(ExpressionForms {
            literal: capitalize(&literal),
            one_round: m.text.clone(),
            two_round: TwoRound {
                prompt: capitalize(&self.fill(PROMPT, &slots)?),
                reveal: capitalize(&reveal),
            },
        })
    }
}

pub fn metaphor_id(t: &MetaphorTriplet, template_id: &str) -> String {
    format!("{}:{}:{}:{}:{}", t.target, t.source, t.connector, t.pos, template_id)
}

pub fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// The predicate governing the anchor with its non-subject dependents, in
/// surface order, edge punctuation removed. The clause must mention the
/// connector (by lemma or form).
pub fn explanation_clause(evidence: &EvidenceSentence, connector: &str) -> Result<String> {
    let s = &evidence.sentence;
    let subject = s.subtree(evidence.subject_index);
    let mut indices: Vec<usize> = s
        .subtree(evidence.predicate_index)
        .into_iter()
        .filter(|i| !subject.contains(i))
        .collect();
    while indices.first().is_some_and(|&i| s.tokens[i].upos == "PUNCT") {
        indices.remove(0);
    }
    while indices.last().is_some_and(|&i| s.tokens[i].upos == "PUNCT") {
        indices.pop();
    }
    let connector = connector.to_lowercase();
    let mentions = indices.iter().any(|&i| {
        let t = &s.tokens[i];
        t.lemma == connector || t.form.to_lowercase() == connector
    });
    if !mentions {
        return Err(Error::Precondition(format!(
            "evidence clause does not contain the connector `{connector}`"
        )));
    }
    let Some(&first) = indices.first() else {
        return Err(Error::Precondition("empty explanation clause".into()));
    };
    let mut clause = s.render(indices.iter().copied());
    let first_token = &s.tokens[first];
    if first_token.upos != "PROPN" && first_token.form != "I" {
        let lowered: String = first_token.form.chars().flat_map(char::to_lowercase).collect();
        clause.replace_range(..first_token.form.len(), &lowered);
    }
    let trimmed = clause.trim_end_matches(['.', '!', '?', ',', ';', ':', ' ']);
    Ok(trimmed.to_string())
}
