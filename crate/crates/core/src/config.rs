//! Layered configuration: defaults, then a TOML file, then `FIGURA_*`
//! environment variables, then explicit `section.key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dialogue::{DialogueConfig, TriggerParams};
use crate::embedding::{load_embeddings_file, LoadOptions};
use crate::error::{Error, Result};
use crate::evidence::{build_corpus_index, AdjectiveThresholds, ValidityParams};
use crate::generator::{ArticleRule, Generator, TemplateSet};
use crate::pipeline::{PipelineParams, Resources};
use crate::tables::{open, read_pos_table, read_word_set};

pub const ENV_PREFIX: &str = "FIGURA_";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    pub embeddings: Option<PathBuf>,
    pub pos: Option<PathBuf>,
    pub frequency: Option<PathBuf>,
    pub concreteness: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    /// One mass noun per line; replaces the built-in list.
    pub mass_nouns: Option<PathBuf>,
    pub targets: Option<PathBuf>,
    pub sources: Option<PathBuf>,
    /// Metaphor records (JSON lines) offered in conversation.
    pub inventory: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub k: usize,
    pub beta: f64,
    pub adjective_template: String,
    pub describe_threshold: u64,
    pub salience_threshold: u64,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub lowercase: bool,
}

impl Default for PipelineSection {
    fn default() -> Self {
        let p = PipelineParams::default();
        Self {
            k: p.k,
            beta: p.beta,
            adjective_template: p.adjective_template,
            describe_threshold: p.adjective_thresholds.describe,
            salience_threshold: p.adjective_thresholds.salience,
            min_tokens: p.validity.min_tokens,
            max_tokens: p.validity.max_tokens,
            lowercase: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DialogueSection {
    pub keyword_weight: f64,
    pub topic_weight: f64,
    pub qa_weight: f64,
    pub threshold: f64,
    pub keyword_neighbors: usize,
    pub follow_up_window: u32,
    pub fallback: String,
    pub seed: u64,
}

impl Default for DialogueSection {
    fn default() -> Self {
        let d = DialogueConfig::default();
        let t = d.trigger;
        Self {
            keyword_weight: t.keyword_weight,
            topic_weight: t.topic_weight,
            qa_weight: t.qa_weight,
            threshold: t.threshold,
            keyword_neighbors: t.keyword_neighbors,
            follow_up_window: d.follow_up_window,
            fallback: d.fallback,
            seed: 20190701,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceSection {
    pub bind: String,
    pub event_log: Option<PathBuf>,
}

impl Default for ServiceSection {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            event_log: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub data: DataPaths,
    pub pipeline: PipelineSection,
    pub dialogue: DialogueSection,
    pub service: ServiceSection,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Data(format!("invalid configuration: {e}")))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        config.resolve_relative_to(path.parent().unwrap_or(Path::new(".")));
        Ok(config)
    }

    /// File (if any), then environment, then `overrides` in order.
    pub fn load(
        file: Option<&Path>,
        env: impl IntoIterator<Item = (String, String)>,
        overrides: &[(String, String)],
    ) -> Result<Self> {
        let mut config = match file {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        for (name, value) in env {
            let Some(rest) = name.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let Some((section, key)) = rest.to_lowercase().split_once('_').map(|(s, k)| (s.to_string(), k.to_string())) else {
                continue;
            };
            config.set(&format!("{section}.{key}"), &value)?;
        }
        for (key, value) in overrides {
            config.set(key, value)?;
        }
        Ok(config)
    }

    /// Sets `section.key`. The value is read as a TOML literal when it parses
    /// as one of the field's type, otherwise as a string.
    pub fn set(&mut self, dotted: &str, value: &str) -> Result<()> {
        let (section, key) = dotted
            .split_once('.')
            .ok_or_else(|| Error::InvalidParameter(format!("expected section.key, got `{dotted}`")))?;
        let mut tree = toml::Table::try_from(&*self)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let table = tree
            .get_mut(section)
            .and_then(toml::Value::as_table_mut)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown configuration section `{section}`")))?;
        let parsed = value
            .parse::<toml::Value>()
            .ok()
            .or_else(|| toml::from_str::<toml::Table>(&format!("v = {value}")).ok()?.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));
        let previous = table.insert(key.to_string(), parsed.clone());
        let updated = match Config::deserialize(tree.clone()) {
            Ok(c) => c,
            Err(_) if !parsed.is_str() => {
                // A literal of the wrong type; retry as a string (paths, text).
                let table = tree.get_mut(section).and_then(toml::Value::as_table_mut).expect("section exists");
                table.insert(key.to_string(), toml::Value::String(value.to_string()));
                Config::deserialize(tree).map_err(|e| {
                    Error::InvalidParameter(format!("invalid value for `{dotted}`: {e}"))
                })?
            }
            Err(e) => {
                let reason = if previous.is_none() && !section_has_optional(section, key) {
                    format!("unknown configuration key `{dotted}`")
                } else {
                    format!("invalid value for `{dotted}`: {e}")
                };
                return Err(Error::InvalidParameter(reason));
            }
        };
        *self = updated;
        Ok(())
    }

    fn resolve_relative_to(&mut self, base: &Path) {
        let d = &mut self.data;
        for p in [
            &mut d.embeddings,
            &mut d.pos,
            &mut d.frequency,
            &mut d.concreteness,
            &mut d.corpus,
            &mut d.stopwords,
            &mut d.templates,
            &mut d.mass_nouns,
            &mut d.targets,
            &mut d.sources,
            &mut d.inventory,
            &mut self.service.event_log,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn pipeline_params(&self) -> PipelineParams {
        let p = &self.pipeline;
        PipelineParams {
            k: p.k,
            beta: p.beta,
            adjective_thresholds: AdjectiveThresholds {
                describe: p.describe_threshold,
                salience: p.salience_threshold,
            },
            validity: ValidityParams {
                min_tokens: p.min_tokens,
                max_tokens: p.max_tokens,
            },
            adjective_template: p.adjective_template.clone(),
        }
    }

    pub fn dialogue_config(&self) -> DialogueConfig {
        let d = &self.dialogue;
        DialogueConfig {
            trigger: TriggerParams {
                keyword_weight: d.keyword_weight,
                topic_weight: d.topic_weight,
                qa_weight: d.qa_weight,
                threshold: d.threshold,
                keyword_neighbors: d.keyword_neighbors,
            },
            follow_up_window: d.follow_up_window,
            fallback: d.fallback.clone(),
        }
    }
}

impl Config {
    /// Loads embeddings, POS table and corpus (required) plus stopwords,
    /// templates and mass nouns (optional).
    pub fn load_resources(&self) -> Result<Resources> {
        let d = &self.data;
        let lowercase = self.pipeline.lowercase;
        let required = |p: &Option<PathBuf>, what: &str| {
            p.clone()
                .ok_or_else(|| Error::Data(format!("no {what} path configured (data.{what})")))
        };
        let store = load_embeddings_file(required(&d.embeddings, "embeddings")?, LoadOptions { lowercase })?;
        let pos_table = read_pos_table(open(required(&d.pos, "pos")?)?, lowercase)?;
        let corpus = build_corpus_index(open(required(&d.corpus, "corpus")?)?)?;
        let stopwords = match &d.stopwords {
            Some(p) => read_word_set(open(p)?, lowercase)?,
            None => Default::default(),
        };
        let templates = match &d.templates {
            Some(p) => TemplateSet::load(open(p)?)?,
            None => TemplateSet::default(),
        };
        let articles = match &d.mass_nouns {
            Some(p) => ArticleRule {
                mass_nouns: read_word_set(open(p)?, true)?,
            },
            None => ArticleRule::default(),
        };
        Ok(Resources {
            store,
            pos_table,
            corpus,
            stopwords,
            generator: Generator::new(templates, articles),
        })
    }
}

/// Optional fields are absent from the serialized tree when unset.
fn section_has_optional(section: &str, key: &str) -> bool {
    const DATA: [&str; 11] = [
        "embeddings", "pos", "frequency", "concreteness", "corpus", "stopwords", "templates",
        "mass_nouns", "targets", "sources", "inventory",
    ];
    match section {
        "data" => DATA.contains(&key),
        "service" => key == "event_log",
        _ => false,
    }
}
