//! Fixture loading and independent reference implementations shared by the
//! integration suites.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;

use figura_core::config::Config;
use figura_core::pipeline::Resources;
use figura_core::pos::Pos;
use figura_core::tables::PosTable;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/fixture")
}

pub fn test_fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture_config() -> Config {
    let d = fixture_dir();
    let mut c = Config::default();
    c.data.embeddings = Some(d.join("embeddings.txt"));
    c.data.pos = Some(d.join("pos.tsv"));
    c.data.corpus = Some(d.join("corpus.conllu"));
    c.data.stopwords = Some(d.join("stopwords.txt"));
    c.data.frequency = Some(d.join("freq.tsv"));
    c.data.concreteness = Some(d.join("concreteness.tsv"));
    c
}

pub fn fixture_resources() -> Resources {
    fixture_config().load_resources().expect("fixture resources load")
}

pub fn words(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

pub fn set(list: &[&str]) -> HashSet<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// Plain cosine distance from raw vectors.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    1.0 - dot / (na * nb)
}

/// Connecting score recomputed from raw vectors.
pub fn reference_score(t: &[f64], v: &[f64], x: &[f64], beta: f64) -> f64 {
    let dt = cosine_distance(t, x);
    let dv = cosine_distance(v, x);
    dt + dv + ((dt - dv).abs() + beta).ln()
}

const DIM: usize = 12;

/// 500 tokens; every tenth token copies an earlier vector so ties occur.
pub fn vocabulary(seed: u64) -> (Vec<(String, Vec<f64>)>, PosTable) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries: Vec<(String, Vec<f64>)> = Vec::with_capacity(500);
    let mut pos = PosTable::new();
    let cats = [Pos::Noun, Pos::Adjective, Pos::Verb, Pos::Other];
    for i in 0..500 {
        let word = format!("tok{:03}", (i * 7919) % 500);
        let v = if i % 10 == 9 {
            entries[rng.random_range(0..entries.len())].1.clone()
        } else {
            (0..DIM).map(|_| rng.random_range(-1.0..1.0)).collect()
        };
        pos.insert(word.clone(), cats[rng.random_range(0..cats.len())]);
        entries.push((word, v));
    }
    (entries, pos)
}

/// Exhaustive scorer over raw vectors, independent of the store.
pub fn brute_force(
    entries: &[(String, Vec<f64>)],
    pos: &PosTable,
    t: &str,
    v: &str,
    want: Pos,
    k: usize,
    beta: f64,
) -> Vec<(String, f64)> {
    let vec_of: HashMap<&str, &Vec<f64>> = entries.iter().map(|(w, x)| (w.as_str(), x)).collect();
    let (tv, vv) = (vec_of[t], vec_of[v]);
    let span = cosine_distance(tv, vv);
    let mut out: Vec<(String, f64)> = entries
        .iter()
        .filter(|(w, _)| w != t && w != v && pos.get(w) == Some(&want))
        .filter(|(_, x)| cosine_distance(tv, x) < span && cosine_distance(vv, x) < span)
        .map(|(w, x)| (w.clone(), reference_score(tv, vv, x, beta)))
        .collect();
    out.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    out.truncate(k);
    out
}

/// One randomized lexicon trial; `Err` describes the first violated invariant.
pub fn lexicon_trial(seed: u64) -> Result<(), String> {
    use figura_core::lexicon::{select_sources, select_targets, SourceParams, TargetParams};
    use figura_core::tables::{ConcretenessTable, FrequencyTable};

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(20..80);
    let words: Vec<String> = (0..n).map(|i| format!("c{i:03}")).collect();
    let entries: Vec<(String, Vec<f64>)> = words
        .iter()
        .map(|w| (w.clone(), (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()))
        .collect();
    let store = figura_core::embedding::EmbeddingStore::from_vectors(
        entries,
        figura_core::embedding::LoadOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let mut freq = FrequencyTable::new();
    let mut pos = PosTable::new();
    let mut conc = ConcretenessTable::new();
    for w in &words {
        if rng.random_bool(0.9) {
            // Round to a coarse grid so equal frequencies and ratings occur.
            let f = (rng.random_range(0.0..4e-5) * 1e6_f64).round() / 1e6;
            freq.insert(w.clone(), f);
        }
        if rng.random_bool(0.6) {
            pos.insert(w.clone(), Pos::Noun);
        }
        if rng.random_bool(0.7) {
            conc.insert(w.clone(), (rng.random_range(1.0..5.0) * 10.0_f64).round() / 10.0);
        }
    }
    let themes: Vec<String> = (0..rng.random_range(1..6))
        .map(|_| words[rng.random_range(0..n)].clone())
        .collect();
    let tp = TargetParams {
        expansion_k: rng.random_range(0..6),
        min_freq: 1e-5,
    };
    let targets = select_targets(&themes, &store, &freq, tp).map_err(|e| e.to_string())?;
    let mut seen = HashSet::new();
    for e in &targets.entries {
        if e.frequency < tp.min_freq {
            return Err(format!("target {} has frequency {} < {}", e.word, e.frequency, tp.min_freq));
        }
        if !seen.insert(e.word.clone()) {
            return Err(format!("duplicate target {}", e.word));
        }
    }
    for w in targets.entries.windows(2) {
        if (w[0].frequency, &w[1].word) < (w[1].frequency, &w[0].word) {
            return Err(format!("targets {} and {} out of order", w[0].word, w[1].word));
        }
    }

    let top_by_freq = rng.random_range(1..40);
    let sp = SourceParams {
        top_by_freq,
        top_by_conc: rng.random_range(1..=top_by_freq),
    };
    let sources = select_sources(&freq, &pos, &conc, sp).map_err(|e| e.to_string())?;
    // The pool: rated nouns by descending frequency, ties lexicographic.
    let mut pool: Vec<(&String, f64)> = freq
        .iter()
        .filter(|(w, _)| pos.get(*w) == Some(&Pos::Noun) && conc.contains_key(*w))
        .map(|(w, f)| (w, *f))
        .collect();
    pool.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    pool.truncate(sp.top_by_freq);
    let chosen: HashSet<&str> = sources.entries.iter().map(|e| e.word.as_str()).collect();
    if chosen.len() != sources.entries.len() {
        return Err("duplicate source".into());
    }
    if sources.entries.len() != sp.top_by_conc.min(pool.len()) {
        return Err(format!("{} sources, expected {}", sources.entries.len(), sp.top_by_conc.min(pool.len())));
    }
    let min_included = sources
        .entries
        .iter()
        .map(|e| e.concreteness.unwrap_or(f64::NAN))
        .fold(f64::INFINITY, f64::min);
    for e in &sources.entries {
        if e.pos != Pos::Noun || e.concreteness.is_none() {
            return Err(format!("source {} is not a rated noun", e.word));
        }
        if !pool.iter().any(|(w, _)| *w == &e.word) {
            return Err(format!("source {} lies outside the frequency pool", e.word));
        }
    }
    for (w, _) in &pool {
        if !chosen.contains(w.as_str()) && conc[*w] > min_included {
            return Err(format!("excluded {} is more concrete than an included source", w));
        }
    }
    Ok(())
}

pub type AnswerSets = std::collections::BTreeMap<(String, String), Vec<usize>>;

fn answers(rows: &[(&str, &str, &[usize])]) -> AnswerSets {
    rows.iter()
        .map(|(c, a, ids)| ((c.to_string(), a.to_string()), ids.to_vec()))
        .collect()
}

/// Hand-enumerated (connector, anchor) -> sentence ids over the shipped
/// corpus. Sentence 9 repeats sentence 5, 17 is too short and 18 holds a URL.
pub fn hand_subject_verb() -> AnswerSets {
    answers(&[
        ("need", "love", &[1]),
        ("maintain", "relationship", &[5, 8]),
        ("maintain", "park", &[6]),
        ("maintain", "volunteer", &[7]),
        ("scream", "fan", &[10]),
        ("scream", "soul", &[11]),
        ("gamble", "people", &[12]),
        ("involve", "love", &[13]),
        ("involve", "lottery", &[14]),
        ("have", "marriage", &[15]),
        ("have", "love", &[16]),
        ("have", "salary", &[19]),
    ])
}

pub fn hand_subject_predicate_object() -> AnswerSets {
    answers(&[
        ("patience", "love", &[1]),
        ("park", "volunteer", &[7]),
        ("love", "people", &[12]),
        ("gamble", "love", &[13]),
        ("gamble", "lottery", &[14]),
        ("set", "marriage", &[15]),
        ("goal", "love", &[16]),
        ("goal", "salary", &[19]),
    ])
}

/// Runs the matcher over every lemma pair of the corpus.
pub fn extracted(
    corpus: &figura_core::evidence::CorpusIndex,
    relation: figura_core::evidence::Relation,
) -> AnswerSets {
    use figura_core::evidence::{find_relation_sentences, ValidityParams};
    let lemmas: Vec<&String> = corpus.lemma_index().keys().collect();
    let mut out = AnswerSets::new();
    for c in &lemmas {
        for a in &lemmas {
            let hits = find_relation_sentences(corpus, c, a, relation, ValidityParams::default());
            if !hits.is_empty() {
                out.insert(
                    (c.to_string(), a.to_string()),
                    hits.iter().map(|h| h.sentence.id).collect(),
                );
            }
        }
    }
    out
}

/// Mean distance recomputed from the raw fixture vectors.
pub fn reference_mean_distance(
    vectors: &HashMap<String, Vec<f64>>,
    lemmas: &[&str],
    source: &str,
    stopwords: &HashSet<String>,
) -> f64 {
    let sv = &vectors[source];
    let ds: Vec<f64> = lemmas
        .iter()
        .filter(|l| !stopwords.contains(**l))
        .filter_map(|l| vectors.get(*l))
        .map(|v| cosine_distance(v, sv))
        .collect();
    if ds.is_empty() {
        2.0
    } else {
        ds.iter().sum::<f64>() / ds.len() as f64
    }
}

pub fn fixture_vectors() -> HashMap<String, Vec<f64>> {
    let text = std::fs::read_to_string(fixture_dir().join("embeddings.txt")).unwrap();
    text.lines()
        .skip(1)
        .map(|l| {
            let mut f = l.split(' ');
            let w = f.next().unwrap().to_lowercase();
            (w, f.map(|x| x.parse().unwrap()).collect())
        })
        .collect()
}

/// Ranks every extracted target-side set against every fixture source and
/// compares with the reference; returns the largest absolute deviation.
pub fn explanation_ranking_deviation(resources: &Resources) -> Result<f64, String> {
    use figura_core::evidence::{find_relation_sentences, rank_explanations, Relation, ValidityParams};
    let vectors = fixture_vectors();
    let mut worst: f64 = 0.0;
    let sources = ["park", "math", "lottery", "salary", "casino"];
    for (relation, sets) in [
        (Relation::SubjectVerb, hand_subject_verb()),
        (Relation::SubjectPredicateObject, hand_subject_predicate_object()),
    ] {
        for (c, a) in sets.keys() {
            for source in sources {
                if !vectors.contains_key(source) {
                    return Err(format!("fixture lacks source {source}"));
                }
                let hits = find_relation_sentences(&resources.corpus, c, a, relation, ValidityParams::default());
                let ranked = rank_explanations(&resources.store, hits, source, &resources.stopwords);
                let mut expected: Vec<(f64, usize)> = ranked
                    .iter()
                    .map(|e| {
                        let lemmas: Vec<&str> = e.sentence.tokens.iter().map(|t| t.lemma.as_str()).collect();
                        (reference_mean_distance(&vectors, &lemmas, source, &resources.stopwords), e.sentence.id)
                    })
                    .collect();
                expected.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| x.1.cmp(&y.1)));
                for (e, (d, id)) in ranked.iter().zip(&expected) {
                    if e.sentence.id != *id {
                        return Err(format!("({c}, {a}) vs {source}: order differs at sentence {id}"));
                    }
                    worst = worst.max((e.distance_to_source - d).abs());
                }
            }
        }
    }
    Ok(worst)
}

pub fn fixture_records() -> Vec<figura_core::pipeline::MetaphorRecord> {
    use figura_core::pipeline::{batch_generate, BatchRequest, PipelineParams};
    let request = BatchRequest {
        targets: words(&["love", "relationship"]),
        sources: words(&["math", "park", "lottery"]),
        ..Default::default()
    };
    batch_generate(&fixture_resources(), &request, &PipelineParams::default()).unwrap()
}

pub fn fixture_engine(window: u32) -> (Resources, figura_core::dialogue::DialogueEngine) {
    use figura_core::dialogue::{DialogueConfig, DialogueEngine};
    let resources = fixture_resources();
    let records = fixture_records();
    let config = DialogueConfig {
        follow_up_window: window,
        ..DialogueConfig::default()
    };
    let engine = DialogueEngine::new(
        records.iter().map(|r| r.metaphor.clone()).collect(),
        records.iter().map(|r| r.forms.clone()).collect(),
        &resources.store,
        config,
    )
    .unwrap();
    (resources, engine)
}

const UTTERANCES: [&str; 10] = [
    "I think love is the most complex thing",
    "my relationship with my brother is fine",
    "do you like math?",
    "what is your favorite food?",
    "the weather is nice today",
    "why?",
    "love and heart and romance",
    "we went to the park with the volunteers",
    "ok",
    "Because you are fragile.",
];

#[derive(Debug, Default)]
pub struct TrialSummary {
    pub turns: usize,
    pub deliveries: usize,
    pub reveals: usize,
}

/// Drives `sessions` seeded sessions through random scripts of user messages
/// and silent turns, checking the protocol invariants after every step.
pub fn dialogue_trials(sessions: u64) -> Result<TrialSummary, String> {
    use figura_core::dialogue::{elapse_turn, ReplyKind, Session, SessionState};
    use figura_core::events::{EventKind, StatsAccumulator};

    let mut summary = TrialSummary::default();
    let mut stats = StatsAccumulator::new();
    for window in [1u32, 2, 3] {
        let (res, engine) = fixture_engine(window);
        for seed in 0..sessions / 3 + u64::from(window == 1) * (sessions % 3) {
            let mut script_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let steps: Vec<Option<&str>> = (0..script_rng.random_range(1..25))
                .map(|_| {
                    script_rng
                        .random_bool(0.8)
                        .then(|| UTTERANCES[script_rng.random_range(0..UTTERANCES.len())])
                })
                .collect();
            let run = |record: bool, stats: &mut StatsAccumulator, summary: &mut TrialSummary| -> Result<Vec<String>, String> {
                let mut s = Session::new(format!("w{window}-s{seed}"), seed);
                let mut replies = Vec::new();
                let mut revealed_for_pending = false;
                for step in &steps {
                    let before = s.state.clone();
                    match step {
                        None => elapse_turn(&mut s, window),
                        Some(text) => {
                            let (decision, turn) = engine
                                .respond(&mut s, text, &res.store, &res.stopwords)
                                .map_err(|e| e.to_string())?;
                            if decision.triggered && !before.is_idle() {
                                return Err(format!("triggered while awaiting in {}", s.id));
                            }
                            if turn.kind == ReplyKind::TwoRoundReveal {
                                if before.is_idle() {
                                    return Err(format!("reveal from idle in {}", s.id));
                                }
                                if revealed_for_pending {
                                    return Err(format!("second reveal in {}", s.id));
                                }
                                revealed_for_pending = true;
                            }
                            if turn.kind == ReplyKind::TwoRoundPrompt {
                                revealed_for_pending = false;
                            }
                            if record {
                                summary.turns += 1;
                                summary.reveals += usize::from(turn.kind == ReplyKind::TwoRoundReveal);
                                summary.deliveries +=
                                    turn.events.iter().filter(|e| e.kind == EventKind::Delivery).count();
                                for e in &turn.events {
                                    stats.ingest(e).map_err(|e| e.to_string())?;
                                }
                                for f in figura_core::dialogue::ExpressionForm::ALL {
                                    let st = *stats.stats().form(f);
                                    if st.followed_up > st.delivered {
                                        return Err(format!("{f}: follow-ups exceed deliveries"));
                                    }
                                }
                            }
                            replies.push(turn.reply);
                        }
                    }
                    if let SessionState::AwaitingFollowUp { turns_waited, .. } = s.state {
                        if turns_waited > window {
                            return Err(format!("turns_waited {turns_waited} beyond window in {}", s.id));
                        }
                    }
                }
                if s.transcript.windows(2).any(|w| w[0].ts > w[1].ts) {
                    return Err(format!("transcript out of order in {}", s.id));
                }
                Ok(replies)
            };
            let first = run(true, &mut stats, &mut summary)?;
            let again = run(false, &mut stats, &mut summary)?;
            if first != again {
                return Err(format!("seed {seed} is not deterministic"));
            }
        }
    }
    Ok(summary)
}

/// Outcome of the scripted two-round exchange: (speaker, text) lines.
pub fn child_bowl_exchange() -> Result<Vec<(String, String)>, String> {
    use figura_core::dialogue::{DialogueConfig, DialogueEngine, ExpressionForm, ReplyKind, Session};
    use figura_core::embedding::{EmbeddingStore, LoadOptions};
    use figura_core::generator::{ExpressionForms, GeneratedMetaphor, MetaphorTriplet, TwoRound};

    let store = EmbeddingStore::from_vectors(
        [
            ("child", vec![1.0, 0.1, 0.0, 0.0]),
            ("girl", vec![0.9, 0.2, 0.1, 0.0]),
            ("kid", vec![0.95, 0.05, 0.0, 0.1]),
            ("boy", vec![0.9, 0.1, 0.2, 0.0]),
            ("baby", vec![0.85, 0.0, 0.0, 0.2]),
            ("toddler", vec![0.9, 0.0, 0.1, 0.1]),
            ("bowl", vec![0.1, 1.0, 0.0, 0.0]),
            ("innocent", vec![0.6, 0.6, 0.1, 0.0]),
            ("cute", vec![0.5, 0.1, 0.6, 0.0]),
            ("unwashed", vec![0.0, 0.3, 0.0, 1.0]),
        ],
        LoadOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let metaphor = GeneratedMetaphor {
        id: "child:bowl:innocent:adjective:just_like".into(),
        triplet: MetaphorTriplet {
            target: "child".into(),
            source: "bowl".into(),
            connector: "innocent".into(),
            pos: Pos::Adjective,
            evidence: None,
        },
        template_id: "just_like".into(),
        text: "Child is innocent, just like a bowl.".into(),
        comparison: "child is like a bowl".into(),
        explanation: None,
    };
    // Forms as worded in the published sample dialogue.
    let forms = ExpressionForms {
        literal: "Child is innocent.".into(),
        one_round: metaphor.text.clone(),
        two_round: TwoRound {
            prompt: "A child is like a bowl. Do you know why?".into(),
            reveal: "Innocent.".into(),
        },
    };
    let engine = DialogueEngine::new(vec![metaphor], vec![forms], &store, DialogueConfig::default())
        .map_err(|e| e.to_string())?;
    let stopwords = set(&["a", "an", "are", "you", "because", "like", "is", "i", "am", "so"]);

    // The first seed whose opening draw is the two-round form.
    let seed = (0u64..)
        .find(|seed| {
            let mut probe = Session::new("probe", *seed);
            engine
                .respond(&mut probe, "You are a girl.", &store, &stopwords)
                .map(|(d, _)| d.form == Some(ExpressionForm::TwoRound))
                .unwrap_or(false)
        })
        .expect("some seed draws two_round");
    let mut session = Session::new("child-bowl", seed);
    let mut lines = Vec::new();
    for (text, expected) in [
        ("You are a girl.", Some(ReplyKind::TwoRoundPrompt)),
        ("Because your are fragile.", Some(ReplyKind::TwoRoundReveal)),
        ("You are like an unwashed bowl.", None),
    ] {
        let (_, turn) = engine
            .respond(&mut session, text, &store, &stopwords)
            .map_err(|e| e.to_string())?;
        lines.push(("User".to_string(), text.to_string()));
        match expected {
            Some(kind) if turn.kind != kind => {
                return Err(format!("after {text:?}: expected {kind:?}, got {:?}", turn.kind))
            }
            Some(_) => lines.push(("Chatbot".to_string(), turn.reply)),
            None if turn.kind == ReplyKind::TwoRoundReveal => {
                return Err("reveal repeated after the exchange".into())
            }
            None => {}
        }
    }
    Ok(lines)
}

pub fn child_bowl_expected() -> Vec<(String, String)> {
    [
        ("User", "You are a girl."),
        ("Chatbot", "A child is like a bowl. Do you know why?"),
        ("User", "Because your are fragile."),
        ("Chatbot", "Innocent."),
        ("User", "You are like an unwashed bowl."),
    ]
    .iter()
    .map(|(a, b)| (a.to_string(), b.to_string()))
    .collect()
}

/// Form counts over `draws` fresh sessions seeded 0.., each triggered once.
pub fn form_counts(draws: u64) -> [u64; 3] {
    use figura_core::dialogue::{ExpressionForm, Session};
    let (res, engine) = fixture_engine(1);
    let mut counts = [0u64; 3];
    for seed in 0..draws {
        let mut s = Session::new(format!("mc{seed}"), seed);
        let (d, _) = engine
            .respond(&mut s, "I think love is the most complex thing", &res.store, &res.stopwords)
            .unwrap();
        let form = d.form.expect("love utterance triggers");
        counts[ExpressionForm::ALL.iter().position(|f| *f == form).unwrap()] += 1;
    }
    counts
}

/// Pearson statistic against the uniform distribution and its p-value.
pub fn uniformity_p_value(counts: &[u64]) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let n: u64 = counts.iter().sum();
    let expected = n as f64 / counts.len() as f64;
    let stat: f64 = counts
        .iter()
        .map(|c| (*c as f64 - expected).powi(2) / expected)
        .sum();
    1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat)
}

pub fn synthetic_log() -> Vec<figura_core::events::Event> {
    figura_core::events::read_events_file(test_fixture("synthetic_events.jsonl"))
        .unwrap()
        .events
}
