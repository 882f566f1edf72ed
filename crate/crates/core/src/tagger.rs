//! Averaged-perceptron NER tagger with greedy left-to-right decoding.
//!
//! This is a baseline, not a competitive model. It is deterministic and cheap,
//! and because its features are lexical (word, affixes, shape) it reacts to
//! the name coverage that mention replacement changes.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::context::{build_windows, project_predictions, ContextWindow};
use crate::corpus::{Document, Sentence};
use crate::error::{Error, Result};
use crate::label::{repair_bio, NerLabel};
use crate::rng::SeededSampler;

pub const TEMPLATE_VERSION: u32 = 1;
const FORMAT: &str = "ner-forge-perceptron";
const START: &str = "<S>";
const END: &str = "</S>";

type Row = [f64; NerLabel::COUNT];

/// Character shape: uppercase → `X`, lowercase → `x`, digit → `d`, other kept.
pub fn word_shape(word: &str) -> String {
    word.chars()
        .map(|c| {
            if c.is_uppercase() {
                'X'
            } else if c.is_lowercase() {
                'x'
            } else if c.is_numeric() {
                'd'
            } else {
                c
            }
        })
        .collect()
}

/// Feature strings for the token at `position`, in a fixed template order.
pub fn extract_features(sentence: &Sentence, position: usize, previous_label: NerLabel) -> Vec<String> {
    let word = sentence.tokens[position].text.as_str();
    let chars: Vec<char> = word.chars().collect();
    let shape = word_shape(word);
    let prev_word = position
        .checked_sub(1)
        .map_or(START, |p| sentence.tokens[p].text.as_str());
    let next_word = sentence
        .tokens
        .get(position + 1)
        .map_or(END, |t| t.text.as_str());

    let mut features = Vec::with_capacity(20);
    features.push("bias".to_string());
    features.push(format!("w={word}"));
    features.push(format!("lw={}", word.to_lowercase()));
    for k in 1..=3.min(chars.len()) {
        features.push(format!("p{k}={}", chars[..k].iter().collect::<String>()));
        features.push(format!("s{k}={}", chars[chars.len() - k..].iter().collect::<String>()));
    }
    features.push(format!("shape={shape}"));
    features.push(format!("pw={prev_word}"));
    features.push(format!("nw={next_word}"));
    features.push(format!("pl={previous_label}"));
    features.push(format!("pl+shape={previous_label}|{shape}"));
    if chars.first().is_some_and(|c| c.is_uppercase()) && chars[1..].iter().all(|c| !c.is_uppercase()) {
        features.push("title".to_string());
    }
    if chars.iter().any(|c| c.is_alphabetic()) && chars.iter().all(|c| !c.is_lowercase()) {
        features.push("allcaps".to_string());
    }
    if chars.iter().any(|&c| c == '\'' || c == '’') {
        features.push("apos".to_string());
    }
    if chars.iter().any(|c| c.is_ascii_digit()) {
        features.push("digit".to_string());
    }
    features
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub seed: u64,
    /// Stop after this many sentence presentations, whatever the corpus size.
    pub max_presentations: Option<usize>,
}

impl TrainConfig {
    pub fn new(epochs: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs,
            seed,
            max_presentations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelHeader {
    pub format: String,
    pub template_version: u32,
    pub seed: u64,
    pub epochs: usize,
    pub presentations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggerModel {
    pub header: ModelHeader,
    weights: HashMap<String, Row>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    header: ModelHeader,
    labels: Vec<NerLabel>,
    weights: BTreeMap<String, Vec<f64>>,
}

impl TaggerModel {
    pub fn feature_count(&self) -> usize {
        self.weights.len()
    }

    fn scores(&self, features: &[String]) -> Row {
        let mut scores = [0.0; NerLabel::COUNT];
        for feature in features {
            if let Some(row) = self.weights.get(feature) {
                for (s, w) in scores.iter_mut().zip(row) {
                    *s += w;
                }
            }
        }
        scores
    }

    /// Greedy decoding followed by BIO repair.
    pub fn predict(&self, sentence: &Sentence) -> Vec<NerLabel> {
        let mut labels = Vec::with_capacity(sentence.len());
        let mut prev = NerLabel::O;
        for i in 0..sentence.len() {
            let label = argmax(&self.scores(&extract_features(sentence, i, prev)));
            labels.push(label);
            prev = label;
        }
        repair_bio(&mut labels);
        labels
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            header: self.header.clone(),
            labels: NerLabel::ALL.to_vec(),
            weights: self
                .weights
                .iter()
                .map(|(k, v)| (k.clone(), v.to_vec()))
                .collect(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<TaggerModel> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.header.format != FORMAT {
            return Err(Error::Invalid(format!("not a tagger model: {:?}", file.header.format)));
        }
        if file.header.template_version != TEMPLATE_VERSION {
            return Err(Error::Invalid(format!(
                "model uses feature templates v{}, this build has v{TEMPLATE_VERSION}",
                file.header.template_version
            )));
        }
        if file.labels != NerLabel::ALL {
            return Err(Error::Invalid("model label set differs from IOB2 PER/ORG/LOC/MISC".into()));
        }
        let mut weights = HashMap::with_capacity(file.weights.len());
        for (feature, row) in file.weights {
            let row: Row = row
                .try_into()
                .map_err(|_| Error::Invalid(format!("feature {feature:?}: wrong weight count")))?;
            if row.iter().any(|w| !w.is_finite()) {
                return Err(Error::Invalid(format!("feature {feature:?}: non-finite weight")));
            }
            weights.insert(feature, row);
        }
        Ok(TaggerModel {
            header: file.header,
            weights,
        })
    }
}

fn argmax(scores: &Row) -> NerLabel {
    let mut best = 0;
    for i in 1..scores.len() {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    NerLabel::from_index(best)
}

#[derive(Default)]
struct Trainer {
    weights: HashMap<String, Row>,
    totals: HashMap<String, Row>,
    stamps: HashMap<String, [u64; NerLabel::COUNT]>,
    instances: u64,
}

impl Trainer {
    fn scores(&self, features: &[String]) -> Row {
        let mut scores = [0.0; NerLabel::COUNT];
        for feature in features {
            if let Some(row) = self.weights.get(feature) {
                for (s, w) in scores.iter_mut().zip(row) {
                    *s += w;
                }
            }
        }
        scores
    }

    fn bump(&mut self, feature: &str, label: usize, delta: f64) {
        if !self.weights.contains_key(feature) {
            self.weights.insert(feature.to_string(), [0.0; NerLabel::COUNT]);
            self.totals.insert(feature.to_string(), [0.0; NerLabel::COUNT]);
            self.stamps.insert(feature.to_string(), [0; NerLabel::COUNT]);
        }
        let w = self.weights.get_mut(feature).expect("inserted");
        let total = self.totals.get_mut(feature).expect("inserted");
        let stamp = self.stamps.get_mut(feature).expect("inserted");
        total[label] += (self.instances - stamp[label]) as f64 * w[label];
        stamp[label] = self.instances;
        w[label] += delta;
    }

    fn averaged(self) -> HashMap<String, Row> {
        let n = self.instances.max(1) as f64;
        let mut out = HashMap::with_capacity(self.weights.len());
        for (feature, w) in self.weights {
            let total = &self.totals[&feature];
            let stamp = &self.stamps[&feature];
            let mut row = [0.0; NerLabel::COUNT];
            for l in 0..NerLabel::COUNT {
                row[l] = (total[l] + (self.instances - stamp[l]) as f64 * w[l]) / n;
            }
            if row.iter().any(|v| *v != 0.0) {
                out.insert(feature, row);
            }
        }
        out
    }
}

/// Trains an averaged perceptron. Sentence order is reshuffled every epoch
/// from `config.seed`.
pub fn train(corpus: &[Document], config: TrainConfig) -> Result<TaggerModel> {
    let sentences: Vec<&Sentence> = corpus.iter().flat_map(|d| &d.sentences).collect();
    train_sentences(&sentences, config)
}

pub fn train_sentences(sentences: &[&Sentence], config: TrainConfig) -> Result<TaggerModel> {
    if sentences.is_empty() {
        return Err(Error::Invalid("cannot train on an empty corpus".into()));
    }
    if config.epochs == 0 {
        return Err(Error::Invalid("epochs must be at least 1".into()));
    }
    let mut trainer = Trainer::default();
    let mut presentations = 0;
    let budget = config.max_presentations.unwrap_or(usize::MAX);
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    'epochs: for epoch in 0..config.epochs {
        let mut sampler = SeededSampler::new(config.seed, epoch as u64);
        sampler.shuffle(&mut order);
        for &idx in &order {
            if presentations >= budget {
                break 'epochs;
            }
            presentations += 1;
            let sentence = sentences[idx];
            let mut prev = NerLabel::O;
            for (i, token) in sentence.tokens.iter().enumerate() {
                let features = extract_features(sentence, i, prev);
                let guess = argmax(&trainer.scores(&features));
                let gold = token.label;
                trainer.instances += 1;
                if guess != gold {
                    for f in &features {
                        trainer.bump(f, gold.index(), 1.0);
                        trainer.bump(f, guess.index(), -1.0);
                    }
                }
                prev = guess;
            }
        }
    }
    Ok(TaggerModel {
        header: ModelHeader {
            format: FORMAT.to_string(),
            template_version: TEMPLATE_VERSION,
            seed: config.seed,
            epochs: config.epochs,
            presentations,
        },
        weights: trainer.averaged(),
    })
}

pub fn tag_sentence(model: &TaggerModel, sentence: &Sentence) -> Sentence {
    let mut out = sentence.clone();
    out.set_labels(&model.predict(sentence));
    out
}

/// Tags every sentence on its own (no context).
pub fn tag(model: &TaggerModel, documents: &[Document]) -> Vec<Document> {
    documents
        .iter()
        .map(|doc| Document {
            id: doc.id.clone(),
            sentences: doc
                .sentences
                .par_iter()
                .map(|s| tag_sentence(model, s))
                .collect(),
        })
        .collect()
}

/// Tags a whole window and keeps the target sentence's labels.
pub fn tag_window(model: &TaggerModel, window: &ContextWindow) -> Result<Vec<NerLabel>> {
    let labels = model.predict(&window.flatten());
    project_predictions(window, &labels)
}

/// Tags every sentence with `n` sentences of context on each side.
pub fn tag_with_context(model: &TaggerModel, documents: &[Document], n: usize) -> Result<Vec<Document>> {
    documents
        .iter()
        .map(|doc| {
            let windows = build_windows(doc, n);
            let sentences = windows
                .par_iter()
                .map(|w| {
                    let mut s = w.target().clone();
                    s.set_labels(&tag_window(model, w)?);
                    Ok(s)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Document::new(doc.id.clone(), sentences))
        })
        .collect()
}
