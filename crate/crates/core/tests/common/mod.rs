//! Independent oracles and fixture builders shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use ner_forge::corpus::{Document, Sentence, Token};
use ner_forge::label::repair_bio;
use ner_forge::{EntityClass, NerLabel, SeededSampler};

pub const WORDS: &[&str] = &[
    "the", "a", "saw", "went", "to", "Alice", "Bob", "Paris", "IBM", "said", "of", "Vin",
    "Kelsier", "river", "on", "Monday", ",", ".", "al'Thor", "van", "Helsing", "3", "and",
];

/// Random well-formed labels: uniform tags, then orphan I-tags re-headed.
pub fn random_labels(sampler: &mut SeededSampler, len: usize) -> Vec<NerLabel> {
    let mut labels: Vec<NerLabel> = (0..len)
        .map(|_| NerLabel::from_index(sampler.below(NerLabel::COUNT)))
        .collect();
    repair_bio(&mut labels);
    labels
}

pub fn random_sentence(sampler: &mut SeededSampler, max_len: usize) -> Sentence {
    let len = 1 + sampler.below(max_len);
    let labels = random_labels(sampler, len);
    Sentence::new(
        labels
            .into_iter()
            .map(|l| Token::new(WORDS[sampler.below(WORDS.len())], l).unwrap())
            .collect(),
    )
}

pub fn random_corpus(sampler: &mut SeededSampler, max_sentences: usize, max_len: usize) -> Vec<Document> {
    let total = 1 + sampler.below(max_sentences);
    let mut docs = Vec::new();
    let mut left = total;
    while left > 0 {
        let take = 1 + sampler.below(left);
        let sentences = (0..take).map(|_| random_sentence(sampler, max_len)).collect();
        docs.push(Document::new(docs.len().to_string(), sentences));
        left -= take;
    }
    docs
}

/// Same tokens as `gold`, fresh random labels.
pub fn relabel(sampler: &mut SeededSampler, gold: &[Document]) -> Vec<Document> {
    gold.iter()
        .map(|d| {
            let sentences = d
                .sentences
                .iter()
                .map(|s| {
                    let mut s = s.clone();
                    s.set_labels(&random_labels(sampler, s.len()));
                    s
                })
                .collect();
            Document::new(d.id.clone(), sentences)
        })
        .collect()
}

/// Every (class, start, end) that is an entity, found by testing all ranges.
pub fn brute_spans(labels: &[NerLabel]) -> BTreeSet<(EntityClass, usize, usize)> {
    let mut out = BTreeSet::new();
    for start in 0..labels.len() {
        for end in start + 1..=labels.len() {
            for class in EntityClass::ALL {
                let head = labels[start] == NerLabel::B(class);
                let body = labels[start + 1..end].iter().all(|l| *l == NerLabel::I(class));
                let closed = end == labels.len() || labels[end] != NerLabel::I(class);
                if head && body && closed {
                    out.insert((class, start, end));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

/// Pairwise exact matcher over all spans of every sentence.
pub fn brute_score(
    gold: &[Document],
    pred: &[Document],
    keep: &BTreeSet<EntityClass>,
) -> (BTreeMap<EntityClass, Counts>, Counts) {
    let mut per: BTreeMap<EntityClass, Counts> = keep.iter().map(|c| (*c, Counts::default())).collect();
    for (g, p) in gold.iter().flat_map(|d| &d.sentences).zip(pred.iter().flat_map(|d| &d.sentences)) {
        let gs: Vec<_> = brute_spans(&g.labels()).into_iter().filter(|s| keep.contains(&s.0)).collect();
        let ps: Vec<_> = brute_spans(&p.labels()).into_iter().filter(|s| keep.contains(&s.0)).collect();
        for ps_ in &ps {
            let hit = gs.iter().any(|gs_| gs_ == ps_);
            let c = per.get_mut(&ps_.0).unwrap();
            if hit {
                c.tp += 1;
            } else {
                c.fp += 1;
            }
        }
        for gs_ in &gs {
            if !ps.iter().any(|ps_| ps_ == gs_) {
                per.get_mut(&gs_.0).unwrap().fn_ += 1;
            }
        }
    }
    let mut micro = Counts::default();
    for c in per.values() {
        micro.tp += c.tp;
        micro.fp += c.fp;
        micro.fn_ += c.fn_;
    }
    (per, micro)
}

pub fn prf(c: Counts) -> (f64, f64, f64) {
    let p = if c.tp + c.fp == 0 { 0.0 } else { c.tp as f64 / (c.tp + c.fp) as f64 };
    let r = if c.tp + c.fn_ == 0 { 0.0 } else { c.tp as f64 / (c.tp + c.fn_) as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

/// Sentence from "word/TAG" pairs separated by spaces.
pub fn sent(pairs_text: &str) -> Sentence {
    let pairs: Vec<(&str, &str)> = pairs_text
        .split(' ')
        .map(|p| p.rsplit_once('/').unwrap())
        .collect();
    Sentence::from_pairs(&pairs).unwrap()
}

pub fn doc(id: &str, sentences: &[&str]) -> Document {
    Document::new(id, sentences.iter().map(|s| sent(s)).collect())
}
