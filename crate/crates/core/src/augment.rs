//! Mention-replacement augmentation.
//!
//! A generated sentence is a copy of an original sentence in which every
//! mention of the target class is replaced by a freshly composed name. Mentions
//! with identical surfaces inside one sentence receive the same replacement.
//!
//! Three growth strategies are supported:
//!
//! - [`Strategy::Add`]: append `G = round_half_up(rate * N)` generated sentences.
//! - [`Strategy::UpsampleBalance`]: `Add`, then duplicate original sentences until
//!   the per-class mention shares are back within one percentage point of the
//!   original corpus.
//! - [`Strategy::Replace`]: substitute `min(G, eligible)` distinct originals by
//!   their generated image; the corpus size is unchanged.
//!
//! Randomness for generated sentence `g` comes from stream `g` of the plan seed,
//! so the output does not depend on how generation is scheduled across threads.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{class_distribution, Document, Sentence, Token};
use crate::error::{Error, Result};
use crate::label::{EntityClass, NerLabel};
use crate::namegen::{sample_mention, FormDistribution, NameInventory};
use crate::rng::SeededSampler;

const SELECTION_STREAM: u64 = u64::MAX;
const UPSAMPLE_STREAM: u64 = u64::MAX - 1;
const BALANCE_TOLERANCE: f64 = 0.01;
const BALANCE_ITERATIONS_PER_SENTENCE: usize = 50;

/// Augmentation rate as an exact non-negative decimal fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rate {
    numerator: u64,
    denominator: u64,
}

impl Rate {
    pub fn new(numerator: u64, denominator: u64) -> Result<Rate> {
        if denominator == 0 {
            return Err(Error::Plan("rate denominator must be positive".into()));
        }
        Ok(Rate {
            numerator,
            denominator,
        })
    }

    pub fn zero() -> Rate {
        Rate {
            numerator: 0,
            denominator: 1,
        }
    }

    pub fn from_f64(value: f64) -> Result<Rate> {
        if !value.is_finite() {
            return Err(Error::Plan(format!("rate must be finite, got {value}")));
        }
        value.to_string().parse()
    }

    pub fn as_f64(self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    pub fn exceeds_one(self) -> bool {
        self.numerator > self.denominator
    }

    /// `round_half_up(rate * count)`, computed exactly.
    pub fn generated_count(self, count: usize) -> usize {
        let num = 2 * self.numerator as u128 * count as u128 + self.denominator as u128;
        (num / (2 * self.denominator as u128)) as usize
    }
}

impl FromStr for Rate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Rate> {
        let s = s.trim();
        if s.starts_with('-') {
            return Err(Error::Plan(format!("rate must be non-negative, got {s}")));
        }
        let invalid = || Error::Plan(format!("invalid rate {s:?}"));
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int.is_empty() && frac.is_empty() {
            return Err(invalid());
        }
        let all_digits = |p: &str| p.chars().all(|c| c.is_ascii_digit());
        if !all_digits(int) || !all_digits(frac) || frac.len() > 18 {
            return Err(invalid());
        }
        let denominator = 10u64.pow(frac.len() as u32);
        let int_part: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| invalid())? };
        let frac_part: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| invalid())? };
        let numerator = int_part
            .checked_mul(denominator)
            .and_then(|v| v.checked_add(frac_part))
            .ok_or_else(invalid)?;
        Rate::new(numerator, denominator)
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_f64())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Add,
    UpsampleBalance,
    Replace,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Strategy> {
        match s {
            "add" => Ok(Strategy::Add),
            "balance" | "upsample_balance" | "upsample-balance" => Ok(Strategy::UpsampleBalance),
            "replace" => Ok(Strategy::Replace),
            other => Err(Error::Plan(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AugmentationPlan {
    pub rate: Rate,
    pub strategy: Strategy,
    pub target_class: EntityClass,
    pub seed: u64,
}

impl AugmentationPlan {
    pub fn new(rate: Rate, strategy: Strategy, seed: u64) -> Result<AugmentationPlan> {
        let plan = AugmentationPlan {
            rate,
            strategy,
            target_class: EntityClass::Per,
            seed,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn with_target(mut self, class: EntityClass) -> AugmentationPlan {
        self.target_class = class;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategy == Strategy::Replace && self.rate.exceeds_one() {
            return Err(Error::Plan(format!(
                "replace strategy needs a rate of at most 1, got {}",
                self.rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Original,
    Generated,
    Upsampled,
}

/// One replaced mention, as written to the replacement log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replacement {
    /// Ordinal of the generated sentence in the output corpus.
    pub sentence: usize,
    pub original: String,
    pub replacement: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedCorpus {
    pub sentences: Vec<Sentence>,
    pub provenance: Vec<Provenance>,
    /// For each output sentence, the index of the original sentence it came from.
    pub sources: Vec<usize>,
    pub replacement_log: Vec<Replacement>,
}

impl AugmentedCorpus {
    pub fn count(&self, kind: Provenance) -> usize {
        self.provenance.iter().filter(|p| **p == kind).count()
    }

    /// The corpus as a single document, ready for serialization or training.
    pub fn to_documents(&self) -> Vec<Document> {
        vec![Document::new("0", self.sentences.clone())]
    }
}

/// A replaced mention inside one sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MentionSwap {
    pub original: Vec<String>,
    pub replacement: Vec<String>,
}

/// Replaces every `class` mention of `sentence` with a sampled name.
///
/// Returns the new sentence and one [`MentionSwap`] per replaced mention, in
/// sentence order.
pub fn replace_mentions(
    sentence: &Sentence,
    class: EntityClass,
    inventory: &NameInventory,
    forms: &FormDistribution,
    sampler: &mut SeededSampler,
) -> Result<(Sentence, Vec<MentionSwap>)> {
    let targets: Vec<_> = sentence
        .spans()
        .into_iter()
        .filter(|s| s.class == class)
        .collect();
    if targets.is_empty() {
        return Ok((sentence.clone(), Vec::new()));
    }

    let mut chosen: HashMap<Vec<String>, Vec<String>> = HashMap::new();
    let mut swaps = Vec::with_capacity(targets.len());
    for span in &targets {
        let surface: Vec<String> = sentence.tokens[span.start..span.end]
            .iter()
            .map(|t| t.text.clone())
            .collect();
        let replacement = match chosen.get(&surface) {
            Some(r) => r.clone(),
            None => {
                let r = sample_mention(inventory, forms, sampler)?;
                chosen.insert(surface.clone(), r.clone());
                r
            }
        };
        swaps.push(MentionSwap {
            original: surface,
            replacement,
        });
    }

    let mut tokens = Vec::with_capacity(sentence.len() + targets.len());
    let mut next = 0;
    for (span, swap) in targets.iter().zip(&swaps) {
        tokens.extend_from_slice(&sentence.tokens[next..span.start]);
        let source = &sentence.tokens[span.start..span.end];
        for (j, text) in swap.replacement.iter().enumerate() {
            let template = &source[j.min(source.len() - 1)];
            let label = if j == 0 {
                NerLabel::B(class)
            } else {
                NerLabel::I(class)
            };
            tokens.push(Token::with_columns(
                text.clone(),
                template.extra_columns.clone(),
                label,
            )?);
        }
        next = span.end;
    }
    tokens.extend_from_slice(&sentence.tokens[next..]);
    Ok((Sentence::new(tokens), swaps))
}

/// Applies an augmentation plan to a corpus.
pub fn augment_dataset(
    corpus: &[Document],
    plan: &AugmentationPlan,
    inventory: &NameInventory,
    forms: &FormDistribution,
) -> Result<AugmentedCorpus> {
    plan.validate()?;
    let originals: Vec<&Sentence> = corpus.iter().flat_map(|d| &d.sentences).collect();
    let n = originals.len();
    let generated = plan.rate.generated_count(n);
    let eligible: Vec<usize> = originals
        .iter()
        .enumerate()
        .filter(|(_, s)| s.spans().iter().any(|sp| sp.class == plan.target_class))
        .map(|(i, _)| i)
        .collect();
    if generated > 0 {
        if eligible.is_empty() {
            return Err(Error::Plan(format!(
                "no sentence contains a {} mention to replace",
                plan.target_class
            )));
        }
        forms.check_against(inventory)?;
    }

    let mut out = AugmentedCorpus {
        sentences: originals.iter().map(|s| (*s).clone()).collect(),
        provenance: vec![Provenance::Original; n],
        sources: (0..n).collect(),
        replacement_log: Vec::new(),
    };

    match plan.strategy {
        Strategy::Add | Strategy::UpsampleBalance => {
            let results: Vec<(usize, Sentence, Vec<MentionSwap>)> = (0..generated as u64)
                .into_par_iter()
                .map(|ordinal| {
                    let mut sampler = SeededSampler::new(plan.seed, ordinal);
                    let source = eligible[sampler.below(eligible.len())];
                    let (sentence, swaps) = replace_mentions(
                        originals[source],
                        plan.target_class,
                        inventory,
                        forms,
                        &mut sampler,
                    )?;
                    Ok((source, sentence, swaps))
                })
                .collect::<Result<_>>()?;
            for (source, sentence, swaps) in results {
                let position = out.sentences.len();
                push_log(&mut out.replacement_log, position, swaps);
                out.sentences.push(sentence);
                out.provenance.push(Provenance::Generated);
                out.sources.push(source);
            }
            if plan.strategy == Strategy::UpsampleBalance {
                upsample_to_balance(&mut out, &originals, plan);
            }
        }
        Strategy::Replace => {
            let k = generated.min(eligible.len());
            let mut pool = eligible.clone();
            let mut selector = SeededSampler::new(plan.seed, SELECTION_STREAM);
            for i in 0..k {
                let j = i + selector.below(pool.len() - i);
                pool.swap(i, j);
            }
            let chosen = &pool[..k];
            let results: Vec<(Sentence, Vec<MentionSwap>)> = chosen
                .par_iter()
                .enumerate()
                .map(|(ordinal, &source)| {
                    let mut sampler = SeededSampler::new(plan.seed, ordinal as u64);
                    replace_mentions(
                        originals[source],
                        plan.target_class,
                        inventory,
                        forms,
                        &mut sampler,
                    )
                })
                .collect::<Result<_>>()?;
            let mut order: Vec<(usize, Sentence, Vec<MentionSwap>)> = chosen
                .iter()
                .zip(results)
                .map(|(&src, (s, w))| (src, s, w))
                .collect();
            order.sort_by_key(|(src, _, _)| *src);
            for (source, sentence, swaps) in order {
                push_log(&mut out.replacement_log, source, swaps);
                out.sentences[source] = sentence;
                out.provenance[source] = Provenance::Generated;
            }
        }
    }
    Ok(out)
}

fn push_log(log: &mut Vec<Replacement>, sentence: usize, swaps: Vec<MentionSwap>) {
    log.extend(swaps.into_iter().map(|swap| Replacement {
        sentence,
        original: swap.original.join(" "),
        replacement: swap.replacement.join(" "),
    }));
}

fn shares(counts: &BTreeMap<EntityClass, usize>) -> BTreeMap<EntityClass, f64> {
    let total: usize = counts.values().sum();
    counts
        .iter()
        .map(|(&c, &n)| (c, if total == 0 { 0.0 } else { n as f64 / total as f64 }))
        .collect()
}

/// Largest absolute difference between the class mention shares of two count maps.
pub fn max_share_deviation(
    reference: &BTreeMap<EntityClass, usize>,
    current: &BTreeMap<EntityClass, usize>,
) -> f64 {
    let a = shares(reference);
    let b = shares(current);
    EntityClass::ALL
        .iter()
        .map(|c| (a.get(c).unwrap_or(&0.0) - b.get(c).unwrap_or(&0.0)).abs())
        .fold(0.0, f64::max)
}

fn upsample_to_balance(out: &mut AugmentedCorpus, originals: &[&Sentence], plan: &AugmentationPlan) {
    let n = originals.len();
    let target = class_distribution(originals.iter().copied());
    if target.values().sum::<usize>() == 0 {
        return;
    }
    let per_sentence: Vec<BTreeMap<EntityClass, usize>> = originals
        .iter()
        .map(|s| class_distribution(std::iter::once(*s)))
        .collect();
    // Candidates per class; sentences free of the augmented class first, since
    // duplicating those moves the shares fastest.
    let mut preferred: BTreeMap<EntityClass, Vec<usize>> = BTreeMap::new();
    let mut fallback: BTreeMap<EntityClass, Vec<usize>> = BTreeMap::new();
    for (i, counts) in per_sentence.iter().enumerate() {
        for (&class, &count) in counts {
            if count == 0 {
                continue;
            }
            fallback.entry(class).or_default().push(i);
            if counts[&plan.target_class] == 0 {
                preferred.entry(class).or_default().push(i);
            }
        }
    }

    let mut current = class_distribution(out.sentences.iter());
    let mut sampler = SeededSampler::new(plan.seed, UPSAMPLE_STREAM);
    let target_shares = shares(&target);
    for _ in 0..BALANCE_ITERATIONS_PER_SENTENCE * n {
        if max_share_deviation(&target, &current) <= BALANCE_TOLERANCE {
            break;
        }
        let current_shares = shares(&current);
        let Some(class) = EntityClass::ALL
            .iter()
            .copied()
            .filter(|c| target[c] > 0)
            .max_by(|a, b| {
                let da = target_shares[a] - current_shares[a];
                let db = target_shares[b] - current_shares[b];
                // Earlier classes win ties.
                da.total_cmp(&db).then(b.cmp(a))
            })
        else {
            break;
        };
        let pool = preferred
            .get(&class)
            .filter(|p| !p.is_empty())
            .or_else(|| fallback.get(&class));
        let Some(pool) = pool else { break };
        let source = pool[sampler.below(pool.len())];
        for (&c, &count) in &per_sentence[source] {
            *current.entry(c).or_default() += count;
        }
        out.sentences.push(originals[source].clone());
        out.provenance.push(Provenance::Upsampled);
        out.sources.push(source);
    }
}
