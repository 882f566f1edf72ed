//! Semi-automated annotation correction.
//!
//! Flags are suggestions produced by simple heuristics (gazetteer lookups,
//! capitalization, disagreement with a model). Nothing changes in the corpus
//! until a human accepts a flag; [`apply_decisions`] then applies the accepted
//! ones.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{encode_labels, Document, Sentence, Span};
use crate::error::{Error, Result};
use crate::label::EntityClass;
use crate::metrics::check_alignment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FlagKind {
    GazetteerFn,
    GazetteerFp,
    CapitalizationFp,
    ModelDisagreement,
}

impl FlagKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FlagKind::GazetteerFn => "GAZETTEER_FN",
            FlagKind::GazetteerFp => "GAZETTEER_FP",
            FlagKind::CapitalizationFp => "CAPITALIZATION_FP",
            FlagKind::ModelDisagreement => "MODEL_DISAGREEMENT",
        }
    }
}

impl std::str::FromStr for FlagKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<FlagKind> {
        [
            FlagKind::GazetteerFn,
            FlagKind::GazetteerFp,
            FlagKind::CapitalizationFp,
            FlagKind::ModelDisagreement,
        ]
        .into_iter()
        .find(|k| k.as_str().eq_ignore_ascii_case(s))
        .ok_or_else(|| Error::Invalid(format!("unknown flag kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", content = "class", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProposedChange {
    /// Annotate the location as a new span of this class.
    AddSpan(EntityClass),
    /// Remove the span at the location.
    RemoveSpan,
    /// Change the class of the span at the location.
    Relabel(EntityClass),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FlagStatus {
    #[default]
    Pending,
    Accepted,
    Rejected,
}

impl std::str::FromStr for FlagStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<FlagStatus> {
        match s.to_ascii_uppercase().as_str() {
            "PENDING" => Ok(FlagStatus::Pending),
            "ACCEPTED" => Ok(FlagStatus::Accepted),
            "REJECTED" => Ok(FlagStatus::Rejected),
            _ => Err(Error::Invalid(format!("unknown flag status {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Location {
    pub document_id: String,
    pub sentence_index: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flag {
    pub id: String,
    pub kind: FlagKind,
    pub location: Location,
    pub surface: Vec<String>,
    pub proposed_change: ProposedChange,
    #[serde(default)]
    pub status: FlagStatus,
}

impl Flag {
    pub fn new(
        kind: FlagKind,
        location: Location,
        surface: Vec<String>,
        proposed_change: ProposedChange,
    ) -> Flag {
        Flag {
            id: flag_id(kind, &location, &surface),
            kind,
            location,
            surface,
            proposed_change,
            status: FlagStatus::Pending,
        }
    }
}

/// Content hash of (kind, location, surface); stable across re-flagging.
pub fn flag_id(kind: FlagKind, location: &Location, surface: &[String]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(kind.as_str().as_bytes());
    for part in [
        location.document_id.as_str(),
        &location.sentence_index.to_string(),
        &location.start.to_string(),
        &location.end.to_string(),
    ] {
        hasher.update([0x1f]);
        hasher.update(part.as_bytes());
    }
    for token in surface {
        hasher.update([0x1e]);
        hasher.update(token.as_bytes());
    }
    hasher.finalize()[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Accept,
    Reject,
}

impl std::str::FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Action> {
        match s.to_ascii_lowercase().as_str() {
            "accept" => Ok(Action::Accept),
            "reject" => Ok(Action::Reject),
            _ => Err(Error::Invalid(format!("unknown action {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub flag_id: String,
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub decided_at: DateTime<Utc>,
}

impl Decision {
    pub fn now(flag_id: impl Into<String>, action: Action, note: Option<String>) -> Decision {
        Decision {
            flag_id: flag_id.into(),
            action,
            note,
            decided_at: Utc::now(),
        }
    }
}

/// Which PER spans the capitalization heuristic flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CapitalizationRule {
    /// Flag only when no token starts with an uppercase letter.
    #[default]
    NoneCapitalized,
    /// Flag when any token does not start with an uppercase letter.
    AnyLowercase,
}

/// Reads a character-name list: one name per line, blank lines ignored.
pub fn load_names(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|l| !l.is_empty())
        .collect()
}

fn surface(sentence: &Sentence, start: usize, end: usize) -> Vec<String> {
    sentence.tokens[start..end]
        .iter()
        .map(|t| t.text.clone())
        .collect()
}

fn location(doc: &Document, sentence_index: usize, start: usize, end: usize) -> Location {
    Location {
        document_id: doc.id.clone(),
        sentence_index,
        start,
        end,
    }
}

/// Gazetteer heuristics: unannotated occurrences of known names (possible
/// false negatives) and PER spans that are not known names (possible false
/// positives). Matching is case-sensitive on whole token sequences.
pub fn flag_gazetteer<S: AsRef<str>>(corpus: &[Document], character_names: &[S]) -> Vec<Flag> {
    let names: HashSet<Vec<&str>> = character_names
        .iter()
        .map(|n| n.as_ref().split_whitespace().collect::<Vec<_>>())
        .filter(|n| !n.is_empty())
        .collect();
    let longest = names.iter().map(Vec::len).max().unwrap_or(0);
    let mut flags = Vec::new();
    for doc in corpus {
        for (si, sentence) in doc.sentences.iter().enumerate() {
            let texts = sentence.texts();
            let spans = sentence.spans();
            let mut annotated = vec![false; sentence.len()];
            for span in &spans {
                annotated[span.start..span.end].fill(true);
            }
            let mut i = 0;
            while i < texts.len() {
                if annotated[i] {
                    i += 1;
                    continue;
                }
                let max_len = (texts.len() - i).min(longest);
                let hit = (1..=max_len).rev().find(|&len| {
                    !annotated[i..i + len].iter().any(|&a| a) && names.contains(&texts[i..i + len])
                });
                match hit {
                    Some(len) => {
                        flags.push(Flag::new(
                            FlagKind::GazetteerFn,
                            location(doc, si, i, i + len),
                            surface(sentence, i, i + len),
                            ProposedChange::AddSpan(EntityClass::Per),
                        ));
                        i += len;
                    }
                    None => i += 1,
                }
            }
            for span in spans.iter().filter(|s| s.class == EntityClass::Per) {
                if !names.contains(&texts[span.start..span.end]) {
                    flags.push(Flag::new(
                        FlagKind::GazetteerFp,
                        location(doc, si, span.start, span.end),
                        surface(sentence, span.start, span.end),
                        ProposedChange::RemoveSpan,
                    ));
                }
            }
        }
    }
    sort_flags(corpus, &mut flags);
    flags
}

fn starts_uppercase(text: &str) -> bool {
    text.chars().next().is_some_and(char::is_uppercase)
}

/// PER spans whose tokens are not capitalized (see [`CapitalizationRule`]).
pub fn flag_capitalization(corpus: &[Document], rule: CapitalizationRule) -> Vec<Flag> {
    let mut flags = Vec::new();
    for doc in corpus {
        for (si, sentence) in doc.sentences.iter().enumerate() {
            for span in sentence.spans().iter().filter(|s| s.class == EntityClass::Per) {
                let tokens = &sentence.tokens[span.start..span.end];
                let suspicious = match rule {
                    CapitalizationRule::NoneCapitalized => {
                        !tokens.iter().any(|t| starts_uppercase(&t.text))
                    }
                    CapitalizationRule::AnyLowercase => {
                        !tokens.iter().all(|t| starts_uppercase(&t.text))
                    }
                };
                if suspicious {
                    flags.push(Flag::new(
                        FlagKind::CapitalizationFp,
                        location(doc, si, span.start, span.end),
                        surface(sentence, span.start, span.end),
                        ProposedChange::RemoveSpan,
                    ));
                }
            }
        }
    }
    flags
}

/// One flag per span present in exactly one of `corpus` and `predictions`.
/// When both sides have a span at the same location with different classes,
/// a single relabel flag is emitted instead of a remove/add pair.
pub fn flag_model_disagreement(corpus: &[Document], predictions: &[Document]) -> Result<Vec<Flag>> {
    check_alignment(corpus, predictions)?;
    let mut flags = Vec::new();
    for (doc, pred_doc) in corpus.iter().zip(predictions) {
        for (si, (sentence, predicted)) in doc.sentences.iter().zip(&pred_doc.sentences).enumerate() {
            let gold: BTreeSet<Span> = sentence.spans().into_iter().collect();
            let pred: BTreeSet<Span> = predicted.spans().into_iter().collect();
            let gold_only: BTreeMap<(usize, usize), Span> = gold
                .difference(&pred)
                .map(|s| ((s.start, s.end), *s))
                .collect();
            let pred_only: BTreeMap<(usize, usize), Span> = pred
                .difference(&gold)
                .map(|s| ((s.start, s.end), *s))
                .collect();
            for (&(start, end), span) in &pred_only {
                let change = if gold_only.contains_key(&(start, end)) {
                    ProposedChange::Relabel(span.class)
                } else {
                    ProposedChange::AddSpan(span.class)
                };
                flags.push(Flag::new(
                    FlagKind::ModelDisagreement,
                    location(doc, si, start, end),
                    surface(sentence, start, end),
                    change,
                ));
            }
            for &(start, end) in gold_only.keys() {
                if !pred_only.contains_key(&(start, end)) {
                    flags.push(Flag::new(
                        FlagKind::ModelDisagreement,
                        location(doc, si, start, end),
                        surface(sentence, start, end),
                        ProposedChange::RemoveSpan,
                    ));
                }
            }
        }
    }
    sort_flags(corpus, &mut flags);
    Ok(flags)
}

/// Sorts flags by (document order, sentence, start, end, kind) and drops
/// duplicate ids.
pub fn sort_flags(corpus: &[Document], flags: &mut Vec<Flag>) {
    let order: HashMap<&str, usize> = corpus
        .iter()
        .enumerate()
        .map(|(i, d)| (d.id.as_str(), i))
        .collect();
    flags.sort_by_key(|f| {
        (
            order.get(f.location.document_id.as_str()).copied().unwrap_or(usize::MAX),
            f.location.sentence_index,
            f.location.start,
            f.location.end,
            f.kind,
        )
    });
    let mut seen = HashSet::new();
    flags.retain(|f| seen.insert(f.id.clone()));
}

/// Runs every heuristic that has its inputs and merges the flags in corpus order.
pub fn flag_corpus<S: AsRef<str>>(
    corpus: &[Document],
    character_names: &[S],
    predictions: Option<&[Document]>,
    rule: CapitalizationRule,
) -> Result<Vec<Flag>> {
    let mut flags = flag_gazetteer(corpus, character_names);
    flags.extend(flag_capitalization(corpus, rule));
    if let Some(predictions) = predictions {
        flags.extend(flag_model_disagreement(corpus, predictions)?);
    }
    sort_flags(corpus, &mut flags);
    Ok(flags)
}

/// Decisions indexed by flag id; rejects unknown ids and duplicate decisions.
pub fn index_decisions<'a>(
    flags: &[Flag],
    decisions: &'a [Decision],
) -> Result<HashMap<&'a str, &'a Decision>> {
    let known: HashSet<&str> = flags.iter().map(|f| f.id.as_str()).collect();
    let mut by_flag = HashMap::new();
    for decision in decisions {
        if !known.contains(decision.flag_id.as_str()) {
            return Err(Error::UnknownFlag(decision.flag_id.clone()));
        }
        if by_flag.insert(decision.flag_id.as_str(), decision).is_some() {
            return Err(Error::DuplicateDecision(decision.flag_id.clone()));
        }
    }
    Ok(by_flag)
}

/// Flags with their status set from `decisions`.
pub fn with_statuses(flags: &[Flag], decisions: &[Decision]) -> Result<Vec<Flag>> {
    let by_flag = index_decisions(flags, decisions)?;
    Ok(flags
        .iter()
        .map(|f| {
            let mut f = f.clone();
            f.status = match by_flag.get(f.id.as_str()).map(|d| d.action) {
                Some(Action::Accept) => FlagStatus::Accepted,
                Some(Action::Reject) => FlagStatus::Rejected,
                None => FlagStatus::Pending,
            };
            f
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ApplySummary {
    pub spans_added: usize,
    pub spans_removed: usize,
    pub spans_relabeled: usize,
}

/// Applies the accepted flags. Removals run first, then additions, then
/// relabels, independent of the order of `decisions`.
pub fn apply_decisions(
    corpus: &[Document],
    flags: &[Flag],
    decisions: &[Decision],
) -> Result<(Vec<Document>, ApplySummary)> {
    let by_flag = index_decisions(flags, decisions)?;
    let accepted: Vec<&Flag> = flags
        .iter()
        .filter(|f| by_flag.get(f.id.as_str()).is_some_and(|d| d.action == Action::Accept))
        .collect();

    let doc_index: HashMap<&str, usize> = corpus
        .iter()
        .enumerate()
        .map(|(i, d)| (d.id.as_str(), i))
        .collect();
    let mut grouped: BTreeMap<(usize, usize), Vec<&Flag>> = BTreeMap::new();
    for flag in accepted {
        let stale = |message: String| Error::StaleFlag {
            flag: flag.id.clone(),
            message,
        };
        let &d = doc_index
            .get(flag.location.document_id.as_str())
            .ok_or_else(|| stale(format!("unknown document {:?}", flag.location.document_id)))?;
        let sentence = corpus[d]
            .sentences
            .get(flag.location.sentence_index)
            .ok_or_else(|| stale("sentence index out of range".into()))?;
        let Location { start, end, .. } = flag.location;
        if start >= end || end > sentence.len() {
            return Err(stale(format!("span [{start}, {end}) out of range")));
        }
        if surface(sentence, start, end) != flag.surface {
            return Err(stale("surface does not match the corpus".into()));
        }
        grouped
            .entry((d, flag.location.sentence_index))
            .or_default()
            .push(flag);
    }

    let mut out = corpus.to_vec();
    let mut summary = ApplySummary::default();
    for ((d, s), flags) in grouped {
        let sentence = &mut out[d].sentences[s];
        let mut spans = sentence.spans();
        let phase = |c: &ProposedChange| match c {
            ProposedChange::RemoveSpan => 0,
            ProposedChange::AddSpan(_) => 1,
            ProposedChange::Relabel(_) => 2,
        };
        let mut ordered = flags;
        ordered.sort_by_key(|f| phase(&f.proposed_change));

        let mut removed: HashSet<(usize, usize)> = HashSet::new();
        let mut added: Vec<(Span, &str)> = Vec::new();
        for flag in ordered {
            let (start, end) = (flag.location.start, flag.location.end);
            let stale = |message: &str| Error::StaleFlag {
                flag: flag.id.clone(),
                message: message.to_string(),
            };
            match flag.proposed_change {
                ProposedChange::RemoveSpan => {
                    if let Some(pos) = spans.iter().position(|x| (x.start, x.end) == (start, end)) {
                        spans.remove(pos);
                        removed.insert((start, end));
                        summary.spans_removed += 1;
                    } else if !removed.contains(&(start, end)) {
                        return Err(stale("no span to remove at this location"));
                    }
                }
                ProposedChange::AddSpan(class) => {
                    let span = Span::new(class, start, end);
                    if added.iter().any(|(a, _)| *a == span) {
                        continue;
                    }
                    if let Some((_, other_id)) = added.iter().find(|(a, _)| a.overlaps(&span)) {
                        return Err(Error::ConflictingFlags {
                            first: other_id.to_string(),
                            second: flag.id.clone(),
                        });
                    }
                    if let Some(existing) = spans.iter().find(|x| x.overlaps(&span)) {
                        return Err(stale(&format!("overlaps existing span {existing}")));
                    }
                    spans.push(span);
                    added.push((span, flag.id.as_str()));
                    summary.spans_added += 1;
                }
                ProposedChange::Relabel(class) => {
                    let Some(existing) =
                        spans.iter_mut().find(|x| (x.start, x.end) == (start, end))
                    else {
                        return Err(stale("no span to relabel at this location"));
                    };
                    if existing.class != class {
                        existing.class = class;
                        summary.spans_relabeled += 1;
                    }
                }
            }
        }
        let labels = encode_labels(sentence.len(), &spans)?;
        sentence.set_labels(&labels);
    }
    Ok((out, summary))
}
