//! CoNLL corpus model, reader/writer and the IOB2 span codec.
//!
//! The on-disk format is one token per line with space-separated columns and
//! the NER tag in the last column. Blank lines separate sentences and
//! `-DOCSTART-` lines separate documents. Internally every label sequence is
//! strict IOB2; IOB1 input is normalized while reading.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::{is_well_formed, EntityClass, NerLabel};

pub const DOCSTART: &str = "-DOCSTART-";
const DOCSTART_LINE: &str = "-DOCSTART- -X- -X- O";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    /// Middle columns (POS, chunk, ...) carried verbatim.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra_columns: Vec<String>,
    pub label: NerLabel,
}

impl Token {
    pub fn new(text: impl Into<String>, label: NerLabel) -> Result<Token> {
        Token::with_columns(text, Vec::new(), label)
    }

    pub fn with_columns(
        text: impl Into<String>,
        extra_columns: Vec<String>,
        label: NerLabel,
    ) -> Result<Token> {
        let text = text.into();
        if !is_field(&text) {
            return Err(Error::InvalidToken(format!("{text:?}")));
        }
        if let Some(bad) = extra_columns.iter().find(|c| !is_field(c)) {
            return Err(Error::InvalidToken(format!("column {bad:?} of token {text:?}")));
        }
        Ok(Token {
            text,
            extra_columns,
            label,
        })
    }
}

fn is_field(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(char::is_whitespace)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Sentence {
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Sentence {
        Sentence { tokens }
    }

    /// Builds a sentence from `(text, tag)` pairs. Handy in tests and fixtures.
    pub fn from_pairs<S: AsRef<str>, T: AsRef<str>>(pairs: &[(S, T)]) -> Result<Sentence> {
        let tokens = pairs
            .iter()
            .map(|(text, tag)| Token::new(text.as_ref(), tag.as_ref().parse()?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Sentence { tokens })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn labels(&self) -> Vec<NerLabel> {
        self.tokens.iter().map(|t| t.label).collect()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }

    /// Replaces every label; `labels` must have one entry per token.
    pub fn set_labels(&mut self, labels: &[NerLabel]) {
        assert_eq!(labels.len(), self.tokens.len(), "label count mismatch");
        for (token, &label) in self.tokens.iter_mut().zip(labels) {
            token.label = label;
        }
    }

    pub fn is_well_formed(&self) -> bool {
        is_well_formed(&self.labels())
    }

    /// Entity spans of this sentence, ordered by start.
    pub fn spans(&self) -> Vec<Span> {
        label_spans(&self.labels())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub sentences: Vec<Sentence>,
}

impl Document {
    pub fn new(id: impl Into<String>, sentences: Vec<Sentence>) -> Document {
        Document {
            id: id.into(),
            sentences,
        }
    }
}

/// A `[start, end)` token range carrying an entity class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub class: EntityClass,
}

impl Span {
    pub fn new(class: EntityClass, start: usize, end: usize) -> Span {
        Span { start, end, class }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}, {})", self.class, self.start, self.end)
    }
}

/// A decoded mention: class, position and surface tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntitySpan {
    pub class: EntityClass,
    pub sentence_index: usize,
    pub start: usize,
    pub end: usize,
    pub surface: Vec<String>,
}

impl EntitySpan {
    pub fn span(&self) -> Span {
        Span::new(self.class, self.start, self.end)
    }
}

/// Tag scheme of CoNLL input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TagScheme {
    /// `I-C` may start an entity; normalized to `B-C`.
    Iob1,
    /// Strict: an entity-initial `I-C` is an error.
    Iob2,
    /// Accept either; entity-initial `I-C` tags are normalized.
    #[default]
    Auto,
}

impl std::str::FromStr for TagScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "iob1" => Ok(TagScheme::Iob1),
            "iob2" | "bio" => Ok(TagScheme::Iob2),
            "auto" => Ok(TagScheme::Auto),
            _ => Err(Error::Invalid(format!("unknown tag scheme {s:?}"))),
        }
    }
}

/// Parses CoNLL text into documents.
///
/// Document ids are ordinals (`"0"`, `"1"`, ...) of the non-empty documents in
/// file order.
pub fn parse_conll(input: &str, scheme: TagScheme) -> Result<Vec<Document>> {
    let mut documents = Vec::new();
    let mut sentences: Vec<Sentence> = Vec::new();
    let mut tokens: Vec<Token> = Vec::new();
    // Line number of each token of the current sentence, for error reporting.
    let mut token_lines: Vec<usize> = Vec::new();

    let flush_sentence =
        |tokens: &mut Vec<Token>, lines: &mut Vec<usize>, sentences: &mut Vec<Sentence>| {
            if tokens.is_empty() {
                return Ok(());
            }
            normalize(tokens, lines, scheme)?;
            sentences.push(Sentence::new(std::mem::take(tokens)));
            lines.clear();
            Ok::<(), Error>(())
        };

    for (idx, raw) in input.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            flush_sentence(&mut tokens, &mut token_lines, &mut sentences)?;
            continue;
        }
        if line.starts_with(DOCSTART) {
            flush_sentence(&mut tokens, &mut token_lines, &mut sentences)?;
            if !sentences.is_empty() {
                let id = documents.len().to_string();
                documents.push(Document::new(id, std::mem::take(&mut sentences)));
            }
            continue;
        }
        let mut fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 2 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected at least a token and a tag, got {line:?}"),
            });
        }
        let tag = fields.pop().unwrap_or_default();
        let label: NerLabel = tag.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("malformed tag {tag:?}"),
        })?;
        let text = fields[0].to_string();
        let extra = fields[1..].iter().map(|s| s.to_string()).collect();
        tokens.push(Token {
            text,
            extra_columns: extra,
            label,
        });
        token_lines.push(line_no);
    }
    flush_sentence(&mut tokens, &mut token_lines, &mut sentences)?;
    if !sentences.is_empty() {
        let id = documents.len().to_string();
        documents.push(Document::new(id, sentences));
    }
    Ok(documents)
}

fn normalize(tokens: &mut [Token], lines: &[usize], scheme: TagScheme) -> Result<()> {
    let mut prev = NerLabel::O;
    for (token, &line) in tokens.iter_mut().zip(lines) {
        if let NerLabel::I(c) = token.label {
            if prev.class() != Some(c) {
                match scheme {
                    TagScheme::Iob2 => {
                        return Err(Error::Iob2Violation {
                            line,
                            tag: token.label.to_string(),
                        })
                    }
                    TagScheme::Iob1 | TagScheme::Auto => token.label = NerLabel::B(c),
                }
            }
        }
        prev = token.label;
    }
    Ok(())
}

/// Writes documents in IOB2 CoNLL form. The inverse of [`parse_conll`] on
/// corpora whose document ids are their ordinals.
pub fn serialize_conll(documents: &[Document]) -> String {
    let mut out = String::new();
    let mut first_block = true;
    for (doc_idx, doc) in documents.iter().enumerate() {
        if doc_idx > 0 {
            if !first_block {
                out.push('\n');
            }
            out.push_str(DOCSTART_LINE);
            out.push('\n');
            first_block = false;
        }
        for sentence in &doc.sentences {
            if !first_block {
                out.push('\n');
            }
            first_block = false;
            for token in &sentence.tokens {
                out.push_str(&token.text);
                for col in &token.extra_columns {
                    out.push(' ');
                    out.push_str(col);
                }
                out.push(' ');
                out.push_str(&token.label.to_string());
                out.push('\n');
            }
        }
    }
    out
}

/// Maximal `B-C (I-C)*` runs of a well-formed label sequence.
pub fn label_spans(labels: &[NerLabel]) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut open: Option<Span> = None;
    for (i, &label) in labels.iter().enumerate() {
        match label {
            NerLabel::I(c) if open.is_some_and(|s| s.class == c) => {
                if let Some(span) = open.as_mut() {
                    span.end = i + 1;
                }
            }
            NerLabel::B(c) | NerLabel::I(c) => {
                spans.extend(open.take());
                open = Some(Span::new(c, i, i + 1));
            }
            NerLabel::O => spans.extend(open.take()),
        }
    }
    spans.extend(open);
    spans
}

/// Encodes non-overlapping spans as IOB2 labels of a sentence of `len` tokens.
pub fn encode_labels(len: usize, spans: &[Span]) -> Result<Vec<NerLabel>> {
    let mut sorted: Vec<Span> = spans.to_vec();
    sorted.sort();
    for span in &sorted {
        if span.is_empty() || span.end > len {
            return Err(Error::SpanOutOfRange {
                span: span.to_string(),
                len,
            });
        }
    }
    for pair in sorted.windows(2) {
        if pair[0].overlaps(&pair[1]) {
            return Err(Error::OverlappingSpans {
                first: pair[0].to_string(),
                second: pair[1].to_string(),
            });
        }
    }
    let mut labels = vec![NerLabel::O; len];
    for span in &sorted {
        labels[span.start] = NerLabel::B(span.class);
        for label in &mut labels[span.start + 1..span.end] {
            *label = NerLabel::I(span.class);
        }
    }
    Ok(labels)
}

/// Decodes the entity mentions of one sentence.
pub fn decode_spans(sentence: &Sentence, sentence_index: usize) -> Vec<EntitySpan> {
    sentence
        .spans()
        .into_iter()
        .map(|s| EntitySpan {
            class: s.class,
            sentence_index,
            start: s.start,
            end: s.end,
            surface: sentence.tokens[s.start..s.end]
                .iter()
                .map(|t| t.text.clone())
                .collect(),
        })
        .collect()
}

/// Inverse of [`decode_spans`].
pub fn encode_spans(len: usize, spans: &[EntitySpan]) -> Result<Vec<NerLabel>> {
    let plain: Vec<Span> = spans.iter().map(EntitySpan::span).collect();
    encode_labels(len, &plain)
}

/// Mention counts per class; every class is present, possibly with zero.
pub fn class_distribution<'a, I>(sentences: I) -> BTreeMap<EntityClass, usize>
where
    I: IntoIterator<Item = &'a Sentence>,
{
    let mut counts: BTreeMap<EntityClass, usize> =
        EntityClass::ALL.iter().map(|&c| (c, 0)).collect();
    for sentence in sentences {
        for span in sentence.spans() {
            *counts.entry(span.class).or_default() += 1;
        }
    }
    counts
}

/// All sentences of a corpus in document order.
pub fn sentences(documents: &[Document]) -> impl Iterator<Item = &Sentence> {
    documents.iter().flat_map(|d| d.sentences.iter())
}

pub fn sentence_count(documents: &[Document]) -> usize {
    documents.iter().map(|d| d.sentences.len()).sum()
}
