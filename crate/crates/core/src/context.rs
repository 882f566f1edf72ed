//! Context windows: a target sentence plus up to `n` sentences on each side.
//!
//! Windows never cross document boundaries. The flattened window is the plain
//! concatenation of its sentences; the target's position is carried as a token
//! range rather than as separator tokens.

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Sentence, Token};
use crate::error::{Error, Result};
use crate::label::{repair_bio, NerLabel};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextWindow {
    pub document_id: String,
    pub target_index: usize,
    pub n: usize,
    /// Document index of `sentences[0]`.
    pub first_index: usize,
    pub sentences: Vec<Sentence>,
    /// `[start, end)` of the target sentence within the flattened window.
    pub target_token_range: (usize, usize),
}

impl ContextWindow {
    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.sentences.iter().flat_map(|s| s.tokens.iter())
    }

    pub fn labels(&self) -> Vec<NerLabel> {
        self.tokens().map(|t| t.label).collect()
    }

    pub fn target(&self) -> &Sentence {
        &self.sentences[self.target_index - self.first_index]
    }

    /// Flattened window as one pseudo-sentence.
    pub fn flatten(&self) -> Sentence {
        Sentence::new(self.tokens().cloned().collect())
    }

    pub fn to_record(&self) -> WindowRecord {
        WindowRecord {
            doc: self.document_id.clone(),
            target_index: self.target_index,
            tokens: self.tokens().map(|t| t.text.clone()).collect(),
            target_start: self.target_token_range.0,
            target_end: self.target_token_range.1,
            labels: self.labels(),
        }
    }
}

/// The JSON-lines form of a window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub doc: String,
    pub target_index: usize,
    pub tokens: Vec<String>,
    pub target_start: usize,
    pub target_end: usize,
    pub labels: Vec<NerLabel>,
}

impl WindowRecord {
    /// Validates the record and rebuilds the window as one flattened sentence.
    pub fn to_sentence(&self) -> Result<Sentence> {
        if self.tokens.len() != self.labels.len() {
            return Err(Error::WindowLength {
                expected: self.tokens.len(),
                got: self.labels.len(),
            });
        }
        if self.target_start > self.target_end || self.target_end > self.tokens.len() {
            return Err(Error::Invalid(format!(
                "window target range [{}, {}) outside {} tokens",
                self.target_start,
                self.target_end,
                self.tokens.len()
            )));
        }
        let tokens = self
            .tokens
            .iter()
            .zip(&self.labels)
            .map(|(text, &label)| Token::new(text.clone(), label))
            .collect::<Result<Vec<_>>>()?;
        Ok(Sentence::new(tokens))
    }
}

/// Window around sentence `target` of `document`.
pub fn window_at(document: &Document, target: usize, n: usize) -> ContextWindow {
    let len = document.sentences.len();
    assert!(target < len, "target sentence {target} out of range");
    let first = target.saturating_sub(n);
    let last = (target + n + 1).min(len);
    let sentences = document.sentences[first..last].to_vec();
    let start: usize = sentences[..target - first].iter().map(Sentence::len).sum();
    let end = start + document.sentences[target].len();
    ContextWindow {
        document_id: document.id.clone(),
        target_index: target,
        n,
        first_index: first,
        sentences,
        target_token_range: (start, end),
    }
}

/// One window per sentence of `document`, in order.
pub fn build_windows(document: &Document, n: usize) -> Vec<ContextWindow> {
    (0..document.sentences.len())
        .map(|t| window_at(document, t, n))
        .collect()
}

/// Restricts window-level labels to the target sentence.
///
/// A span cut by the window boundary keeps its in-range part, re-headed as `B-C`.
pub fn project_predictions(
    window: &ContextWindow,
    window_labels: &[NerLabel],
) -> Result<Vec<NerLabel>> {
    let expected = window.token_count();
    if window_labels.len() != expected {
        return Err(Error::WindowLength {
            expected,
            got: window_labels.len(),
        });
    }
    let (start, end) = window.target_token_range;
    let mut labels = window_labels[start..end].to_vec();
    repair_bio(&mut labels);
    Ok(labels)
}
