use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use ner_forge::context::window_at;
use ner_forge::corpus::{serialize_conll, Document};
use ner_forge::heuristics::{
    apply_decisions, with_statuses, Action, Decision, Flag, FlagKind, FlagStatus,
};
use ner_forge::jsonl::from_jsonl;
use ner_forge::NerLabel;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReviewError {
    #[error("flag {0} not found")]
    NotFound(String),
    #[error("flag {0} already decided")]
    Conflict(String),
    #[error("{0}")]
    BadRequest(String),
    #[error(transparent)]
    Core(#[from] ner_forge::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlagFilter {
    pub status: Option<FlagStatus>,
    pub kind: Option<FlagKind>,
    pub document: Option<String>,
}

impl FlagFilter {
    fn matches(&self, flag: &Flag) -> bool {
        self.status.is_none_or(|s| flag.status == s)
            && self.kind.is_none_or(|k| flag.kind == k)
            && self
                .document
                .as_ref()
                .is_none_or(|d| &flag.location.document_id == d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Page {
    pub total: usize,
    pub items: Vec<Flag>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlagContext {
    pub flag: Flag,
    pub sentences: Vec<Vec<(String, NerLabel)>>,
    /// Position of the flagged sentence within `sentences`.
    pub target_index: usize,
    /// Token offsets of the flagged span within the flagged sentence.
    pub highlight: [usize; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Progress {
    pub pending: usize,
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExportSummary {
    pub written: bool,
    pub spans_added: usize,
    pub spans_removed: usize,
}

/// One corpus under review.
#[derive(Debug)]
pub struct ReviewSession {
    corpus: Vec<Document>,
    flags: Vec<Flag>,
    index: HashMap<String, usize>,
    decisions: Vec<Decision>,
    decisions_path: Option<PathBuf>,
    dirty: bool,
}

impl ReviewSession {
    /// Opens a session. Existing decisions in `decisions_path` are replayed;
    /// new ones are appended to it.
    pub fn open(
        corpus: Vec<Document>,
        flags: Vec<Flag>,
        decisions_path: Option<PathBuf>,
    ) -> Result<ReviewSession, ReviewError> {
        let decisions: Vec<Decision> = match &decisions_path {
            Some(path) if path.exists() => from_jsonl(&fs::read_to_string(path)?)?,
            _ => Vec::new(),
        };
        let flags = with_statuses(&flags, &decisions)?;
        let index = flags
            .iter()
            .enumerate()
            .map(|(i, f)| (f.id.clone(), i))
            .collect();
        Ok(ReviewSession {
            corpus,
            flags,
            index,
            decisions,
            decisions_path,
            dirty: false,
        })
    }

    pub fn flags(&self) -> &[Flag] {
        &self.flags
    }

    pub fn decisions(&self) -> &[Decision] {
        &self.decisions
    }

    pub fn is_dirty(&self) -> bool {
        self.dirty
    }

    pub fn flag(&self, id: &str) -> Result<&Flag, ReviewError> {
        self.index
            .get(id)
            .map(|&i| &self.flags[i])
            .ok_or_else(|| ReviewError::NotFound(id.to_string()))
    }

    pub fn list_flags(&self, filter: &FlagFilter, offset: usize, limit: usize) -> Page {
        let matching: Vec<&Flag> = self.flags.iter().filter(|f| filter.matches(f)).collect();
        Page {
            total: matching.len(),
            items: matching
                .into_iter()
                .skip(offset)
                .take(limit)
                .cloned()
                .collect(),
        }
    }

    pub fn flag_context(&self, id: &str, n: usize) -> Result<FlagContext, ReviewError> {
        let flag = self.flag(id)?;
        let doc = self
            .corpus
            .iter()
            .find(|d| d.id == flag.location.document_id)
            .ok_or_else(|| ReviewError::BadRequest(format!("flag {id} points to a missing document")))?;
        if flag.location.sentence_index >= doc.sentences.len() {
            return Err(ReviewError::BadRequest(format!(
                "flag {id} points to a missing sentence"
            )));
        }
        let window = window_at(doc, flag.location.sentence_index, n);
        Ok(FlagContext {
            flag: flag.clone(),
            sentences: window
                .sentences
                .iter()
                .map(|s| s.tokens.iter().map(|t| (t.text.clone(), t.label)).collect())
                .collect(),
            target_index: window.target_index - window.first_index,
            highlight: [flag.location.start, flag.location.end],
        })
    }

    /// Records a decision; the decisions file is appended and synced first.
    pub fn record_decision(
        &mut self,
        id: &str,
        action: Action,
        note: Option<String>,
    ) -> Result<Flag, ReviewError> {
        let position = *self
            .index
            .get(id)
            .ok_or_else(|| ReviewError::NotFound(id.to_string()))?;
        if self.flags[position].status != FlagStatus::Pending {
            return Err(ReviewError::Conflict(id.to_string()));
        }
        let decision = Decision::now(id, action, note);
        if let Some(path) = &self.decisions_path {
            append_line(path, &serde_json::to_string(&decision).map_err(ner_forge::Error::from)?)?;
        }
        self.decisions.push(decision);
        let flag = &mut self.flags[position];
        flag.status = match action {
            Action::Accept => FlagStatus::Accepted,
            Action::Reject => FlagStatus::Rejected,
        };
        self.dirty = true;
        Ok(flag.clone())
    }

    pub fn progress(&self) -> Progress {
        let count = |s| self.flags.iter().filter(|f| f.status == s).count();
        Progress {
            pending: count(FlagStatus::Pending),
            accepted: count(FlagStatus::Accepted),
            rejected: count(FlagStatus::Rejected),
        }
    }

    /// The corrected corpus as CoNLL text.
    pub fn corrected(&self) -> Result<(String, ExportSummary), ReviewError> {
        let (docs, summary) = apply_decisions(&self.corpus, &self.flags, &self.decisions)?;
        Ok((
            serialize_conll(&docs),
            ExportSummary {
                written: false,
                spans_added: summary.spans_added,
                spans_removed: summary.spans_removed,
            },
        ))
    }

    pub fn export(&mut self, path: &Path) -> Result<ExportSummary, ReviewError> {
        let (text, mut summary) = self.corrected()?;
        fs::write(path, text)?;
        summary.written = true;
        self.dirty = false;
        Ok(summary)
    }
}

fn append_line(path: &Path, line: &str) -> io::Result<()> {
    let mut file: File = OpenOptions::new().create(true).append(true).open(path)?;
    file.write_all(line.as_bytes())?;
    file.write_all(b"\n")?;
    file.sync_data()
}
