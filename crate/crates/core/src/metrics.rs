//! Span-exact NER scoring, multi-run aggregation and error-set analysis.
//!
//! A predicted span is a true positive only when its class and both boundaries
//! equal those of a gold span. Predictions of classes outside `keep_classes`
//! are discarded before matching (and so are gold spans of those classes).

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::corpus::{Document, Sentence, Span};
use crate::error::{Error, Result};
use crate::label::{EntityClass, NerLabel};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Scores {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Scores {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Scores {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Scores {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_class: BTreeMap<EntityClass, Scores>,
    pub micro: Scores,
}

/// A span identified across runs: location, class and surface.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpanRecord {
    pub document_id: String,
    pub sentence_index: usize,
    pub class: EntityClass,
    pub start: usize,
    pub end: usize,
    pub surface: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ErrorSet {
    pub false_positives: BTreeSet<SpanRecord>,
    pub false_negatives: BTreeSet<SpanRecord>,
}

impl ErrorSet {
    pub fn is_empty(&self) -> bool {
        self.false_positives.is_empty() && self.false_negatives.is_empty()
    }
}

/// Everything one gold/prediction comparison produces.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Evaluation {
    pub report: MetricsReport,
    pub errors: ErrorSet,
    pub true_positives: BTreeSet<SpanRecord>,
}

/// Checks that two corpora have identical token texts, sentence by sentence.
pub fn check_alignment(gold: &[Document], pred: &[Document]) -> Result<()> {
    if gold.len() != pred.len() {
        return Err(Error::Misaligned(format!(
            "{} gold documents vs {} predicted",
            gold.len(),
            pred.len()
        )));
    }
    for (d, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.sentences.len() != p.sentences.len() {
            return Err(Error::Misaligned(format!(
                "document {d}: {} gold sentences vs {} predicted",
                g.sentences.len(),
                p.sentences.len()
            )));
        }
        for (s, (gs, ps)) in g.sentences.iter().zip(&p.sentences).enumerate() {
            if gs.len() != ps.len() {
                return Err(Error::Misaligned(format!(
                    "document {d} sentence {s}: {} gold tokens vs {} predicted",
                    gs.len(),
                    ps.len()
                )));
            }
            for (t, (gt, pt)) in gs.tokens.iter().zip(&ps.tokens).enumerate() {
                if gt.text != pt.text {
                    return Err(Error::Misaligned(format!(
                        "document {d} sentence {s} token {t}: {:?} vs {:?}",
                        gt.text, pt.text
                    )));
                }
            }
        }
    }
    Ok(())
}

fn record(doc: &Document, sentence_index: usize, sentence: &Sentence, span: Span) -> SpanRecord {
    SpanRecord {
        document_id: doc.id.clone(),
        sentence_index,
        class: span.class,
        start: span.start,
        end: span.end,
        surface: sentence.tokens[span.start..span.end]
            .iter()
            .map(|t| t.text.clone())
            .collect(),
    }
}

/// Scores `pred` against `gold` and collects the error sets.
pub fn evaluate(
    gold: &[Document],
    pred: &[Document],
    keep_classes: &BTreeSet<EntityClass>,
) -> Result<Evaluation> {
    check_alignment(gold, pred)?;
    let mut counts: BTreeMap<EntityClass, (usize, usize, usize)> =
        keep_classes.iter().map(|&c| (c, (0, 0, 0))).collect();
    let mut eval = Evaluation::default();
    for (gd, pd) in gold.iter().zip(pred) {
        for (si, (gs, ps)) in gd.sentences.iter().zip(&pd.sentences).enumerate() {
            let gold_spans: HashSet<Span> = gs
                .spans()
                .into_iter()
                .filter(|s| keep_classes.contains(&s.class))
                .collect();
            let pred_spans: HashSet<Span> = ps
                .spans()
                .into_iter()
                .filter(|s| keep_classes.contains(&s.class))
                .collect();
            for span in &pred_spans {
                let entry = counts.entry(span.class).or_default();
                if gold_spans.contains(span) {
                    entry.0 += 1;
                    eval.true_positives.insert(record(gd, si, gs, *span));
                } else {
                    entry.1 += 1;
                    eval.errors.false_positives.insert(record(gd, si, gs, *span));
                }
            }
            for span in gold_spans.difference(&pred_spans) {
                counts.entry(span.class).or_default().2 += 1;
                eval.errors.false_negatives.insert(record(gd, si, gs, *span));
            }
        }
    }
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (class, (t, p, n)) in counts {
        eval.report
            .per_class
            .insert(class, Scores::from_counts(t, p, n));
        tp += t;
        fp += p;
        fn_ += n;
    }
    eval.report.micro = Scores::from_counts(tp, fp, fn_);
    Ok(eval)
}

pub fn score(
    gold: &[Document],
    pred: &[Document],
    keep_classes: &BTreeSet<EntityClass>,
) -> Result<MetricsReport> {
    evaluate(gold, pred, keep_classes).map(|e| e.report)
}

pub fn all_classes() -> BTreeSet<EntityClass> {
    EntityClass::ALL.into_iter().collect()
}

/// Mean and two-sided 95% Student-t confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Interval {
    /// `mean ± t(0.975, k-1) * s / sqrt(k)` with `s` the sample standard deviation.
    pub fn from_values(values: &[f64]) -> Result<Interval> {
        let k = values.len();
        let Some(&first) = values.first() else {
            return Err(Error::Invalid("no values to aggregate".into()));
        };
        // Shifted sums keep the mean of identical values exact.
        let shift: f64 = values.iter().map(|v| v - first).sum::<f64>() / k as f64;
        let mean = first + shift;
        if k == 1 {
            return Ok(Interval {
                mean,
                ci_low: mean,
                ci_high: mean,
            });
        }
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        let sd = (ss / (k - 1) as f64).sqrt();
        let half = t_critical(k - 1) * sd / (k as f64).sqrt();
        Ok(Interval {
            mean,
            ci_low: mean - half,
            ci_high: mean + half,
        })
    }

    pub fn half_width(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }
}

/// Two-sided 95% critical value of Student's t with `df` degrees of freedom.
pub fn t_critical(df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricIntervals {
    pub precision: Interval,
    pub recall: Interval,
    pub f1: Interval,
}

impl MetricIntervals {
    fn from_scores(scores: &[Scores]) -> Result<MetricIntervals> {
        let pick = |f: fn(&Scores) -> f64| scores.iter().map(f).collect::<Vec<_>>();
        Ok(MetricIntervals {
            precision: Interval::from_values(&pick(|s| s.precision))?,
            recall: Interval::from_values(&pick(|s| s.recall))?,
            f1: Interval::from_values(&pick(|s| s.f1))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAggregate {
    pub run_count: usize,
    pub micro: MetricIntervals,
    /// Classes reported by every run.
    pub per_class: BTreeMap<EntityClass, MetricIntervals>,
}

pub fn aggregate_runs(reports: &[MetricsReport]) -> Result<RunAggregate> {
    if reports.is_empty() {
        return Err(Error::Invalid("cannot aggregate zero runs".into()));
    }
    let micro: Vec<Scores> = reports.iter().map(|r| r.micro).collect();
    let mut per_class = BTreeMap::new();
    for class in reports[0].per_class.keys() {
        let scores: Option<Vec<Scores>> = reports
            .iter()
            .map(|r| r.per_class.get(class).copied())
            .collect();
        if let Some(scores) = scores {
            per_class.insert(*class, MetricIntervals::from_scores(&scores)?);
        }
    }
    Ok(RunAggregate {
        run_count: reports.len(),
        micro: MetricIntervals::from_scores(&micro)?,
        per_class,
    })
}

/// Errors present in every run.
pub fn consistent_errors(error_sets: &[ErrorSet]) -> ErrorSet {
    let Some((first, rest)) = error_sets.split_first() else {
        return ErrorSet::default();
    };
    let mut out = first.clone();
    for set in rest {
        out.false_positives
            .retain(|e| set.false_positives.contains(e));
        out.false_negatives
            .retain(|e| set.false_negatives.contains(e));
    }
    out
}

/// Errors of `a` that `b` does not make.
pub fn diff_errors(a: &ErrorSet, b: &ErrorSet) -> ErrorSet {
    ErrorSet {
        false_positives: a
            .false_positives
            .difference(&b.false_positives)
            .cloned()
            .collect(),
        false_negatives: a
            .false_negatives
            .difference(&b.false_negatives)
            .cloned()
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameCount {
    pub surface: String,
    pub count: usize,
}

/// Gold PER mentions found by `pred_a` but missed by `pred_b`, grouped by
/// surface and ranked by count (ties lexicographic).
pub fn recall_diff_names(
    gold: &[Document],
    pred_a: &[Document],
    pred_b: &[Document],
    top_k: usize,
) -> Result<Vec<NameCount>> {
    recall_diff_names_runs(gold, &[pred_a.to_vec()], &[pred_b.to_vec()], top_k)
}

/// Multi-run form of [`recall_diff_names`]: a mention counts when every run of
/// `runs_a` finds it and no run of `runs_b` does.
pub fn recall_diff_names_runs(
    gold: &[Document],
    runs_a: &[Vec<Document>],
    runs_b: &[Vec<Document>],
    top_k: usize,
) -> Result<Vec<NameCount>> {
    let per = BTreeSet::from([EntityClass::Per]);
    let found = |pred: &[Document]| evaluate(gold, pred, &per).map(|e| e.true_positives);
    let mut matched_a: Option<BTreeSet<SpanRecord>> = None;
    for run in runs_a {
        let tps = found(run)?;
        matched_a = Some(match matched_a {
            None => tps,
            Some(acc) => acc.intersection(&tps).cloned().collect(),
        });
    }
    let mut matched_b = BTreeSet::new();
    for run in runs_b {
        matched_b.extend(found(run)?);
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    for rec in matched_a.unwrap_or_default().difference(&matched_b) {
        *counts.entry(rec.surface.join(" ")).or_default() += 1;
    }
    let mut ranked: Vec<NameCount> = counts
        .into_iter()
        .map(|(surface, count)| NameCount { surface, count })
        .collect();
    ranked.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.surface.cmp(&b.surface)));
    ranked.truncate(top_k);
    Ok(ranked)
}

/// A subword unit and whether it belongs to the reference vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subword {
    pub text: String,
    pub in_vocab: bool,
}

pub trait Segmenter {
    fn segment(&self, token: &str) -> Vec<Subword>;
}

/// Greedy longest-match segmentation against a vocabulary made of whole name
/// tokens and all their substrings of at least `min_len` characters.
/// Characters not covered by any vocabulary entry become single-character
/// out-of-vocabulary units.
#[derive(Debug, Clone)]
pub struct GreedySubstringSegmenter {
    vocab: HashSet<String>,
    max_len: usize,
}

impl GreedySubstringSegmenter {
    pub const DEFAULT_MIN_LEN: usize = 3;

    pub fn from_tokens<'a, I: IntoIterator<Item = &'a str>>(tokens: I, min_len: usize) -> Self {
        let mut vocab = HashSet::new();
        let mut max_len = 0;
        for token in tokens {
            let chars: Vec<char> = token.chars().collect();
            max_len = max_len.max(chars.len());
            vocab.insert(token.to_string());
            for i in 0..chars.len() {
                for j in (i + min_len.max(1))..=chars.len() {
                    vocab.insert(chars[i..j].iter().collect());
                }
            }
        }
        GreedySubstringSegmenter { vocab, max_len }
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }
}

impl Segmenter for GreedySubstringSegmenter {
    fn segment(&self, token: &str) -> Vec<Subword> {
        let chars: Vec<char> = token.chars().collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let longest = (i + 1..=chars.len().min(i + self.max_len))
                .rev()
                .map(|j| (j, chars[i..j].iter().collect::<String>()))
                .find(|(_, piece)| self.vocab.contains(piece));
            match longest {
                Some((j, piece)) => {
                    out.push(Subword {
                        text: piece,
                        in_vocab: true,
                    });
                    i = j;
                }
                None => {
                    out.push(Subword {
                        text: chars[i].to_string(),
                        in_vocab: false,
                    });
                    i += 1;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub per_tokens: usize,
    pub exact_match: f64,
    pub partial_match: f64,
    pub unseen: f64,
}

/// Splits a name set into its whitespace-separated tokens.
pub fn name_tokens<'a, I: IntoIterator<Item = &'a str>>(names: I) -> BTreeSet<String> {
    names
        .into_iter()
        .flat_map(|n| n.split_whitespace().map(str::to_string))
        .collect()
}

/// Classifies every PER-labeled token of `eval_corpus` as an exact match with
/// a name-set token, a partial (subword) match, or unseen.
pub fn overlap_stats(
    eval_corpus: &[Document],
    name_set: &BTreeSet<String>,
    segmenter: &dyn Segmenter,
) -> Result<OverlapReport> {
    if name_set.is_empty() {
        return Err(Error::Invalid("name set is empty".into()));
    }
    let tokens = name_tokens(name_set.iter().map(String::as_str));
    let (mut exact, mut partial, mut unseen) = (0usize, 0usize, 0usize);
    for token in eval_corpus
        .iter()
        .flat_map(|d| &d.sentences)
        .flat_map(|s| &s.tokens)
        .filter(|t| t.label.class() == Some(EntityClass::Per))
    {
        if tokens.contains(&token.text) {
            exact += 1;
        } else if segmenter.segment(&token.text).iter().any(|s| s.in_vocab) {
            partial += 1;
        } else {
            unseen += 1;
        }
    }
    let total = exact + partial + unseen;
    let pct = |n: usize| if total == 0 { 0.0 } else { 100.0 * n as f64 / total as f64 };
    Ok(OverlapReport {
        per_tokens: total,
        exact_match: pct(exact),
        partial_match: pct(partial),
        unseen: pct(unseen),
    })
}

/// Labels of a prediction corpus restricted to `keep_classes` (others become `O`).
pub fn discard_classes(documents: &mut [Document], keep_classes: &BTreeSet<EntityClass>) {
    for token in documents
        .iter_mut()
        .flat_map(|d| d.sentences.iter_mut())
        .flat_map(|s| s.tokens.iter_mut())
    {
        if token.label.class().is_some_and(|c| !keep_classes.contains(&c)) {
            token.label = NerLabel::O;
        }
    }
}
