//! Acceptance suite: one pass/fail line per criterion.
//!
//! Run with `cargo test -p ner-forge-core --test acceptance`; pass criterion
//! numbers as arguments to run a subset.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::*;
use ner_forge::augment::{augment_dataset, AugmentationPlan, AugmentedCorpus, Provenance, Rate, Strategy};
use ner_forge::context::{build_windows, project_predictions, window_at};
use ner_forge::corpus::{
    decode_spans, encode_labels, label_spans, parse_conll, serialize_conll, Span,
};
use ner_forge::heuristics::{apply_decisions, flag_corpus, Action, CapitalizationRule, Decision, FlagKind};
use ner_forge::jsonl::to_jsonl;
use ner_forge::metrics::{
    aggregate_runs, all_classes, consistent_errors, diff_errors, evaluate, name_tokens, overlap_stats,
    recall_diff_names, recall_diff_names_runs, score, t_critical, ErrorSet, GreedySubstringSegmenter,
    Interval, MetricsReport, NameCount, Scores,
};
use ner_forge::namegen::{FormDistribution, NameInventory};
use ner_forge::synth::{news_corpus, split_fantasy_inventories, story_corpus};
use ner_forge::tagger::{tag, tag_with_context, train, TrainConfig};
use ner_forge::{Document, EntityClass, NerLabel, SeededSampler, Sentence, TagScheme};
use rayon::prelude::*;

type Criterion = (u32, &'static str, fn() -> String);

fn within(started: Instant, budget: Duration, what: &str) -> String {
    let elapsed = started.elapsed();
    assert!(elapsed <= budget, "{what} took {elapsed:.2?}, budget {budget:?}");
    format!("{:.2} s", elapsed.as_secs_f64())
}

fn close(actual: f64, expected: f64, rel: f64) -> bool {
    (actual - expected).abs() <= rel * expected.abs().max(f64::MIN_POSITIVE)
}

fn forms_for(inventory: &NameInventory) -> FormDistribution {
    let mut forms = FormDistribution::default_forms();
    forms
        .forms
        .retain(|f| f.elements.iter().all(|p| !inventory.parts(*p).is_empty()));
    forms
}

// 1 ---------------------------------------------------------------------------

const NORMALIZED_FIXTURE: &str = "\
EU NNP B-NP B-ORG
rejects VBZ B-VP O
German JJ B-NP B-MISC
call NN I-NP O
. . O O

Peter NNP B-NP B-PER
Blackburn NNP I-NP I-PER

-DOCSTART- -X- -X- O

BRUSSELS NNP B-NP B-LOC
1996-08-22 CD I-NP O

Vin NNP B-NP B-PER
Kelsier NNP I-NP B-PER
smiled VBD B-VP O
";

fn corpus_round_trip() -> String {
    let started = Instant::now();
    let docs = parse_conll(NORMALIZED_FIXTURE, TagScheme::Iob2).unwrap();
    assert_eq!(docs.len(), 2);
    assert_eq!(serialize_conll(&docs), NORMALIZED_FIXTURE);

    let mut sampler = SeededSampler::new(1, 0);
    for _ in 0..200 {
        let corpus = random_corpus(&mut sampler, 10, 12);
        assert_eq!(parse_conll(&serialize_conll(&corpus), TagScheme::Iob2).unwrap(), corpus);
    }

    let sequences = 10_000;
    for _ in 0..sequences {
        let len = sampler.below(41);
        let labels = random_labels(&mut sampler, len);
        let spans = label_spans(&labels);
        let ours: BTreeSet<_> = spans.iter().map(|s| (s.class, s.start, s.end)).collect();
        assert_eq!(ours, brute_spans(&labels), "decode of {labels:?}");
        assert_eq!(encode_labels(len, &spans).unwrap(), labels);

        // Random disjoint span sets survive encode then decode.
        let mut chosen = Vec::new();
        let mut pos = 0;
        while pos < len {
            pos += sampler.below(3);
            if pos >= len {
                break;
            }
            let end = (pos + 1 + sampler.below(3)).min(len);
            chosen.push(Span::new(EntityClass::ALL[sampler.below(4)], pos, end));
            pos = end;
        }
        assert_eq!(label_spans(&encode_labels(len, &chosen).unwrap()), chosen);
    }
    format!("fixture + 200 corpora round-trip, {sequences} sequences bijective, {}", within(started, Duration::from_secs(5), "round-trip"))
}

// 2 ---------------------------------------------------------------------------

/// Source and generated sentence agree outside `class` spans, and every
/// `class` span of the source maps to one `class` span of the output.
fn differs_only_in_target(source: &Sentence, generated: &Sentence, class: EntityClass) -> bool {
    let (mut i, mut j) = (0, 0);
    let (s, g) = (&source.tokens, &generated.tokens);
    while i < s.len() {
        if s[i].label == NerLabel::B(class) {
            if j >= g.len() || g[j].label != NerLabel::B(class) {
                return false;
            }
            i += 1;
            while i < s.len() && s[i].label == NerLabel::I(class) {
                i += 1;
            }
            j += 1;
            while j < g.len() && g[j].label == NerLabel::I(class) {
                j += 1;
            }
        } else {
            if j >= g.len() || s[i] != g[j] {
                return false;
            }
            i += 1;
            j += 1;
        }
    }
    j == g.len()
}

fn surfaces(sentence: &Sentence, class: EntityClass) -> Vec<String> {
    decode_spans(sentence, 0)
        .into_iter()
        .filter(|e| e.class == class)
        .map(|e| e.surface.join(" "))
        .collect()
}

fn brute_distribution<'a>(sentences: impl Iterator<Item = &'a Sentence>) -> BTreeMap<EntityClass, usize> {
    let mut counts: BTreeMap<EntityClass, usize> = EntityClass::ALL.iter().map(|c| (*c, 0)).collect();
    for s in sentences {
        for (class, _, _) in brute_spans(&s.labels()) {
            *counts.get_mut(&class).unwrap() += 1;
        }
    }
    counts
}

fn max_share_gap(a: &BTreeMap<EntityClass, usize>, b: &BTreeMap<EntityClass, usize>) -> f64 {
    let (ta, tb) = (a.values().sum::<usize>() as f64, b.values().sum::<usize>() as f64);
    EntityClass::ALL
        .iter()
        .map(|c| (a[c] as f64 / ta - b[c] as f64 / tb).abs())
        .fold(0.0, f64::max)
}

fn check_augmented(originals: &[&Sentence], out: &AugmentedCorpus, strategy: Strategy, g: usize, eligible: usize) -> f64 {
    let n = originals.len();
    let class = EntityClass::Per;
    let generated = out.count(Provenance::Generated);
    match strategy {
        Strategy::Add => {
            assert_eq!(out.sentences.len(), n + g);
            assert_eq!(generated, g);
        }
        Strategy::UpsampleBalance => {
            assert!(out.sentences.len() >= n + g);
            assert_eq!(generated, g);
            assert_eq!(out.count(Provenance::Upsampled), out.sentences.len() - n - g);
        }
        Strategy::Replace => {
            assert_eq!(out.sentences.len(), n);
            assert_eq!(generated, g.min(eligible));
        }
    }
    assert_eq!(out.provenance.len(), out.sentences.len());
    assert_eq!(out.sources.len(), out.sentences.len());

    let mut log_by_sentence: BTreeMap<usize, Vec<(&str, &str)>> = BTreeMap::new();
    for entry in &out.replacement_log {
        assert_eq!(out.provenance[entry.sentence], Provenance::Generated, "log points at a non-generated sentence");
        log_by_sentence
            .entry(entry.sentence)
            .or_default()
            .push((entry.original.as_str(), entry.replacement.as_str()));
    }
    for (i, (sentence, prov)) in out.sentences.iter().zip(&out.provenance).enumerate() {
        let source = originals[out.sources[i]];
        match prov {
            Provenance::Original | Provenance::Upsampled => assert_eq!(sentence, source),
            Provenance::Generated => {
                assert!(sentence.is_well_formed());
                assert!(differs_only_in_target(source, sentence, class), "sentence {i} changed outside PER spans");
                let log = &log_by_sentence[&i];
                let originals_logged: Vec<&str> = log.iter().map(|(o, _)| *o).collect();
                let replacements_logged: Vec<&str> = log.iter().map(|(_, r)| *r).collect();
                assert_eq!(originals_logged, surfaces(source, class));
                assert_eq!(replacements_logged, surfaces(sentence, class));
                for (o1, r1) in log {
                    for (o2, r2) in log {
                        if o1 == o2 {
                            assert_eq!(r1, r2, "inconsistent replacement of {o1} in sentence {i}");
                        }
                    }
                }
            }
        }
    }
    if strategy == Strategy::Replace {
        for (i, prov) in out.provenance.iter().enumerate() {
            assert_eq!(out.sources[i], i);
            if *prov == Provenance::Original {
                assert_eq!(&out.sentences[i], originals[i]);
            }
        }
    }
    max_share_gap(&brute_distribution(originals.iter().copied()), &brute_distribution(out.sentences.iter()))
}

fn augmentation_laws() -> String {
    let started = Instant::now();
    assert_eq!("0.1".parse::<Rate>().unwrap().generated_count(14_041), 1_404);
    let corpus = news_corpus(1000, 2024);
    let originals: Vec<&Sentence> = corpus.iter().flat_map(|d| &d.sentences).collect();
    assert_eq!(originals.len(), 1000);
    let eligible = originals
        .iter()
        .filter(|s| s.spans().iter().any(|sp| sp.class == EntityClass::Per))
        .count();
    let (inventory, _) = split_fantasy_inventories(600, 9);
    let forms = forms_for(&inventory);
    let mut worst_balance: f64 = 0.0;
    let mut runs = 0;
    for (rate, g) in [("0", 0), ("0.1", 100), ("0.2", 200), ("0.6", 600), ("1.0", 1000)] {
        for strategy in [Strategy::Add, Strategy::UpsampleBalance, Strategy::Replace] {
            let plan = AugmentationPlan::new(rate.parse().unwrap(), strategy, 77).unwrap();
            let out = augment_dataset(&corpus, &plan, &inventory, &forms).unwrap();
            let gap = check_augmented(&originals, &out, strategy, g, eligible);
            if g == 0 {
                assert_eq!(out.sentences.iter().collect::<Vec<_>>(), originals);
                assert!(out.replacement_log.is_empty());
            }
            if strategy == Strategy::UpsampleBalance {
                assert!(gap <= 0.01, "r={rate}: class shares off by {:.4} pp", 100.0 * gap);
                worst_balance = worst_balance.max(gap);
            }
            runs += 1;
        }
    }
    format!(
        "{runs} plans on {} sentences, worst balance gap {:.4} pp, {}",
        originals.len(),
        100.0 * worst_balance,
        within(started, Duration::from_secs(30), "augmentation laws")
    )
}

// 3 ---------------------------------------------------------------------------

fn pipeline_outputs() -> Vec<String> {
    let corpus = news_corpus(400, 5);
    let (inventory, held) = split_fantasy_inventories(300, 6);
    let forms = forms_for(&inventory);
    let test = story_corpus(120, &held, 7);
    let keep = all_classes();
    let mut outputs = Vec::new();
    for strategy in [Strategy::Add, Strategy::UpsampleBalance, Strategy::Replace] {
        let plan = AugmentationPlan::new("0.3".parse().unwrap(), strategy, 13).unwrap();
        let out = augment_dataset(&corpus, &plan, &inventory, &forms).unwrap();
        let docs = out.to_documents();
        outputs.push(serialize_conll(&docs));
        outputs.push(to_jsonl(&out.replacement_log).unwrap());
        let model = train(&docs, TrainConfig::new(2, 3)).unwrap();
        outputs.push(model.to_json().unwrap());
        for pred in [tag(&model, &test), tag_with_context(&model, &test, 1).unwrap()] {
            outputs.push(serialize_conll(&pred));
            outputs.push(serde_json::to_string(&score(&test, &pred, &keep).unwrap()).unwrap());
        }
    }
    outputs
}

fn determinism() -> String {
    let run_in = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(pipeline_outputs)
    };
    let reference = run_in(1);
    let bytes: usize = reference.iter().map(String::len).sum();
    for threads in [1, 4, 4] {
        let again = run_in(threads);
        for (i, (a, b)) in reference.iter().zip(&again).enumerate() {
            assert!(a == b, "output {i} differs with {threads} threads");
        }
    }
    format!("{} outputs ({bytes} bytes) identical over 1/1/4/4-thread runs", reference.len())
}

// 4 ---------------------------------------------------------------------------

fn assert_matches_brute(gold: &[Document], pred: &[Document], keep: &BTreeSet<EntityClass>) {
    let report = score(gold, pred, keep).unwrap();
    let (per, micro) = brute_score(gold, pred, keep);
    let check = |s: &Scores, c: Counts| {
        assert_eq!((s.tp, s.fp, s.fn_), (c.tp, c.fp, c.fn_));
        assert_eq!((s.precision, s.recall, s.f1), prf(c));
    };
    check(&report.micro, micro);
    for (class, c) in per {
        check(&report.per_class[&class], c);
    }
}

fn counts(s: &Scores) -> (usize, usize, usize) {
    (s.tp, s.fp, s.fn_)
}

fn scorer_oracle() -> String {
    let started = Instant::now();
    let mut sampler = SeededSampler::new(4, 0);
    let subsets: Vec<BTreeSet<EntityClass>> = (1..16u32)
        .map(|mask| EntityClass::ALL.into_iter().filter(|c| mask & (1 << c.index()) != 0).collect())
        .collect();
    let corpora = 1000;
    for _ in 0..corpora {
        let gold = random_corpus(&mut sampler, 10, 10);
        let pred = relabel(&mut sampler, &gold);
        assert_matches_brute(&gold, &pred, &subsets[sampler.below(subsets.len())]);
        assert_matches_brute(&gold, &gold, &all_classes());
    }

    let all = all_classes();
    let per = BTreeSet::from([EntityClass::Per]);
    // Boundary error: one FP and one FN, nothing correct.
    let r = score(&[doc("0", &["John/B-PER Smith/I-PER said/O"])], &[doc("0", &["John/B-PER Smith/O said/O"])], &all).unwrap();
    assert_eq!(counts(&r.micro), (0, 1, 1));
    assert_eq!((r.micro.precision, r.micro.recall, r.micro.f1), (0.0, 0.0, 0.0));
    // Type error: FN for the gold class, FP for the predicted one.
    let r = score(&[doc("0", &["in/O Paris/B-LOC"])], &[doc("0", &["in/O Paris/B-ORG"])], &all).unwrap();
    assert_eq!(counts(&r.per_class[&EntityClass::Loc]), (0, 0, 1));
    assert_eq!(counts(&r.per_class[&EntityClass::Org]), (0, 1, 0));
    assert_eq!(counts(&r.micro), (0, 1, 1));
    // Adjacent B-B entities are two spans; merging them is one FP and two FNs.
    let gold = [doc("0", &["Vin/B-PER Kelsier/B-PER left/O"])];
    let r = score(&gold, &[doc("0", &["Vin/B-PER Kelsier/I-PER left/O"])], &all).unwrap();
    assert_eq!(counts(&r.micro), (0, 1, 2));
    let r = score(&gold, &gold, &all).unwrap();
    assert_eq!(counts(&r.micro), (2, 0, 0));
    // Mixed: 2 of 3 gold found, 1 spurious -> P = R = F1 = 2/3.
    let gold = [doc("0", &["Vin/B-PER met/O Elend/B-PER in/O Luthadel/B-LOC"])];
    let pred = [doc("0", &["Vin/B-PER met/O Elend/B-PER in/O Luthadel/B-ORG"])];
    let r = score(&gold, &pred, &all).unwrap();
    assert_eq!(counts(&r.micro), (2, 1, 1));
    assert_eq!(r.micro.f1, 2.0 / 3.0);
    // Discarded classes: the ORG prediction vanishes under keep = {PER}.
    let r = score(&gold, &pred, &per).unwrap();
    assert_eq!(counts(&r.micro), (2, 0, 0));
    format!("{corpora} random corpora equal the brute-force matcher, 6 hand cases, {}", within(started, Duration::from_secs(30), "scorer oracle"))
}

// 5 ---------------------------------------------------------------------------

fn report_with(value: f64) -> MetricsReport {
    let s = Scores { tp: 0, fp: 0, fn_: 0, precision: value, recall: value, f1: value };
    MetricsReport { per_class: BTreeMap::from([(EntityClass::Per, s)]), micro: s }
}

fn ci_arithmetic() -> String {
    const REL: f64 = 1e-9;
    // Student-t quantiles from scipy.stats.t.ppf(0.975, df).
    let t9 = t_critical(9);
    assert!(close(t9, 2.2621571628540993, REL), "t(9) = {t9}");
    assert_eq!(format!("{t9:.3}"), "2.262");
    let t1 = t_critical(1);
    assert!(close(t1, 12.706204736432095, REL), "t(1) = {t1}");
    assert_eq!(format!("{t1:.3}"), "12.706");
    assert!(close(t_critical(2), 4.302652729696142, REL));
    assert!(close(t_critical(4), 2.7764451051977987, REL));

    // Ten runs: mean 0.722, s = 0.026583202716502517.
    let ten = [0.71, 0.74, 0.69, 0.73, 0.75, 0.70, 0.72, 0.76, 0.68, 0.74];
    let agg = aggregate_runs(&ten.map(report_with)).unwrap();
    assert_eq!(agg.run_count, 10);
    for m in [agg.micro.precision, agg.micro.recall, agg.micro.f1, agg.per_class[&EntityClass::Per].f1] {
        assert!(close(m.mean, 0.722, REL), "mean {}", m.mean);
        assert!(close(m.half_width(), 0.019016477646538077, REL), "half-width {}", m.half_width());
        assert!(close(m.ci_low, 0.702983522353462, REL));
        assert!(close(m.ci_high, 0.741016477646538, REL));
    }

    // Two runs {0.8, 0.9}: half-width t(1) * s / sqrt(2).
    let two = aggregate_runs(&[report_with(0.8), report_with(0.9)]).unwrap().micro.f1;
    assert!(close(two.mean, 0.85, REL));
    assert!(close(two.half_width(), 0.6353102368216046, REL));

    let single = Interval::from_values(&[0.7]).unwrap();
    assert_eq!((single.ci_low, single.mean, single.ci_high), (0.7, 0.7, 0.7));
    let same = aggregate_runs(&vec![report_with(0.734); 10]).unwrap().micro.recall;
    assert_eq!((same.ci_low, same.mean, same.ci_high), (0.734, 0.734, 0.734));
    assert!(aggregate_runs(&[]).is_err());
    format!("t(9) = {t9:.12}, 10-run CI [{:.12}, {:.12}], all within 1e-9", agg.micro.f1.ci_low, agg.micro.f1.ci_high)
}

// 6 ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Planted {
    doc: String,
    sentence: usize,
    start: usize,
    end: usize,
}

fn heuristic_round_trip() -> String {
    let started = Instant::now();
    let (_, held) = split_fantasy_inventories(400, 12);
    let clean = story_corpus(500, &held, 13);
    let names: BTreeSet<String> = clean
        .iter()
        .flat_map(|d| d.sentences.iter().enumerate().flat_map(|(i, s)| decode_spans(s, i)))
        .map(|e| e.surface.join(" "))
        .collect();
    let names: Vec<String> = names.into_iter().collect();
    let rule = CapitalizationRule::default();
    assert!(flag_corpus(&clean, &names, None, rule).unwrap().is_empty(), "clean corpus raised flags");

    let mut corrupted = clean.clone();
    let mut sampler = SeededSampler::new(99, 0);
    let mut positions: Vec<(usize, usize)> = clean
        .iter()
        .enumerate()
        .flat_map(|(d, doc)| (0..doc.sentences.len()).map(move |s| (d, s)))
        .collect();
    sampler.shuffle(&mut positions);
    let mut planted = Vec::new();
    let mut touched = BTreeSet::new();
    let (mut deletions, mut lowercase, mut unlisted) = (0, 0, 0);
    for &(d, s) in &positions {
        if deletions + lowercase + unlisted == 20 {
            break;
        }
        let sentence = &mut corrupted[d].sentences[s];
        let mut labels = sentence.labels();
        let spans = sentence.spans();
        let site = if deletions < 10 && !spans.is_empty() {
            // Span deletion: the gazetteer should propose adding it back.
            let span = spans[sampler.below(spans.len())];
            labels[span.start..span.end].fill(NerLabel::O);
            deletions += 1;
            Some((span.start, span.end))
        } else if lowercase < 5 {
            let candidates: Vec<usize> = (0..labels.len())
                .filter(|&i| labels[i].is_outside() && sentence.tokens[i].text.chars().all(|c| c.is_lowercase()))
                .collect();
            candidates.first().map(|_| {
                let i = candidates[sampler.below(candidates.len())];
                labels[i] = NerLabel::B(EntityClass::Per);
                lowercase += 1;
                (i, i + 1)
            })
        } else if unlisted < 5 {
            let i = 0;
            let text = &sentence.tokens[i].text;
            (labels[i].is_outside() && text.chars().next().is_some_and(char::is_uppercase) && !names.contains(text)).then(|| {
                labels[i] = NerLabel::B(EntityClass::Per);
                unlisted += 1;
                (0, 1)
            })
        } else {
            None
        };
        if let Some((start, end)) = site {
            sentence.set_labels(&labels);
            planted.push(Planted { doc: corrupted[d].id.clone(), sentence: s, start, end });
            touched.insert((corrupted[d].id.clone(), s));
        }
    }
    assert_eq!((deletions, lowercase, unlisted), (10, 5, 5), "could not plant every error");

    let flags = flag_corpus(&corrupted, &names, None, rule).unwrap();
    let flagged: BTreeSet<Planted> = flags
        .iter()
        .map(|f| Planted {
            doc: f.location.document_id.clone(),
            sentence: f.location.sentence_index,
            start: f.location.start,
            end: f.location.end,
        })
        .collect();
    let found = planted.iter().filter(|p| flagged.contains(p)).count();
    assert_eq!(found, planted.len(), "missed planted errors");
    let false_flags = flagged.iter().filter(|f| !planted.contains(f)).count();
    let control_flags = flags
        .iter()
        .filter(|f| !touched.contains(&(f.location.document_id.clone(), f.location.sentence_index)))
        .count();
    assert_eq!(control_flags, 0, "flags on control sentences");
    assert_eq!(false_flags, 0, "flags at unplanted locations");
    let kinds: BTreeSet<FlagKind> = flags.iter().map(|f| f.kind).collect();

    let decisions: Vec<Decision> = flags
        .iter()
        .map(|f| Decision::now(f.id.clone(), Action::Accept, None))
        .collect();
    let (restored, summary) = apply_decisions(&corrupted, &flags, &decisions).unwrap();
    assert_eq!(serialize_conll(&restored), serialize_conll(&clean));
    assert_eq!((summary.spans_added, summary.spans_removed), (10, 10));
    format!(
        "{found}/{} planted errors flagged ({} flags, kinds {:?}), 0 control flags, accept-all restores bytes, {}",
        planted.len(),
        flags.len(),
        kinds.iter().map(|k| k.as_str()).collect::<Vec<_>>(),
        within(started, Duration::from_secs(10), "heuristic round-trip")
    )
}

// 7 ---------------------------------------------------------------------------

fn directional_recall() -> String {
    let started = Instant::now();
    let train_docs = news_corpus(2000, 11);
    let (aug_inventory, held) = split_fantasy_inventories(1500, 21);
    let forms = forms_for(&aug_inventory);
    let test = story_corpus(500, &held, 31);
    let per = BTreeSet::from([EntityClass::Per]);
    let seeds: Vec<u64> = (0..5).collect();
    let recall = |rate: &str| -> Vec<f64> {
        seeds
            .par_iter()
            .map(|&seed| {
                let plan = AugmentationPlan::new(rate.parse().unwrap(), Strategy::Add, seed).unwrap();
                let docs = augment_dataset(&train_docs, &plan, &aug_inventory, &forms).unwrap().to_documents();
                let model = train(&docs, TrainConfig::new(5, seed)).unwrap();
                score(&test, &tag(&model, &test), &per).unwrap().micro.recall
            })
            .collect()
    };
    let base = Interval::from_values(&recall("0")).unwrap();
    let aug = Interval::from_values(&recall("0.1")).unwrap();
    let margin = aug.mean - base.mean;
    let disjoint = aug.ci_low > base.ci_high;
    let detail = format!(
        "PER recall r=0: {:.3} [{:.3}, {:.3}], r=0.1: {:.3} [{:.3}, {:.3}], margin {:.1} points",
        base.mean, base.ci_low, base.ci_high, aug.mean, aug.ci_low, aug.ci_high, 100.0 * margin
    );
    assert!(aug.mean > base.mean && (disjoint || margin >= 0.02), "{detail}");
    format!("{detail}, {}", within(started, Duration::from_secs(120), "directional replication"))
}

// 8 ---------------------------------------------------------------------------

fn window_laws() -> String {
    let mut sampler = SeededSampler::new(8, 0);
    let docs: Vec<Document> = (0..20)
        .map(|i| {
            let count = 1 + sampler.below(9);
            Document::new(i.to_string(), (0..count).map(|_| random_sentence(&mut sampler, 8)).collect())
        })
        .collect();
    let mut windows = 0;
    for doc in &docs {
        let len = doc.sentences.len();
        for n in 0..=10 {
            let built = build_windows(doc, n);
            assert_eq!(built.len(), len);
            for (t, w) in built.iter().enumerate() {
                windows += 1;
                let (lo, hi) = (t.saturating_sub(n), (t + n + 1).min(len));
                assert_eq!(w.sentences, doc.sentences[lo..hi]);
                assert_eq!((w.first_index, w.target_index), (lo, t));
                let offset: usize = doc.sentences[lo..t].iter().map(Sentence::len).sum();
                assert_eq!(w.target_token_range, (offset, offset + doc.sentences[t].len()));
                assert_eq!(w.flatten().len(), doc.sentences[lo..hi].iter().map(Sentence::len).sum::<usize>());
                if n == 0 {
                    assert_eq!(w.sentences, vec![doc.sentences[t].clone()]);
                    assert_eq!(w.target_token_range, (0, doc.sentences[t].len()));
                }
            }
        }
    }

    // Five-sentence document, interior and clamped windows.
    let five = Document::new("d", docs.iter().flat_map(|d| d.sentences.clone()).take(5).collect());
    assert_eq!(window_at(&five, 2, 1).first_index, 1);
    assert_eq!(window_at(&five, 2, 1).sentences.len(), 3);
    assert_eq!(window_at(&five, 0, 1).sentences.len(), 2);

    // A span straddling the target start is truncated and re-headed.
    let straddle = Document::new("s", vec![sent("a/O b/O"), sent("c/O d/O e/O")]);
    let w = window_at(&straddle, 1, 1);
    let labels = [NerLabel::O, NerLabel::B(EntityClass::Per), NerLabel::I(EntityClass::Per), NerLabel::I(EntityClass::Per), NerLabel::O];
    assert_eq!(project_predictions(&w, &labels).unwrap(), vec![NerLabel::B(EntityClass::Per), NerLabel::I(EntityClass::Per), NerLabel::O]);
    assert!(project_predictions(&w, &labels[..4]).is_err());

    // Fixed target predictions score the same whatever the context size.
    let gold = &docs;
    let pred = relabel(&mut sampler, gold);
    let all = all_classes();
    let direct = score(gold, &pred, &all).unwrap();
    for n in [0, 1, 2, 5] {
        let projected: Vec<Document> = gold
            .iter()
            .zip(&pred)
            .map(|(g, p)| {
                let sentences = build_windows(g, n)
                    .iter()
                    .map(|w| {
                        let mut labels = random_labels(&mut sampler, w.token_count());
                        let (start, end) = w.target_token_range;
                        labels[start..end].copy_from_slice(&p.sentences[w.target_index].labels());
                        let mut s = w.target().clone();
                        s.set_labels(&project_predictions(w, &labels).unwrap());
                        s
                    })
                    .collect();
                Document::new(g.id.clone(), sentences)
            })
            .collect();
        assert_eq!(projected, pred);
        assert_eq!(score(gold, &projected, &all).unwrap(), direct);
    }
    format!("{windows} windows over 20 documents and n = 0..10 obey count, clamp and offset laws; projection score-invariant")
}

// 9 ---------------------------------------------------------------------------

fn brute_intersection(sets: &[ErrorSet]) -> (Vec<ner_forge::metrics::SpanRecord>, Vec<ner_forge::metrics::SpanRecord>) {
    let all = |pick: fn(&ErrorSet) -> &BTreeSet<ner_forge::metrics::SpanRecord>| {
        pick(&sets[0])
            .iter()
            .filter(|e| sets.iter().all(|s| pick(s).iter().any(|x| x == *e)))
            .cloned()
            .collect::<Vec<_>>()
    };
    (all(|s| &s.false_positives), all(|s| &s.false_negatives))
}

fn error_set_algebra() -> String {
    let mut sampler = SeededSampler::new(9, 0);
    let keep = all_classes();
    let trials = 300;
    for _ in 0..trials {
        let gold = random_corpus(&mut sampler, 6, 6);
        let runs = 1 + sampler.below(5);
        // Predictions close to a shared base so intersections are non-trivial.
        let base = relabel(&mut sampler, &gold);
        let sets: Vec<ErrorSet> = (0..runs)
            .map(|_| {
                let noisy = if sampler.below(2) == 0 { base.clone() } else { relabel(&mut sampler, &gold) };
                evaluate(&gold, &noisy, &keep).unwrap().errors
            })
            .collect();
        let consistent = consistent_errors(&sets);
        let (fp, fn_) = brute_intersection(&sets);
        assert_eq!(consistent.false_positives.iter().cloned().collect::<Vec<_>>(), fp);
        assert_eq!(consistent.false_negatives.iter().cloned().collect::<Vec<_>>(), fn_);
        let (a, b) = (&sets[0], &sets[sets.len() - 1]);
        let diff = diff_errors(a, b);
        let brute: Vec<_> = a.false_positives.iter().filter(|e| !b.false_positives.iter().any(|x| x == *e)).cloned().collect();
        assert_eq!(diff.false_positives.into_iter().collect::<Vec<_>>(), brute);
        let brute: Vec<_> = a.false_negatives.iter().filter(|e| !b.false_negatives.iter().any(|x| x == *e)).cloned().collect();
        assert_eq!(diff.false_negatives.into_iter().collect::<Vec<_>>(), brute);
        assert!(diff_errors(a, a).is_empty());
    }

    // Name ranking: one mention per sentence, A finds 0-7 and 9, B finds 2, 6, 9.
    let mentions = ["Vin", "Vin", "Vin", "Camon", "Camon", "Bilbo", "Bilbo", "Frodo Baggins", "Elend", "Sazed"];
    let sentence = |name: &str, found: bool| {
        let mut tokens: Vec<String> = name
            .split(' ')
            .enumerate()
            .map(|(i, w)| {
                let tag = if !found { "O" } else if i == 0 { "B-PER" } else { "I-PER" };
                format!("{w}/{tag}")
            })
            .collect();
        tokens.push("nodded/O".into());
        tokens.join(" ")
    };
    let build = |found: &dyn Fn(usize) -> bool| -> Vec<Document> {
        let lines: Vec<String> = mentions.iter().enumerate().map(|(i, m)| sentence(m, found(i))).collect();
        vec![doc("0", &lines.iter().map(String::as_str).collect::<Vec<_>>())]
    };
    let gold = build(&|_| true);
    let a = build(&|i| i != 8);
    let b = build(&|i| [2, 6, 9].contains(&i));
    let ranked = recall_diff_names(&gold, &a, &b, 20).unwrap();
    let expected = [("Camon", 2), ("Vin", 2), ("Bilbo", 1), ("Frodo Baggins", 1)];
    let expected: Vec<NameCount> = expected.iter().map(|(s, c)| NameCount { surface: s.to_string(), count: *c }).collect();
    assert_eq!(ranked, expected);
    assert_eq!(recall_diff_names(&gold, &a, &b, 3).unwrap(), expected[..3]);
    assert!(recall_diff_names(&gold, &a, &a, 20).unwrap().is_empty());
    // Across runs a mention counts only when every A run finds it.
    let a2 = build(&|i| i != 8 && i != 0);
    let ranked = recall_diff_names_runs(&gold, &[a.clone(), a2], std::slice::from_ref(&b), 20).unwrap();
    assert_eq!(ranked[0], NameCount { surface: "Camon".into(), count: 2 });
    assert_eq!(ranked[1], NameCount { surface: "Bilbo".into(), count: 1 });
    assert!(ranked.contains(&NameCount { surface: "Vin".into(), count: 1 }));
    format!("{trials} random run groups match brute-force set operations; ranking {:?}", expected.iter().map(|n| format!("{} {}", n.surface, n.count)).collect::<Vec<_>>())
}

// 10 --------------------------------------------------------------------------

fn overlap_report() -> String {
    let mut sampler = SeededSampler::new(10, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..300 {
        let corpus = random_corpus(&mut sampler, 8, 8);
        let picks: Vec<&str> = (0..1 + sampler.below(5)).map(|_| WORDS[sampler.below(WORDS.len())]).collect();
        let names = name_tokens(picks);
        let seg = GreedySubstringSegmenter::from_tokens(names.iter().map(String::as_str), 3);
        let r = overlap_stats(&corpus, &names, &seg).unwrap();
        if r.per_tokens > 0 {
            worst = worst.max((r.exact_match + r.partial_match + r.unseen - 100.0).abs());
        }
    }
    assert!(worst <= 1e-9, "partition off by {worst}");

    let (_, held) = split_fantasy_inventories(200, 3);
    let story = story_corpus(200, &held, 4);
    let per_tokens: BTreeSet<String> = story
        .iter()
        .flat_map(|d| &d.sentences)
        .flat_map(|s| &s.tokens)
        .filter(|t| t.label.class() == Some(EntityClass::Per))
        .map(|t| t.text.clone())
        .collect();
    let seg = GreedySubstringSegmenter::from_tokens(per_tokens.iter().map(String::as_str), 3);
    let saturated = overlap_stats(&story, &per_tokens, &seg).unwrap();
    assert_eq!((saturated.exact_match, saturated.partial_match, saturated.unseen), (100.0, 0.0, 0.0));

    let alien = name_tokens(["qqqq", "0000"]);
    let seg = GreedySubstringSegmenter::from_tokens(alien.iter().map(String::as_str), 3);
    let disjoint = overlap_stats(&story, &alien, &seg).unwrap();
    assert_eq!((disjoint.exact_match, disjoint.partial_match, disjoint.unseen), (0.0, 0.0, 100.0));

    let single = [doc("0", &["Tsarra/B-PER Vin/B-PER Zed/B-PER"])];
    let names = name_tokens(["Tsarratsiosa Vin"]);
    let seg = GreedySubstringSegmenter::from_tokens(names.iter().map(String::as_str), 3);
    let r = overlap_stats(&single, &names, &seg).unwrap();
    assert_eq!(r.per_tokens, 3);
    assert!(close(r.exact_match, 100.0 / 3.0, 1e-12) && close(r.partial_match, 100.0 / 3.0, 1e-12) && close(r.unseen, 100.0 / 3.0, 1e-12));
    format!(
        "partition within {worst:.1e}, saturation and disjoint exact; reference values 9.62/76.97/13.41 and 12.25/76.38/11.37 not asserted (subword vocabulary differs)"
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "corpus round-trip", corpus_round_trip),
        (2, "augmentation laws", augmentation_laws),
        (3, "determinism", determinism),
        (4, "scorer oracle equivalence", scorer_oracle),
        (5, "CI arithmetic", ci_arithmetic),
        (6, "heuristic correction round-trip", heuristic_round_trip),
        (7, "directional recall replication", directional_recall),
        (8, "window laws", window_laws),
        (9, "error-set algebra", error_set_algebra),
        (10, "overlap report", overlap_report),
    ];
    let selected: BTreeSet<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    // `cargo test --list` probes every test target.
    if std::env::args().any(|a| a == "--list") {
        for (id, name, _) in &criteria {
            println!("criterion_{id}_{}: test", name.replace([' ', '-'], "_"));
        }
        return;
    }
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        match panic::catch_unwind(AssertUnwindSafe(run)) {
            Ok(detail) => println!("PASS {id:>2} {name}: {detail}"),
            Err(payload) => {
                failed += 1;
                let message = payload
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panicked".into());
                println!("FAIL {id:>2} {name}: {message}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
