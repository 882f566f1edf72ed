use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use ner_forge::augment::{augment_dataset, AugmentationPlan, Provenance, Rate};
use ner_forge::context::{build_windows, WindowRecord};
use ner_forge::corpus::{class_distribution, parse_conll, serialize_conll, Sentence, Token};
use ner_forge::heuristics::{
    apply_decisions, flag_corpus, load_names, CapitalizationRule, Decision, Flag,
};
use ner_forge::jsonl::{from_jsonl, to_jsonl};
use ner_forge::label::repair_bio;
use ner_forge::metrics::{
    aggregate_runs, all_classes, consistent_errors, diff_errors, evaluate, name_tokens,
    overlap_stats, recall_diff_names_runs, ErrorSet, GreedySubstringSegmenter,
};
use ner_forge::namegen::load_inventory;
use ner_forge::tagger::{tag, tag_with_context, train, TaggerModel, TrainConfig};
use ner_forge::{Document, EntityClass, TagScheme};
use ner_forge_review::{serve, ReviewSession, ServeOptions};
use serde::Serialize;
use serde_json::json;

use crate::args::*;
use crate::report::{aggregate_table, key_values, metrics_table, table};

pub struct Context {
    pub format: Format,
    pub quiet: bool,
    pub seed: u64,
    pub scheme: TagScheme,
}

impl Context {
    fn emit<T: Serialize>(&self, value: &T, table: impl FnOnce() -> String) -> Result<()> {
        match self.format {
            Format::Json => println!("{}", serde_json::to_string_pretty(value)?),
            Format::Table => print!("{}", table()),
        }
        Ok(())
    }

    fn note(&self, message: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", message.as_ref());
        }
    }

    fn read_conll(&self, path: &Path) -> Result<Vec<Document>> {
        parse_conll(&read(path)?, self.scheme).with_context(|| format!("parsing {}", path.display()))
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn keep_classes(classes: &[EntityClass]) -> BTreeSet<EntityClass> {
    if classes.is_empty() {
        all_classes()
    } else {
        classes.iter().copied().collect()
    }
}

/// Files of a runs directory in name order.
fn run_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        bail!("no prediction files in {}", dir.display());
    }
    Ok(files)
}

pub fn augment(ctx: &Context, args: &AugmentArgs) -> Result<()> {
    let rate: Rate = args.rate.parse()?;
    let plan = AugmentationPlan::new(rate, args.strategy, ctx.seed)?.with_target(args.target);
    let corpus = ctx.read_conll(&args.input)?;
    let (inventory, forms) = load_inventory(&read(&args.inventory)?)
        .with_context(|| format!("loading {}", args.inventory.display()))?;
    let augmented = augment_dataset(&corpus, &plan, &inventory, &forms)?;
    write(&args.output, &serialize_conll(&augmented.to_documents()))?;
    if let Some(log) = &args.log {
        write(log, &to_jsonl(&augmented.replacement_log)?)?;
    }
    let summary = json!({
        "sentences": augmented.sentences.len(),
        "original": augmented.count(Provenance::Original),
        "generated": augmented.count(Provenance::Generated),
        "upsampled": augmented.count(Provenance::Upsampled),
        "replacements": augmented.replacement_log.len(),
    });
    ctx.emit(&summary, || {
        key_values(&[
            ("sentences", augmented.sentences.len().to_string()),
            ("original", augmented.count(Provenance::Original).to_string()),
            ("generated", augmented.count(Provenance::Generated).to_string()),
            ("upsampled", augmented.count(Provenance::Upsampled).to_string()),
            ("replacements", augmented.replacement_log.len().to_string()),
        ])
    })
}

pub fn eval(ctx: &Context, args: &EvalArgs) -> Result<()> {
    let gold = ctx.read_conll(&args.gold)?;
    let keep = keep_classes(&args.classes);
    if let Some(pred) = &args.pred {
        let pred = ctx.read_conll(pred)?;
        let report = evaluate(&gold, &pred, &keep)?.report;
        return ctx.emit(&report, || metrics_table(&report));
    }
    let dir = args.runs.as_deref().expect("clap requires --pred or --runs");
    let mut reports = Vec::new();
    for file in run_files(dir)? {
        let pred = ctx.read_conll(&file)?;
        reports.push(
            evaluate(&gold, &pred, &keep)
                .with_context(|| format!("scoring {}", file.display()))?
                .report,
        );
    }
    let aggregate = aggregate_runs(&reports)?;
    ctx.emit(&aggregate, || {
        let per_class = aggregate
            .per_class
            .iter()
            .map(|(c, m)| (c.to_string(), *m))
            .collect();
        aggregate_table(aggregate.run_count, &aggregate.micro, &per_class)
    })
}

fn load_runs(ctx: &Context, dir: &Path) -> Result<Vec<Vec<Document>>> {
    run_files(dir)?.iter().map(|f| ctx.read_conll(f)).collect()
}

#[derive(Serialize)]
struct ErrorDiff {
    recall_diff: Vec<ner_forge::metrics::NameCount>,
    only_a: ErrorSet,
    only_b: ErrorSet,
}

pub fn diff_errors_cmd(ctx: &Context, args: &DiffErrorsArgs) -> Result<()> {
    let gold = ctx.read_conll(&args.gold)?;
    let keep = keep_classes(&args.classes);
    let runs_a = load_runs(ctx, &args.runs_a)?;
    let runs_b = load_runs(ctx, &args.runs_b)?;
    let consistent = |runs: &[Vec<Document>]| -> Result<ErrorSet> {
        let sets = runs
            .iter()
            .map(|r| evaluate(&gold, r, &keep).map(|e| e.errors))
            .collect::<ner_forge::Result<Vec<_>>>()?;
        Ok(consistent_errors(&sets))
    };
    let (a, b) = (consistent(&runs_a)?, consistent(&runs_b)?);
    let diff = ErrorDiff {
        recall_diff: recall_diff_names_runs(&gold, &runs_a, &runs_b, args.top)?,
        only_a: diff_errors(&a, &b),
        only_b: diff_errors(&b, &a),
    };
    ctx.emit(&diff, || {
        let rows: Vec<Vec<String>> = diff
            .recall_diff
            .iter()
            .enumerate()
            .map(|(i, n)| vec![(i + 1).to_string(), n.surface.clone(), n.count.to_string()])
            .collect();
        let mut out = String::from("PER mentions found by every A run and no B run\n");
        out.push_str(&table(&["rank", "name", "count"], &rows));
        out.push('\n');
        out.push_str(&table(
            &["consistent errors", "false positives", "false negatives"],
            &[
                vec![
                    "only A".into(),
                    diff.only_a.false_positives.len().to_string(),
                    diff.only_a.false_negatives.len().to_string(),
                ],
                vec![
                    "only B".into(),
                    diff.only_b.false_positives.len().to_string(),
                    diff.only_b.false_negatives.len().to_string(),
                ],
            ],
        ));
        out
    })
}

pub fn window(ctx: &Context, args: &WindowArgs) -> Result<()> {
    let corpus = ctx.read_conll(&args.input)?;
    let records: Vec<WindowRecord> = corpus
        .iter()
        .flat_map(|doc| build_windows(doc, args.size))
        .map(|w| w.to_record())
        .collect();
    write(&args.output, &to_jsonl(&records)?)?;
    ctx.emit(&json!({ "windows": records.len(), "size": args.size }), || {
        key_values(&[
            ("windows", records.len().to_string()),
            ("size", args.size.to_string()),
        ])
    })
}

fn count_by_kind(flags: &[Flag]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for flag in flags {
        *counts.entry(flag.kind.as_str().to_string()).or_insert(0) += 1;
    }
    counts
}

pub fn flag(ctx: &Context, args: &FlagArgs) -> Result<()> {
    let corpus = ctx.read_conll(&args.input)?;
    let names = load_names(&read(&args.names)?);
    let predictions = match &args.predictions {
        Some(p) => Some(ctx.read_conll(p)?),
        None => None,
    };
    let rule = if args.strict_capitalization {
        CapitalizationRule::AnyLowercase
    } else {
        CapitalizationRule::NoneCapitalized
    };
    let flags = flag_corpus(&corpus, &names, predictions.as_deref(), rule)?;
    write(&args.output, &to_jsonl(&flags)?)?;
    let counts = count_by_kind(&flags);
    ctx.emit(&json!({ "total": flags.len(), "by_kind": counts }), || {
        let mut rows: Vec<Vec<String>> = counts
            .iter()
            .map(|(k, n)| vec![k.clone(), n.to_string()])
            .collect();
        rows.push(vec!["total".into(), flags.len().to_string()]);
        table(&["kind", "flags"], &rows)
    })
}

pub fn apply(ctx: &Context, args: &ApplyArgs) -> Result<()> {
    let corpus = ctx.read_conll(&args.input)?;
    let flags: Vec<Flag> = from_jsonl(&read(&args.flags)?)
        .with_context(|| format!("parsing {}", args.flags.display()))?;
    let decisions: Vec<Decision> = from_jsonl(&read(&args.decisions)?)
        .with_context(|| format!("parsing {}", args.decisions.display()))?;
    let (corrected, summary) = apply_decisions(&corpus, &flags, &decisions)?;
    write(&args.output, &serialize_conll(&corrected))?;
    ctx.emit(&summary, || {
        key_values(&[
            ("spans_added", summary.spans_added.to_string()),
            ("spans_removed", summary.spans_removed.to_string()),
            ("spans_relabeled", summary.spans_relabeled.to_string()),
        ])
    })
}

pub fn review(ctx: &Context, args: &ReviewArgs) -> Result<()> {
    let corpus = ctx.read_conll(&args.input)?;
    let flags: Vec<Flag> = from_jsonl(&read(&args.flags)?)
        .with_context(|| format!("parsing {}", args.flags.display()))?;
    let session = ReviewSession::open(corpus, flags, Some(args.decisions.clone()))?;
    let progress = session.progress();
    let addr = SocketAddr::new(args.host, args.port);
    ctx.note(format!(
        "reviewing {} flags ({} pending) on http://{addr}",
        session.flags().len(),
        progress.pending
    ));
    let options = ServeOptions {
        addr,
        assets: args.assets.clone(),
    };
    tokio::runtime::Runtime::new()?
        .block_on(serve(session, options))
        .with_context(|| format!("serving on {addr}"))
}

pub fn train_cmd(ctx: &Context, args: &TrainArgs) -> Result<()> {
    let corpus = ctx.read_conll(&args.input)?;
    let config = TrainConfig {
        max_presentations: args.max_presentations,
        ..TrainConfig::new(args.epochs, ctx.seed)
    };
    let model = train(&corpus, config)?;
    write(&args.output, &model.to_json()?)?;
    let summary = json!({ "header": model.header, "features": model.feature_count() });
    ctx.emit(&summary, || {
        key_values(&[
            ("seed", model.header.seed.to_string()),
            ("epochs", model.header.epochs.to_string()),
            ("presentations", model.header.presentations.to_string()),
            ("features", model.feature_count().to_string()),
        ])
    })
}

/// Tags each window record and regroups the target sentences by document.
fn tag_records(model: &TaggerModel, records: &[WindowRecord]) -> Result<Vec<Document>> {
    let mut docs: Vec<(String, Vec<(usize, Sentence)>)> = Vec::new();
    for (line, record) in records.iter().enumerate() {
        let window = record
            .to_sentence()
            .with_context(|| format!("window on line {}", line + 1))?;
        let mut labels = model.predict(&window)[record.target_start..record.target_end].to_vec();
        repair_bio(&mut labels);
        let tokens = record.tokens[record.target_start..record.target_end]
            .iter()
            .zip(labels)
            .map(|(t, l)| Token::new(t.clone(), l))
            .collect::<ner_forge::Result<Vec<_>>>()?;
        let entry = match docs.iter_mut().find(|(id, _)| *id == record.doc) {
            Some(entry) => entry,
            None => {
                docs.push((record.doc.clone(), Vec::new()));
                docs.last_mut().expect("just pushed")
            }
        };
        entry.1.push((record.target_index, Sentence::new(tokens)));
    }
    Ok(docs
        .into_iter()
        .map(|(id, mut sentences)| {
            sentences.sort_by_key(|(i, _)| *i);
            Document::new(id, sentences.into_iter().map(|(_, s)| s).collect())
        })
        .collect())
}

pub fn tag_cmd(ctx: &Context, args: &TagArgs) -> Result<()> {
    let model = TaggerModel::from_json(&read(&args.model)?)
        .with_context(|| format!("loading {}", args.model.display()))?;
    let is_windows = args.input.extension().is_some_and(|e| e == "jsonl");
    let tagged = if is_windows {
        let records: Vec<WindowRecord> = from_jsonl(&read(&args.input)?)
            .with_context(|| format!("parsing {}", args.input.display()))?;
        tag_records(&model, &records)?
    } else {
        let corpus = ctx.read_conll(&args.input)?;
        if args.context == 0 {
            tag(&model, &corpus)
        } else {
            tag_with_context(&model, &corpus, args.context)?
        }
    };
    write(&args.output, &serialize_conll(&tagged))?;
    let sentences: usize = tagged.iter().map(|d| d.sentences.len()).sum();
    ctx.emit(&json!({ "documents": tagged.len(), "sentences": sentences }), || {
        key_values(&[
            ("documents", tagged.len().to_string()),
            ("sentences", sentences.to_string()),
        ])
    })
}

pub fn stats(ctx: &Context, command: &StatsCommand) -> Result<()> {
    match command {
        StatsCommand::Overlap {
            eval,
            names,
            min_len,
        } => {
            let corpus = ctx.read_conll(eval)?;
            let names = load_names(&read(names)?);
            let tokens = name_tokens(names.iter().map(String::as_str));
            let segmenter =
                GreedySubstringSegmenter::from_tokens(tokens.iter().map(String::as_str), *min_len);
            let report = overlap_stats(&corpus, &tokens, &segmenter)?;
            ctx.emit(&report, || {
                key_values(&[
                    ("per_tokens", report.per_tokens.to_string()),
                    ("exact_match", format!("{:.2}", report.exact_match)),
                    ("partial_match", format!("{:.2}", report.partial_match)),
                    ("unseen", format!("{:.2}", report.unseen)),
                ])
            })
        }
        StatsCommand::Inventory { inventory } => {
            let (inventory, forms) = load_inventory(&read(inventory)?)?;
            let stats = inventory.stats();
            ctx.emit(&json!({ "parts": stats, "forms": forms.forms }), || {
                let mut out = key_values(&[
                    ("first_names", stats.first_names.to_string()),
                    ("last_names", stats.last_names.to_string()),
                    ("prefixes", stats.prefixes.to_string()),
                    ("suffixes", stats.suffixes.to_string()),
                ]);
                out.push('\n');
                let rows: Vec<Vec<String>> = forms
                    .forms
                    .iter()
                    .map(|f| {
                        let parts: Vec<String> =
                            f.elements.iter().map(|p| format!("{p:?}").to_uppercase()).collect();
                        vec![parts.join("+"), format!("{}", f.weight)]
                    })
                    .collect();
                out.push_str(&table(&["form", "weight"], &rows));
                out
            })
        }
        StatsCommand::Corpus { input } => {
            let corpus = ctx.read_conll(input)?;
            let sentences: Vec<&Sentence> = corpus.iter().flat_map(|d| &d.sentences).collect();
            let tokens: usize = sentences.iter().map(|s| s.len()).sum();
            let distribution = class_distribution(sentences.iter().copied());
            let mentions: BTreeMap<String, usize> =
                distribution.iter().map(|(c, n)| (c.to_string(), *n)).collect();
            let summary = json!({
                "documents": corpus.len(),
                "sentences": sentences.len(),
                "tokens": tokens,
                "mentions": mentions,
            });
            ctx.emit(&summary, || {
                let mut out = key_values(&[
                    ("documents", corpus.len().to_string()),
                    ("sentences", sentences.len().to_string()),
                    ("tokens", tokens.to_string()),
                ]);
                out.push('\n');
                let rows: Vec<Vec<String>> = distribution
                    .iter()
                    .map(|(c, n)| vec![c.to_string(), n.to_string()])
                    .collect();
                out.push_str(&table(&["class", "mentions"], &rows));
                out
            })
        }
    }
}
