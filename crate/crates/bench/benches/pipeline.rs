use std::collections::BTreeSet;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use ner_forge::augment::{augment_dataset, AugmentationPlan, Rate, Strategy};
use ner_forge::corpus::{parse_conll, sentence_count, serialize_conll};
use ner_forge::metrics::{all_classes, score};
use ner_forge::namegen::FormDistribution;
use ner_forge::synth::{news_corpus, split_fantasy_inventories};
use ner_forge::tagger::{tag, tag_with_context, train, TrainConfig};
use ner_forge::{EntityClass, TagScheme};

fn corpus(c: &mut Criterion) {
    let docs = news_corpus(2000, 1);
    let text = serialize_conll(&docs);
    let mut group = c.benchmark_group("corpus");
    group.throughput(Throughput::Bytes(text.len() as u64));
    group.bench_function("parse", |b| b.iter(|| parse_conll(black_box(&text), TagScheme::Auto).unwrap()));
    group.bench_function("serialize", |b| b.iter(|| serialize_conll(black_box(&docs))));
    group.finish();
}

fn scoring(c: &mut Criterion) {
    let gold = news_corpus(2000, 1);
    let model = train(&news_corpus(500, 2), TrainConfig::new(2, 0)).unwrap();
    let pred = tag(&model, &gold);
    let classes = all_classes();
    let per = BTreeSet::from([EntityClass::Per]);
    c.bench_function("score/all-classes", |b| b.iter(|| score(&gold, &pred, &classes).unwrap()));
    c.bench_function("score/per-only", |b| b.iter(|| score(&gold, &pred, &per).unwrap()));
}

fn augmentation(c: &mut Criterion) {
    let docs = news_corpus(2000, 1);
    let (inventory, _) = split_fantasy_inventories(1000, 2);
    let mut forms = FormDistribution::default_forms();
    forms
        .forms
        .retain(|f| f.elements.iter().all(|p| !inventory.parts(*p).is_empty()));
    let mut group = c.benchmark_group("augment");
    group.throughput(Throughput::Elements(sentence_count(&docs) as u64));
    for (name, strategy, rate) in [
        ("add-0.2", Strategy::Add, "0.2"),
        ("balance-0.2", Strategy::UpsampleBalance, "0.2"),
        ("replace-0.6", Strategy::Replace, "0.6"),
    ] {
        let plan = AugmentationPlan::new(rate.parse::<Rate>().unwrap(), strategy, 42).unwrap();
        group.bench_function(name, |b| {
            b.iter(|| augment_dataset(black_box(&docs), &plan, &inventory, &forms).unwrap())
        });
    }
    group.finish();
}

fn tagger(c: &mut Criterion) {
    let train_docs = news_corpus(500, 1);
    let eval_docs = news_corpus(500, 2);
    let mut group = c.benchmark_group("tagger");
    group.sample_size(10);
    group.bench_function("train-500x1", |b| {
        b.iter_batched(
            || TrainConfig::new(1, 0),
            |config| train(&train_docs, config).unwrap(),
            BatchSize::LargeInput,
        )
    });
    let model = train(&train_docs, TrainConfig::new(3, 0)).unwrap();
    group.throughput(Throughput::Elements(sentence_count(&eval_docs) as u64));
    group.bench_function("tag", |b| b.iter(|| tag(&model, black_box(&eval_docs))));
    group.bench_function("tag-context-2", |b| {
        b.iter(|| tag_with_context(&model, black_box(&eval_docs), 2).unwrap())
    });
    group.finish();
}

criterion_group!(benches, corpus, scoring, augmentation, tagger);
criterion_main!(benches);
