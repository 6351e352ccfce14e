//! Compares the parallel and sequential paths of the corpus-scale
//! operations: per-document intervention and batch request scoring.
//!
//! With the default `parallel` feature, `map_ordered` fans out over rayon;
//! `map_ordered_seq` is the always-sequential reference. Built without the
//! feature, both paths are sequential and should bench identically.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use cfbias::bias::{ScoreRequest, Scorer};
use cfbias::corpus::{Corpus, Document, MentionSpan, Sentence};
use cfbias::intervention::Intervention;
use cfbias::lexicon::default_lexicon;
use cfbias::ngramlm::NgramModel;
use cfbias::par::{map_ordered, map_ordered_seq};
use cfbias::templates::{default_lm_templates, occupation_pair_set};

fn synthetic_docs(count: usize) -> Vec<Document> {
    let lines = [
        "The doctor ran because he is late .",
        "His father met her near the office .",
        "The queen and the king waved at the crowd .",
        "Nothing gendered happens in this sentence at all .",
        "The waiter served the waitress and the actor .",
        "She told him that the plumber was early .",
    ];
    (0..count)
        .map(|i| Document {
            doc_id: format!("doc{i}"),
            sentences: lines.iter().map(|l| Sentence::parse(l)).collect(),
            clusters: vec![vec![MentionSpan::new(0, 1, 2), MentionSpan::new(0, 5, 6)]],
        })
        .collect()
}

fn bench_intervention(c: &mut Criterion) {
    let docs = synthetic_docs(600);
    let intervention = Intervention::naive(default_lexicon());
    let mut group = c.benchmark_group("naive_intervention_600_docs");
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(map_ordered(&docs, |d| intervention.apply_document(d).unwrap())))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            black_box(map_ordered_seq(&docs, |d| {
                intervention.apply_document(d).unwrap()
            }))
        })
    });
    group.finish();
}

fn bench_scoring(c: &mut Criterion) {
    let lexicon = default_lexicon();
    let mut text = String::new();
    for occupation in lexicon.occupations().iter().filter(|o| !o.contains(' ')) {
        for _ in 0..10 {
            text.push_str(&format!("He is a {occupation} .\n"));
            text.push_str(&format!("She is a {occupation} .\n"));
        }
    }
    let model = NgramModel::train(&Corpus::Plain(cfbias::corpus::parse_plain(&text)), 4, 1.0)
        .expect("synthetic corpus trains");

    let mut requests: Vec<ScoreRequest> = Vec::new();
    for occupation in lexicon.occupations().iter().filter(|o| !o.contains(' ')) {
        let pairs = occupation_pair_set(&default_lm_templates(), occupation, lexicon).unwrap();
        for pair in &pairs {
            requests.push(ScoreRequest::from(&pair.original));
            requests.push(ScoreRequest::from(&pair.intervened));
        }
    }

    let mut group = c.benchmark_group("ngram_scoring_all_requests");
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(map_ordered(&requests, |r| model.score(r).unwrap())))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(map_ordered_seq(&requests, |r| model.score(r).unwrap())))
    });
    group.finish();
}

criterion_group!(benches, bench_intervention, bench_scoring);
criterion_main!(benches);
