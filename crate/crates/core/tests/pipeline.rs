//! Cross-module invariants exercised through the public API.

use proptest::prelude::*;

use cfbias::corpus::{parse_documents, to_documents_string, Corpus, Document, MentionSpan, Sentence, Token};
use cfbias::intervention::{cda_augment, matched_pairs, CorpusPairs, Intervention};
use cfbias::lexicon::default_lexicon;
use cfbias::ngramlm::NgramModel;

const POOL: &[(&str, &str)] = &[
    ("he", "PRP"),
    ("she", "PRP"),
    ("her", "PRP"),
    ("his", "PRP$"),
    ("king", "NN"),
    ("Waitress", "NN"),
    ("doctor", "NN"),
    ("Elizabeth", "NNP"),
    ("saw", "VBD"),
    ("the", "DT"),
    (".", "."),
];

fn arb_sentence() -> impl Strategy<Value = Sentence> {
    prop::collection::vec(0..POOL.len(), 1..9).prop_map(|indices| Sentence {
        tokens: indices
            .into_iter()
            .map(|i| Token::tagged(POOL[i].0, POOL[i].1))
            .collect(),
    })
}

fn arb_document() -> impl Strategy<Value = Document> {
    (
        "[a-z]{1,6}",
        prop::collection::vec(arb_sentence(), 1..4),
        prop::collection::vec(
            prop::collection::vec(
                (
                    any::<prop::sample::Index>(),
                    any::<prop::sample::Index>(),
                    any::<prop::sample::Index>(),
                ),
                1..3,
            ),
            0..3,
        ),
    )
        .prop_map(|(doc_id, sentences, specs)| {
            let clusters = specs
                .into_iter()
                .map(|spans| {
                    spans
                        .into_iter()
                        .map(|(sent_sel, start_sel, len_sel)| {
                            let sentence = sent_sel.index(sentences.len());
                            let tokens = sentences[sentence].tokens.len();
                            let start = start_sel.index(tokens);
                            let end = start + 1 + len_sel.index(tokens - start);
                            MentionSpan::new(sentence, start, end)
                        })
                        .collect()
                })
                .collect();
            Document {
                doc_id,
                sentences,
                clusters,
            }
        })
}

proptest! {
    #[test]
    fn document_corpus_round_trips(docs in prop::collection::vec(arb_document(), 0..12)) {
        let corpus = Corpus::Documents(docs);
        let text = to_documents_string(&corpus).unwrap();
        let back = Corpus::Documents(parse_documents(&text).unwrap());
        prop_assert_eq!(back, corpus);
    }

    #[test]
    fn interventions_preserve_shape(docs in prop::collection::vec(arb_document(), 1..8)) {
        let lexicon = default_lexicon();
        let corpus = Corpus::Documents(docs);
        for intervention in [
            Intervention::naive(lexicon),
            Intervention::grammar(lexicon).allow_unannotated(true),
        ] {
            let pairs = matched_pairs(&corpus, &intervention).unwrap();
            let CorpusPairs::Documents(pairs) = pairs else {
                panic!("expected document pairs");
            };
            prop_assert_eq!(pairs.len(), corpus.len());
            for pair in &pairs {
                prop_assert_eq!(&pair.intervened.clusters, &pair.original.clusters);
                for (a, b) in pair.original.sentences.iter().zip(&pair.intervened.sentences) {
                    prop_assert_eq!(a.tokens.len(), b.tokens.len());
                    for (ta, tb) in a.tokens.iter().zip(&b.tokens) {
                        prop_assert_eq!(&ta.pos, &tb.pos);
                    }
                }
            }
            let augmented = cda_augment(&corpus, &intervention).unwrap();
            prop_assert_eq!(augmented.len(), 2 * corpus.len());
        }
    }

    #[test]
    fn ngram_models_survive_serialization(
        sentences in prop::collection::vec(
            prop::collection::vec("[a-d]{1,3}", 1..8),
            1..10,
        ),
        order in 1usize..=4,
        queries in prop::collection::vec(
            (prop::collection::vec("[a-e]{1,3}", 0..4), "[a-e]{1,3}"),
            1..20,
        ),
    ) {
        let corpus = Corpus::Plain(
            sentences
                .iter()
                .map(|words| Sentence::parse(&words.join(" ")))
                .collect(),
        );
        let model = NgramModel::train(&corpus, order, 0.5).unwrap();
        let back = NgramModel::from_model_string(&model.to_model_string()).unwrap();
        for (prefix, target) in &queries {
            let lp = model.log_prob(prefix, target);
            prop_assert!(lp.is_finite() && lp < 0.0);
            prop_assert_eq!(back.log_prob(prefix, target), lp);
        }
    }
}
