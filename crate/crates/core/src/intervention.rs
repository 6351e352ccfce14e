//! Gender interventions over sentences and documents, matched-pair
//! construction, and counterfactual data augmentation.
//!
//! The naive intervention swaps every gendered token with its
//! opposite-gender form, resolving `her`/`him`/`his` through POS tags when
//! they are present. The grammar intervention additionally leaves tokens
//! unchanged when they sit inside a coreference cluster that mentions a
//! proper noun (POS `NNP`/`NNPS`), e.g. `Queen Elizabeth`.
//!
//! Interventions preserve sentence counts, per-sentence token counts, POS
//! tags, and cluster structure, so the original ground truth carries over to
//! intervened copies unchanged.

use std::collections::HashSet;

use thiserror::Error;

use crate::corpus::{Corpus, CorpusError, Document, Sentence, Token};
use crate::lexicon::{Lexicon, PronounCase};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterventionKind {
    Naive,
    Grammar,
}

#[derive(Debug, Error)]
pub enum InterventionError {
    #[error("document `{doc_id}` has no coreference clusters; the grammar intervention needs them (pass allow_unannotated to fall back to the naive intervention)")]
    MissingClusters { doc_id: String },
    #[error("the grammar intervention requires an annotated corpus (pass allow_unannotated to fall back to the naive intervention)")]
    UnannotatedCorpus,
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// A configured intervention: which transformation to apply and with which
/// lexicon.
#[derive(Debug, Clone, Copy)]
pub struct Intervention<'a> {
    kind: InterventionKind,
    lexicon: &'a Lexicon,
    allow_unannotated: bool,
}

impl<'a> Intervention<'a> {
    pub fn naive(lexicon: &'a Lexicon) -> Self {
        Intervention {
            kind: InterventionKind::Naive,
            lexicon,
            allow_unannotated: false,
        }
    }

    pub fn grammar(lexicon: &'a Lexicon) -> Self {
        Intervention {
            kind: InterventionKind::Grammar,
            lexicon,
            allow_unannotated: false,
        }
    }

    /// Lets the grammar intervention degrade to the naive one on inputs
    /// without cluster annotations.
    pub fn allow_unannotated(mut self, allow: bool) -> Self {
        self.allow_unannotated = allow;
        self
    }

    pub fn kind(&self) -> InterventionKind {
        self.kind
    }

    pub fn lexicon(&self) -> &Lexicon {
        self.lexicon
    }

    pub fn apply_sentence(&self, sentence: &Sentence) -> Result<Sentence, InterventionError> {
        match self.kind {
            InterventionKind::Naive => Ok(naive_sentence(self.lexicon, sentence)),
            InterventionKind::Grammar if self.allow_unannotated => {
                Ok(naive_sentence(self.lexicon, sentence))
            }
            InterventionKind::Grammar => Err(InterventionError::UnannotatedCorpus),
        }
    }

    pub fn apply_document(&self, doc: &Document) -> Result<Document, InterventionError> {
        match self.kind {
            InterventionKind::Naive => Ok(naive_document(self.lexicon, doc)),
            InterventionKind::Grammar => self.grammar_document(doc),
        }
    }

    /// Applies the intervention to every item, in order. Runs per-item in
    /// parallel when the `parallel` feature is enabled.
    pub fn apply_corpus(&self, corpus: &Corpus) -> Result<Corpus, InterventionError> {
        match corpus {
            Corpus::Plain(sentences) => Ok(Corpus::Plain(par::try_map_ordered(sentences, |s| {
                self.apply_sentence(s)
            })?)),
            Corpus::Documents(docs) => Ok(Corpus::Documents(par::try_map_ordered(docs, |d| {
                self.apply_document(d)
            })?)),
        }
    }

    fn grammar_document(&self, doc: &Document) -> Result<Document, InterventionError> {
        if doc.clusters.is_empty() {
            if self.allow_unannotated {
                return Ok(naive_document(self.lexicon, doc));
            }
            return Err(InterventionError::MissingClusters {
                doc_id: doc.doc_id.clone(),
            });
        }
        doc.validate()?;
        let protected = protected_positions(doc);
        let sentences = doc
            .sentences
            .iter()
            .enumerate()
            .map(|(sent_idx, sentence)| Sentence {
                tokens: sentence
                    .tokens
                    .iter()
                    .enumerate()
                    .map(|(tok_idx, token)| {
                        if protected.contains(&(sent_idx, tok_idx)) {
                            token.clone()
                        } else {
                            flip_token(self.lexicon, token)
                        }
                    })
                    .collect(),
            })
            .collect();
        Ok(Document {
            doc_id: doc.doc_id.clone(),
            sentences,
            clusters: doc.clusters.clone(),
        })
    }
}

/// Token positions covered by mentions of clusters that contain at least
/// one proper-noun token anywhere in any of their mentions.
fn protected_positions(doc: &Document) -> HashSet<(usize, usize)> {
    let is_proper = |token: &Token| matches!(token.pos.as_deref(), Some("NNP") | Some("NNPS"));
    let mut protected = HashSet::new();
    for cluster in &doc.clusters {
        let has_proper = cluster.iter().any(|span| {
            doc.sentences[span.sentence].tokens[span.start..span.end]
                .iter()
                .any(is_proper)
        });
        if has_proper {
            for span in cluster {
                for tok_idx in span.start..span.end {
                    protected.insert((span.sentence, tok_idx));
                }
            }
        }
    }
    protected
}

fn pronoun_case(lower: &str, pos: Option<&str>) -> PronounCase {
    match pos {
        Some("PRP$") => PronounCase::Possessive,
        Some("PRP") => match lower {
            "he" | "she" => PronounCase::Subjective,
            "hers" => PronounCase::Possessive,
            _ => PronounCase::Objective,
        },
        _ => PronounCase::Unknown,
    }
}

fn flip_token(lexicon: &Lexicon, token: &Token) -> Token {
    let lower = token.text.to_lowercase();
    let case = pronoun_case(&lower, token.pos.as_deref());
    match lexicon.flip_surface(&token.text, case) {
        Some(text) => Token {
            text,
            pos: token.pos.clone(),
        },
        None => token.clone(),
    }
}

/// The naive intervention on one sentence: a total function.
pub fn naive_sentence(lexicon: &Lexicon, sentence: &Sentence) -> Sentence {
    Sentence {
        tokens: sentence
            .tokens
            .iter()
            .map(|t| flip_token(lexicon, t))
            .collect(),
    }
}

fn naive_document(lexicon: &Lexicon, doc: &Document) -> Document {
    Document {
        doc_id: doc.doc_id.clone(),
        sentences: doc
            .sentences
            .iter()
            .map(|s| naive_sentence(lexicon, s))
            .collect(),
        clusters: doc.clusters.clone(),
    }
}

/// An instance together with its intervened counterpart.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedPair<T> {
    pub original: T,
    pub intervened: T,
}

pub type MatchedPairSet<T> = Vec<MatchedPair<T>>;

/// Matched pairs for a whole corpus, per mode.
#[derive(Debug, Clone, PartialEq)]
pub enum CorpusPairs {
    Plain(MatchedPairSet<Sentence>),
    Documents(MatchedPairSet<Document>),
}

impl CorpusPairs {
    pub fn len(&self) -> usize {
        match self {
            CorpusPairs::Plain(pairs) => pairs.len(),
            CorpusPairs::Documents(pairs) => pairs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Pairs every corpus item with its intervened copy, preserving order.
pub fn matched_pairs(
    corpus: &Corpus,
    intervention: &Intervention,
) -> Result<CorpusPairs, InterventionError> {
    match corpus {
        Corpus::Plain(sentences) => Ok(CorpusPairs::Plain(par::try_map_ordered(
            sentences,
            |s| -> Result<MatchedPair<Sentence>, InterventionError> {
                Ok(MatchedPair {
                    original: s.clone(),
                    intervened: intervention.apply_sentence(s)?,
                })
            },
        )?)),
        Corpus::Documents(docs) => Ok(CorpusPairs::Documents(par::try_map_ordered(
            docs,
            |d| -> Result<MatchedPair<Document>, InterventionError> {
                Ok(MatchedPair {
                    original: d.clone(),
                    intervened: intervention.apply_document(d)?,
                })
            },
        )?)),
    }
}

/// Counterfactual data augmentation: all original items followed by their
/// intervened copies, which keep the original ground-truth clusters.
/// Augmented documents get the id suffix `#cda`.
pub fn cda_augment(
    corpus: &Corpus,
    intervention: &Intervention,
) -> Result<Corpus, InterventionError> {
    match corpus {
        Corpus::Plain(sentences) => {
            let mut out = sentences.clone();
            out.extend(par::try_map_ordered(sentences, |s| {
                intervention.apply_sentence(s)
            })?);
            Ok(Corpus::Plain(out))
        }
        Corpus::Documents(docs) => {
            let mut out = docs.clone();
            out.extend(par::try_map_ordered(
                docs,
                |d| -> Result<Document, InterventionError> {
                    let mut copy = intervention.apply_document(d)?;
                    copy.doc_id = format!("{}#cda", d.doc_id);
                    Ok(copy)
                },
            )?);
            Ok(Corpus::Documents(out))
        }
    }
}
