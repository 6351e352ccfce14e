//! Matched-pair gender bias measurement and counterfactual data augmentation
//! (CDA) for token corpora.
//!
//! The crate provides:
//!
//! - [`lexicon`]: a bidirectional gendered-word dictionary with pronoun case
//!   rules and an occupation list, shipped with embedded defaults.
//! - [`corpus`]: plain and coreference-annotated corpus data model plus
//!   readers/writers (one-sentence-per-line text, JSON-lines documents, and a
//!   CoNLL-lite importer).
//! - [`intervention`]: the naive and grammar-aware gender interventions,
//!   matched-pair construction, and CDA corpus augmentation.
//! - [`templates`]: embedded coreference and next-word test templates and
//!   their instantiation with occupations.
//! - [`bias`]: the scorer abstraction and the bias calculus (score bias,
//!   class bias, per-occupation reports with absolute and signed aggregates).
//! - [`ngramlm`]: a count-based add-k smoothed n-gram language model usable
//!   as a next-word scorer.
//! - [`bridge`]: a line-delimited JSON protocol for scoring through an
//!   external child process.
//!
//! Corpus-scale operations run data-parallel via rayon when the `parallel`
//! feature (on by default) is enabled, with identical, order-preserving
//! results either way.

pub mod bias;
pub mod bridge;
pub mod corpus;
pub mod intervention;
pub mod lexicon;
pub mod ngramlm;
pub mod par;
pub mod templates;

pub use bias::{BiasReport, ScoreRequest, Scorer, ScorerError};
pub use corpus::{Corpus, Document, MentionSpan, Sentence, Token};
pub use intervention::{Intervention, MatchedPair};
pub use lexicon::{default_lexicon, Lexicon, PronounCase};
