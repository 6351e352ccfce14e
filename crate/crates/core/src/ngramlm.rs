//! A count-based n-gram language model with add-k smoothing, usable as a
//! next-word scorer.
//!
//! Training counts every n-gram of a plain-mode corpus with `order - 1`
//! begin-of-sentence markers padding each sentence. The conditional
//! probability of `w` after context `ctx` is
//! `(count(ctx, w) + k) / (total(ctx) + k * |vocab|)`, so the distribution
//! over the vocabulary sums to one for every context and every log
//! probability is finite and negative.
//!
//! Add-k (rather than discounting) smoothing keeps an exact property: a
//! training corpus that is fixed by the naive intervention produces
//! identical counts, hence identical conditionals, for matched gendered
//! prefixes.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use thiserror::Error;

use crate::bias::{ScoreRequest, Scorer, ScorerError};
use crate::corpus::{Corpus, Sentence};

/// Begin-of-sentence marker; part of the vocabulary.
pub const BOS: &str = "<s>";
/// Unknown-token marker; part of the vocabulary.
pub const UNK: &str = "<unk>";

#[derive(Debug, Error)]
pub enum NgramError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("order must be between 1 and 5, got {0}")]
    BadOrder(usize),
    #[error("smoothing constant must be positive and finite, got {0}")]
    BadSmoothing(f64),
    #[error("corpus is in {0} mode but plain mode is required")]
    ModeMismatch(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("model file version mismatch: expected `ngramlm v1`, found `{0}`")]
    VersionMismatch(String),
    #[error("model file line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    order: usize,
    k: f64,
    vocab: BTreeSet<String>,
    counts: HashMap<Vec<String>, HashMap<String, u64>>,
    totals: HashMap<Vec<String>, u64>,
}

impl NgramModel {
    /// Trains a model of the given order with add-`k` smoothing. No
    /// unknown-token thresholding: every training token enters the
    /// vocabulary.
    pub fn train(corpus: &Corpus, order: usize, k: f64) -> Result<Self, NgramError> {
        Self::train_with_min_count(corpus, order, k, 1)
    }

    /// Like [`train`](Self::train), but tokens seen fewer than `min_count`
    /// times are replaced by the unknown marker at training time.
    pub fn train_with_min_count(
        corpus: &Corpus,
        order: usize,
        k: f64,
        min_count: u64,
    ) -> Result<Self, NgramError> {
        if !(1..=5).contains(&order) {
            return Err(NgramError::BadOrder(order));
        }
        if k <= 0.0 || !k.is_finite() {
            return Err(NgramError::BadSmoothing(k));
        }
        let sentences = corpus
            .as_plain()
            .ok_or_else(|| NgramError::ModeMismatch(corpus.mode()))?;
        let sentences: Vec<&Sentence> = sentences.iter().filter(|s| !s.tokens.is_empty()).collect();
        if sentences.is_empty() {
            return Err(NgramError::EmptyCorpus);
        }

        let frequent: Option<HashMap<&str, u64>> = (min_count > 1).then(|| {
            let mut freqs: HashMap<&str, u64> = HashMap::new();
            for sentence in &sentences {
                for token in &sentence.tokens {
                    *freqs.entry(token.text.as_str()).or_insert(0) += 1;
                }
            }
            freqs
        });
        let keep = |token: &str| match &frequent {
            Some(freqs) => freqs.get(token).copied().unwrap_or(0) >= min_count,
            None => true,
        };

        let mut vocab: BTreeSet<String> = BTreeSet::new();
        vocab.insert(BOS.to_string());
        vocab.insert(UNK.to_string());
        let mut counts: HashMap<Vec<String>, HashMap<String, u64>> = HashMap::new();
        let mut totals: HashMap<Vec<String>, u64> = HashMap::new();
        for sentence in &sentences {
            let mut context: Vec<String> = vec![BOS.to_string(); order - 1];
            for token in &sentence.tokens {
                let mapped = if keep(&token.text) {
                    token.text.clone()
                } else {
                    UNK.to_string()
                };
                vocab.insert(mapped.clone());
                *counts
                    .entry(context.clone())
                    .or_default()
                    .entry(mapped.clone())
                    .or_insert(0) += 1;
                *totals.entry(context.clone()).or_insert(0) += 1;
                if order > 1 {
                    context.remove(0);
                    context.push(mapped);
                }
            }
        }
        Ok(NgramModel {
            order,
            k,
            vocab,
            counts,
            totals,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn vocab(&self) -> impl Iterator<Item = &str> {
        self.vocab.iter().map(String::as_str)
    }

    fn map_token(&self, token: &str) -> String {
        if self.vocab.contains(token) {
            token.to_string()
        } else {
            UNK.to_string()
        }
    }

    fn context_of<S: AsRef<str>>(&self, prefix: &[S]) -> Vec<String> {
        let need = self.order - 1;
        let taken = prefix.len().min(need);
        let mut context = vec![BOS.to_string(); need - taken];
        context.extend(
            prefix[prefix.len() - taken..]
                .iter()
                .map(|t| self.map_token(t.as_ref())),
        );
        context
    }

    /// Natural-log conditional probability of `target` following `prefix`.
    /// Uses the last `order - 1` prefix tokens (BOS-padded); unknown tokens
    /// map to the unknown marker. Always finite and strictly negative.
    pub fn log_prob<S: AsRef<str>>(&self, prefix: &[S], target: &str) -> f64 {
        let context = self.context_of(prefix);
        let target = self.map_token(target);
        let count = self
            .counts
            .get(&context)
            .and_then(|m| m.get(&target))
            .copied()
            .unwrap_or(0) as f64;
        let total = self.totals.get(&context).copied().unwrap_or(0) as f64;
        ((count + self.k) / (total + self.k * self.vocab.len() as f64)).ln()
    }

    /// Serializes the model to its versioned text format. Lines are sorted,
    /// so the output is byte-stable for a given model.
    pub fn to_model_string(&self) -> String {
        let mut out = format!(
            "ngramlm v1 {} {} {}\n",
            self.order,
            self.k,
            self.vocab.len()
        );
        for token in &self.vocab {
            out.push_str(token);
            out.push('\n');
        }
        let mut lines: Vec<String> = self
            .counts
            .iter()
            .flat_map(|(context, tokens)| {
                tokens.iter().map(move |(token, count)| {
                    let mut fields: Vec<&str> =
                        context.iter().map(String::as_str).collect();
                    fields.push(token);
                    let mut line = fields.join("\t");
                    line.push('\t');
                    line.push_str(&count.to_string());
                    line
                })
            })
            .collect();
        lines.sort();
        for line in lines {
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), NgramError> {
        std::fs::write(path, self.to_model_string())?;
        Ok(())
    }

    pub fn from_model_string(text: &str) -> Result<Self, NgramError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| NgramError::VersionMismatch(
            "<empty file>".to_string(),
        ))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 || fields[0] != "ngramlm" || fields[1] != "v1" {
            return Err(NgramError::VersionMismatch(header.to_string()));
        }
        let parse_field = |line: usize, what: &str, value: &str| NgramError::Parse {
            line,
            msg: format!("bad {what} `{value}`"),
        };
        let order: usize = fields[2]
            .parse()
            .map_err(|_| parse_field(1, "order", fields[2]))?;
        let k: f64 = fields[3]
            .parse()
            .map_err(|_| parse_field(1, "smoothing constant", fields[3]))?;
        let vocab_size: usize = fields[4]
            .parse()
            .map_err(|_| parse_field(1, "vocab size", fields[4]))?;
        if !(1..=5).contains(&order) {
            return Err(NgramError::BadOrder(order));
        }
        if k <= 0.0 || !k.is_finite() {
            return Err(NgramError::BadSmoothing(k));
        }

        let mut vocab = BTreeSet::new();
        for _ in 0..vocab_size {
            let (idx, token) = lines.next().ok_or(NgramError::Parse {
                line: vocab_size + 1,
                msg: "unexpected end of vocabulary".to_string(),
            })?;
            if token.is_empty() {
                return Err(NgramError::Parse {
                    line: idx + 1,
                    msg: "empty vocabulary entry".to_string(),
                });
            }
            vocab.insert(token.to_string());
        }

        let mut counts: HashMap<Vec<String>, HashMap<String, u64>> = HashMap::new();
        let mut totals: HashMap<Vec<String>, u64> = HashMap::new();
        for (idx, line) in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != order + 1 {
                return Err(NgramError::Parse {
                    line: idx + 1,
                    msg: format!(
                        "expected {} tab-separated fields, found {}",
                        order + 1,
                        fields.len()
                    ),
                });
            }
            let context: Vec<String> =
                fields[..order - 1].iter().map(|s| s.to_string()).collect();
            let token = fields[order - 1].to_string();
            let count: u64 = fields[order]
                .parse()
                .map_err(|_| parse_field(idx + 1, "count", fields[order]))?;
            *totals.entry(context.clone()).or_insert(0) += count;
            if counts
                .entry(context)
                .or_default()
                .insert(token, count)
                .is_some()
            {
                return Err(NgramError::Parse {
                    line: idx + 1,
                    msg: "duplicate n-gram entry".to_string(),
                });
            }
        }
        Ok(NgramModel {
            order,
            k,
            vocab,
            counts,
            totals,
        })
    }

    pub fn load(path: &Path) -> Result<Self, NgramError> {
        Self::from_model_string(&std::fs::read_to_string(path)?)
    }
}

impl Scorer for NgramModel {
    fn score(&self, request: &ScoreRequest) -> Result<f64, ScorerError> {
        match request {
            ScoreRequest::NextWord {
                tokens,
                prefix_len,
                target,
            } => {
                let prefix = tokens.get(..*prefix_len).ok_or_else(|| {
                    ScorerError::BadRequest(format!(
                        "prefix_len {} exceeds token count {}",
                        prefix_len,
                        tokens.len()
                    ))
                })?;
                Ok(self.log_prob(prefix, target))
            }
            ScoreRequest::CorefPair { .. } => {
                Err(ScorerError::UnsupportedKind { kind: "coref" })
            }
        }
    }

    fn concurrent_safe(&self) -> bool {
        true
    }
}
