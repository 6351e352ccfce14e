//! Corpus data model and I/O: plain one-sentence-per-line text, JSON-lines
//! documents with coreference clusters, and a CoNLL-lite importer.
//!
//! Values are immutable after load; per-document processing may run in
//! parallel.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A surface token with an optional part-of-speech tag (Penn tagset
/// expected where tags are present: `PRP`, `PRP$`, `NNP`, `NNPS`, ...).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    #[serde(rename = "t")]
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<String>,
}

impl Token {
    pub fn new(text: impl Into<String>) -> Self {
        Token {
            text: text.into(),
            pos: None,
        }
    }

    pub fn tagged(text: impl Into<String>, pos: impl Into<String>) -> Self {
        Token {
            text: text.into(),
            pos: Some(pos.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub tokens: Vec<Token>,
}

impl Sentence {
    /// Builds a sentence by whitespace-splitting `text`; no POS tags.
    pub fn parse(text: &str) -> Self {
        Sentence {
            tokens: text.split_whitespace().map(Token::new).collect(),
        }
    }

    /// The space-joined surface text.
    pub fn text(&self) -> String {
        self.tokens
            .iter()
            .map(|t| t.text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// A mention: a contiguous token span within one sentence. `end` is
/// exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(usize, usize, usize)", into = "(usize, usize, usize)")]
pub struct MentionSpan {
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
}

impl MentionSpan {
    pub fn new(sentence: usize, start: usize, end: usize) -> Self {
        MentionSpan {
            sentence,
            start,
            end,
        }
    }
}

impl From<(usize, usize, usize)> for MentionSpan {
    fn from((sentence, start, end): (usize, usize, usize)) -> Self {
        MentionSpan {
            sentence,
            start,
            end,
        }
    }
}

impl From<MentionSpan> for (usize, usize, usize) {
    fn from(span: MentionSpan) -> Self {
        (span.sentence, span.start, span.end)
    }
}

impl fmt::Display for MentionSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(sentence {}, tokens {}..{})",
            self.sentence, self.start, self.end
        )
    }
}

/// A document: sentences plus coreference clusters (the ground truth for an
/// instance). Each cluster is a list of co-referring mention spans.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub sentences: Vec<Sentence>,
    #[serde(default)]
    pub clusters: Vec<Vec<MentionSpan>>,
}

impl Document {
    /// Checks span bounds and token invariants.
    pub fn validate(&self) -> Result<(), CorpusError> {
        for sentence in &self.sentences {
            if sentence.tokens.is_empty() {
                return Err(CorpusError::Invalid {
                    doc_id: self.doc_id.clone(),
                    msg: "empty sentence".to_string(),
                });
            }
            for token in &sentence.tokens {
                if token.text.is_empty() || token.text.chars().any(char::is_whitespace) {
                    return Err(CorpusError::Invalid {
                        doc_id: self.doc_id.clone(),
                        msg: format!("invalid token `{}`", token.text),
                    });
                }
            }
        }
        for cluster in &self.clusters {
            for span in cluster {
                let ok = span.start < span.end
                    && self
                        .sentences
                        .get(span.sentence)
                        .is_some_and(|s| span.end <= s.tokens.len());
                if !ok {
                    return Err(CorpusError::SpanOutOfBounds {
                        doc_id: self.doc_id.clone(),
                        span: *span,
                    });
                }
            }
        }
        Ok(())
    }
}

/// A homogeneous corpus: either plain sentences or annotated documents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Corpus {
    Plain(Vec<Sentence>),
    Documents(Vec<Document>),
}

impl Corpus {
    pub fn len(&self) -> usize {
        match self {
            Corpus::Plain(items) => items.len(),
            Corpus::Documents(items) => items.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mode(&self) -> &'static str {
        match self {
            Corpus::Plain(_) => "plain",
            Corpus::Documents(_) => "documents",
        }
    }

    pub fn as_plain(&self) -> Option<&[Sentence]> {
        match self {
            Corpus::Plain(items) => Some(items),
            Corpus::Documents(_) => None,
        }
    }

    pub fn as_documents(&self) -> Option<&[Document]> {
        match self {
            Corpus::Documents(items) => Some(items),
            Corpus::Plain(_) => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("file is not valid UTF-8")]
    Encoding,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("document `{doc_id}`: {msg}")]
    Invalid { doc_id: String, msg: String },
    #[error("document `{doc_id}`: mention span {span} out of bounds")]
    SpanOutOfBounds { doc_id: String, span: MentionSpan },
    #[error("document `{doc_id}`: unbalanced coreference tag for cluster {cluster}")]
    UnbalancedCoref { doc_id: String, cluster: u32 },
    #[error("line {line}: malformed line: {msg}")]
    MalformedLine { line: usize, msg: String },
    #[error("corpus is in {found} mode but {expected} mode is required")]
    ModeMismatch {
        expected: &'static str,
        found: &'static str,
    },
}

fn read_utf8(path: &Path) -> Result<String, CorpusError> {
    let bytes = std::fs::read(path)?;
    String::from_utf8(bytes).map_err(|_| CorpusError::Encoding)
}

/// Parses plain text: one sentence per line, whitespace-separated tokens,
/// blank lines skipped.
pub fn parse_plain(text: &str) -> Vec<Sentence> {
    text.lines()
        .map(Sentence::parse)
        .filter(|s| !s.tokens.is_empty())
        .collect()
}

pub fn read_plain(path: &Path) -> Result<Corpus, CorpusError> {
    Ok(Corpus::Plain(parse_plain(&read_utf8(path)?)))
}

/// Renders a plain-mode corpus back to one-sentence-per-line text. POS tags
/// are not representable in this format and are dropped.
pub fn to_plain_string(corpus: &Corpus) -> Result<String, CorpusError> {
    let sentences = corpus.as_plain().ok_or(CorpusError::ModeMismatch {
        expected: "plain",
        found: corpus.mode(),
    })?;
    let mut out = String::new();
    for sentence in sentences {
        out.push_str(&sentence.text());
        out.push('\n');
    }
    Ok(out)
}

pub fn write_plain(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    std::fs::write(path, to_plain_string(corpus)?)?;
    Ok(())
}

/// Parses JSON-lines documents, validating all invariants.
pub fn parse_documents(text: &str) -> Result<Vec<Document>, CorpusError> {
    let mut docs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(line).map_err(|e| CorpusError::Parse {
            line: idx + 1,
            msg: e.to_string(),
        })?;
        doc.validate()?;
        docs.push(doc);
    }
    Ok(docs)
}

pub fn read_documents(path: &Path) -> Result<Corpus, CorpusError> {
    Ok(Corpus::Documents(parse_documents(&read_utf8(path)?)?))
}

pub fn to_documents_string(corpus: &Corpus) -> Result<String, CorpusError> {
    let docs = corpus.as_documents().ok_or(CorpusError::ModeMismatch {
        expected: "documents",
        found: corpus.mode(),
    })?;
    let mut out = String::new();
    for doc in docs {
        out.push_str(&serde_json::to_string(doc).expect("document serialization is infallible"));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_documents(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    std::fs::write(path, to_documents_string(corpus)?)?;
    Ok(())
}

/// Parses a CoNLL-lite file: blank-line-separated sentences of token lines
/// with at least three whitespace-separated columns (token, POS, coref tag
/// last), wrapped in `#begin document` / `#end document` markers.
///
/// Coref tags use CoNLL notation: `-`, `(k`, `k)`, `(k)` and pipe-joined
/// combinations. Mentions may not cross sentence boundaries; an open tag
/// still pending when its sentence ends is unbalanced.
pub fn parse_conll_lite(text: &str) -> Result<Vec<Document>, CorpusError> {
    let mut docs: Vec<Document> = Vec::new();
    let mut current: Option<ConllDoc> = None;
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        last_line = lineno;
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix("#begin document") {
            if current.is_some() {
                return Err(CorpusError::MalformedLine {
                    line: lineno,
                    msg: "`#begin document` inside an open document".to_string(),
                });
            }
            let id = rest.trim();
            let doc_id = if id.is_empty() {
                format!("doc{}", docs.len())
            } else {
                id.to_string()
            };
            current = Some(ConllDoc::new(doc_id));
        } else if line == "#end document" {
            let mut doc = current.take().ok_or_else(|| CorpusError::MalformedLine {
                line: lineno,
                msg: "`#end document` without matching begin".to_string(),
            })?;
            doc.end_sentence()?;
            docs.push(doc.finish());
        } else if line.is_empty() {
            if let Some(doc) = current.as_mut() {
                doc.end_sentence()?;
            }
        } else {
            let doc = current.as_mut().ok_or_else(|| CorpusError::MalformedLine {
                line: lineno,
                msg: "token line outside a document".to_string(),
            })?;
            doc.push_token_line(line, lineno)?;
        }
    }
    if current.is_some() {
        return Err(CorpusError::MalformedLine {
            line: last_line,
            msg: "missing `#end document`".to_string(),
        });
    }
    Ok(docs)
}

pub fn import_conll_lite(path: &Path) -> Result<Corpus, CorpusError> {
    Ok(Corpus::Documents(parse_conll_lite(&read_utf8(path)?)?))
}

struct ConllDoc {
    doc_id: String,
    sentences: Vec<Sentence>,
    tokens: Vec<Token>,
    open: HashMap<u32, Vec<usize>>,
    clusters: BTreeMap<u32, Vec<MentionSpan>>,
}

impl ConllDoc {
    fn new(doc_id: String) -> Self {
        ConllDoc {
            doc_id,
            sentences: Vec::new(),
            tokens: Vec::new(),
            open: HashMap::new(),
            clusters: BTreeMap::new(),
        }
    }

    fn push_token_line(&mut self, line: &str, lineno: usize) -> Result<(), CorpusError> {
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() < 3 {
            return Err(CorpusError::MalformedLine {
                line: lineno,
                msg: format!("expected at least 3 columns, found {}", cols.len()),
            });
        }
        let text = cols[0].to_string();
        let pos = match cols[1] {
            "-" => None,
            tag => Some(tag.to_string()),
        };
        let coref = cols[cols.len() - 1];
        let token_idx = self.tokens.len();
        if coref != "-" {
            for part in coref.split('|') {
                let opens = part.starts_with('(');
                let closes = part.ends_with(')');
                let core = part.trim_start_matches('(').trim_end_matches(')');
                let cluster: u32 = match (opens || closes, core.parse()) {
                    (true, Ok(id)) => id,
                    _ => {
                        return Err(CorpusError::MalformedLine {
                            line: lineno,
                            msg: format!("bad coreference tag `{part}`"),
                        })
                    }
                };
                if opens {
                    self.open.entry(cluster).or_default().push(token_idx);
                }
                if closes {
                    let start = self
                        .open
                        .get_mut(&cluster)
                        .and_then(Vec::pop)
                        .ok_or_else(|| CorpusError::UnbalancedCoref {
                            doc_id: self.doc_id.clone(),
                            cluster,
                        })?;
                    self.clusters.entry(cluster).or_default().push(MentionSpan {
                        sentence: self.sentences.len(),
                        start,
                        end: token_idx + 1,
                    });
                }
            }
        }
        self.tokens.push(Token { text, pos });
        Ok(())
    }

    fn end_sentence(&mut self) -> Result<(), CorpusError> {
        // Mentions may not cross sentences, so anything still open here can
        // never close.
        if let Some(cluster) = self.open.iter().filter(|(_, v)| !v.is_empty()).map(|(k, _)| *k).min()
        {
            return Err(CorpusError::UnbalancedCoref {
                doc_id: self.doc_id.clone(),
                cluster,
            });
        }
        self.open.clear();
        if !self.tokens.is_empty() {
            self.sentences.push(Sentence {
                tokens: std::mem::take(&mut self.tokens),
            });
        }
        Ok(())
    }

    fn finish(mut self) -> Document {
        for spans in self.clusters.values_mut() {
            spans.sort_by_key(|s| (s.sentence, s.start, s.end));
        }
        Document {
            doc_id: self.doc_id,
            sentences: self.sentences,
            clusters: self.clusters.into_values().collect(),
        }
    }
}
