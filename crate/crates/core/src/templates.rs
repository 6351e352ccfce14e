//! Test templates and their instantiation with occupations.
//!
//! Two template kinds exist. Coreference templates are full sentences with
//! an `[OCCUPATION]` placeholder and the pronoun `he`, both marked as the
//! mentions to score (`The [[OCCUPATION]] ran because [[he]] was late .`).
//! Next-word templates are sentence prefixes with the scored word after a
//! pipe (`He is a | [OCCUPATION]`).
//!
//! Instantiation substitutes an occupation for the placeholder, widening the
//! mention span for multi-word occupations and adjusting a preceding
//! article `a` to `an` before vowel-initial occupations. Matched pairs are
//! produced by flipping the instantiated sentence with the naive
//! intervention; scoring targets sit at identical positions on both sides.

use std::fmt;

use thiserror::Error;

use crate::corpus::Sentence;
use crate::intervention::{naive_sentence, MatchedPair, MatchedPairSet};
use crate::lexicon::Lexicon;

const DEFAULT_COREF_TEMPLATES: &str = include_str!("../data/coref_templates.txt");
const DEFAULT_LM_TEMPLATES: &str = include_str!("../data/lm_templates.txt");

pub const PLACEHOLDER: &str = "[OCCUPATION]";

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("template line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("template has no valid `[OCCUPATION]` placeholder")]
    UnknownPlaceholder,
    #[error("occupation `{0}` is multi-word; next-word templates need a single-token target")]
    MultiWordOccupation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A coreference template: a token list with one placeholder and the two
/// mention spans to score (occupation and pronoun).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorefTemplate {
    tokens: Vec<String>,
    mention_a: (usize, usize),
    mention_b: (usize, usize),
}

/// A next-word template: the sentence prefix before the pipe; the
/// occupation substituted for the placeholder is the scored word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LmTemplate {
    prefix: Vec<String>,
}

/// Either template kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Template {
    Coref(CorefTemplate),
    Lm(LmTemplate),
}

/// What part of an instantiated sentence a scorer should look at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScoringTarget {
    /// Two mention spans (token ranges, end exclusive) in the sentence.
    Mentions {
        a: (usize, usize),
        b: (usize, usize),
    },
    /// The token at `prefix_len` scored as the next word after the prefix.
    NextWord { prefix_len: usize },
}

/// A template with its placeholder substituted; ready to score.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateInstance {
    pub sentence: Sentence,
    pub target: ScoringTarget,
}

impl CorefTemplate {
    pub fn new(
        tokens: Vec<String>,
        mention_a: (usize, usize),
        mention_b: (usize, usize),
    ) -> Result<Self, TemplateError> {
        let placeholder_ok = mention_a.1 == mention_a.0 + 1
            && tokens.get(mention_a.0).map(String::as_str) == Some(PLACEHOLDER);
        let pronoun_ok = mention_b.1 == mention_b.0 + 1
            && tokens.get(mention_b.0).map(String::as_str) == Some("he");
        if !placeholder_ok || !pronoun_ok || tokens.iter().filter(|t| *t == PLACEHOLDER).count() != 1
        {
            return Err(TemplateError::UnknownPlaceholder);
        }
        Ok(CorefTemplate {
            tokens,
            mention_a,
            mention_b,
        })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn mention_a(&self) -> (usize, usize) {
        self.mention_a
    }

    pub fn mention_b(&self) -> (usize, usize) {
        self.mention_b
    }

    pub fn instantiate(&self, occupation: &str) -> Result<TemplateInstance, TemplateError> {
        self.instantiate_with_exceptions(occupation, &[])
    }

    /// `an_exceptions` lists occupations that keep the article `a` despite a
    /// vowel-initial spelling.
    pub fn instantiate_with_exceptions(
        &self,
        occupation: &str,
        an_exceptions: &[String],
    ) -> Result<TemplateInstance, TemplateError> {
        let occ_tokens: Vec<&str> = occupation.split_whitespace().collect();
        if occ_tokens.is_empty() {
            return Err(TemplateError::UnknownPlaceholder);
        }
        let widen = occ_tokens.len() - 1;
        let occ_idx = self.mention_a.0;
        let mut tokens: Vec<String> = Vec::with_capacity(self.tokens.len() + widen);
        for (idx, token) in self.tokens.iter().enumerate() {
            if idx == occ_idx {
                tokens.extend(occ_tokens.iter().map(|t| t.to_string()));
            } else if idx + 1 == occ_idx {
                tokens.push(adjust_article(token, occupation, an_exceptions));
            } else {
                tokens.push(token.clone());
            }
        }
        let shift = |pos: usize| if pos > occ_idx { pos + widen } else { pos };
        Ok(TemplateInstance {
            sentence: Sentence {
                tokens: tokens.into_iter().map(crate::corpus::Token::new).collect(),
            },
            target: ScoringTarget::Mentions {
                a: (occ_idx, occ_idx + occ_tokens.len()),
                b: (shift(self.mention_b.0), shift(self.mention_b.1)),
            },
        })
    }
}

impl fmt::Display for CorefTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rendered: Vec<String> = self
            .tokens
            .iter()
            .enumerate()
            .map(|(idx, token)| {
                if idx == self.mention_a.0 {
                    "[[OCCUPATION]]".to_string()
                } else if idx == self.mention_b.0 {
                    format!("[[{token}]]")
                } else {
                    token.clone()
                }
            })
            .collect();
        write!(f, "{}", rendered.join(" "))
    }
}

impl LmTemplate {
    pub fn new(prefix: Vec<String>) -> Result<Self, TemplateError> {
        if prefix.is_empty() || prefix.iter().any(|t| t == PLACEHOLDER) {
            return Err(TemplateError::UnknownPlaceholder);
        }
        Ok(LmTemplate { prefix })
    }

    pub fn prefix(&self) -> &[String] {
        &self.prefix
    }

    pub fn instantiate(&self, occupation: &str) -> Result<TemplateInstance, TemplateError> {
        self.instantiate_with_exceptions(occupation, &[])
    }

    pub fn instantiate_with_exceptions(
        &self,
        occupation: &str,
        an_exceptions: &[String],
    ) -> Result<TemplateInstance, TemplateError> {
        if occupation.split_whitespace().count() != 1 {
            return Err(TemplateError::MultiWordOccupation(occupation.to_string()));
        }
        let mut tokens = self.prefix.clone();
        if let Some(last) = tokens.last_mut() {
            *last = adjust_article(last, occupation, an_exceptions);
        }
        let prefix_len = tokens.len();
        tokens.push(occupation.trim().to_string());
        Ok(TemplateInstance {
            sentence: Sentence {
                tokens: tokens.into_iter().map(crate::corpus::Token::new).collect(),
            },
            target: ScoringTarget::NextWord { prefix_len },
        })
    }
}

impl fmt::Display for LmTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} | {}", self.prefix.join(" "), PLACEHOLDER)
    }
}

impl Template {
    pub fn instantiate(&self, occupation: &str) -> Result<TemplateInstance, TemplateError> {
        match self {
            Template::Coref(t) => t.instantiate(occupation),
            Template::Lm(t) => t.instantiate(occupation),
        }
    }

    pub fn is_lm(&self) -> bool {
        matches!(self, Template::Lm(_))
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Template::Coref(t) => t.fmt(f),
            Template::Lm(t) => t.fmt(f),
        }
    }
}

/// Adjusts the article immediately before the occupation: `a` becomes `an`
/// (and vice versa) according to the occupation's first letter.
fn adjust_article(article: &str, occupation: &str, an_exceptions: &[String]) -> String {
    let wants_an = occupation
        .chars()
        .next()
        .is_some_and(|c| "aeiou".contains(c.to_ascii_lowercase()))
        && !an_exceptions.iter().any(|e| e == occupation);
    match article {
        "a" | "an" => if wants_an { "an" } else { "a" }.to_string(),
        "A" | "An" => if wants_an { "An" } else { "A" }.to_string(),
        _ => article.to_string(),
    }
}

/// Parses one coref template line: whitespace tokens, with the occupation
/// placeholder and the pronoun wrapped in `[[...]]`.
pub fn parse_coref_template(line: &str) -> Result<CorefTemplate, TemplateError> {
    let mut tokens = Vec::new();
    let mut placeholder = None;
    let mut pronoun = None;
    for (idx, raw) in line.split_whitespace().enumerate() {
        if let Some(inner) = raw.strip_prefix("[[").and_then(|r| r.strip_suffix("]]")) {
            if inner == "OCCUPATION" {
                if placeholder.replace(idx).is_some() {
                    return Err(TemplateError::UnknownPlaceholder);
                }
                tokens.push(PLACEHOLDER.to_string());
            } else {
                if pronoun.replace(idx).is_some() {
                    return Err(TemplateError::UnknownPlaceholder);
                }
                tokens.push(inner.to_string());
            }
        } else {
            tokens.push(raw.to_string());
        }
    }
    match (placeholder, pronoun) {
        (Some(a), Some(b)) => CorefTemplate::new(tokens, (a, a + 1), (b, b + 1)),
        _ => Err(TemplateError::UnknownPlaceholder),
    }
}

/// Parses one LM template line: `prefix | [OCCUPATION]`.
pub fn parse_lm_template(line: &str) -> Result<LmTemplate, TemplateError> {
    let mut parts = line.splitn(2, '|');
    let (prefix, rest) = match (parts.next(), parts.next()) {
        (Some(p), Some(r)) => (p, r),
        _ => return Err(TemplateError::UnknownPlaceholder),
    };
    if rest.trim() != PLACEHOLDER || rest.contains('|') {
        return Err(TemplateError::UnknownPlaceholder);
    }
    LmTemplate::new(prefix.split_whitespace().map(str::to_string).collect())
}

fn parse_lines<T>(
    text: &str,
    parse: impl Fn(&str) -> Result<T, TemplateError>,
) -> Result<Vec<T>, TemplateError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(parse(line).map_err(|e| TemplateError::Parse {
            line: idx + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Parses a coref template file: one template per line, `#` comments and
/// blank lines ignored.
pub fn parse_coref_templates(text: &str) -> Result<Vec<Template>, TemplateError> {
    Ok(parse_lines(text, parse_coref_template)?
        .into_iter()
        .map(Template::Coref)
        .collect())
}

/// Parses an LM template file, same line conventions.
pub fn parse_lm_templates(text: &str) -> Result<Vec<Template>, TemplateError> {
    Ok(parse_lines(text, parse_lm_template)?
        .into_iter()
        .map(Template::Lm)
        .collect())
}

/// The 20 embedded coreference templates, in order.
pub fn default_coref_templates() -> Vec<Template> {
    parse_coref_templates(DEFAULT_COREF_TEMPLATES).expect("embedded coref templates are valid")
}

/// The 4 embedded next-word templates, in order.
pub fn default_lm_templates() -> Vec<Template> {
    parse_lm_templates(DEFAULT_LM_TEMPLATES).expect("embedded lm templates are valid")
}

/// Builds the matched-pair set for one occupation: every template
/// instantiated with it and paired with its naive flip.
pub fn occupation_pair_set(
    templates: &[Template],
    occupation: &str,
    lexicon: &Lexicon,
) -> Result<MatchedPairSet<TemplateInstance>, TemplateError> {
    templates
        .iter()
        .map(|template| {
            let original = template.instantiate(occupation)?;
            let intervened = TemplateInstance {
                sentence: naive_sentence(lexicon, &original.sentence),
                target: original.target.clone(),
            };
            Ok(MatchedPair {
                original,
                intervened,
            })
        })
        .collect()
}

/// One matched-pair set per occupation, in input order. When the template
/// list contains next-word templates, multi-word occupations are excluded.
pub fn occupation_class(
    templates: &[Template],
    occupations: &[String],
    lexicon: &Lexicon,
) -> Result<Vec<(String, MatchedPairSet<TemplateInstance>)>, TemplateError> {
    let has_lm = templates.iter().any(Template::is_lm);
    occupations
        .iter()
        .filter(|occ| !(has_lm && occ.split_whitespace().count() > 1))
        .map(|occ| Ok((occ.clone(), occupation_pair_set(templates, occ, lexicon)?)))
        .collect()
}
