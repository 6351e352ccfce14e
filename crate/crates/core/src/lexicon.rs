//! Gendered-word lexicon: the pair dictionary, pronoun case rules, and the
//! occupation list.
//!
//! The embedded defaults cover 124 word pairs (e.g. `father - mother`,
//! `mr. - mrs.`) and 64 occupations. The pronouns `he, she, him, his, her,
//! hers` are handled by a fixed rule table rather than the flat pair map
//! because `her` maps to either `him` or `his` depending on grammatical case.

use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use thiserror::Error;

const DEFAULT_PAIRS: &str = include_str!("../data/gender_pairs.tsv");
const DEFAULT_OCCUPATIONS: &str = include_str!("../data/occupations.txt");

/// Grammatical case of a pronoun occurrence.
///
/// `Unknown` is the degraded mode for untagged text; it resolves `her` to
/// `him` (the objective reading).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PronounCase {
    Subjective,
    Objective,
    Possessive,
    Unknown,
}

/// One gendered word pair. Both sides are lowercase and distinct, and no
/// word may appear in more than one pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenderPair {
    pub left: String,
    pub right: String,
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("invalid token `{0}`: tokens must be non-empty and contain no whitespace")]
    InvalidToken(String),
    #[error("pairs file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid gender pair `{left} - {right}`: {msg}")]
    InvalidPair {
        left: String,
        right: String,
        msg: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Pronouns resolved by the rule table instead of the pair map.
const RULE_PRONOUNS: [&str; 6] = ["he", "she", "him", "his", "her", "hers"];

/// Pronouns that may not appear in user-supplied pairs. `he - she` is exempt
/// so that the embedded pair table can be reproduced verbatim; the rule
/// table yields the same mapping for those two.
const RESERVED_PAIR_WORDS: [&str; 4] = ["him", "his", "her", "hers"];

fn pronoun_rule(lower: &str, case: PronounCase) -> Option<&'static str> {
    Some(match lower {
        "he" => "she",
        "she" => "he",
        "him" => "her",
        "his" => "her",
        "hers" => "his",
        "her" => {
            if case == PronounCase::Possessive {
                "his"
            } else {
                "him"
            }
        }
        _ => return None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CasePattern {
    Lower,
    Title,
    Upper,
}

fn classify_case(word: &str) -> CasePattern {
    let mut has_upper = false;
    let mut has_lower = false;
    for ch in word.chars() {
        if ch.is_uppercase() {
            has_upper = true;
        } else if ch.is_lowercase() {
            has_lower = true;
        }
    }
    match (has_upper, has_lower) {
        (false, _) => CasePattern::Lower,
        (true, false) => CasePattern::Upper,
        // Mixed case is treated as Title.
        (true, true) => CasePattern::Title,
    }
}

fn apply_case(replacement: &str, pattern: CasePattern) -> String {
    match pattern {
        CasePattern::Lower => replacement.to_string(),
        CasePattern::Upper => replacement.to_uppercase(),
        CasePattern::Title => {
            let mut chars = replacement.chars();
            match chars.next() {
                Some(first) => first.to_uppercase().chain(chars).collect(),
                None => String::new(),
            }
        }
    }
}

/// The gendered-word dictionary together with the occupation list.
///
/// Immutable after construction and safe to share across threads.
#[derive(Debug, Clone)]
pub struct Lexicon {
    pairs: Vec<GenderPair>,
    map: HashMap<String, String>,
    occupations: Vec<String>,
}

impl Lexicon {
    /// Builds a lexicon from explicit pairs and occupations, validating the
    /// pair-map invariants (lowercase, disjoint, no self-maps, reserved
    /// pronouns excluded). Occupations are deduplicated preserving order.
    pub fn new(pairs: Vec<GenderPair>, occupations: Vec<String>) -> Result<Self, LexiconError> {
        let mut map = HashMap::with_capacity(pairs.len() * 2);
        for pair in &pairs {
            validate_pair(pair)?;
            for (from, to) in [(&pair.left, &pair.right), (&pair.right, &pair.left)] {
                if map.insert(from.clone(), to.clone()).is_some() {
                    return Err(LexiconError::InvalidPair {
                        left: pair.left.clone(),
                        right: pair.right.clone(),
                        msg: format!("word `{from}` appears in more than one pair"),
                    });
                }
            }
        }
        let mut seen = HashMap::new();
        let mut deduped = Vec::with_capacity(occupations.len());
        for occ in occupations {
            let occ = occ.trim().to_string();
            if occ.is_empty() {
                return Err(LexiconError::InvalidToken(occ));
            }
            if seen.insert(occ.clone(), ()).is_none() {
                deduped.push(occ);
            }
        }
        Ok(Self {
            pairs,
            map,
            occupations: deduped,
        })
    }

    /// Looks up the opposite-gender form of `word`, preserving its
    /// capitalization pattern (lower, Title, UPPER). Returns `None` for
    /// non-gendered words.
    pub fn lookup(&self, word: &str, case: PronounCase) -> Result<Option<String>, LexiconError> {
        if word.is_empty() || word.chars().any(char::is_whitespace) {
            return Err(LexiconError::InvalidToken(word.to_string()));
        }
        Ok(self.flip_surface(word, case))
    }

    /// Same as [`lookup`](Self::lookup) for a token already known to be
    /// valid (non-empty, no whitespace).
    pub(crate) fn flip_surface(&self, word: &str, case: PronounCase) -> Option<String> {
        let lower = word.to_lowercase();
        let replacement = match pronoun_rule(&lower, case) {
            Some(r) => r,
            None => self.map.get(&lower)?.as_str(),
        };
        Some(apply_case(replacement, classify_case(word)))
    }

    /// Whether the word (case-insensitively) has an opposite-gender form.
    pub fn is_gendered(&self, word: &str) -> bool {
        let lower = word.to_lowercase();
        RULE_PRONOUNS.contains(&lower.as_str()) || self.map.contains_key(&lower)
    }

    pub fn pairs(&self) -> &[GenderPair] {
        &self.pairs
    }

    pub fn occupations(&self) -> &[String] {
        &self.occupations
    }
}

fn validate_pair(pair: &GenderPair) -> Result<(), LexiconError> {
    let err = |msg: String| LexiconError::InvalidPair {
        left: pair.left.clone(),
        right: pair.right.clone(),
        msg,
    };
    for word in [&pair.left, &pair.right] {
        if word.is_empty() || word.chars().any(char::is_whitespace) {
            return Err(err(format!("word `{word}` is empty or contains whitespace")));
        }
        if *word != word.to_lowercase() {
            return Err(err(format!("word `{word}` must be lowercase")));
        }
        if RESERVED_PAIR_WORDS.contains(&word.as_str()) {
            return Err(err(format!(
                "`{word}` is handled by the built-in pronoun rules"
            )));
        }
    }
    if pair.left == pair.right {
        return Err(err("a word may not map to itself".to_string()));
    }
    Ok(())
}

/// Parses a pairs file: one `left<TAB>right` pair per line, `#` comments and
/// blank lines ignored.
pub fn parse_pairs(text: &str) -> Result<Vec<GenderPair>, LexiconError> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let (left, right) = match (fields.next(), fields.next(), fields.next()) {
            (Some(l), Some(r), None) => (l.trim(), r.trim()),
            _ => {
                return Err(LexiconError::Parse {
                    line: idx + 1,
                    msg: "expected `left<TAB>right`".to_string(),
                })
            }
        };
        pairs.push(GenderPair {
            left: left.to_string(),
            right: right.to_string(),
        });
    }
    Ok(pairs)
}

/// Parses an occupations file: one occupation per line (multi-word allowed),
/// `#` comments and blank lines ignored, duplicates dropped.
pub fn parse_occupations(text: &str) -> Vec<String> {
    let mut seen = Vec::new();
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen.iter().any(|s| s == line) {
            seen.push(line.to_string());
        }
    }
    seen
}

pub fn load_pairs_file(path: &Path) -> Result<Vec<GenderPair>, LexiconError> {
    parse_pairs(&std::fs::read_to_string(path)?)
}

pub fn load_occupations_file(path: &Path) -> Result<Vec<String>, LexiconError> {
    Ok(parse_occupations(&std::fs::read_to_string(path)?))
}

/// The embedded default lexicon: the full gender-pair table and occupation
/// list.
pub fn default_lexicon() -> &'static Lexicon {
    static DEFAULT: OnceLock<Lexicon> = OnceLock::new();
    DEFAULT.get_or_init(|| {
        let pairs = parse_pairs(DEFAULT_PAIRS).expect("embedded pair data is well-formed");
        let occupations = parse_occupations(DEFAULT_OCCUPATIONS);
        Lexicon::new(pairs, occupations).expect("embedded lexicon data is valid")
    })
}
