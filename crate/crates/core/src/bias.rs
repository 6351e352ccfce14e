//! The scorer abstraction and the bias calculus.
//!
//! A scorer assigns a real number to a [`ScoreRequest`]; the bias of a
//! scorer over a matched-pair set is the mean score difference across the
//! pairs. Class bias averages the absolute bias over a class of sets, which
//! is how the per-occupation report aggregates: `aob` is the mean absolute
//! per-occupation bias, `signed_aob` the mean with signs preserved.
//!
//! Means use compensated (Kahan) summation since reports aggregate many
//! near-cancelling terms.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intervention::MatchedPairSet;
use crate::lexicon::Lexicon;
use crate::par;
use crate::templates::{occupation_class, ScoringTarget, Template, TemplateError, TemplateInstance};

/// One scoring request. `CorefPair` asks for the coreference strength of
/// two mention spans; `NextWord` asks for the natural-log likelihood of
/// `target` following the first `prefix_len` tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScoreRequest {
    CorefPair {
        tokens: Vec<String>,
        mention_a: (usize, usize),
        mention_b: (usize, usize),
    },
    NextWord {
        tokens: Vec<String>,
        prefix_len: usize,
        target: String,
    },
}

impl ScoreRequest {
    pub fn kind(&self) -> &'static str {
        match self {
            ScoreRequest::CorefPair { .. } => "coref",
            ScoreRequest::NextWord { .. } => "lm",
        }
    }

    /// The canonical string key used by the table scorer:
    /// `kind ":" space-joined tokens ":" target descriptor`.
    pub fn canonical_key(&self) -> String {
        match self {
            ScoreRequest::CorefPair {
                tokens,
                mention_a,
                mention_b,
            } => format!(
                "coref:{}:{}-{}|{}-{}",
                tokens.join(" "),
                mention_a.0,
                mention_a.1,
                mention_b.0,
                mention_b.1
            ),
            ScoreRequest::NextWord {
                tokens,
                prefix_len,
                target,
            } => format!("lm:{}:{}:{}", tokens.join(" "), prefix_len, target),
        }
    }
}

impl From<&TemplateInstance> for ScoreRequest {
    fn from(instance: &TemplateInstance) -> Self {
        let tokens: Vec<String> = instance
            .sentence
            .tokens
            .iter()
            .map(|t| t.text.clone())
            .collect();
        match instance.target {
            ScoringTarget::Mentions { a, b } => ScoreRequest::CorefPair {
                tokens,
                mention_a: a,
                mention_b: b,
            },
            ScoringTarget::NextWord { prefix_len } => {
                let target = tokens[prefix_len].clone();
                ScoreRequest::NextWord {
                    tokens,
                    prefix_len,
                    target,
                }
            }
        }
    }
}

/// Why a scorer could not produce a value.
#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("no score recorded for request key `{0}`")]
    MissingScore(String),
    #[error("scorer does not support {kind} requests")]
    UnsupportedKind { kind: &'static str },
    #[error("malformed request: {0}")]
    BadRequest(String),
    #[error("failed to spawn scorer child: {0}")]
    Spawn(std::io::Error),
    #[error("bridge protocol violation: {0}")]
    Protocol(String),
    #[error("scorer child timed out after {0} ms")]
    Timeout(u64),
    #[error("scorer child reported an error: {0}")]
    Child(String),
}

/// A scoring function over requests. Deterministic for fixed internal
/// state. Implementations that can be called from several threads at once
/// return `true` from [`concurrent_safe`](Scorer::concurrent_safe); the
/// bias calculus serializes all calls otherwise.
pub trait Scorer: Send + Sync {
    fn score(&self, request: &ScoreRequest) -> Result<f64, ScorerError>;

    fn concurrent_safe(&self) -> bool {
        false
    }
}

#[derive(Debug, Error)]
pub enum BiasError {
    #[error("bias over an empty matched-pair set is undefined")]
    EmptySet,
    #[error("scorer failure: {0}")]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("score table line {line}: {msg}")]
    TableParse { line: usize, msg: String },
}

fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut compensation = 0.0;
    for value in values {
        let y = value - compensation;
        let t = sum + y;
        compensation = (t - sum) - y;
        sum = t;
    }
    sum
}

fn kahan_mean(values: &[f64]) -> f64 {
    kahan_sum(values.iter().copied()) / values.len() as f64
}

fn pair_diffs(
    pairs: &MatchedPairSet<TemplateInstance>,
    scorer: &dyn Scorer,
) -> Result<Vec<f64>, BiasError> {
    let diff = |pair: &crate::intervention::MatchedPair<TemplateInstance>| {
        let a = scorer.score(&ScoreRequest::from(&pair.original))?;
        let b = scorer.score(&ScoreRequest::from(&pair.intervened))?;
        Ok::<f64, ScorerError>(a - b)
    };
    let results = if scorer.concurrent_safe() {
        par::map_ordered(pairs.as_slice(), diff)
    } else {
        pairs.iter().map(diff).collect()
    };
    let mut diffs = Vec::with_capacity(results.len());
    for result in results {
        diffs.push(result?);
    }
    Ok(diffs)
}

/// Mean score difference `s(original) - s(intervened)` over the pairs.
pub fn score_bias(
    pairs: &MatchedPairSet<TemplateInstance>,
    scorer: &dyn Scorer,
) -> Result<f64, BiasError> {
    if pairs.is_empty() {
        return Err(BiasError::EmptySet);
    }
    Ok(kahan_mean(&pair_diffs(pairs, scorer)?))
}

/// Mean absolute bias over the members of a class of matched-pair sets.
pub fn class_bias(
    class: &[MatchedPairSet<TemplateInstance>],
    scorer: &dyn Scorer,
) -> Result<f64, BiasError> {
    if class.is_empty() {
        return Err(BiasError::EmptySet);
    }
    let mut biases = Vec::with_capacity(class.len());
    for member in class {
        biases.push(score_bias(member, scorer)?.abs());
    }
    Ok(kahan_mean(&biases))
}

/// Per-occupation bias with absolute and signed aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub per_occupation: BTreeMap<String, f64>,
    pub aob: f64,
    pub signed_aob: f64,
    pub pairs_per_occupation: usize,
}

impl BiasReport {
    /// Aligned-column rendering, occupations sorted by signed bias
    /// descending.
    pub fn render_text(&self) -> String {
        let mut rows: Vec<(&str, f64)> = self
            .per_occupation
            .iter()
            .map(|(k, v)| (k.as_str(), *v))
            .collect();
        rows.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
        let width = rows
            .iter()
            .map(|(name, _)| name.len())
            .chain(["occupation".len()])
            .max()
            .unwrap_or(0);
        let mut out = String::new();
        out.push_str(&format!("{:<width$}  {:>16}\n", "occupation", "bias"));
        for (name, value) in rows {
            out.push_str(&format!("{name:<width$}  {value:>16.9}\n"));
        }
        out.push_str(&format!("\naob                  {:.9}\n", self.aob));
        out.push_str(&format!("signed aob           {:.9}\n", self.signed_aob));
        out.push_str(&format!(
            "pairs per occupation {}\n",
            self.pairs_per_occupation
        ));
        out
    }
}

/// Evaluates the full per-occupation report: instantiates every template
/// with every occupation, scores the matched pairs, and aggregates.
pub fn occupation_bias_report(
    templates: &[Template],
    occupations: &[String],
    lexicon: &Lexicon,
    scorer: &dyn Scorer,
) -> Result<BiasReport, BiasError> {
    let class = occupation_class(templates, occupations, lexicon)?;
    if class.is_empty() {
        return Err(BiasError::EmptySet);
    }
    let mut per_occupation = BTreeMap::new();
    let mut biases = Vec::with_capacity(class.len());
    for (occupation, pairs) in &class {
        let bias = score_bias(pairs, scorer)?;
        per_occupation.insert(occupation.clone(), bias);
        biases.push(bias);
    }
    let abs: Vec<f64> = biases.iter().map(|b| b.abs()).collect();
    Ok(BiasReport {
        per_occupation,
        aob: kahan_mean(&abs),
        signed_aob: kahan_mean(&biases),
        pairs_per_occupation: templates.len(),
    })
}

/// A scorer backed by a table of canonical request keys, loaded from a TSV
/// file of `key<TAB>score` rows.
#[derive(Debug, Clone, Default)]
pub struct TableScorer {
    scores: HashMap<String, f64>,
}

impl TableScorer {
    pub fn parse(text: &str) -> Result<Self, BiasError> {
        let mut scores = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let (key, value) = match (fields.next(), fields.next(), fields.next()) {
                (Some(k), Some(v), None) => (k, v),
                _ => {
                    return Err(BiasError::TableParse {
                        line: idx + 1,
                        msg: "expected `key<TAB>score`".to_string(),
                    })
                }
            };
            let score: f64 = value.trim().parse().map_err(|_| BiasError::TableParse {
                line: idx + 1,
                msg: format!("bad score `{value}`"),
            })?;
            if scores.insert(key.to_string(), score).is_some() {
                return Err(BiasError::TableParse {
                    line: idx + 1,
                    msg: format!("duplicate key `{key}`"),
                });
            }
        }
        Ok(TableScorer { scores })
    }

    pub fn load(path: &Path) -> Result<Self, BiasError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn insert(&mut self, key: String, score: f64) {
        self.scores.insert(key, score);
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

impl Scorer for TableScorer {
    fn score(&self, request: &ScoreRequest) -> Result<f64, ScorerError> {
        let key = request.canonical_key();
        self.scores
            .get(&key)
            .copied()
            .ok_or(ScorerError::MissingScore(key))
    }

    fn concurrent_safe(&self) -> bool {
        true
    }
}

/// Loads a table scorer; the spec'd operation name.
pub fn table_scorer(path: &Path) -> Result<TableScorer, BiasError> {
    TableScorer::load(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intervention::MatchedPair;
    use crate::lexicon::default_lexicon;
    use crate::templates::{default_coref_templates, occupation_pair_set};

    /// Scores every request by a fixed function; used to build exact
    /// fixtures.
    struct FnScorer<F: Fn(&ScoreRequest) -> f64 + Send + Sync>(F);

    impl<F: Fn(&ScoreRequest) -> f64 + Send + Sync> Scorer for FnScorer<F> {
        fn score(&self, request: &ScoreRequest) -> Result<f64, ScorerError> {
            Ok((self.0)(request))
        }
        fn concurrent_safe(&self) -> bool {
            true
        }
    }

    fn coref_pair(male: &str, female: &str) -> MatchedPair<TemplateInstance> {
        let mk = |text: &str| TemplateInstance {
            sentence: crate::corpus::Sentence::parse(text),
            target: ScoringTarget::Mentions {
                a: (1, 2),
                b: (4, 5),
            },
        };
        MatchedPair {
            original: mk(male),
            intervened: mk(female),
        }
    }

    fn figure_pairs() -> (MatchedPairSet<TemplateInstance>, TableScorer) {
        let doctor = coref_pair(
            "The doctor ran because he is late .",
            "The doctor ran because she is late .",
        );
        let nurse = coref_pair(
            "The nurse ran because he is late .",
            "The nurse ran because she is late .",
        );
        let mut table = TableScorer::default();
        for (pair, scores) in [(&doctor, (5.08, 1.99)), (&nurse, (-0.44, 5.34))] {
            table.insert(
                ScoreRequest::from(&pair.original).canonical_key(),
                scores.0,
            );
            table.insert(
                ScoreRequest::from(&pair.intervened).canonical_key(),
                scores.1,
            );
        }
        (vec![doctor, nurse], table)
    }

    #[test]
    fn identical_scores_give_zero_bias() {
        let pairs = vec![coref_pair("a b c d e .", "a b c d e .")];
        let scorer = FnScorer(|_| 1.5);
        assert_eq!(score_bias(&pairs, &scorer).unwrap(), 0.0);
    }

    #[test]
    fn score_bias_is_the_mean_difference() {
        let p1 = coref_pair("a b c d e .", "a b c d f .");
        let p2 = coref_pair("g b c d e .", "g b c d f .");
        let mut table = TableScorer::default();
        table.insert(ScoreRequest::from(&p1.original).canonical_key(), 2.0);
        table.insert(ScoreRequest::from(&p1.intervened).canonical_key(), 1.0);
        table.insert(ScoreRequest::from(&p2.original).canonical_key(), 0.5);
        table.insert(ScoreRequest::from(&p2.intervened).canonical_key(), 1.0);
        assert!((score_bias(&vec![p1, p2], &table).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn figure_scores_match_reported_bias() {
        let (pairs, table) = figure_pairs();
        // One set: mean(3.09, -5.78) = -1.345
        assert!((score_bias(&pairs, &table).unwrap() - (-1.345)).abs() < 1e-12);
        // Two singleton sets: mean(|3.09|, |-5.78|) = 4.435
        let class = vec![vec![pairs[0].clone()], vec![pairs[1].clone()]];
        assert!((class_bias(&class, &table).unwrap() - 4.435).abs() < 1e-12);
    }

    #[test]
    fn class_bias_takes_absolute_values() {
        let pair = coref_pair("a b c d e .", "a b c d f .");
        let mut table = TableScorer::default();
        table.insert(ScoreRequest::from(&pair.original).canonical_key(), -1.0);
        table.insert(ScoreRequest::from(&pair.intervened).canonical_key(), 1.0);
        let class = vec![vec![pair]];
        assert_eq!(class_bias(&class, &table).unwrap(), 2.0);
    }

    #[test]
    fn class_of_identical_sets_matches_single_set() {
        let lex = default_lexicon();
        let pairs = occupation_pair_set(&default_coref_templates(), "banker", lex).unwrap();
        let scorer = FnScorer(|req: &ScoreRequest| req.canonical_key().len() as f64 - 40.0);
        let single = score_bias(&pairs, &scorer).unwrap();
        let class = vec![pairs.clone(), pairs.clone(), pairs];
        assert!((class_bias(&class, &scorer).unwrap() - single.abs()).abs() < 1e-12);
    }

    #[test]
    fn empty_inputs_are_rejected() {
        let scorer = FnScorer(|_| 0.0);
        assert!(matches!(
            score_bias(&vec![], &scorer),
            Err(BiasError::EmptySet)
        ));
        assert!(matches!(
            class_bias(&[], &scorer),
            Err(BiasError::EmptySet)
        ));
    }

    #[test]
    fn symmetric_scorer_zeroes_the_report() {
        // Score depends only on the occupation mention, not the pronoun.
        let scorer = FnScorer(|req: &ScoreRequest| match req {
            ScoreRequest::CorefPair {
                tokens, mention_a, ..
            } => tokens[mention_a.0..mention_a.1].join(" ").len() as f64,
            ScoreRequest::NextWord { .. } => 0.0,
        });
        let lex = default_lexicon();
        let report = occupation_bias_report(
            &default_coref_templates(),
            lex.occupations(),
            lex,
            &scorer,
        )
        .unwrap();
        assert_eq!(report.aob, 0.0);
        assert_eq!(report.signed_aob, 0.0);
        assert_eq!(report.per_occupation.len(), 64);
        assert_eq!(report.pairs_per_occupation, 20);
    }

    #[test]
    fn single_biased_occupation_dilutes_into_aob() {
        let scorer = FnScorer(|req: &ScoreRequest| match req {
            ScoreRequest::CorefPair { tokens, .. } => {
                let male = tokens.iter().any(|t| t == "he");
                let doctor = tokens.iter().any(|t| t == "doctor");
                if doctor && male {
                    2.0
                } else {
                    0.0
                }
            }
            ScoreRequest::NextWord { .. } => 0.0,
        });
        let lex = default_lexicon();
        let report = occupation_bias_report(
            &default_coref_templates(),
            lex.occupations(),
            lex,
            &scorer,
        )
        .unwrap();
        assert!((report.per_occupation["doctor"] - 2.0).abs() < 1e-12);
        assert!((report.aob - 2.0 / 64.0).abs() < 1e-12);
        assert!(report.aob >= report.signed_aob.abs());
    }

    #[test]
    fn table_scorer_round_trip_and_missing_key() {
        let pair = coref_pair("a b c d e .", "a b c d f .");
        let req = ScoreRequest::from(&pair.original);
        let table =
            TableScorer::parse(&format!("{}\t-1.25\n", req.canonical_key())).unwrap();
        assert_eq!(table.score(&req).unwrap(), -1.25);
        let missing = ScoreRequest::from(&pair.intervened);
        match table.score(&missing) {
            Err(ScorerError::MissingScore(key)) => {
                assert_eq!(key, missing.canonical_key());
            }
            other => panic!("expected MissingScore, got {other:?}"),
        }
    }

    #[test]
    fn table_parser_rejects_bad_rows() {
        assert!(matches!(
            TableScorer::parse("k\t1\nk\t2\n"),
            Err(BiasError::TableParse { line: 2, .. })
        ));
        assert!(matches!(
            TableScorer::parse("just-a-key\n"),
            Err(BiasError::TableParse { line: 1, .. })
        ));
        assert!(matches!(
            TableScorer::parse("k\tnot-a-number\n"),
            Err(BiasError::TableParse { line: 1, .. })
        ));
    }

    #[test]
    fn linearity_shift_and_antisymmetry() {
        let lex = default_lexicon();
        let pairs = occupation_pair_set(&default_coref_templates(), "nurse", lex).unwrap();
        let base = FnScorer(|req: &ScoreRequest| req.canonical_key().len() as f64 * 0.25);
        let bias = score_bias(&pairs, &base).unwrap();

        let scaled = FnScorer(|req: &ScoreRequest| req.canonical_key().len() as f64 * 0.25 * 3.0);
        assert!((score_bias(&pairs, &scaled).unwrap() - 3.0 * bias).abs() < 1e-9);

        let shifted =
            FnScorer(|req: &ScoreRequest| req.canonical_key().len() as f64 * 0.25 + 17.0);
        assert!((score_bias(&pairs, &shifted).unwrap() - bias).abs() < 1e-9);

        let reversed: MatchedPairSet<TemplateInstance> = pairs
            .iter()
            .map(|p| MatchedPair {
                original: p.intervened.clone(),
                intervened: p.original.clone(),
            })
            .collect();
        assert!((score_bias(&reversed, &base).unwrap() + bias).abs() < 1e-12);
        let class = vec![pairs.clone()];
        let rev_class = vec![reversed];
        assert!(
            (class_bias(&class, &base).unwrap() - class_bias(&rev_class, &base).unwrap()).abs()
                < 1e-12
        );
    }

    #[test]
    fn report_json_schema() {
        let report = BiasReport {
            per_occupation: BTreeMap::from([("nurse".to_string(), -1.5)]),
            aob: 1.5,
            signed_aob: -1.5,
            pairs_per_occupation: 20,
        };
        let json = serde_json::to_string(&report).unwrap();
        assert_eq!(
            json,
            r#"{"per_occupation":{"nurse":-1.5},"aob":1.5,"signed_aob":-1.5,"pairs_per_occupation":20}"#
        );
        let back: BiasReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn text_report_sorts_by_signed_bias() {
        let report = BiasReport {
            per_occupation: BTreeMap::from([
                ("banker".to_string(), 2.0),
                ("nurse".to_string(), -3.0),
                ("artist".to_string(), 0.5),
            ]),
            aob: 1.8,
            signed_aob: -0.1,
            pairs_per_occupation: 20,
        };
        let text = report.render_text();
        let banker = text.find("banker").unwrap();
        let artist = text.find("artist").unwrap();
        let nurse = text.find("nurse").unwrap();
        assert!(banker < artist && artist < nurse);
    }
}
