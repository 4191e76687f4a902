//! Routing reference summary sentences into positive and negative buckets
//! so generated key points are compared per polarity.

use std::collections::BTreeSet;

use crate::model::Polarity;

pub trait PolarityClassifier {
    fn classify(&self, sentence: &str) -> Polarity;
}

const NEGATORS: &[&str] = &["not", "no", "never", "nothing", "hardly", "barely", "without", "nor"];
const NEGATION_WINDOW: usize = 3;

/// Counts positive and negative lexicon hits; a negator within the three
/// preceding tokens flips a hit.
#[derive(Debug, Clone)]
pub struct LexiconClassifier {
    positive: BTreeSet<String>,
    negative: BTreeSet<String>,
}

impl Default for LexiconClassifier {
    fn default() -> Self {
        LexiconClassifier::new(
            include_str!("../../assets/lexicon/positive.txt").lines(),
            include_str!("../../assets/lexicon/negative.txt").lines(),
        )
    }
}

impl LexiconClassifier {
    pub fn new<'a>(
        positive: impl IntoIterator<Item = &'a str>,
        negative: impl IntoIterator<Item = &'a str>,
    ) -> Self {
        let clean = |words: &mut dyn Iterator<Item = &'a str>| {
            words
                .map(|w| w.trim().to_lowercase())
                .filter(|w| !w.is_empty() && !w.starts_with('#'))
                .collect::<BTreeSet<_>>()
        };
        LexiconClassifier {
            positive: clean(&mut positive.into_iter()),
            negative: clean(&mut negative.into_iter()),
        }
    }

    fn tokens(sentence: &str) -> Vec<String> {
        sentence
            .to_lowercase()
            .replace('\u{2019}', "'")
            .split(|c: char| !(c.is_alphanumeric() || c == '\''))
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect()
    }

    /// Net score: positive hits minus negative hits after negation.
    pub fn score(&self, sentence: &str) -> i64 {
        let tokens = Self::tokens(sentence);
        let mut score = 0;
        for (i, tok) in tokens.iter().enumerate() {
            let sign = if self.positive.contains(tok) {
                1
            } else if self.negative.contains(tok) {
                -1
            } else {
                continue;
            };
            let negated = tokens[i.saturating_sub(NEGATION_WINDOW)..i]
                .iter()
                .any(|t| NEGATORS.contains(&t.as_str()) || t.ends_with("n't"));
            score += if negated { -sign } else { sign };
        }
        score
    }
}

impl PolarityClassifier for LexiconClassifier {
    fn classify(&self, sentence: &str) -> Polarity {
        match self.score(sentence) {
            s if s > 0 => Polarity::Positive,
            s if s < 0 => Polarity::Negative,
            _ => Polarity::Neutral,
        }
    }
}

/// Splits reference sentences by polarity; neutral ones are dropped.
pub fn split_references_by_polarity(
    sentences: &[String],
    classifier: &dyn PolarityClassifier,
) -> (Vec<String>, Vec<String>) {
    let mut positive = Vec::new();
    let mut negative = Vec::new();
    for s in sentences {
        match classifier.classify(s) {
            Polarity::Positive => positive.push(s.clone()),
            Polarity::Negative => negative.push(s.clone()),
            Polarity::Neutral => log::debug!("dropping neutral reference sentence {s:?}"),
        }
    }
    (positive, negative)
}
