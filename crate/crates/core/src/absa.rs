//! Prompted aspect-based sentiment analysis over a corpus, and the
//! aspect extraction (AE) / aspect sentiment classification (ASC) scorers.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::llm::{parse_absa_response, render_absa_prompt, Gateway, LlmError, PromptTemplate};
use crate::model::{AspectAnnotation, AspectPair, EntityRef, Polarity, ReviewComment};

#[derive(Debug, thiserror::Error)]
pub enum AbsaError {
    #[error("predictions and gold cover different comments (first difference: {0})")]
    IdMismatch(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Jsonl(#[from] crate::io::JsonlError),
    #[error("gold record for {0} is not flagged \"gold\": true")]
    NotGold(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbsaFailure {
    pub comment_id: String,
    pub error: String,
}

/// Outcome of annotating one entity's comments: each input comment lands in
/// exactly one of `annotations` or `failures`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbsaRun {
    pub entity: EntityRef,
    pub annotations: Vec<AspectAnnotation>,
    pub failures: Vec<AbsaFailure>,
}

impl AbsaRun {
    pub fn comment_ids(&self) -> BTreeSet<&str> {
        self.annotations
            .iter()
            .map(|a| a.comment_id.as_str())
            .chain(self.failures.iter().map(|f| f.comment_id.as_str()))
            .collect()
    }

    fn predictions(&self) -> BTreeMap<&str, &[AspectPair]> {
        let mut out: BTreeMap<&str, &[AspectPair]> = self
            .failures
            .iter()
            .map(|f| (f.comment_id.as_str(), &[][..]))
            .collect();
        for a in &self.annotations {
            out.insert(a.comment_id.as_str(), a.pairs.as_slice());
        }
        out
    }
}

/// Annotates every comment with one LLM call each. Parse and transport
/// failures are recorded per comment; the run always completes.
pub fn annotate_corpus(
    entity: &EntityRef,
    comments: &[ReviewComment],
    gateway: &Gateway,
    template: &PromptTemplate,
) -> Result<AbsaRun, AbsaError> {
    let prompts = comments
        .iter()
        .map(|c| render_absa_prompt(c, template))
        .collect::<Result<Vec<_>, _>>()?;
    let replies = gateway.complete_all(&prompts);

    let mut run = AbsaRun {
        entity: entity.clone(),
        annotations: Vec::new(),
        failures: Vec::new(),
    };
    for (comment, reply) in comments.iter().zip(replies) {
        match reply.and_then(|text| parse_absa_response(&text)) {
            Ok(pairs) => run.annotations.push(AspectAnnotation {
                comment_id: comment.comment_id.clone(),
                pairs,
            }),
            Err(err) => {
                log::warn!("ABSA failed for {}: {err}", comment.comment_id);
                run.failures.push(AbsaFailure {
                    comment_id: comment.comment_id.clone(),
                    error: err.to_string(),
                });
            }
        }
    }
    Ok(run)
}

/// Gold ABSA labels keyed by comment id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AbsaGold {
    pub labels: BTreeMap<String, Vec<AspectPair>>,
}

#[derive(Deserialize)]
struct GoldRecord {
    comment_id: String,
    pairs: Vec<AspectPair>,
    #[serde(default)]
    gold: bool,
}

impl AbsaGold {
    pub fn load(path: &Path) -> Result<Self, AbsaError> {
        let records: Vec<GoldRecord> = crate::io::read_jsonl(path)?;
        let mut labels = BTreeMap::new();
        for r in records {
            if !r.gold {
                return Err(AbsaError::NotGold(r.comment_id));
            }
            labels.insert(r.comment_id, r.pairs);
        }
        Ok(AbsaGold { labels })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F1Score {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl F1Score {
    /// Micro scores from counts. With nothing predicted and nothing
    /// expected the prediction is exact, scored 1.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        if tp + fp + fn_ == 0 {
            return F1Score {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
            };
        }
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        F1Score {
            precision,
            recall,
            f1,
        }
    }
}

fn aligned<'a>(
    pred: &'a AbsaRun,
    gold: &'a AbsaGold,
) -> Result<Vec<(&'a [AspectPair], &'a [AspectPair])>, AbsaError> {
    let predictions = pred.predictions();
    let pred_ids: BTreeSet<&str> = predictions.keys().copied().collect();
    let gold_ids: BTreeSet<&str> = gold.labels.keys().map(String::as_str).collect();
    if let Some(diff) = pred_ids.symmetric_difference(&gold_ids).next() {
        return Err(AbsaError::IdMismatch(diff.to_string()));
    }
    Ok(gold
        .labels
        .iter()
        .map(|(id, g)| (predictions[id.as_str()], g.as_slice()))
        .collect())
}

/// Exact-match aspect term micro-F1 over normalized terms.
pub fn score_ae(pred: &AbsaRun, gold: &AbsaGold) -> Result<F1Score, AbsaError> {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (p, g) in aligned(pred, gold)? {
        let p: BTreeSet<&str> = p.iter().map(|x| x.aspect_term.as_str()).collect();
        let g: BTreeSet<&str> = g.iter().map(|x| x.aspect_term.as_str()).collect();
        let hits = p.intersection(&g).count();
        tp += hits;
        fp += p.len() - hits;
        fn_ += g.len() - hits;
    }
    Ok(F1Score::from_counts(tp, fp, fn_))
}

/// Polarity micro-F1 on gold aspect terms. A gold term the prediction
/// does not mention counts as an error.
pub fn score_asc(pred: &AbsaRun, gold: &AbsaGold) -> Result<F1Score, AbsaError> {
    let (mut correct, mut labelled, mut total) = (0usize, 0usize, 0usize);
    for (p, g) in aligned(pred, gold)? {
        let mut predicted: BTreeMap<&str, Polarity> = BTreeMap::new();
        for pair in p {
            predicted.entry(pair.aspect_term.as_str()).or_insert(pair.polarity);
        }
        let gold_terms: BTreeMap<&str, Polarity> =
            g.iter().map(|x| (x.aspect_term.as_str(), x.polarity)).collect();
        for (term, polarity) in gold_terms {
            total += 1;
            if let Some(found) = predicted.get(term) {
                labelled += 1;
                if *found == polarity {
                    correct += 1;
                }
            }
        }
    }
    Ok(F1Score::from_counts(correct, labelled - correct, total - correct))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{LlmConfig, MockBackend, ResponseCache};
    use crate::model::Category;
    use std::sync::Arc;

    fn entity() -> EntityRef {
        EntityRef::new("e1", Category::Hotels).unwrap()
    }

    fn comment(idx: usize, text: &str) -> ReviewComment {
        ReviewComment {
            comment_id: format!("e1/r{idx}/0"),
            entity: entity(),
            review_id: format!("r{idx}"),
            sentence_index: 0,
            text: text.into(),
        }
    }

    fn pair(term: &str, p: Polarity) -> AspectPair {
        AspectPair::new(term, p).unwrap()
    }

    fn run(preds: &[(&str, Vec<AspectPair>)]) -> AbsaRun {
        AbsaRun {
            entity: entity(),
            annotations: preds
                .iter()
                .map(|(id, pairs)| AspectAnnotation {
                    comment_id: id.to_string(),
                    pairs: pairs.clone(),
                })
                .collect(),
            failures: vec![],
        }
    }

    fn gold(labels: &[(&str, Vec<AspectPair>)]) -> AbsaGold {
        AbsaGold {
            labels: labels.iter().map(|(id, p)| (id.to_string(), p.clone())).collect(),
        }
    }

    fn gateway_for(replies: &[(&ReviewComment, &str)]) -> Gateway {
        let template = PromptTemplate::absa_default();
        let config = LlmConfig {
            model_name: "mock".into(),
            ..LlmConfig::default()
        };
        let mut mock = MockBackend::new();
        for (c, reply) in replies {
            mock.insert("mock", &render_absa_prompt(c, &template).unwrap(), *reply);
        }
        Gateway::new(Arc::new(mock), config, ResponseCache::in_memory())
    }

    #[test]
    fn annotate_happy_path_and_partial_failure() {
        let cs = [
            comment(0, "Great view."),
            comment(1, "Rude staff."),
            comment(2, "Nice pool."),
        ];
        let ok = r#"[{"aspect":"view","sentiment":"positive"}]"#;
        let gw = gateway_for(&[(&cs[0], ok), (&cs[1], ok), (&cs[2], ok)]);
        let r = annotate_corpus(&entity(), &cs, &gw, &PromptTemplate::absa_default()).unwrap();
        assert_eq!((r.annotations.len(), r.failures.len()), (3, 0));

        let gw = gateway_for(&[(&cs[0], ok), (&cs[1], "I cannot help with that"), (&cs[2], ok)]);
        let r = annotate_corpus(&entity(), &cs, &gw, &PromptTemplate::absa_default()).unwrap();
        assert_eq!((r.annotations.len(), r.failures.len()), (2, 1));
        assert_eq!(r.failures[0].comment_id, "e1/r1/0");
        assert_eq!(r.comment_ids().len(), 3);
    }

    #[test]
    fn missing_mock_entry_is_a_failure_not_an_abort() {
        let cs = [comment(0, "Great view.")];
        let gw = gateway_for(&[]);
        let r = annotate_corpus(&entity(), &cs, &gw, &PromptTemplate::absa_default()).unwrap();
        assert_eq!(r.failures.len(), 1);
    }

    #[test]
    fn ae_identity_and_empty_prediction() {
        let g = gold(&[("c1", vec![pair("view", Polarity::Positive)])]);
        let p = run(&[("c1", vec![pair("view", Polarity::Negative)])]);
        assert_eq!(score_ae(&p, &g).unwrap().f1, 1.0);
        let p = run(&[("c1", vec![])]);
        let s = score_ae(&p, &g).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn ae_partial_overlap() {
        let g = gold(&[("c1", vec![pair("b", Polarity::Positive), pair("c", Polarity::Positive)])]);
        let p = run(&[("c1", vec![pair("a", Polarity::Positive), pair("b", Polarity::Positive)])]);
        let s = score_ae(&p, &g).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (0.5, 0.5, 0.5));
    }

    #[test]
    fn id_mismatch() {
        let g = gold(&[("c1", vec![])]);
        let p = run(&[("c2", vec![])]);
        assert!(matches!(score_ae(&p, &g), Err(AbsaError::IdMismatch(_))));
        assert!(matches!(score_asc(&p, &g), Err(AbsaError::IdMismatch(_))));
    }

    #[test]
    fn asc_counts() {
        use Polarity::*;
        let g = gold(&[
            ("c1", vec![pair("a", Positive), pair("b", Negative)]),
            ("c2", vec![pair("c", Positive), pair("d", Neutral)]),
        ]);
        let all = run(&[
            ("c1", vec![pair("a", Positive), pair("b", Negative)]),
            ("c2", vec![pair("c", Positive), pair("d", Neutral)]),
        ]);
        assert_eq!(score_asc(&all, &g).unwrap().f1, 1.0);
        let flipped = run(&[
            ("c1", vec![pair("a", Negative), pair("b", Positive)]),
            ("c2", vec![pair("c", Negative), pair("d", Positive)]),
        ]);
        assert_eq!(score_asc(&flipped, &g).unwrap().f1, 0.0);
        let one_wrong = run(&[
            ("c1", vec![pair("a", Positive), pair("b", Negative)]),
            ("c2", vec![pair("c", Positive), pair("d", Positive)]),
        ]);
        assert_eq!(score_asc(&one_wrong, &g).unwrap().f1, 0.75);
        // an unmatched gold term lowers recall only
        let missing = run(&[
            ("c1", vec![pair("a", Positive), pair("b", Negative)]),
            ("c2", vec![pair("c", Positive)]),
        ]);
        let s = score_asc(&missing, &g).unwrap();
        assert_eq!((s.precision, s.recall), (1.0, 0.75));
    }

    #[test]
    fn gold_loader_requires_flag() {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"comment_id":"c1","pairs":[{{"aspect":"view","sentiment":"positive"}}],"gold":true}}"#).unwrap();
        assert_eq!(AbsaGold::load(f.path()).unwrap().labels.len(), 1);
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"comment_id":"c1","pairs":[]}}"#).unwrap();
        assert!(matches!(AbsaGold::load(f.path()), Err(AbsaError::NotGold(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn labels() -> impl Strategy<Value = Vec<(String, Vec<AspectPair>)>> {
            proptest::collection::vec(
                proptest::collection::vec("[a-d]", 0..4).prop_map(|terms| {
                    terms
                        .into_iter()
                        .map(|t| AspectPair::new(&t, Polarity::Positive).unwrap())
                        .collect::<Vec<_>>()
                }),
                1..6,
            )
            .prop_map(|v| {
                v.into_iter()
                    .enumerate()
                    .map(|(i, p)| (format!("c{i}"), p))
                    .collect()
            })
        }

        proptest! {
            #[test]
            fn ae_is_bounded_and_order_free(
                g in labels(),
                p in labels(),
                seed in any::<u64>(),
            ) {
                let n = g.len().min(p.len());
                let g: Vec<_> = g.into_iter().take(n).collect();
                let mut p: Vec<_> = p.into_iter().take(n).collect();
                let gold_set = AbsaGold { labels: g.iter().cloned().collect() };
                let pred = AbsaRun {
                    entity: entity(),
                    annotations: p.iter().map(|(id, pairs)| AspectAnnotation {
                        comment_id: id.clone(), pairs: pairs.clone() }).collect(),
                    failures: vec![],
                };
                let s = score_ae(&pred, &gold_set).unwrap();
                prop_assert!((0.0..=1.0).contains(&s.f1));
                let terms = |v: &[AspectPair]| v.iter().map(|x| x.aspect_term.clone()).collect::<BTreeSet<_>>();
                let exact = g.iter().zip(&p).all(|((_, a), (_, b))| terms(a) == terms(b));
                prop_assert_eq!(s.f1 == 1.0, exact);

                let k = (seed as usize) % n.max(1);
                p.rotate_left(k);
                let rotated = AbsaRun {
                    entity: entity(),
                    annotations: p.iter().map(|(id, pairs)| AspectAnnotation {
                        comment_id: id.clone(), pairs: pairs.clone() }).collect(),
                    failures: vec![],
                };
                prop_assert_eq!(score_ae(&rotated, &gold_set).unwrap(), s);
            }
        }
    }
}
