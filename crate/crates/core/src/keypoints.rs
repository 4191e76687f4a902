//! Key point generation from aspect clusters and the per-entity
//! quantified summary.

use std::collections::{BTreeSet, HashMap};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::llm::{parse_kpg_response, render_kpg_prompt, Gateway, LlmError, PromptTemplate};
use crate::model::{AspectCluster, EntityRef, KeyPoint, Polarity, ReviewComment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DuplicatePolicy {
    /// Keep the key point of the higher-prevalence cluster, drop the other.
    #[default]
    Collapse,
    /// Ask once more for a different key point, then collapse if still equal.
    Reprompt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationOptions {
    pub min_prevalence: usize,
    pub duplicate_policy: DuplicatePolicy,
}

impl Default for GenerationOptions {
    fn default() -> Self {
        GenerationOptions {
            min_prevalence: 15,
            duplicate_policy: DuplicatePolicy::Collapse,
        }
    }
}

/// Quantified key point summary of one entity. Positive key points come
/// first, each polarity ordered by prevalence descending then cluster id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySummary {
    #[serde(flatten)]
    pub entity: EntityRef,
    #[serde(rename = "model")]
    pub llm_model: String,
    pub key_points: Vec<KeyPoint>,
    /// Seconds since the Unix epoch; not serialized so that summaries of
    /// identical runs are byte-identical.
    #[serde(skip)]
    pub generated_at: u64,
}

impl EntitySummary {
    pub fn new(entity: EntityRef, llm_model: impl Into<String>) -> Self {
        EntitySummary {
            entity,
            llm_model: llm_model.into(),
            key_points: Vec::new(),
            generated_at: now(),
        }
    }

    pub fn by_polarity(&self, polarity: Polarity) -> impl Iterator<Item = &KeyPoint> {
        self.key_points.iter().filter(move |k| k.polarity == polarity)
    }
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn rank_key(kp: &KeyPoint) -> (u8, std::cmp::Reverse<usize>, usize) {
    let section = match kp.polarity {
        Polarity::Positive => 0,
        Polarity::Neutral => 1,
        Polarity::Negative => 2,
    };
    (section, std::cmp::Reverse(kp.prevalence()), kp.cluster_id)
}

/// Comparison form of a key point text: lowercase alphanumeric words.
pub fn normalize_kp_text(text: &str) -> String {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

fn reprompt(prompt: &str, taken: &str) -> String {
    format!("{prompt}\n\nThe key point must be different from: \"{taken}\"")
}

/// Generates one key point per cluster with at least `min_prevalence`
/// member comments. Clusters whose generation fails are skipped and logged.
pub fn generate_keypoints(
    entity: &EntityRef,
    clusters: &[AspectCluster],
    comments: &[ReviewComment],
    gateway: &Gateway,
    template: &PromptTemplate,
    options: &GenerationOptions,
) -> Result<EntitySummary, LlmError> {
    template.validate()?;
    let by_id: HashMap<&str, &ReviewComment> =
        comments.iter().map(|c| (c.comment_id.as_str(), c)).collect();

    let mut eligible: Vec<&AspectCluster> = clusters
        .iter()
        .filter(|c| {
            let keep = c.prevalence() >= options.min_prevalence.max(1);
            if !keep {
                log::debug!(
                    "skipping {} cluster {} with prevalence {}",
                    c.polarity,
                    c.cluster_id,
                    c.prevalence()
                );
            }
            keep
        })
        .collect();
    // higher prevalence first so that duplicates collapse onto the larger cluster
    eligible.sort_by_key(|c| (std::cmp::Reverse(c.prevalence()), c.polarity, c.cluster_id));

    let mut jobs: Vec<(&AspectCluster, String)> = Vec::new();
    for cluster in eligible {
        let members: Vec<&ReviewComment> = cluster
            .member_comment_ids
            .iter()
            .filter_map(|id| by_id.get(id.as_str()).copied())
            .collect();
        if members.len() != cluster.member_comment_ids.len() {
            log::warn!(
                "{} cluster {}: {} member comment(s) not found",
                cluster.polarity,
                cluster.cluster_id,
                cluster.member_comment_ids.len() - members.len()
            );
        }
        match render_kpg_prompt(cluster, &members, template) {
            Ok(prompt) => jobs.push((cluster, prompt)),
            Err(err @ LlmError::TemplateMismatch { .. }) => return Err(err),
            Err(err) => log::warn!("{} cluster {}: {err}", cluster.polarity, cluster.cluster_id),
        }
    }

    let prompts: Vec<String> = jobs.iter().map(|(_, p)| p.clone()).collect();
    let replies = gateway.complete_all(&prompts);

    let mut summary = EntitySummary::new(entity.clone(), &gateway.config().model_name);
    let mut seen: HashMap<String, usize> = HashMap::new();
    for ((cluster, prompt), reply) in jobs.into_iter().zip(replies) {
        let mut text = match reply.and_then(|r| parse_kpg_response(&r)) {
            Ok(text) => text,
            Err(err) => {
                log::warn!("{} cluster {}: generation failed: {err}", cluster.polarity, cluster.cluster_id);
                continue;
            }
        };
        if let Some(&owner) = seen.get(&normalize_kp_text(&text)) {
            if options.duplicate_policy == DuplicatePolicy::Reprompt {
                let retry = gateway
                    .complete(&reprompt(&prompt, &text))
                    .and_then(|r| parse_kpg_response(&r));
                match retry {
                    Ok(t) if !seen.contains_key(&normalize_kp_text(&t)) => text = t,
                    _ => {}
                }
            }
            if seen.contains_key(&normalize_kp_text(&text)) {
                log::info!(
                    "{} cluster {}: key point {text:?} duplicates cluster {owner}, collapsed",
                    cluster.polarity,
                    cluster.cluster_id
                );
                continue;
            }
        }
        seen.insert(normalize_kp_text(&text), cluster.cluster_id);
        summary.key_points.push(KeyPoint {
            text,
            polarity: cluster.polarity,
            cluster_id: cluster.cluster_id,
            matched_comment_ids: cluster.member_comment_ids.clone(),
        });
    }
    summary.key_points.sort_by_key(rank_key);
    Ok(summary)
}

/// The first `k` key points of `polarity` by prevalence, ties by cluster id.
pub fn select_top_k(summary: &EntitySummary, k: usize, polarity: Polarity) -> Vec<KeyPoint> {
    let mut kps: Vec<KeyPoint> = summary.by_polarity(polarity).cloned().collect();
    kps.sort_by_key(rank_key);
    kps.truncate(k);
    kps
}

/// Fraction of `comments` matched by at least one key point.
pub fn review_coverage(summary: &EntitySummary, comments: &[ReviewComment]) -> f64 {
    if comments.is_empty() {
        return 0.0;
    }
    let matched: BTreeSet<&str> = summary
        .key_points
        .iter()
        .flat_map(|k| k.matched_comment_ids.iter().map(String::as_str))
        .collect();
    let covered = comments
        .iter()
        .filter(|c| matched.contains(c.comment_id.as_str()))
        .count();
    covered as f64 / comments.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{kpg_input, LlmConfig, MockBackend, ResponseCache};
    use crate::model::{Category, TermFreq};
    use std::sync::Arc;

    fn entity() -> EntityRef {
        EntityRef::new("hotel", Category::Hotels).unwrap()
    }

    fn comments(n: usize) -> Vec<ReviewComment> {
        (0..n)
            .map(|i| ReviewComment {
                comment_id: format!("hotel/r{i:03}/0"),
                entity: entity(),
                review_id: format!("r{i:03}"),
                sentence_index: 0,
                text: format!("Comment number {i}."),
            })
            .collect()
    }

    fn cluster(id: usize, polarity: Polarity, term: &str, members: std::ops::Range<usize>) -> AspectCluster {
        AspectCluster {
            cluster_id: id,
            polarity,
            terms: vec![TermFreq { term: term.into(), freq: members.len() }],
            member_comment_ids: members.map(|i| format!("hotel/r{i:03}/0")).collect(),
        }
    }

    fn gateway(
        clusters: &[AspectCluster],
        comments: &[ReviewComment],
        reply: impl Fn(&AspectCluster) -> String,
    ) -> Gateway {
        let t = PromptTemplate::kpg_default();
        let mut mock = MockBackend::new();
        for c in clusters {
            let members: Vec<&ReviewComment> = comments
                .iter()
                .filter(|x| c.member_comment_ids.contains(&x.comment_id))
                .collect();
            mock.insert("mock", &render_kpg_prompt(c, &members, &t).unwrap(), reply(c));
        }
        let config = LlmConfig { model_name: "mock".into(), ..LlmConfig::default() };
        Gateway::new(Arc::new(mock), config, ResponseCache::in_memory())
    }

    #[test]
    fn staff_cluster_yields_prevalence_46() {
        let cs = comments(60);
        let clusters = [cluster(0, Polarity::Positive, "staff", 0..46)];
        let gw = gateway(&clusters, &cs, |_| "Friendly and helpful staff.".into());
        let s = generate_keypoints(&entity(), &clusters, &cs, &gw, &PromptTemplate::kpg_default(),
            &GenerationOptions::default()).unwrap();
        assert_eq!(s.key_points.len(), 1);
        assert_eq!(s.key_points[0].text, "Friendly and helpful staff.");
        assert_eq!(s.key_points[0].prevalence(), 46);
        assert_eq!(s.llm_model, "mock");
    }

    #[test]
    fn small_clusters_are_skipped() {
        let cs = comments(10);
        let clusters = [cluster(0, Polarity::Positive, "pool", 0..3)];
        let gw = gateway(&clusters, &cs, |_| "Nice pool.".into());
        let s = generate_keypoints(&entity(), &clusters, &cs, &gw, &PromptTemplate::kpg_default(),
            &GenerationOptions::default()).unwrap();
        assert!(s.key_points.is_empty());
        assert_eq!(gw.backend_calls(), 0);
        let s = generate_keypoints(&entity(), &[], &cs, &gw, &PromptTemplate::kpg_default(),
            &GenerationOptions::default()).unwrap();
        assert!(s.key_points.is_empty());
    }

    #[test]
    fn duplicates_collapse_to_larger_cluster_and_failures_skip() {
        let cs = comments(40);
        let clusters = [
            cluster(0, Polarity::Positive, "room", 0..5),
            cluster(1, Polarity::Positive, "bed", 5..15),
            cluster(2, Polarity::Negative, "noise", 15..20),
            cluster(3, Polarity::Negative, "wifi", 20..22),
        ];
        let gw = gateway(&clusters, &cs, |c| match c.cluster_id {
            0 | 1 => "Comfortable rooms.".into(),
            2 => "Noisy at night.".into(),
            _ => String::new(),
        });
        let opts = GenerationOptions { min_prevalence: 1, ..GenerationOptions::default() };
        let s = generate_keypoints(&entity(), &clusters, &cs, &gw, &PromptTemplate::kpg_default(), &opts)
            .unwrap();
        let got: Vec<(usize, usize)> = s.key_points.iter().map(|k| (k.cluster_id, k.prevalence())).collect();
        assert_eq!(got, [(1, 10), (2, 5)]);
    }

    #[test]
    fn reprompt_policy_asks_again() {
        let cs = comments(20);
        let clusters = [
            cluster(0, Polarity::Positive, "room", 0..5),
            cluster(1, Polarity::Positive, "bed", 5..15),
        ];
        let t = PromptTemplate::kpg_default();
        let mut mock = MockBackend::new();
        let mut prompts = Vec::new();
        for c in &clusters {
            let members: Vec<&ReviewComment> = cs
                .iter()
                .filter(|x| c.member_comment_ids.contains(&x.comment_id))
                .collect();
            let p = render_kpg_prompt(c, &members, &t).unwrap();
            mock.insert("mock", &p, "Comfortable rooms.");
            prompts.push(p);
        }
        mock.insert("mock", &reprompt(&prompts[0], "Comfortable rooms."), "Spacious rooms.");
        let config = LlmConfig { model_name: "mock".into(), ..LlmConfig::default() };
        let gw = Gateway::new(Arc::new(mock), config, ResponseCache::in_memory());
        let opts = GenerationOptions { min_prevalence: 1, duplicate_policy: DuplicatePolicy::Reprompt };
        let s = generate_keypoints(&entity(), &clusters, &cs, &gw, &t, &opts).unwrap();
        let texts: Vec<&str> = s.key_points.iter().map(|k| k.text.as_str()).collect();
        assert_eq!(texts, ["Comfortable rooms.", "Spacious rooms."]);
    }

    fn summary_with(prevalences: &[(usize, Polarity, usize)]) -> EntitySummary {
        let mut s = EntitySummary::new(entity(), "m");
        for (id, pol, n) in prevalences {
            s.key_points.push(KeyPoint {
                text: format!("kp {id}"),
                polarity: *pol,
                cluster_id: *id,
                matched_comment_ids: (0..*n).map(|i| format!("c{id}-{i}")).collect(),
            });
        }
        s
    }

    #[test]
    fn top_k_selection() {
        use Polarity::*;
        let s = summary_with(&[
            (0, Positive, 9), (1, Positive, 3), (2, Positive, 7), (3, Positive, 5),
            (4, Positive, 1), (5, Positive, 8), (6, Positive, 2), (7, Negative, 50),
        ]);
        let top: Vec<usize> = select_top_k(&s, 5, Positive).iter().map(|k| k.prevalence()).collect();
        assert_eq!(top, [9, 8, 7, 5, 3]);
        assert_eq!(select_top_k(&s, 100, Negative).len(), 1);
        let tie = summary_with(&[(4, Positive, 2), (2, Positive, 2)]);
        assert_eq!(select_top_k(&tie, 1, Positive)[0].cluster_id, 2);
    }

    #[test]
    fn coverage() {
        let cs = comments(60);
        let mut s = EntitySummary::new(entity(), "m");
        assert_eq!(review_coverage(&s, &cs), 0.0);
        s.key_points.push(KeyPoint {
            text: "x.".into(),
            polarity: Polarity::Positive,
            cluster_id: 0,
            matched_comment_ids: cs[..30].iter().map(|c| c.comment_id.clone()).collect(),
        });
        assert_eq!(review_coverage(&s, &cs), 0.5);
        s.key_points[0].matched_comment_ids = cs.iter().map(|c| c.comment_id.clone()).collect();
        assert_eq!(review_coverage(&s, &cs), 1.0);
    }

    #[test]
    fn summary_json_shape() {
        let s = summary_with(&[(0, Polarity::Positive, 1)]);
        let v: serde_json::Value = serde_json::to_value(&s).unwrap();
        assert_eq!(v["entity_id"], "hotel");
        assert_eq!(v["model"], "m");
        assert_eq!(v["key_points"][0]["prevalence"], 1);
        assert!(v.get("generated_at").is_none());
        let back: EntitySummary = serde_json::from_value(v).unwrap();
        assert_eq!(back.key_points, s.key_points);
    }

    #[test]
    fn kpg_input_lists_members() {
        let cs = comments(2);
        let c = cluster(0, Polarity::Negative, "noise", 0..2);
        let refs: Vec<&ReviewComment> = cs.iter().collect();
        let input = kpg_input(&c, &refs);
        assert!(input.starts_with("Sentiment: negative\nAspect terms: noise"));
        assert!(input.contains("2. Comment number 1."));
    }
}
