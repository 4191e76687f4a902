//! Stage orchestration behind the `pakpa` binary. Each stage reads the
//! artifacts of the previous one from the output directory and writes its
//! own atomically.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::absa::{annotate_corpus, score_ae, score_asc, AbsaError, AbsaFailure, AbsaGold};
use crate::clustering::{
    build_pools, cluster_pool, load_vectors, ClusterError, ClusterSet, ClusteringParams,
    VectorError, VectorStore,
};
use crate::eval::{
    evaluate, EmbeddingCosine, EvalError, EvalInputs, ExternalScorer, JudgmentSet, LexicalF1,
    LexiconClassifier, MatchAnnotationSet, ScorerKind, SimilarityScorer,
};
use crate::ingest::{
    apply_filters, comments_from_reviews, load_corpus, load_references, CorpusFilter,
    DatasetFormat, IngestError,
};
use crate::io::{read_jsonl, to_jsonl, write_atomic, JsonlError};
use crate::keypoints::{generate_keypoints, EntitySummary, GenerationOptions};
use crate::llm::{
    ChatBackend, Gateway, HttpBackend, LlmConfig, LlmError, MockBackend, PromptTemplate,
    ResponseCache,
};
use crate::model::{AspectAnnotation, AspectCluster, EntityRef, Polarity, ReviewComment};

pub const COMMENTS_FILE: &str = "comments.jsonl";
pub const ABSA_FILE: &str = "absa.jsonl";
pub const ABSA_FAILURES_FILE: &str = "absa_failures.jsonl";
pub const ABSA_SCORES_FILE: &str = "absa_scores.json";
pub const CLUSTERS_FILE: &str = "clusters.jsonl";
pub const SUMMARIES_FILE: &str = "summaries.jsonl";
pub const EVAL_REPORT_FILE: &str = "eval_report.json";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("missing artifact from stage {0:?}; run it first")]
    MissingArtifact(String),
    #[error("invalid configuration: {0}")]
    ConfigError(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Absa(#[from] AbsaError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Vectors(#[from] VectorError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Absa,
    Cluster,
    Generate,
    Evaluate,
    Pipeline,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub dataset_format: DatasetFormat,
    pub corpus_path: Option<PathBuf>,
    pub vectors_path: Option<PathBuf>,
    pub references_path: Option<PathBuf>,
    pub judgments_path: Option<PathBuf>,
    pub annotations_path: Option<PathBuf>,
    pub gold_path: Option<PathBuf>,
    pub t_match: Option<f64>,
    pub llm: LlmConfig,
    pub lambda: f64,
    pub min_prevalence: usize,
    pub cache_dir: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub scorer: ScorerKind,
    pub scorer_endpoint: Option<String>,
    /// Restricts evaluation to one polarity; both when unset.
    pub polarity: Option<Polarity>,
    pub parallel: usize,
    /// Replay LLM replies from a digest-keyed table instead of calling the
    /// endpoint.
    pub mock_table: Option<PathBuf>,
    pub apply_filters: bool,
    pub filter: CorpusFilter,
    pub report_format: ReportFormat,
    pub absa_template: Option<PathBuf>,
    pub kpg_template: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            dataset_format: DatasetFormat::Yelp,
            corpus_path: None,
            vectors_path: None,
            references_path: None,
            judgments_path: None,
            annotations_path: None,
            gold_path: None,
            t_match: None,
            llm: LlmConfig::default(),
            lambda: 0.55,
            min_prevalence: 15,
            cache_dir: None,
            output_dir: PathBuf::from("out"),
            scorer: ScorerKind::LexicalF1,
            scorer_endpoint: None,
            polarity: None,
            parallel: 4,
            mock_table: None,
            apply_filters: true,
            filter: CorpusFilter::default(),
            report_format: ReportFormat::Text,
            absa_template: None,
            kpg_template: None,
        }
    }
}

fn require_file(field: &str, path: &Option<PathBuf>) -> Result<PathBuf, CliError> {
    match path {
        Some(p) if p.is_file() => Ok(p.clone()),
        Some(p) => Err(CliError::ConfigError(format!("{field}: {} does not exist", p.display()))),
        None => Err(CliError::ConfigError(format!("{field} is required"))),
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| CliError::ConfigError(format!("{}: {e}", path.display())))
    }

    /// Checks the fields `stage` depends on.
    pub fn validate(&self, stage: Stage) -> Result<(), CliError> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(CliError::ConfigError(format!("lambda must be in (0, 1), got {}", self.lambda)));
        }
        self.llm.validate().map_err(|e| CliError::ConfigError(format!("llm: {e}")))?;
        if self.apply_filters {
            self.filter
                .validate()
                .map_err(|e| CliError::ConfigError(format!("filter: {e}")))?;
        }
        let needs = |s: Stage| stage == s || stage == Stage::Pipeline;
        if needs(Stage::Ingest) {
            require_file("corpus_path", &self.corpus_path)?;
        }
        if needs(Stage::Cluster) {
            require_file("vectors_path", &self.vectors_path)?;
        }
        if (needs(Stage::Absa) || needs(Stage::Generate)) && self.mock_table.is_some() {
            require_file("mock_table", &self.mock_table)?;
        }
        if stage == Stage::Evaluate || (stage == Stage::Pipeline && self.references_path.is_some()) {
            require_file("references_path", &self.references_path)?;
            match self.scorer {
                ScorerKind::EmbeddingCosine => {
                    require_file("vectors_path", &self.vectors_path)?;
                }
                ScorerKind::External if self.scorer_endpoint.is_none() => {
                    return Err(CliError::ConfigError("scorer_endpoint is required for the external scorer".into()));
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn artifact(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }

    fn gateway(&self) -> Result<Gateway, CliError> {
        let backend: Arc<dyn ChatBackend> = match &self.mock_table {
            Some(path) => Arc::new(MockBackend::load(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?),
            None => Arc::new(
                HttpBackend::new(&self.llm.endpoint_url, &self.llm.api_key_env_var, self.llm.timeout)
                    .map_err(|e| CliError::ConfigError(format!("endpoint: {e}")))?,
            ),
        };
        let cache = match &self.cache_dir {
            Some(dir) => ResponseCache::on_disk(dir)?,
            None => ResponseCache::in_memory(),
        };
        Ok(Gateway::new(backend, self.llm.clone(), cache).with_parallel(self.parallel))
    }

    fn template(&self, path: &Option<PathBuf>, default: fn() -> PromptTemplate) -> Result<PromptTemplate, CliError> {
        Ok(match path {
            Some(p) => PromptTemplate::load(p)?,
            None => default(),
        })
    }
}

/// Command-line flags. Every flag overrides the matching config file field.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML file supplying any PipelineConfig field
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Dataset format: yelp or space
    #[arg(long, global = true)]
    pub format: Option<DatasetFormat>,
    /// Reviews JSONL
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    /// Word vector file (token followed by components, one per line)
    #[arg(long, global = true)]
    pub vectors: Option<PathBuf>,
    /// Reference summaries JSONL
    #[arg(long, global = true)]
    pub references: Option<PathBuf>,
    /// Pairwise judgments (JSON) for Bradley-Terry rankings
    #[arg(long, global = true)]
    pub judgments: Option<PathBuf>,
    /// Match annotations (CSV or JSONL) for quantification precision
    #[arg(long, global = true)]
    pub annotations: Option<PathBuf>,
    /// Gold ABSA labels (JSONL) to score the absa stage against
    #[arg(long, global = true)]
    pub gold: Option<PathBuf>,
    /// Matching threshold of the annotated system, reported as-is
    #[arg(long, global = true)]
    pub t_match: Option<f64>,
    /// Chat-completion endpoint URL
    #[arg(long, global = true)]
    pub endpoint: Option<String>,
    /// Model name sent to the endpoint
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Minimum mean cosine for joining a cluster [default: 0.55]
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Smallest cluster that gets a key point [default: 15]
    #[arg(long, global = true)]
    pub min_prevalence: Option<usize>,
    /// Directory of cached LLM replies
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Output directory [default: out]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Similarity scorer: lexical_f1, embedding_cosine or external
    #[arg(long, global = true)]
    pub scorer: Option<ScorerKind>,
    /// URL of the external similarity scorer
    #[arg(long, global = true)]
    pub scorer_endpoint: Option<String>,
    /// Evaluate only this polarity
    #[arg(long, global = true)]
    pub polarity: Option<Polarity>,
    /// Maximum concurrent LLM requests
    #[arg(long, global = true)]
    pub parallel: Option<usize>,
    /// Replay replies from a mock table instead of calling the endpoint
    #[arg(long, global = true)]
    pub mock: Option<PathBuf>,
    /// Skip the corpus filters (sentence cap, review-count window, top-K)
    #[arg(long, global = true)]
    pub no_filter: bool,
    #[arg(long, global = true, value_enum)]
    pub report_format: Option<ReportFormat>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<PipelineConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        macro_rules! set {
            ($flag:ident => $($field:ident).+) => {
                if let Some(v) = &self.$flag {
                    cfg.$($field).+ = v.clone().into();
                }
            };
        }
        set!(format => dataset_format);
        set!(corpus => corpus_path);
        set!(vectors => vectors_path);
        set!(references => references_path);
        set!(judgments => judgments_path);
        set!(annotations => annotations_path);
        set!(gold => gold_path);
        set!(t_match => t_match);
        set!(endpoint => llm.endpoint_url);
        set!(model => llm.model_name);
        set!(lambda => lambda);
        set!(min_prevalence => min_prevalence);
        set!(cache_dir => cache_dir);
        set!(out => output_dir);
        set!(scorer => scorer);
        set!(scorer_endpoint => scorer_endpoint);
        set!(polarity => polarity);
        set!(parallel => parallel);
        set!(mock => mock_table);
        set!(report_format => report_format);
        if self.no_filter {
            cfg.apply_filters = false;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Parser)]
#[command(name = "pakpa", version, about = "Aspect-grounded key point analysis of business reviews")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub args: ConfigArgs,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Load, filter and sentence-split a review corpus
    Ingest,
    /// Extract (aspect, sentiment) pairs from every comment
    Absa,
    /// Cluster aspect terms per entity and polarity
    Cluster,
    /// Generate one key point per cluster and write summaries and the report
    Generate,
    /// Score summaries against references and human judgments
    Evaluate,
    /// Run ingest, absa, cluster, generate (and evaluate with --references)
    Pipeline,
}

impl From<Command> for Stage {
    fn from(c: Command) -> Stage {
        match c {
            Command::Ingest => Stage::Ingest,
            Command::Absa => Stage::Absa,
            Command::Cluster => Stage::Cluster,
            Command::Generate => Stage::Generate,
            Command::Evaluate => Stage::Evaluate,
            Command::Pipeline => Stage::Pipeline,
        }
    }
}

/// Paths written by a stage.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct StageOutput {
    pub written: Vec<PathBuf>,
}

fn write(path: PathBuf, contents: &[u8], out: &mut StageOutput) -> Result<(), CliError> {
    write_atomic(&path, contents).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    log::info!("wrote {}", path.display());
    out.written.push(path);
    Ok(())
}

fn read_artifact<T: serde::de::DeserializeOwned>(
    cfg: &PipelineConfig,
    name: &str,
    producer: Stage,
) -> Result<Vec<T>, CliError> {
    let path = cfg.artifact(name);
    if !path.is_file() {
        let stage = serde_json::to_value(producer).expect("stage name");
        return Err(CliError::MissingArtifact(stage.as_str().unwrap_or_default().to_string()));
    }
    Ok(read_jsonl(&path)?)
}

pub fn run_stage(stage: Stage, cfg: &PipelineConfig) -> Result<StageOutput, CliError> {
    cfg.validate(stage)?;
    std::fs::create_dir_all(&cfg.output_dir).map_err(|source| CliError::Io {
        path: cfg.output_dir.clone(),
        source,
    })?;
    let mut out = StageOutput::default();
    match stage {
        Stage::Ingest => ingest(cfg, &mut out)?,
        Stage::Absa => absa(cfg, &mut out)?,
        Stage::Cluster => cluster(cfg, &mut out)?,
        Stage::Generate => generate(cfg, &mut out)?,
        Stage::Evaluate => evaluate_stage(cfg, &mut out)?,
        Stage::Pipeline => {
            ingest(cfg, &mut out)?;
            absa(cfg, &mut out)?;
            cluster(cfg, &mut out)?;
            generate(cfg, &mut out)?;
            if cfg.references_path.is_some() {
                evaluate_stage(cfg, &mut out)?;
            }
        }
    }
    Ok(out)
}

fn ingest(cfg: &PipelineConfig, out: &mut StageOutput) -> Result<(), CliError> {
    let corpus = require_file("corpus_path", &cfg.corpus_path)?;
    let mut reviews = load_corpus(&corpus, cfg.dataset_format)?;
    let loaded = reviews.len();
    if cfg.apply_filters {
        reviews = apply_filters(reviews, &cfg.filter);
    }
    let comments = comments_from_reviews(&reviews)?;
    log::info!(
        "ingest: {loaded} reviews loaded, {} kept, {} comments",
        reviews.len(),
        comments.len()
    );
    write(cfg.artifact(COMMENTS_FILE), to_jsonl(&comments).as_bytes(), out)
}

fn group_by_entity(comments: &[ReviewComment]) -> BTreeMap<EntityRef, Vec<ReviewComment>> {
    let mut groups: BTreeMap<EntityRef, Vec<ReviewComment>> = BTreeMap::new();
    for c in comments {
        groups.entry(c.entity.clone()).or_default().push(c.clone());
    }
    groups
}

fn absa(cfg: &PipelineConfig, out: &mut StageOutput) -> Result<(), CliError> {
    let comments: Vec<ReviewComment> = read_artifact(cfg, COMMENTS_FILE, Stage::Ingest)?;
    let gateway = cfg.gateway()?;
    let template = cfg.template(&cfg.absa_template, PromptTemplate::absa_default)?;
    let mut annotations: Vec<AspectAnnotation> = Vec::new();
    let mut failures: Vec<AbsaFailure> = Vec::new();
    let mut runs = Vec::new();
    for (entity, group) in group_by_entity(&comments) {
        let run = annotate_corpus(&entity, &group, &gateway, &template)?;
        log::info!(
            "absa: {} annotated, {} failed for {}",
            run.annotations.len(),
            run.failures.len(),
            entity.entity_id
        );
        annotations.extend(run.annotations.iter().cloned());
        failures.extend(run.failures.iter().cloned());
        runs.push(run);
    }
    write(cfg.artifact(ABSA_FILE), to_jsonl(&annotations).as_bytes(), out)?;
    write(cfg.artifact(ABSA_FAILURES_FILE), to_jsonl(&failures).as_bytes(), out)?;

    if let Some(gold_path) = &cfg.gold_path {
        let gold = AbsaGold::load(gold_path)?;
        let merged = crate::absa::AbsaRun {
            entity: runs.first().map(|r| r.entity.clone()).unwrap_or_else(|| {
                EntityRef::new("all", crate::model::Category::Other).expect("non-empty id")
            }),
            annotations,
            failures,
        };
        let scores = serde_json::json!({
            "ae": score_ae(&merged, &gold)?,
            "asc": score_asc(&merged, &gold)?,
        });
        let text = serde_json::to_string_pretty(&scores).expect("scores serialize") + "\n";
        write(cfg.artifact(ABSA_SCORES_FILE), text.as_bytes(), out)?;
    }
    Ok(())
}

fn cluster(cfg: &PipelineConfig, out: &mut StageOutput) -> Result<(), CliError> {
    let comments: Vec<ReviewComment> = read_artifact(cfg, COMMENTS_FILE, Stage::Ingest)?;
    let annotations: Vec<AspectAnnotation> = read_artifact(cfg, ABSA_FILE, Stage::Absa)?;
    let store = load_vectors(&require_file("vectors_path", &cfg.vectors_path)?)?;
    for warning in store.warnings() {
        log::warn!("vectors: {warning}");
    }
    let params = ClusteringParams::new(cfg.lambda)?;
    let pools = build_pools(&annotations, &comments)?;
    let mut sets = Vec::new();
    for (entity, pools) in &pools {
        for pool in [&pools.positive, &pools.negative] {
            if pool.is_empty() {
                continue;
            }
            sets.push(ClusterSet {
                entity_id: entity.entity_id.clone(),
                polarity: pool.polarity,
                clusters: cluster_pool(pool, &store, &params),
            });
        }
    }
    log::info!(
        "cluster: {} clusters over {} pools",
        sets.iter().map(|s| s.clusters.len()).sum::<usize>(),
        sets.len()
    );
    write(cfg.artifact(CLUSTERS_FILE), to_jsonl(&sets).as_bytes(), out)
}

fn generate(cfg: &PipelineConfig, out: &mut StageOutput) -> Result<(), CliError> {
    let comments: Vec<ReviewComment> = read_artifact(cfg, COMMENTS_FILE, Stage::Ingest)?;
    let sets: Vec<ClusterSet> = read_artifact(cfg, CLUSTERS_FILE, Stage::Cluster)?;
    let gateway = cfg.gateway()?;
    let template = cfg.template(&cfg.kpg_template, PromptTemplate::kpg_default)?;
    let options = GenerationOptions {
        min_prevalence: cfg.min_prevalence,
        ..GenerationOptions::default()
    };
    let mut clusters_by_entity: HashMap<&str, Vec<AspectCluster>> = HashMap::new();
    for set in &sets {
        clusters_by_entity
            .entry(set.entity_id.as_str())
            .or_default()
            .extend(set.clusters.iter().cloned());
    }
    let mut summaries = Vec::new();
    for (entity, group) in group_by_entity(&comments) {
        let clusters = clusters_by_entity.remove(entity.entity_id.as_str()).unwrap_or_default();
        let summary = generate_keypoints(&entity, &clusters, &group, &gateway, &template, &options)?;
        log::info!("generate: {} key points for {}", summary.key_points.len(), entity.entity_id);
        summaries.push(summary);
    }
    write(cfg.artifact(SUMMARIES_FILE), to_jsonl(&summaries).as_bytes(), out)?;
    let (name, report) = match cfg.report_format {
        ReportFormat::Text => ("report.txt", emit_reports(&summaries, &comments, ReportFormat::Text)),
        ReportFormat::Json => ("report.jsonl", emit_reports(&summaries, &comments, ReportFormat::Json)),
    };
    write(cfg.artifact(name), report.as_bytes(), out)
}

fn build_scorer(cfg: &PipelineConfig) -> Result<Box<dyn SimilarityScorer>, CliError> {
    Ok(match cfg.scorer {
        ScorerKind::LexicalF1 => Box::new(LexicalF1),
        ScorerKind::EmbeddingCosine => {
            let store: VectorStore = load_vectors(&require_file("vectors_path", &cfg.vectors_path)?)?;
            Box::new(EmbeddingCosine::new(store))
        }
        ScorerKind::External => {
            let endpoint = cfg
                .scorer_endpoint
                .clone()
                .ok_or_else(|| CliError::ConfigError("scorer_endpoint is required".into()))?;
            Box::new(ExternalScorer::new(endpoint, Duration::from_secs(120))?)
        }
    })
}

fn evaluate_stage(cfg: &PipelineConfig, out: &mut StageOutput) -> Result<(), CliError> {
    let summaries: Vec<EntitySummary> = read_artifact(cfg, SUMMARIES_FILE, Stage::Generate)?;
    let comments: Vec<ReviewComment> = match read_artifact(cfg, COMMENTS_FILE, Stage::Ingest) {
        Ok(c) => c,
        Err(CliError::MissingArtifact(_)) => Vec::new(),
        Err(e) => return Err(e),
    };
    let references = load_references(&require_file("references_path", &cfg.references_path)?)?;
    let judgments: Option<JudgmentSet> = match &cfg.judgments_path {
        Some(_) => {
            let path = require_file("judgments_path", &cfg.judgments_path)?;
            let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            Some(
                serde_json::from_str(&text)
                    .map_err(|e| CliError::ConfigError(format!("{}: {e}", path.display())))?,
            )
        }
        None => None,
    };
    let annotations = match &cfg.annotations_path {
        Some(_) => Some(MatchAnnotationSet::load(
            &require_file("annotations_path", &cfg.annotations_path)?,
            cfg.t_match,
        )?),
        None => None,
    };
    let scorer = build_scorer(cfg)?;
    let classifier = LexiconClassifier::default();
    let default_category = summaries
        .first()
        .map(|s| s.entity.category.as_str().to_string())
        .unwrap_or_else(|| "all".to_string());
    let report = evaluate(&EvalInputs {
        summaries: &summaries,
        references: &references,
        comments: &comments,
        scorer: scorer.as_ref(),
        classifier: &classifier,
        polarities: match cfg.polarity {
            Some(p) => vec![p],
            None => vec![Polarity::Positive, Polarity::Negative],
        },
        judgments: judgments.as_ref(),
        annotations: annotations.as_ref(),
        default_category,
    })?;
    if let Some(all) = report.averages.get("all") {
        log::info!(
            "evaluate: sP {:.3} sR {:.3} sF1 {:.3} over {} rows",
            all.soft.soft_precision,
            all.soft.soft_recall,
            all.soft.soft_f1,
            all.rows
        );
    }
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    write(cfg.artifact(EVAL_REPORT_FILE), text.as_bytes(), out)
}

const SAMPLES_PER_KEY_POINT: usize = 2;

/// Renders one summary. The text layout lists each key point with its
/// prevalence and the first two matching comments by id; the JSON layout
/// is the summary's own serialization.
pub fn emit_report(summary: &EntitySummary, comments: &[ReviewComment], format: ReportFormat) -> String {
    if format == ReportFormat::Json {
        return serde_json::to_string(summary).expect("summary serializes");
    }
    let text_of: HashMap<&str, &str> = comments
        .iter()
        .map(|c| (c.comment_id.as_str(), c.text.as_str()))
        .collect();
    let mut s = String::new();
    let _ = writeln!(
        s,
        "== {} ({}) | model: {} ==",
        summary.entity.entity_id,
        summary.entity.category.as_str(),
        summary.llm_model
    );
    for polarity in [Polarity::Positive, Polarity::Negative] {
        let kps: Vec<_> = summary.by_polarity(polarity).collect();
        if kps.is_empty() {
            continue;
        }
        let _ = writeln!(s, "\n{} key points", polarity.as_str());
        let _ = writeln!(s, "{:<60} {:>10}", "Key point", "Prevalence");
        for kp in kps {
            let _ = writeln!(s, "{:<60} {:>10}", kp.text, kp.prevalence());
            for id in kp.matched_comment_ids.iter().take(SAMPLES_PER_KEY_POINT) {
                let _ = writeln!(s, "    - {}", text_of.get(id.as_str()).copied().unwrap_or(id.as_str()));
            }
        }
    }
    s
}

pub fn emit_reports(summaries: &[EntitySummary], comments: &[ReviewComment], format: ReportFormat) -> String {
    let mut out = String::new();
    for (i, summary) in summaries.iter().enumerate() {
        if format == ReportFormat::Text && i > 0 {
            out.push('\n');
        }
        out.push_str(&emit_report(summary, comments, format));
        if format == ReportFormat::Json {
            out.push('\n');
        }
    }
    out
}

/// Entry point used by the binary: resolves the configuration and runs the
/// requested stage.
pub fn run(cli: &Cli) -> Result<StageOutput, CliError> {
    let cfg = cli.args.resolve()?;
    run_stage(cli.command.into(), &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Category, KeyPoint};

    fn comment(id: &str, text: &str) -> ReviewComment {
        ReviewComment {
            comment_id: id.into(),
            entity: EntityRef::new("h1", Category::Hotels).unwrap(),
            review_id: "r".into(),
            sentence_index: 0,
            text: text.into(),
        }
    }

    #[test]
    fn table_one_style_report() {
        let comments: Vec<ReviewComment> = (0..46)
            .map(|i| comment(&format!("h1/r{i:02}/0"), &format!("Staff comment {i:02}.")))
            .collect();
        let mut summary = EntitySummary::new(EntityRef::new("h1", Category::Hotels).unwrap(), "m");
        summary.key_points.push(KeyPoint {
            text: "Friendly and helpful staff.".into(),
            polarity: Polarity::Positive,
            cluster_id: 0,
            matched_comment_ids: comments.iter().map(|c| c.comment_id.clone()).collect(),
        });
        let text = emit_report(&summary, &comments, ReportFormat::Text);
        assert!(text.contains("Friendly and helpful staff."));
        assert!(text.contains("46"));
        assert!(text.contains("    - Staff comment 00.\n    - Staff comment 01.\n"));
        assert!(!text.contains("Staff comment 02."));
        let json = emit_report(&summary, &comments, ReportFormat::Json);
        assert_eq!(json, serde_json::to_string(&summary).unwrap());
    }

    #[test]
    fn empty_summary_is_header_only() {
        let summary = EntitySummary::new(EntityRef::new("h1", Category::Hotels).unwrap(), "m");
        let text = emit_report(&summary, &[], ReportFormat::Text);
        assert_eq!(text, "== h1 (hotels) | model: m ==\n");
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(&path, "lambda = 0.7\nmin_prevalence = 3\n[llm]\nmodel_name = \"from-file\"\n").unwrap();
        let args = ConfigArgs {
            config: Some(path),
            lambda: Some(0.6),
            ..ConfigArgs::default()
        };
        let cfg = args.resolve().unwrap();
        assert_eq!(cfg.lambda, 0.6);
        assert_eq!(cfg.min_prevalence, 3);
        assert_eq!(cfg.llm.model_name, "from-file");
        assert_eq!(cfg.llm.max_retries, 3);
    }

    #[test]
    fn lambda_out_of_range_is_config_error() {
        let cfg = PipelineConfig {
            lambda: 1.0,
            ..PipelineConfig::default()
        };
        assert!(matches!(cfg.validate(Stage::Absa), Err(CliError::ConfigError(_))));
    }
}
