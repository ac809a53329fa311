//! End-to-end commands behind the CLI: oracle labeling, the two training
//! stages, summarization, evaluation, the threshold sweep, the distance
//! histogram export, and the aspect-word probe. All randomness derives
//! from one master seed through named sub-seeds, so each stage is
//! independently reproducible.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::cluster::{
    attention_weights, filter_sentences, train_cluster, ClusterModel, ClusterTrainConfig,
    FilterConfig,
};
use crate::embed::{load_vectors, EmbeddingProvider};
use crate::error::{Error, Result};
use crate::formats::{ingest, read_jsonl, write_jsonl, LabelRecord, SummaryRecord};
use crate::math::{cosine, derive_seed};
use crate::oracle::{convert_dataset, ConvertOutcome, OracleConfig, OracleLabel};
use crate::rank::{
    make_triplets, rank_sentences, train_rank, RankModel, RankTrainConfig, SentenceRanking,
    Triplet,
};
use crate::rouge::{score_pair, RougeScore, RougeVariant};
use crate::textproc::{tokenize, Document};

/// Where sentence embeddings come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmbedSpec {
    /// Deterministic hash-seeded vectors of this dimension.
    Hashed { dim: usize },
    /// A `WORDVEC v1` lookup table.
    Vectors { path: PathBuf },
}

/// Every knob of the pipeline. Sub-seeds for embedding, triplet sampling,
/// and the two trainers are derived from `seed` by name.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Sentences taken from the top of the ranking before filtering.
    pub top_k: usize,
    /// Leading-cluster weight a sentence must exceed to survive filtering.
    pub threshold: f64,
    /// Variants reported by evaluate.
    pub rouge_variants: Vec<RougeVariant>,
    pub seed: u64,
    pub embed: EmbedSpec,
    pub rank: RankTrainConfig,
    pub cluster: ClusterTrainConfig,
    pub oracle: OracleConfig,
    /// Words listed per cluster by the aspects command.
    pub top_m: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            top_k: 3,
            threshold: 0.25,
            rouge_variants: vec![RougeVariant::N(1), RougeVariant::N(2), RougeVariant::L],
            seed: 0,
            embed: EmbedSpec::Hashed { dim: 32 },
            rank: RankTrainConfig::default(),
            cluster: ClusterTrainConfig::default(),
            oracle: OracleConfig::default(),
            top_m: 7,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_k == 0 {
            return Err(Error::config("top_k must be at least 1"));
        }
        if !(self.threshold >= 0.0 && self.threshold < 1.0) {
            return Err(Error::config(format!(
                "threshold must be in [0, 1), got {}",
                self.threshold
            )));
        }
        if self.rouge_variants.is_empty() {
            return Err(Error::config("at least one rouge variant is required"));
        }
        if self.top_m == 0 {
            return Err(Error::config("top_m must be at least 1"));
        }
        if let EmbedSpec::Hashed { dim } = self.embed {
            if dim < 2 {
                return Err(Error::config(format!(
                    "embedding dimension must be at least 2, got {dim}"
                )));
            }
        }
        self.rank.validate()?;
        self.cluster.validate()?;
        self.oracle.validate()?;
        FilterConfig {
            threshold: self.threshold,
        }
        .validate()
    }

    pub fn provider(&self) -> Result<EmbeddingProvider> {
        match &self.embed {
            EmbedSpec::Hashed { dim } => {
                EmbeddingProvider::hashed(*dim, derive_seed(self.seed, "embed"))
            }
            EmbedSpec::Vectors { path } => load_vectors(path),
        }
    }

    /// Rank training config with its sub-seed filled in.
    pub fn rank_cfg(&self) -> RankTrainConfig {
        RankTrainConfig {
            seed: derive_seed(self.seed, "rank"),
            ..self.rank.clone()
        }
    }

    /// Cluster training config with its sub-seed filled in.
    pub fn cluster_cfg(&self) -> ClusterTrainConfig {
        ClusterTrainConfig {
            seed: derive_seed(self.seed, "cluster"),
            ..self.cluster.clone()
        }
    }

    /// Per-document triplet sampling seed.
    pub fn triplet_seed(&self, doc_id: &str) -> u64 {
        derive_seed(derive_seed(self.seed, "triplets"), doc_id)
    }
}

/// Optional settings from a config file or command-line flags. `None`
/// means "leave the current value alone".
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub top_k: Option<usize>,
    pub threshold: Option<f64>,
    pub rouge_variants: Option<Vec<RougeVariant>>,
    pub seed: Option<u64>,
    pub embed_dim: Option<usize>,
    pub vectors: Option<PathBuf>,
    pub rank_learning_rate: Option<f64>,
    pub rank_epochs: Option<usize>,
    pub rank_loss: Option<crate::rank::LossKind>,
    pub rank_init_scale: Option<f64>,
    pub rank_projection_dim: Option<usize>,
    pub clusters: Option<usize>,
    pub cluster_epochs: Option<usize>,
    pub cluster_learning_rate: Option<f64>,
    pub cluster_init: Option<crate::cluster::ClusterInit>,
    pub ortho_weight: Option<f64>,
    pub oracle_n: Option<usize>,
    pub length_factor: Option<f64>,
    pub oracle_mode: Option<crate::oracle::OracleMode>,
    pub auto_cutoff: Option<usize>,
    pub top_m: Option<usize>,
}

impl ConfigOverrides {
    /// Applies every set field onto the config.
    pub fn apply(&self, cfg: &mut PipelineConfig) -> Result<()> {
        if self.embed_dim.is_some() && self.vectors.is_some() {
            return Err(Error::config(
                "embed_dim and vectors are mutually exclusive",
            ));
        }
        if let Some(v) = self.top_k {
            cfg.top_k = v;
        }
        if let Some(v) = self.threshold {
            cfg.threshold = v;
        }
        if let Some(v) = &self.rouge_variants {
            cfg.rouge_variants = v.clone();
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.embed_dim {
            cfg.embed = EmbedSpec::Hashed { dim: v };
        }
        if let Some(v) = &self.vectors {
            cfg.embed = EmbedSpec::Vectors { path: v.clone() };
        }
        if let Some(v) = self.rank_learning_rate {
            cfg.rank.learning_rate = v;
        }
        if let Some(v) = self.rank_epochs {
            cfg.rank.epochs = v;
        }
        if let Some(v) = self.rank_loss {
            cfg.rank.loss_kind = v;
        }
        if let Some(v) = self.rank_init_scale {
            cfg.rank.init_scale = v;
        }
        if let Some(v) = self.rank_projection_dim {
            cfg.rank.projection_dim = Some(v);
        }
        if let Some(v) = self.clusters {
            cfg.cluster.clusters = v;
        }
        if let Some(v) = self.cluster_epochs {
            cfg.cluster.epochs = v;
        }
        if let Some(v) = self.cluster_learning_rate {
            cfg.cluster.learning_rate = v;
        }
        if let Some(v) = self.cluster_init {
            cfg.cluster.init = v;
        }
        if let Some(v) = self.ortho_weight {
            cfg.cluster.ortho_weight = v;
        }
        if let Some(v) = self.oracle_n {
            cfg.oracle.n = v;
        }
        if let Some(v) = self.length_factor {
            cfg.oracle.length_factor = v;
        }
        if let Some(v) = self.oracle_mode {
            cfg.oracle.mode = v;
        }
        if let Some(v) = self.auto_cutoff {
            cfg.oracle.auto_cutoff = v;
        }
        if let Some(v) = self.top_m {
            cfg.top_m = v;
        }
        Ok(())
    }
}

/// Parses a comma-separated variant list such as "1,2,L".
pub fn parse_variants(s: &str) -> Result<Vec<RougeVariant>> {
    let variants: Result<Vec<RougeVariant>> = s
        .split(',')
        .map(|item| item.trim().parse().map_err(Error::config))
        .collect();
    let variants = variants?;
    if variants.is_empty() {
        return Err(Error::config("empty rouge variant list"));
    }
    Ok(variants)
}

/// Parses `key = value` lines. Keys use the flag names with `-` or `_`
/// interchangeably; `#` starts a comment line.
pub fn parse_config_file(path: &Path) -> Result<ConfigOverrides> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut overrides = ConfigOverrides::default();
    for (idx, raw) in content.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::format(
                path,
                idx + 1,
                format!("expected 'key = value', got '{line}'"),
            ));
        };
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        set_override(&mut overrides, &key, value)
            .map_err(|e| Error::format(path, idx + 1, e.to_string()))?;
    }
    Ok(overrides)
}

fn set_override(o: &mut ConfigOverrides, key: &str, value: &str) -> Result<()> {
    fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
        value
            .parse()
            .map_err(|_| Error::config(format!("invalid value '{value}' for {key}")))
    }
    match key {
        "top_k" => o.top_k = Some(parse(key, value)?),
        "threshold" => o.threshold = Some(parse(key, value)?),
        "rouge_variants" => o.rouge_variants = Some(parse_variants(value)?),
        "seed" => o.seed = Some(parse(key, value)?),
        "embed_dim" => o.embed_dim = Some(parse(key, value)?),
        "vectors" => o.vectors = Some(PathBuf::from(value)),
        "rank_learning_rate" => o.rank_learning_rate = Some(parse(key, value)?),
        "rank_epochs" => o.rank_epochs = Some(parse(key, value)?),
        "rank_loss" => o.rank_loss = Some(value.parse()?),
        "rank_init_scale" => o.rank_init_scale = Some(parse(key, value)?),
        "rank_projection_dim" => o.rank_projection_dim = Some(parse(key, value)?),
        "clusters" => o.clusters = Some(parse(key, value)?),
        "cluster_epochs" => o.cluster_epochs = Some(parse(key, value)?),
        "cluster_learning_rate" => o.cluster_learning_rate = Some(parse(key, value)?),
        "cluster_init" => o.cluster_init = Some(value.parse()?),
        "ortho_weight" => o.ortho_weight = Some(parse(key, value)?),
        "oracle_n" => o.oracle_n = Some(parse(key, value)?),
        "length_factor" => o.length_factor = Some(parse(key, value)?),
        "oracle_mode" => o.oracle_mode = Some(value.parse()?),
        "auto_cutoff" => o.auto_cutoff = Some(parse(key, value)?),
        "top_m" => o.top_m = Some(parse(key, value)?),
        other => {
            return Err(Error::config(format!("unknown config key '{other}'")));
        }
    }
    Ok(())
}

fn load_labels(path: &Path) -> Result<Vec<OracleLabel>> {
    let records: Vec<LabelRecord> = read_jsonl(path)?;
    let mut labels = Vec::with_capacity(records.len());
    for r in records {
        if r.selected.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::data(format!(
                "label '{}' has unsorted or duplicate sentence indices",
                r.id
            )));
        }
        labels.push(OracleLabel {
            doc_id: r.id,
            selected: r.selected,
            score: r.score,
            mode_used: r.mode.parse()?,
            fallback: false,
        });
    }
    Ok(labels)
}

fn list_some(ids: &[String]) -> String {
    const SHOW: usize = 5;
    if ids.len() <= SHOW {
        ids.join(", ")
    } else {
        format!("{}, and {} more", ids[..SHOW].join(", "), ids.len() - SHOW)
    }
}

/// Pairs each document with its label, in corpus order. Ids must match
/// one-to-one in both directions.
fn pair_by_id<'a>(
    docs: &'a [Document],
    labels: &'a [OracleLabel],
) -> Result<Vec<(&'a Document, &'a OracleLabel)>> {
    let mut by_id: HashMap<&str, &OracleLabel> = HashMap::new();
    for label in labels {
        if by_id.insert(&label.doc_id, label).is_some() {
            return Err(Error::data(format!(
                "duplicate label for document '{}'",
                label.doc_id
            )));
        }
    }
    let missing: Vec<String> = docs
        .iter()
        .filter(|d| !by_id.contains_key(d.id.as_str()))
        .map(|d| d.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::data(format!(
            "documents without labels: {}",
            list_some(&missing)
        )));
    }
    let doc_ids: std::collections::HashSet<&str> =
        docs.iter().map(|d| d.id.as_str()).collect();
    let extra: Vec<String> = labels
        .iter()
        .filter(|l| !doc_ids.contains(l.doc_id.as_str()))
        .map(|l| l.doc_id.clone())
        .collect();
    if !extra.is_empty() {
        return Err(Error::data(format!(
            "labels without documents: {}",
            list_some(&extra)
        )));
    }
    Ok(docs
        .iter()
        .map(|d| (d, by_id[d.id.as_str()]))
        .collect())
}

/// Builds the training triplets of the whole corpus, in corpus order,
/// each document sampled with its own derived seed. Documents that cannot
/// produce triplets are skipped with a reason.
fn corpus_triplets(
    pairs: &[(&Document, &OracleLabel)],
    provider: &EmbeddingProvider,
    cfg: &PipelineConfig,
) -> (Vec<Triplet>, Vec<(String, String)>) {
    let mut triplets = Vec::new();
    let mut skipped = Vec::new();
    for (doc, label) in pairs {
        match make_triplets(doc, label, provider, cfg.triplet_seed(&doc.id)) {
            Ok(mut t) => triplets.append(&mut t),
            Err(e) => skipped.push((doc.id.clone(), e.to_string())),
        }
    }
    (triplets, skipped)
}

/// Outcome of `cmd_oracle`.
#[derive(Debug)]
pub struct OracleReport {
    pub labeled: usize,
    pub skipped: Vec<(String, String)>,
    pub fallbacks: Vec<String>,
    pub warnings: Vec<String>,
}

/// Labels a dataset and writes the label file.
pub fn cmd_oracle(in_path: &Path, out_path: &Path, cfg: &PipelineConfig) -> Result<OracleReport> {
    cfg.validate()?;
    let ingested = ingest(in_path)?;
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    let mut fallbacks = Vec::new();
    for outcome in convert_dataset(ingested.documents.into_iter(), &cfg.oracle) {
        match outcome {
            ConvertOutcome::Label(label) => {
                if label.fallback {
                    fallbacks.push(label.doc_id.clone());
                }
                records.push(LabelRecord {
                    id: label.doc_id,
                    selected: label.selected,
                    score: label.score,
                    mode: label.mode_used.as_str().to_string(),
                });
            }
            ConvertOutcome::Skipped { doc_id, reason } => skipped.push((doc_id, reason)),
        }
    }
    write_jsonl(out_path, &records)?;
    Ok(OracleReport {
        labeled: records.len(),
        skipped,
        fallbacks,
        warnings: ingested.warnings,
    })
}

/// Outcome of `cmd_train_rank`.
#[derive(Debug)]
pub struct TrainRankReport {
    pub epoch_losses: Vec<f64>,
    pub triplets: usize,
    pub docs_skipped: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

/// Trains the ranking model from a labeled corpus and writes the model file.
pub fn cmd_train_rank(
    in_path: &Path,
    labels_path: &Path,
    model_out: &Path,
    cfg: &PipelineConfig,
) -> Result<TrainRankReport> {
    cfg.validate()?;
    let ingested = ingest(in_path)?;
    let labels = load_labels(labels_path)?;
    let pairs = pair_by_id(&ingested.documents, &labels)?;
    let provider = cfg.provider()?;
    let (triplets, docs_skipped) = corpus_triplets(&pairs, &provider, cfg);
    if triplets.is_empty() {
        return Err(Error::data(
            "no document produced training triplets; every one was skipped",
        ));
    }
    let trained = train_rank(&triplets, &cfg.rank_cfg())?;
    trained.model.save(model_out)?;
    Ok(TrainRankReport {
        epoch_losses: trained.epoch_losses,
        triplets: triplets.len(),
        docs_skipped,
        warnings: ingested.warnings,
    })
}

/// Outcome of `cmd_train_cluster`.
#[derive(Debug)]
pub struct TrainClusterReport {
    pub epoch_losses: Vec<f64>,
    pub vectors: usize,
    pub zero_vectors_skipped: usize,
    pub warnings: Vec<String>,
}

/// Trains the cluster model on every sentence vector of the corpus and
/// writes the model file.
pub fn cmd_train_cluster(
    in_path: &Path,
    model_out: &Path,
    cfg: &PipelineConfig,
) -> Result<TrainClusterReport> {
    cfg.validate()?;
    let ingested = ingest(in_path)?;
    let provider = cfg.provider()?;
    let vectors: Vec<Vec<f64>> = ingested
        .documents
        .iter()
        .flat_map(|d| d.sentences.iter().map(|s| provider.embed_sentence(s)))
        .collect();
    if vectors.is_empty() {
        return Err(Error::data("corpus has no sentences to train on"));
    }
    let trained = train_cluster(&vectors, &cfg.cluster_cfg())?;
    trained.model.save(model_out)?;
    Ok(TrainClusterReport {
        epoch_losses: trained.epoch_losses,
        vectors: vectors.len(),
        zero_vectors_skipped: trained.zero_vectors_skipped,
        warnings: ingested.warnings,
    })
}

/// Outcome of `cmd_summarize`.
#[derive(Debug)]
pub struct SummarizeReport {
    pub written: usize,
    /// Documents where filtering removed everything and the top-ranked
    /// sentence was kept instead.
    pub fallbacks: Vec<String>,
    /// Documents with no sentences; they get empty summaries.
    pub empty_docs: Vec<String>,
    pub warnings: Vec<String>,
}

fn check_dim(name: &str, have: usize, provider: &EmbeddingProvider) -> Result<()> {
    if have != provider.dim() {
        return Err(Error::dimension(format!(
            "{name} expects dimension {have}, embedding provider has {}",
            provider.dim()
        )));
    }
    Ok(())
}

/// Ranks, truncates to top_k, optionally filters, and writes summaries.
/// Kept sentences are emitted in document order joined by single spaces.
pub fn cmd_summarize(
    in_path: &Path,
    rank_model_path: &Path,
    cluster_model_path: Option<&Path>,
    out_path: &Path,
    cfg: &PipelineConfig,
) -> Result<SummarizeReport> {
    cfg.validate()?;
    let ingested = ingest(in_path)?;
    let provider = cfg.provider()?;
    let rank_model = RankModel::load(rank_model_path)?;
    check_dim("rank model", rank_model.in_dim(), &provider)?;
    let cluster_model = match cluster_model_path {
        Some(p) => {
            let m = ClusterModel::load(p)?;
            check_dim("cluster model", m.n(), &provider)?;
            Some(m)
        }
        None => None,
    };
    let filter_cfg = FilterConfig {
        threshold: cfg.threshold,
    };

    let mut records = Vec::new();
    let mut fallbacks = Vec::new();
    let mut empty_docs = Vec::new();
    for doc in &ingested.documents {
        if doc.sentences.is_empty() {
            empty_docs.push(doc.id.clone());
            records.push(SummaryRecord {
                id: doc.id.clone(),
                summary: String::new(),
                indices: Vec::new(),
            });
            continue;
        }
        let ranking = rank_sentences(&rank_model, doc, &provider)?;
        let top = SentenceRanking {
            doc_id: ranking.doc_id.clone(),
            ordered: ranking.ordered.into_iter().take(cfg.top_k).collect(),
        };
        let kept = match &cluster_model {
            Some(cm) => {
                let doc_vec = provider.embed_document(doc)?;
                let sentence_vecs: Vec<Vec<f64>> = doc
                    .sentences
                    .iter()
                    .map(|s| provider.embed_sentence(s))
                    .collect();
                let out = filter_sentences(cm, &top, &doc_vec, &sentence_vecs, &filter_cfg);
                if out.fallback {
                    fallbacks.push(doc.id.clone());
                }
                out.ranking.ordered
            }
            None => top.ordered,
        };
        let mut indices: Vec<usize> = kept.iter().map(|x| x.0).collect();
        indices.sort_unstable();
        let summary = indices
            .iter()
            .map(|&i| doc.sentences[i].text.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        records.push(SummaryRecord {
            id: doc.id.clone(),
            summary,
            indices,
        });
    }
    write_jsonl(out_path, &records)?;
    Ok(SummarizeReport {
        written: records.len(),
        fallbacks,
        empty_docs,
        warnings: ingested.warnings,
    })
}

/// Corpus-mean scores per variant.
#[derive(Debug)]
pub struct EvalReport {
    pub variants: Vec<(RougeVariant, RougeScore)>,
    pub documents: usize,
    /// Ids present on only one side.
    pub skipped: Vec<String>,
}

#[derive(Serialize)]
struct ScoreOut {
    precision: f64,
    recall: f64,
    f1: f64,
}

#[derive(Serialize)]
struct EvalOut {
    documents: usize,
    skipped: usize,
    scores: BTreeMap<String, ScoreOut>,
}

impl EvalReport {
    /// Fixed-width header and value row, `R-1-p R-1-r R-1-f ...` over
    /// percentages with two decimals.
    pub fn table(&self) -> String {
        let mut header = Vec::new();
        let mut values = Vec::new();
        for (variant, score) in &self.variants {
            for (suffix, value) in [
                ("p", score.precision),
                ("r", score.recall),
                ("f", score.f1),
            ] {
                header.push(format!("{:>8}", format!("{}-{suffix}", variant.label())));
                values.push(format!("{:>8.2}", value * 100.0));
            }
        }
        format!("{}\n{}", header.join(" "), values.join(" "))
    }

    /// One-line machine-readable JSON record.
    pub fn machine_record(&self) -> String {
        let out = EvalOut {
            documents: self.documents,
            skipped: self.skipped.len(),
            scores: self
                .variants
                .iter()
                .map(|(v, s)| {
                    (
                        v.label().to_string(),
                        ScoreOut {
                            precision: s.precision,
                            recall: s.recall,
                            f1: s.f1,
                        },
                    )
                })
                .collect(),
        };
        serde_json::to_string(&out).expect("report serializes")
    }
}

/// Scores generated summaries against gold summaries by id.
pub fn cmd_evaluate(
    summaries_path: &Path,
    gold_path: &Path,
    variants: &[RougeVariant],
) -> Result<EvalReport> {
    if variants.is_empty() {
        return Err(Error::config("at least one rouge variant is required"));
    }
    let summaries: Vec<SummaryRecord> = read_jsonl(summaries_path)?;
    let gold = ingest(gold_path)?;

    let mut by_id: HashMap<&str, &SummaryRecord> = HashMap::new();
    for s in &summaries {
        if by_id.insert(s.id.as_str(), s).is_some() {
            return Err(Error::data(format!("duplicate summary for id '{}'", s.id)));
        }
    }

    let mut skipped: Vec<String> = Vec::new();
    let mut evaluated = 0usize;
    let mut sums: Vec<(f64, f64, f64)> = vec![(0.0, 0.0, 0.0); variants.len()];
    let mut matched_ids: std::collections::HashSet<&str> = std::collections::HashSet::new();
    for doc in &gold.documents {
        let Some(summary) = by_id.get(doc.id.as_str()) else {
            skipped.push(doc.id.clone());
            continue;
        };
        matched_ids.insert(doc.id.as_str());
        let candidate = tokenize(&summary.summary);
        let reference = tokenize(&doc.gold_summary);
        evaluated += 1;
        for (slot, variant) in sums.iter_mut().zip(variants) {
            let score = score_pair(*variant, &candidate, &reference);
            slot.0 += score.precision;
            slot.1 += score.recall;
            slot.2 += score.f1;
        }
    }
    for s in &summaries {
        if !matched_ids.contains(s.id.as_str()) {
            skipped.push(s.id.clone());
        }
    }
    if evaluated == 0 {
        return Err(Error::data(
            "no document id appears in both the summaries and the gold corpus",
        ));
    }

    let n = evaluated as f64;
    let report_variants = variants
        .iter()
        .zip(&sums)
        .map(|(v, (p, r, f))| {
            (
                *v,
                RougeScore {
                    precision: p / n,
                    recall: r / n,
                    f1: f / n,
                },
            )
        })
        .collect();
    Ok(EvalReport {
        variants: report_variants,
        documents: evaluated,
        skipped,
    })
}

/// One sweep measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
}

/// Default sweep grid: 0.00, 0.05, ..., 0.95. Includes 0.25 exactly.
pub fn default_thresholds() -> Vec<f64> {
    (0..20).map(|i| i as f64 / 20.0).collect()
}

/// Measures sentence-keeping as a classifier against oracle membership,
/// per threshold. A sentence is predicted positive when it is in the
/// top_k ranking and its leading-cluster weight exceeds the threshold
/// (no fallback here, so keep-sets shrink as the threshold grows).
pub fn cmd_sweep_threshold(
    in_path: &Path,
    labels_path: &Path,
    rank_model_path: &Path,
    cluster_model_path: &Path,
    thresholds: &[f64],
    cfg: &PipelineConfig,
) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    if thresholds.is_empty() {
        return Err(Error::config("threshold list is empty"));
    }
    for &t in thresholds {
        if !(0.0..1.0).contains(&t) {
            return Err(Error::config(format!(
                "sweep threshold must be in [0, 1), got {t}"
            )));
        }
    }
    let ingested = ingest(in_path)?;
    let labels = load_labels(labels_path)?;
    let pairs = pair_by_id(&ingested.documents, &labels)?;
    let provider = cfg.provider()?;
    let rank_model = RankModel::load(rank_model_path)?;
    check_dim("rank model", rank_model.in_dim(), &provider)?;
    let cluster_model = ClusterModel::load(cluster_model_path)?;
    check_dim("cluster model", cluster_model.n(), &provider)?;

    // Per sentence: oracle membership, top_k membership, leading weight.
    let mut truths: Vec<bool> = Vec::new();
    let mut kept_weights: Vec<Option<f64>> = Vec::new();
    for (doc, label) in &pairs {
        if doc.sentences.is_empty() {
            continue;
        }
        let ranking = rank_sentences(&rank_model, doc, &provider)?;
        let top: std::collections::HashSet<usize> = ranking
            .ordered
            .iter()
            .take(cfg.top_k)
            .map(|x| x.0)
            .collect();
        let doc_vec = provider.embed_document(doc)?;
        let doc_weights = attention_weights(&cluster_model, &doc_vec);
        let mut a = 0;
        for (j, &w) in doc_weights.iter().enumerate() {
            if w > doc_weights[a] {
                a = j;
            }
        }
        for sentence in &doc.sentences {
            truths.push(label.selected.contains(&sentence.index));
            if top.contains(&sentence.index) {
                let w = attention_weights(&cluster_model, &provider.embed_sentence(sentence))[a];
                kept_weights.push(Some(w));
            } else {
                kept_weights.push(None);
            }
        }
    }
    let positives = truths.iter().filter(|&&t| t).count();
    let negatives = truths.len() - positives;
    if positives == 0 {
        return Err(Error::data(
            "oracle labels select no sentences; TPR is undefined",
        ));
    }
    if negatives == 0 {
        return Err(Error::data(
            "oracle labels select every sentence; FPR is undefined",
        ));
    }

    let rows = thresholds
        .iter()
        .map(|&t| {
            let mut tp = 0usize;
            let mut fp = 0usize;
            for (truth, weight) in truths.iter().zip(&kept_weights) {
                let predicted = matches!(weight, Some(w) if *w > t);
                match (predicted, truth) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    _ => {}
                }
            }
            SweepRow {
                threshold: t,
                tpr: tp as f64 / positives as f64,
                fpr: fp as f64 / negatives as f64,
            }
        })
        .collect();
    Ok(rows)
}

/// Renders sweep rows as CSV with a header.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("threshold,tpr,fpr\n");
    for row in rows {
        out.push_str(&format!("{},{},{}\n", row.threshold, row.tpr, row.fpr));
    }
    out
}

/// One histogram bin of one series.
#[derive(Debug, Clone, PartialEq)]
pub struct HistRow {
    pub series: &'static str,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: usize,
}

/// Outcome of `cmd_analyze_distances`.
#[derive(Debug)]
pub struct AnalyzeReport {
    pub triplets: usize,
    pub docs_skipped: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

const HIST_BINS: usize = 50;

fn histogram(series: &'static str, values: &[f64], max: f64) -> Vec<HistRow> {
    let width = (max / HIST_BINS as f64).max(f64::MIN_POSITIVE);
    let mut counts = vec![0usize; HIST_BINS];
    for &v in values {
        let bin = ((v / width) as usize).min(HIST_BINS - 1);
        counts[bin] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistRow {
            series,
            bin_lo: i as f64 * width,
            bin_hi: (i + 1) as f64 * width,
            count,
        })
        .collect()
}

/// Distances between each triplet's document and its positive/negative
/// sentence in the rank model's scoring space: raw cosine distance and
/// the kernel value (x - 0.45)^2. Writes four 50-bin histograms as CSV
/// `series,bin_lo,bin_hi,count`; raw series share one range, kernel
/// series the other.
pub fn cmd_analyze_distances(
    in_path: &Path,
    labels_path: &Path,
    rank_model_path: &Path,
    out_path: &Path,
    cfg: &PipelineConfig,
) -> Result<AnalyzeReport> {
    cfg.validate()?;
    let ingested = ingest(in_path)?;
    let labels = load_labels(labels_path)?;
    let pairs = pair_by_id(&ingested.documents, &labels)?;
    let provider = cfg.provider()?;
    let rank_model = RankModel::load(rank_model_path)?;
    check_dim("rank model", rank_model.in_dim(), &provider)?;

    let (triplets, docs_skipped) = corpus_triplets(&pairs, &provider, cfg);
    if triplets.is_empty() {
        return Err(Error::data("no triplets to analyze"));
    }
    let mut pos_raw = Vec::with_capacity(triplets.len());
    let mut neg_raw = Vec::with_capacity(triplets.len());
    for t in &triplets {
        let wt = rank_model.w.matvec(&t.text_vec);
        let wp = rank_model.w.matvec(&t.pos_vec);
        let wn = rank_model.w.matvec(&t.neg_vec);
        pos_raw.push(1.0 - cosine(&wt, &wp));
        neg_raw.push(1.0 - cosine(&wt, &wn));
    }
    let kernel = |x: &f64| (x - 0.45) * (x - 0.45);
    let pos_kernel: Vec<f64> = pos_raw.iter().map(kernel).collect();
    let neg_kernel: Vec<f64> = neg_raw.iter().map(kernel).collect();

    let raw_max = pos_raw
        .iter()
        .chain(&neg_raw)
        .fold(0.0_f64, |m, &x| m.max(x));
    let kernel_max = pos_kernel
        .iter()
        .chain(&neg_kernel)
        .fold(0.0_f64, |m, &x| m.max(x));

    let mut rows = Vec::with_capacity(4 * HIST_BINS);
    rows.extend(histogram("pos_raw", &pos_raw, raw_max));
    rows.extend(histogram("neg_raw", &neg_raw, raw_max));
    rows.extend(histogram("pos_kernel", &pos_kernel, kernel_max));
    rows.extend(histogram("neg_kernel", &neg_kernel, kernel_max));

    let mut out = String::from("series,bin_lo,bin_hi,count\n");
    for row in &rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.series, row.bin_lo, row.bin_hi, row.count
        ));
    }
    fs::write(out_path, out).map_err(|e| Error::io(out_path, e))?;
    Ok(AnalyzeReport {
        triplets: triplets.len(),
        docs_skipped,
        warnings: ingested.warnings,
    })
}

/// Loads a cluster model and a word-vector file and lists each cluster's
/// nearest tokens, one `cluster_id: w1, w2, ...` line per cluster.
pub fn cmd_aspects(
    cluster_model_path: &Path,
    vectors_path: &Path,
    top_m: usize,
) -> Result<Vec<String>> {
    if top_m == 0 {
        return Err(Error::config("top_m must be at least 1"));
    }
    let model = ClusterModel::load(cluster_model_path)?;
    let provider = load_vectors(vectors_path)?;
    let EmbeddingProvider::Lookup { table, dim } = provider else {
        unreachable!("load_vectors builds lookup providers");
    };
    if dim != model.n() {
        return Err(Error::dimension(format!(
            "cluster model expects dimension {}, word vectors have {dim}",
            model.n()
        )));
    }
    let mut vocab: Vec<(String, Vec<f64>)> = table.into_iter().collect();
    vocab.sort_by(|a, b| a.0.cmp(&b.0));
    let words = crate::cluster::aspect_words(&model, &vocab, top_m);
    Ok(words
        .into_iter()
        .enumerate()
        .map(|(j, tokens)| format!("{j}: {}", tokens.join(", ")))
        .collect())
}
