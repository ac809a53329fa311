//! Hidden-structure discovery: a K×n matrix of cluster embeddings trained
//! so that attention-weighted reconstructions stay close (in cosine) to
//! the input vectors, plus the leading-cluster sentence filter built on it.

use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::embed::Embedding;
use crate::error::{Error, Result};
use crate::math::{cosine, dot, norm, seeded_rng, softmax_in_place, squared_distance, Matrix};
use crate::rank::SentenceRanking;

/// Rows are cluster embeddings c_j.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub c: Matrix,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.c.rows()
    }

    pub fn n(&self) -> usize {
        self.c.cols()
    }

    /// Writes `SUMHIS-CLUST v1 <K> <n>` then K rows of n floats.
    pub fn save(&self, path: &Path) -> Result<()> {
        crate::matfile::write(path, "SUMHIS-CLUST", &self.c)
    }

    pub fn load(path: &Path) -> Result<ClusterModel> {
        Ok(ClusterModel {
            c: crate::matfile::read(path, "SUMHIS-CLUST")?,
        })
    }
}

/// Initialization of C before training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterInit {
    /// Seeded uniform entries in [-0.1, 0.1].
    Random,
    /// Centroids of a seeded K-means run over the training vectors.
    Kmeans,
}

impl ClusterInit {
    pub fn as_str(&self) -> &'static str {
        match self {
            ClusterInit::Random => "random",
            ClusterInit::Kmeans => "kmeans",
        }
    }
}

impl FromStr for ClusterInit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(ClusterInit::Random),
            "kmeans" => Ok(ClusterInit::Kmeans),
            other => Err(Error::config(format!(
                "unknown cluster init '{other}', expected random or kmeans"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClusterTrainConfig {
    /// Cluster count K.
    pub clusters: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub init: ClusterInit,
    /// Weight of the orthonormality regularizer; 0 disables it.
    pub ortho_weight: f64,
}

impl Default for ClusterTrainConfig {
    fn default() -> Self {
        ClusterTrainConfig {
            clusters: 8,
            epochs: 2,
            learning_rate: 0.05,
            seed: 0,
            init: ClusterInit::Random,
            ortho_weight: 0.0,
        }
    }
}

impl ClusterTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.clusters == 0 {
            return Err(Error::config("clusters must be at least 1"));
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs must be at least 1"));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::config(format!(
                "learning_rate must be a positive finite number, got {}",
                self.learning_rate
            )));
        }
        if !(self.ortho_weight >= 0.0) || !self.ortho_weight.is_finite() {
            return Err(Error::config(format!(
                "ortho_weight must be a non-negative finite number, got {}",
                self.ortho_weight
            )));
        }
        Ok(())
    }
}

/// Threshold for the leading-cluster sentence filter.
#[derive(Debug, Clone, Copy)]
pub struct FilterConfig {
    pub threshold: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig { threshold: 0.25 }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold >= 0.0 && self.threshold < 1.0) {
            return Err(Error::config(format!(
                "threshold must be in [0, 1), got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// Softmax over the dot products of q with each cluster row. Always sums
/// to 1 with every component strictly positive.
pub fn attention_weights(model: &ClusterModel, q: &[f64]) -> Vec<f64> {
    let mut scores = model.c.matvec(q);
    softmax_in_place(&mut scores);
    scores
}

/// Attention-weighted sum of the cluster rows, o = Σ p_j c_j.
pub fn reconstruct(model: &ClusterModel, p: &[f64]) -> Vec<f64> {
    assert_eq!(p.len(), model.k(), "weight count must equal cluster count");
    let total: f64 = p.iter().sum();
    assert!(
        (total - 1.0).abs() <= 1e-9,
        "weights must sum to 1, got {total}"
    );
    let mut o = vec![0.0; model.n()];
    for (j, &w) in p.iter().enumerate() {
        for (o_i, c_i) in o.iter_mut().zip(model.c.row(j)) {
            *o_i += w * c_i;
        }
    }
    o
}

/// Cosine distance between q and its reconstruction, in [0, 2]. A zero
/// reconstruction counts as maximally dissimilar (loss 1).
pub fn cluster_loss(model: &ClusterModel, q: &[f64]) -> f64 {
    assert!(norm(q) > 0.0, "input vector must be nonzero");
    let p = attention_weights(model, q);
    let o = reconstruct(model, &p);
    if norm(&o) == 0.0 {
        return 1.0;
    }
    1.0 - cosine(q, &o)
}

/// Analytic gradient of `cluster_loss` in C. Row j receives
/// p_j·g_o + d_j·q, where g_o is the loss gradient in the reconstruction
/// and d is the softmax backward pass of b_j = g_o·c_j. Zero
/// reconstruction returns the zero matrix, matching the loss convention.
pub fn cluster_loss_grad(model: &ClusterModel, q: &[f64]) -> Matrix {
    assert!(norm(q) > 0.0, "input vector must be nonzero");
    let p = attention_weights(model, q);
    let o = reconstruct(model, &p);
    let o_norm = norm(&o);
    let mut g = Matrix::zeros(model.k(), model.n());
    if o_norm == 0.0 {
        return g;
    }
    let q_norm = norm(q);
    let cosv = dot(q, &o) / (q_norm * o_norm);
    // d loss / d o
    let g_o: Vec<f64> = q
        .iter()
        .zip(&o)
        .map(|(qi, oi)| -qi / (q_norm * o_norm) + cosv * oi / (o_norm * o_norm))
        .collect();
    let b: Vec<f64> = (0..model.k()).map(|j| dot(&g_o, model.c.row(j))).collect();
    let pb: f64 = p.iter().zip(&b).map(|(pj, bj)| pj * bj).sum();
    for j in 0..model.k() {
        let dj = p[j] * (b[j] - pb);
        let row = g.row_mut(j);
        for i in 0..row.len() {
            row[i] = p[j] * g_o[i] + dj * q[i];
        }
    }
    g
}

/// Squared Frobenius norm of (ĈĈᵀ − I) with rows of C normalized to unit
/// length. Zero for orthonormal rows.
pub fn ortho_reg(model: &ClusterModel) -> Result<f64> {
    let normalized = normalized_rows(model)?;
    let mut total = 0.0;
    for j in 0..model.k() {
        for l in 0..model.k() {
            let g = dot(normalized.row(j), normalized.row(l)) - if j == l { 1.0 } else { 0.0 };
            total += g * g;
        }
    }
    Ok(total)
}

/// Analytic gradient of `ortho_reg` in C: with G = ĈĈᵀ − I and V = 4GĈ,
/// row j is (V_j − (V_j·ĉ_j)ĉ_j) / ‖c_j‖.
pub fn ortho_reg_grad(model: &ClusterModel) -> Result<Matrix> {
    let k = model.k();
    let normalized = normalized_rows(model)?;
    let mut gram = Matrix::zeros(k, k);
    for j in 0..k {
        for l in 0..k {
            let v = dot(normalized.row(j), normalized.row(l)) - if j == l { 1.0 } else { 0.0 };
            gram.set(j, l, v);
        }
    }
    let mut grad = Matrix::zeros(k, model.n());
    for j in 0..k {
        let mut v_j = vec![0.0; model.n()];
        for l in 0..k {
            let w = 4.0 * gram.get(j, l);
            for (vi, ci) in v_j.iter_mut().zip(normalized.row(l)) {
                *vi += w * ci;
            }
        }
        let c_hat = normalized.row(j);
        let radial = dot(&v_j, c_hat);
        let r = norm(model.c.row(j));
        let row = grad.row_mut(j);
        for i in 0..row.len() {
            row[i] = (v_j[i] - radial * c_hat[i]) / r;
        }
    }
    Ok(grad)
}

fn normalized_rows(model: &ClusterModel) -> Result<Matrix> {
    let mut normalized = model.c.clone();
    for j in 0..model.k() {
        let r = norm(model.c.row(j));
        if r == 0.0 {
            return Err(Error::numeric(format!(
                "cluster row {j} is all zeros, orthonormal regularizer undefined"
            )));
        }
        for v in normalized.row_mut(j) {
            *v /= r;
        }
    }
    Ok(normalized)
}

/// Component `a` of the attention weights of q.
pub fn leading_weight(model: &ClusterModel, q: &[f64], a: usize) -> f64 {
    assert!(a < model.k(), "cluster index {a} out of range");
    attention_weights(model, q)[a]
}

/// Final model, per-epoch mean losses, and how many zero vectors were
/// dropped from the stream.
#[derive(Debug)]
pub struct ClusterTraining {
    pub model: ClusterModel,
    pub epoch_losses: Vec<f64>,
    pub zero_vectors_skipped: usize,
}

/// SGD on the reconstruction loss (plus the weighted orthonormal
/// regularizer when enabled), one vector per step, order reshuffled every
/// epoch from the seeded stream.
pub fn train_cluster(vectors: &[Embedding], cfg: &ClusterTrainConfig) -> Result<ClusterTraining> {
    cfg.validate()?;
    let usable: Vec<&Embedding> = vectors.iter().filter(|v| norm(v) > 0.0).collect();
    let zero_vectors_skipped = vectors.len() - usable.len();
    if usable.is_empty() {
        return Err(Error::data("no nonzero vectors to train on"));
    }
    let n = usable[0].len();
    if let Some(bad) = usable.iter().position(|v| v.len() != n) {
        return Err(Error::dimension(format!(
            "vector {bad} has dimension {}, expected {n}",
            usable[bad].len()
        )));
    }

    let k = cfg.clusters;
    let mut rng = seeded_rng(cfg.seed);
    let c = match cfg.init {
        ClusterInit::Random => {
            let mut c = Matrix::zeros(k, n);
            for j in 0..k {
                for i in 0..n {
                    c.set(j, i, rng.gen_range(-0.1..=0.1));
                }
            }
            c
        }
        ClusterInit::Kmeans => {
            let owned: Vec<Embedding> = usable.iter().map(|v| (*v).clone()).collect();
            kmeans_init(&owned, k, rng.gen())?
        }
    };
    let mut model = ClusterModel { c };

    let mut order: Vec<usize> = (0..usable.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &idx in &order {
            let q = usable[idx];
            let mut loss = cluster_loss(&model, q);
            let mut grad = cluster_loss_grad(&model, q);
            if cfg.ortho_weight > 0.0 {
                loss += cfg.ortho_weight * ortho_reg(&model)?;
                grad.add_scaled(&ortho_reg_grad(&model)?, cfg.ortho_weight);
            }
            if !loss.is_finite() {
                return Err(Error::numeric(format!(
                    "loss became non-finite at epoch {epoch}, vector {idx}; lower the learning rate"
                )));
            }
            total += loss;
            model.c.add_scaled(&grad, -cfg.learning_rate);
        }
        epoch_losses.push(total / usable.len() as f64);
    }
    if (0..k).any(|j| model.c.row(j).iter().all(|&x| x == 0.0)) {
        return Err(Error::numeric(
            "training produced an all-zero cluster row; change the seed or learning rate",
        ));
    }
    Ok(ClusterTraining {
        model,
        epoch_losses,
        zero_vectors_skipped,
    })
}

/// Lloyd's K-means over the vectors: seeded centers drawn without
/// replacement, at most 100 iterations, stopping when relative center
/// movement drops below 1e-6. Empty clusters are re-seeded from the
/// points farthest from their assigned centers.
pub fn kmeans_init(vectors: &[Embedding], k: usize, seed: u64) -> Result<Matrix> {
    if k == 0 {
        return Err(Error::config("k must be at least 1"));
    }
    let distinct: std::collections::HashSet<Vec<u64>> = vectors
        .iter()
        .map(|v| v.iter().map(|x| x.to_bits()).collect())
        .collect();
    if distinct.len() < k {
        return Err(Error::data(format!(
            "k-means needs at least {k} distinct vectors, got {}",
            distinct.len()
        )));
    }
    let n = vectors[0].len();
    let mut rng = seeded_rng(seed);
    let mut center_ids = rand::seq::index::sample(&mut rng, vectors.len(), k).into_vec();
    center_ids.sort_unstable();
    let mut centers = Matrix::zeros(k, n);
    for (j, &idx) in center_ids.iter().enumerate() {
        centers.row_mut(j).copy_from_slice(&vectors[idx]);
    }

    let mut assign = vec![0usize; vectors.len()];
    for _ in 0..100 {
        for (v, slot) in vectors.iter().zip(assign.iter_mut()) {
            let mut best = 0;
            let mut best_d = squared_distance(v, centers.row(0));
            for j in 1..k {
                let d = squared_distance(v, centers.row(j));
                if d < best_d {
                    best = j;
                    best_d = d;
                }
            }
            *slot = best;
        }

        let mut next = Matrix::zeros(k, n);
        let mut counts = vec![0usize; k];
        for (v, &j) in vectors.iter().zip(&assign) {
            counts[j] += 1;
            for (acc, x) in next.row_mut(j).iter_mut().zip(v.iter()) {
                *acc += x;
            }
        }
        let mut reseeded: Vec<usize> = Vec::new();
        for j in 0..k {
            if counts[j] > 0 {
                for acc in next.row_mut(j) {
                    *acc /= counts[j] as f64;
                }
            } else {
                // Farthest point from its center, skipping points already
                // used to refill another empty cluster this round.
                let far = (0..vectors.len())
                    .filter(|i| !reseeded.contains(i))
                    .max_by(|&a, &b| {
                        let da = squared_distance(&vectors[a], centers.row(assign[a]));
                        let db = squared_distance(&vectors[b], centers.row(assign[b]));
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .expect("more vectors than clusters");
                reseeded.push(far);
                next.row_mut(j).copy_from_slice(&vectors[far]);
            }
        }

        let mut moved = 0.0;
        let mut base = 0.0;
        for j in 0..k {
            moved += squared_distance(next.row(j), centers.row(j));
            base += dot(centers.row(j), centers.row(j));
        }
        centers = next;
        if moved.sqrt() < 1e-6 * base.sqrt().max(1e-12) {
            break;
        }
    }
    Ok(centers)
}

/// Ranking after the leading-cluster filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub ranking: SentenceRanking,
    /// True when the filter removed every sentence and the top-ranked one
    /// was kept instead.
    pub fallback: bool,
}

/// Drops every sentence whose weight on the document's leading cluster is
/// at or below the threshold. The leading cluster is the argmax attention
/// component of the document vector (smallest index on ties). Keeps input
/// order; keeps the top-ranked sentence if everything would be removed.
pub fn filter_sentences(
    model: &ClusterModel,
    ranking: &SentenceRanking,
    doc_vec: &[f64],
    sentence_vecs: &[Embedding],
    cfg: &FilterConfig,
) -> FilterOutcome {
    if ranking.ordered.is_empty() {
        return FilterOutcome {
            ranking: ranking.clone(),
            fallback: false,
        };
    }
    for (i, _) in &ranking.ordered {
        assert!(
            *i < sentence_vecs.len(),
            "ranking index {i} outside sentence vectors"
        );
    }
    let doc_weights = attention_weights(model, doc_vec);
    let mut a = 0;
    for (j, &w) in doc_weights.iter().enumerate() {
        if w > doc_weights[a] {
            a = j;
        }
    }

    let kept: Vec<(usize, f64)> = ranking
        .ordered
        .iter()
        .filter(|(i, _)| leading_weight(model, &sentence_vecs[*i], a) > cfg.threshold)
        .cloned()
        .collect();
    let (ordered, fallback) = if kept.is_empty() {
        (vec![ranking.ordered[0]], true)
    } else {
        (kept, false)
    };
    FilterOutcome {
        ranking: SentenceRanking {
            doc_id: ranking.doc_id.clone(),
            ordered,
        },
        fallback,
    }
}

/// Top-m vocabulary tokens by cosine similarity to each cluster row,
/// descending, ties in token order.
pub fn aspect_words(
    model: &ClusterModel,
    vocab: &[(String, Embedding)],
    top_m: usize,
) -> Vec<Vec<String>> {
    (0..model.k())
        .map(|j| {
            let row = model.c.row(j);
            let mut scored: Vec<(&String, f64)> = vocab
                .iter()
                .map(|(token, v)| (token, cosine(row, v)))
                .collect();
            scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
            scored.into_iter().take(top_m).map(|(t, _)| t.clone()).collect()
        })
        .collect()
}
