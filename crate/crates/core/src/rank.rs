//! Sentence ranking: a trainable projection W scores sentences against
//! their document by sim(a, b) = (Wa)·(Wb), trained with SGD on triplets
//! (document, in-summary sentence, out-of-summary sentence).

use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::embed::{Embedding, EmbeddingProvider};
use crate::error::{Error, Result};
use crate::math::{dot, seeded_rng, sigmoid, softplus, Matrix};
use crate::oracle::OracleLabel;
use crate::textproc::Document;

/// Largest number of (positive, negative) pairs emitted per document.
pub const TRIPLET_CAP: usize = 16;

/// One training example in embedded form.
#[derive(Debug, Clone, PartialEq)]
pub struct Triplet {
    pub text_vec: Embedding,
    pub pos_vec: Embedding,
    pub neg_vec: Embedding,
    /// Randomized slot order the pair was emitted in. The scorer is
    /// symmetric so this does not affect the loss; it is kept so the
    /// construction matches its description.
    pub pos_first: bool,
}

/// Training objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Softmax over (s+, s-): -log(e^{s+} / (e^{s+} + e^{s-})).
    TripletNll,
    /// Binary cross-entropy on sigmoid(s+) vs 1 and sigmoid(s-) vs 0.
    BinaryCe,
}

impl LossKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LossKind::TripletNll => "triplet_nll",
            LossKind::BinaryCe => "binary_ce",
        }
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "triplet_nll" => Ok(LossKind::TripletNll),
            "binary_ce" => Ok(LossKind::BinaryCe),
            other => Err(Error::config(format!(
                "unknown loss kind '{other}', expected triplet_nll or binary_ce"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RankTrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub loss_kind: LossKind,
    /// Magnitude of the identity initialization; noise is a tenth of it.
    pub init_scale: f64,
    /// Output dimension d of W (d <= n). `None` keeps d = n.
    pub projection_dim: Option<usize>,
}

impl Default for RankTrainConfig {
    fn default() -> Self {
        RankTrainConfig {
            learning_rate: 0.01,
            epochs: 5,
            seed: 0,
            loss_kind: LossKind::TripletNll,
            init_scale: 0.1,
            projection_dim: None,
        }
    }
}

impl RankTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::config(format!(
                "learning_rate must be a positive finite number, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs must be at least 1"));
        }
        if !(self.init_scale > 0.0) || !self.init_scale.is_finite() {
            return Err(Error::config(format!(
                "init_scale must be a positive finite number, got {}",
                self.init_scale
            )));
        }
        if self.projection_dim == Some(0) {
            return Err(Error::config("projection_dim must be at least 1"));
        }
        Ok(())
    }
}

/// Projection applied to both sides of the dot-product score.
#[derive(Debug, Clone, PartialEq)]
pub struct RankModel {
    pub w: Matrix,
}

impl RankModel {
    /// Scoring-space dimension d.
    pub fn out_dim(&self) -> usize {
        self.w.rows()
    }

    /// Embedding dimension n.
    pub fn in_dim(&self) -> usize {
        self.w.cols()
    }

    /// Writes `SUMHIS-RANK v1 <d> <n>` then d rows of n floats, shortest
    /// round-trip formatting.
    pub fn save(&self, path: &Path) -> Result<()> {
        crate::matfile::write(path, "SUMHIS-RANK", &self.w)
    }

    pub fn load(path: &Path) -> Result<RankModel> {
        let w = crate::matfile::read(path, "SUMHIS-RANK")?;
        if w.rows() > w.cols() {
            return Err(Error::format(
                path,
                1,
                format!(
                    "projection is {}x{}, rows must not exceed columns",
                    w.rows(),
                    w.cols()
                ),
            ));
        }
        Ok(RankModel { w })
    }
}

/// Similarity in the projected space: (Wa)·(Wb).
pub fn sim(model: &RankModel, a: &[f64], b: &[f64]) -> f64 {
    dot(&model.w.matvec(a), &model.w.matvec(b))
}

/// Triplet softmax loss, -log(e^{s+} / (e^{s+} + e^{s-})), in the stable
/// form softplus(s- - s+).
pub fn rank_loss(model: &RankModel, t: &Triplet) -> f64 {
    let sp = sim(model, &t.text_vec, &t.pos_vec);
    let sn = sim(model, &t.text_vec, &t.neg_vec);
    softplus(sn - sp)
}

/// Analytic gradient of `rank_loss` in W. With sig = sigmoid(s- - s+)
/// and d(a·WᵀWb)/dW = (Wa)bᵀ + (Wb)aᵀ, the gradient is
/// sig · [(Wt)(n̄-p)ᵀ + (W(n̄-p))tᵀ]. The difference form keeps the
/// gradient exactly zero when pos and neg coincide.
pub fn rank_loss_grad(model: &RankModel, t: &Triplet) -> Matrix {
    let wt = model.w.matvec(&t.text_vec);
    let wp = model.w.matvec(&t.pos_vec);
    let wn = model.w.matvec(&t.neg_vec);
    let sig = sigmoid(dot(&wt, &wn) - dot(&wt, &wp));
    let diff: Vec<f64> = t.neg_vec.iter().zip(&t.pos_vec).map(|(n, p)| n - p).collect();
    let wdiff = model.w.matvec(&diff);
    let mut g = Matrix::zeros(model.out_dim(), model.in_dim());
    g.add_outer(&wt, &diff, sig);
    g.add_outer(&wdiff, &t.text_vec, sig);
    g
}

/// Binary cross-entropy on both pair scores: softplus(-s+) + softplus(s-).
pub fn binary_loss(model: &RankModel, t: &Triplet) -> f64 {
    let sp = sim(model, &t.text_vec, &t.pos_vec);
    let sn = sim(model, &t.text_vec, &t.neg_vec);
    softplus(-sp) + softplus(sn)
}

/// Analytic gradient of `binary_loss` in W.
pub fn binary_loss_grad(model: &RankModel, t: &Triplet) -> Matrix {
    let wt = model.w.matvec(&t.text_vec);
    let wp = model.w.matvec(&t.pos_vec);
    let wn = model.w.matvec(&t.neg_vec);
    let cp = sigmoid(dot(&wt, &wp)) - 1.0;
    let cn = sigmoid(dot(&wt, &wn));
    let mut g = Matrix::zeros(model.out_dim(), model.in_dim());
    g.add_outer(&wt, &t.pos_vec, cp);
    g.add_outer(&wp, &t.text_vec, cp);
    g.add_outer(&wt, &t.neg_vec, cn);
    g.add_outer(&wn, &t.text_vec, cn);
    g
}

fn loss_and_grad(model: &RankModel, t: &Triplet, kind: LossKind) -> (f64, Matrix) {
    match kind {
        LossKind::TripletNll => (rank_loss(model, t), rank_loss_grad(model, t)),
        LossKind::BinaryCe => (binary_loss(model, t), binary_loss_grad(model, t)),
    }
}

/// Builds triplets for one labeled document: every (selected, unselected)
/// sentence pair, uniformly subsampled to `TRIPLET_CAP` with the seed when
/// the product is larger. Slot order inside each triplet is randomized.
pub fn make_triplets(
    doc: &Document,
    label: &OracleLabel,
    provider: &EmbeddingProvider,
    seed: u64,
) -> Result<Vec<Triplet>> {
    if label.doc_id != doc.id {
        return Err(Error::data(format!(
            "label '{}' does not match document '{}'",
            label.doc_id, doc.id
        )));
    }
    let n_sents = doc.sentences.len();
    if let Some(&bad) = label.selected.iter().find(|&&i| i >= n_sents) {
        return Err(Error::data(format!(
            "label for '{}' selects sentence {bad}, document has {n_sents}",
            doc.id
        )));
    }
    let positives: Vec<usize> = label.selected.clone();
    let negatives: Vec<usize> =
        (0..n_sents).filter(|i| !positives.contains(i)).collect();
    if positives.is_empty() {
        return Err(Error::data(format!(
            "document '{}' has no positive sentences",
            doc.id
        )));
    }
    if negatives.is_empty() {
        return Err(Error::data(format!(
            "document '{}' has no negative sentences",
            doc.id
        )));
    }

    let text_vec = provider.embed_document(doc)?;
    let product = positives.len() * negatives.len();
    let mut rng = seeded_rng(seed);
    let pair_ids: Vec<usize> = if product <= TRIPLET_CAP {
        (0..product).collect()
    } else {
        let mut sampled = rand::seq::index::sample(&mut rng, product, TRIPLET_CAP).into_vec();
        sampled.sort_unstable();
        sampled
    };

    let mut triplets = Vec::with_capacity(pair_ids.len());
    for k in pair_ids {
        let pos = positives[k / negatives.len()];
        let neg = negatives[k % negatives.len()];
        triplets.push(Triplet {
            text_vec: text_vec.clone(),
            pos_vec: provider.embed_sentence(&doc.sentences[pos]),
            neg_vec: provider.embed_sentence(&doc.sentences[neg]),
            pos_first: rng.gen_bool(0.5),
        });
    }
    Ok(triplets)
}

/// Final model plus the mean loss of each epoch, in order.
#[derive(Debug)]
pub struct RankTraining {
    pub model: RankModel,
    pub epoch_losses: Vec<f64>,
}

/// SGD over the triplets: W starts at identity·init_scale plus uniform
/// noise in ±init_scale/10, one gradient step per triplet, order
/// reshuffled every epoch from the seeded stream.
pub fn train_rank(triplets: &[Triplet], cfg: &RankTrainConfig) -> Result<RankTraining> {
    cfg.validate()?;
    if triplets.is_empty() {
        return Err(Error::data("no triplets to train on"));
    }
    let n = triplets[0].text_vec.len();
    for (i, t) in triplets.iter().enumerate() {
        if t.text_vec.len() != n || t.pos_vec.len() != n || t.neg_vec.len() != n {
            return Err(Error::dimension(format!(
                "triplet {i} dimension differs from first triplet's {n}"
            )));
        }
    }
    let d = cfg.projection_dim.unwrap_or(n);
    if d > n {
        return Err(Error::config(format!(
            "projection_dim {d} exceeds embedding dimension {n}"
        )));
    }

    let mut rng = seeded_rng(cfg.seed);
    let noise = cfg.init_scale / 10.0;
    let mut w = Matrix::zeros(d, n);
    for r in 0..d {
        for c in 0..n {
            let base = if r == c { cfg.init_scale } else { 0.0 };
            w.set(r, c, base + rng.gen_range(-noise..=noise));
        }
    }
    let mut model = RankModel { w };

    let mut order: Vec<usize> = (0..triplets.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &k in &order {
            let (loss, grad) = loss_and_grad(&model, &triplets[k], cfg.loss_kind);
            if !loss.is_finite() {
                return Err(Error::numeric(format!(
                    "loss became non-finite at epoch {epoch}, triplet {k}; lower the learning rate"
                )));
            }
            total += loss;
            model.w.add_scaled(&grad, -cfg.learning_rate);
        }
        epoch_losses.push(total / triplets.len() as f64);
    }
    Ok(RankTraining { model, epoch_losses })
}

/// All sentences of one document ordered by relevance score.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceRanking {
    pub doc_id: String,
    /// (sentence index, score), descending score, ties by lower index.
    pub ordered: Vec<(usize, f64)>,
}

/// Scores each sentence by sim(document vector, sentence vector) and
/// sorts descending; equal scores keep document order.
pub fn rank_sentences(
    model: &RankModel,
    doc: &Document,
    provider: &EmbeddingProvider,
) -> Result<SentenceRanking> {
    let doc_vec = provider.embed_document(doc)?;
    let wd = model.w.matvec(&doc_vec);
    let mut ordered: Vec<(usize, f64)> = doc
        .sentences
        .iter()
        .map(|s| {
            let ws = model.w.matvec(&provider.embed_sentence(s));
            (s.index, dot(&wd, &ws))
        })
        .collect();
    ordered.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(SentenceRanking {
        doc_id: doc.id.clone(),
        ordered,
    })
}
