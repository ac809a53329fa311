//! Extractive oracle labels: the sentence subset maximizing ROUGE-N F1
//! against the gold summary under a token-length budget.
//!
//! A subset's candidate n-grams are counted within each selected sentence
//! and summed; n-grams never span sentence boundaries. The budget is
//! `length_factor` times the gold summary's token count, with both sides
//! measured by the shared tokenizer.

use std::collections::HashMap;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rouge::RougeScore;
use crate::textproc::{ngrams, tokenize, Document};

/// Largest sentence count accepted by exhaustive search (2^25 subsets).
pub const EXHAUSTIVE_CAP: usize = 25;

/// Search strategy requested by configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    Exhaustive,
    Greedy,
    /// Exhaustive up to `auto_cutoff` sentences, greedy beyond.
    Auto,
}

impl OracleMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            OracleMode::Exhaustive => "exhaustive",
            OracleMode::Greedy => "greedy",
            OracleMode::Auto => "auto",
        }
    }
}

impl FromStr for OracleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(OracleMode::Exhaustive),
            "greedy" => Ok(OracleMode::Greedy),
            "auto" => Ok(OracleMode::Auto),
            other => Err(Error::config(format!(
                "unknown oracle mode '{other}', expected exhaustive, greedy, or auto"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleConfig {
    /// ROUGE order of the objective.
    pub n: usize,
    /// Budget multiplier on the gold summary's token count.
    pub length_factor: f64,
    pub mode: OracleMode,
    /// Auto mode switches to greedy above this sentence count.
    pub auto_cutoff: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            n: 2,
            length_factor: 2.0,
            mode: OracleMode::Auto,
            auto_cutoff: 12,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("oracle n must be at least 1"));
        }
        if !(self.length_factor > 0.0) || !self.length_factor.is_finite() {
            return Err(Error::config(format!(
                "oracle length_factor must be a positive finite number, got {}",
                self.length_factor
            )));
        }
        if self.auto_cutoff == 0 {
            return Err(Error::config("oracle auto_cutoff must be at least 1"));
        }
        Ok(())
    }
}

/// Strategy that actually produced a label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMode {
    Exhaustive,
    Greedy,
}

impl LabelMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            LabelMode::Exhaustive => "exhaustive",
            LabelMode::Greedy => "greedy",
        }
    }
}

impl FromStr for LabelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(LabelMode::Exhaustive),
            "greedy" => Ok(LabelMode::Greedy),
            other => Err(Error::config(format!(
                "unknown label mode '{other}', expected exhaustive or greedy"
            ))),
        }
    }
}

/// Best extractive selection found for one document.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleLabel {
    pub doc_id: String,
    /// Sentence indices in ascending order.
    pub selected: Vec<usize>,
    /// ROUGE-N F1 of the selection against the gold summary.
    pub score: f64,
    pub mode_used: LabelMode,
    /// True when no single sentence fit the budget and the label is the
    /// best single sentence regardless of length.
    pub fallback: bool,
}

/// Scores sentence subsets against one gold summary. N-gram counts are
/// precomputed per sentence and merged per subset.
struct SubsetScorer<'a> {
    ref_counts: HashMap<&'a [String], u64>,
    ref_total: u64,
    sent_counts: Vec<HashMap<&'a [String], u64>>,
    sent_gram_totals: Vec<u64>,
}

impl<'a> SubsetScorer<'a> {
    fn new(doc: &'a Document, gold_tokens: &'a [String], n: usize) -> Self {
        let ref_counts = ngrams(gold_tokens, n);
        let ref_total = ref_counts.values().sum();
        let sent_counts: Vec<_> = doc
            .sentences
            .iter()
            .map(|s| ngrams(&s.tokens, n))
            .collect();
        let sent_gram_totals = sent_counts
            .iter()
            .map(|c| c.values().sum())
            .collect();
        SubsetScorer {
            ref_counts,
            ref_total,
            sent_counts,
            sent_gram_totals,
        }
    }

    fn score(&self, selected: &[usize]) -> f64 {
        let mut merged: HashMap<&[String], u64> = HashMap::new();
        let mut cand_total = 0u64;
        for &i in selected {
            for (gram, count) in &self.sent_counts[i] {
                *merged.entry(gram).or_insert(0) += count;
            }
            cand_total += self.sent_gram_totals[i];
        }
        let mut matched = 0u64;
        for (gram, count) in &merged {
            if let Some(ref_count) = self.ref_counts.get(gram) {
                matched += count.min(ref_count);
            }
        }
        let precision = if cand_total > 0 {
            matched as f64 / cand_total as f64
        } else {
            0.0
        };
        let recall = if self.ref_total > 0 {
            matched as f64 / self.ref_total as f64
        } else {
            0.0
        };
        RougeScore::from_precision_recall(precision, recall).f1
    }
}

struct Prepared<'a> {
    scorer: SubsetScorer<'a>,
    sent_lens: Vec<usize>,
    budget: f64,
}

fn prepare<'a>(
    doc: &'a Document,
    gold_tokens: &'a [String],
    cfg: &OracleConfig,
) -> Result<Prepared<'a>> {
    cfg.validate()?;
    if doc.sentences.is_empty() {
        return Err(Error::data(format!(
            "document '{}' has no sentences",
            doc.id
        )));
    }
    if gold_tokens.is_empty() {
        return Err(Error::data(format!(
            "document '{}' has an empty gold summary",
            doc.id
        )));
    }
    Ok(Prepared {
        scorer: SubsetScorer::new(doc, gold_tokens, cfg.n),
        sent_lens: doc.sentences.iter().map(|s| s.tokens.len()).collect(),
        budget: cfg.length_factor * gold_tokens.len() as f64,
    })
}

/// Best single sentence by score, smallest index on ties. Used when no
/// sentence fits the budget.
fn fallback_label(doc: &Document, scorer: &SubsetScorer, mode: LabelMode) -> OracleLabel {
    let mut best_idx = 0;
    let mut best_score = scorer.score(&[0]);
    for i in 1..doc.sentences.len() {
        let s = scorer.score(&[i]);
        if s > best_score {
            best_idx = i;
            best_score = s;
        }
    }
    OracleLabel {
        doc_id: doc.id.clone(),
        selected: vec![best_idx],
        score: best_score,
        mode_used: mode,
        fallback: true,
    }
}

/// Enumerates every sentence subset within the budget and returns the
/// highest-scoring one. Ties go to fewer sentences, then to the
/// lexicographically smallest index tuple.
pub fn exhaustive_oracle(doc: &Document, cfg: &OracleConfig) -> Result<OracleLabel> {
    let n_sents = doc.sentences.len();
    if n_sents > EXHAUSTIVE_CAP {
        return Err(Error::data(format!(
            "document '{}' has {n_sents} sentences, over the exhaustive cap of {EXHAUSTIVE_CAP}; use greedy mode",
            doc.id
        )));
    }
    let gold_tokens = tokenize(&doc.gold_summary);
    let p = prepare(doc, &gold_tokens, cfg)?;
    if p.sent_lens.iter().all(|&len| len as f64 > p.budget) {
        return Ok(fallback_label(doc, &p.scorer, LabelMode::Exhaustive));
    }

    let mut best_selected: Vec<usize> = Vec::new();
    let mut best_score = 0.0;
    for mask in 1u32..(1u32 << n_sents) {
        let mut selected = Vec::new();
        let mut len = 0usize;
        for i in 0..n_sents {
            if mask & (1 << i) != 0 {
                selected.push(i);
                len += p.sent_lens[i];
            }
        }
        if len as f64 > p.budget {
            continue;
        }
        let score = p.scorer.score(&selected);
        let better = score > best_score
            || (score == best_score
                && (selected.len() < best_selected.len()
                    || (selected.len() == best_selected.len() && selected < best_selected)));
        if better {
            best_selected = selected;
            best_score = score;
        }
    }
    Ok(OracleLabel {
        doc_id: doc.id.clone(),
        selected: best_selected,
        score: best_score,
        mode_used: LabelMode::Exhaustive,
        fallback: false,
    })
}

/// Forward greedy selection: repeatedly adds the in-budget sentence with
/// the largest strict score increase (smallest index on ties) until no
/// addition improves the score.
pub fn greedy_oracle(doc: &Document, cfg: &OracleConfig) -> Result<OracleLabel> {
    let gold_tokens = tokenize(&doc.gold_summary);
    let p = prepare(doc, &gold_tokens, cfg)?;
    if p.sent_lens.iter().all(|&len| len as f64 > p.budget) {
        return Ok(fallback_label(doc, &p.scorer, LabelMode::Greedy));
    }

    let mut selected: Vec<usize> = Vec::new();
    let mut total_len = 0usize;
    let mut current_score = 0.0;
    loop {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..doc.sentences.len() {
            if selected.contains(&i) {
                continue;
            }
            if (total_len + p.sent_lens[i]) as f64 > p.budget {
                continue;
            }
            let mut trial = selected.clone();
            let pos = trial.partition_point(|&j| j < i);
            trial.insert(pos, i);
            let score = p.scorer.score(&trial);
            if score > current_score && best.map_or(true, |(_, bs)| score > bs) {
                best = Some((i, score));
            }
        }
        match best {
            Some((i, score)) => {
                let pos = selected.partition_point(|&j| j < i);
                selected.insert(pos, i);
                total_len += p.sent_lens[i];
                current_score = score;
            }
            None => break,
        }
    }
    Ok(OracleLabel {
        doc_id: doc.id.clone(),
        selected,
        score: current_score,
        mode_used: LabelMode::Greedy,
        fallback: false,
    })
}

/// Applies the configured mode to one document. Auto picks exhaustive for
/// documents at or under the cutoff (clamped to the exhaustive cap).
pub fn label_document(doc: &Document, cfg: &OracleConfig) -> Result<OracleLabel> {
    match cfg.mode {
        OracleMode::Exhaustive => exhaustive_oracle(doc, cfg),
        OracleMode::Greedy => greedy_oracle(doc, cfg),
        OracleMode::Auto => {
            if doc.sentences.len() <= cfg.auto_cutoff.min(EXHAUSTIVE_CAP) {
                exhaustive_oracle(doc, cfg)
            } else {
                greedy_oracle(doc, cfg)
            }
        }
    }
}

/// Per-document result of a dataset conversion.
#[derive(Debug)]
pub enum ConvertOutcome {
    Label(OracleLabel),
    /// Document could not be labeled; the run continues.
    Skipped { doc_id: String, reason: String },
}

/// Labels a document stream, turning per-document failures (empty gold
/// summary, no sentences) into `Skipped` entries.
pub fn convert_dataset<'a>(
    docs: impl Iterator<Item = Document> + 'a,
    cfg: &'a OracleConfig,
) -> impl Iterator<Item = ConvertOutcome> + 'a {
    docs.map(move |doc| match label_document(&doc, cfg) {
        Ok(label) => ConvertOutcome::Label(label),
        Err(e) => ConvertOutcome::Skipped {
            doc_id: doc.id,
            reason: e.to_string(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn doc(text: &str, gold: &str) -> Document {
        Document::new("d", text, gold)
    }

    fn cfg(n: usize) -> OracleConfig {
        OracleConfig {
            n,
            ..OracleConfig::default()
        }
    }

    #[test]
    fn verbatim_sentence_scores_one() {
        let d = doc(
            "Alpha beta gamma. The cat sat on the mat. Epsilon zeta eta.",
            "The cat sat on the mat.",
        );
        let label = exhaustive_oracle(&d, &cfg(2)).unwrap();
        assert_eq!(label.selected, vec![1]);
        assert!((label.score - 1.0).abs() < 1e-12);
        assert!(!label.fallback);
    }

    #[test]
    fn three_sentence_example_selects_first_and_third() {
        let d = doc(
            "The cat sat. Dogs bark loudly. The mat was red.",
            "the cat sat on the mat",
        );
        let ex = exhaustive_oracle(&d, &cfg(2)).unwrap();
        assert_eq!(ex.selected, vec![0, 2]);
        assert!((ex.score - 0.6).abs() < 1e-12);

        let gr = greedy_oracle(&d, &cfg(2)).unwrap();
        assert_eq!(gr.selected, vec![0, 2]);
        assert!((gr.score - ex.score).abs() < 1e-15);
    }

    #[test]
    fn single_sentence_doc_within_budget() {
        let d = doc("The cat sat.", "the cat sat");
        let label = exhaustive_oracle(&d, &cfg(2)).unwrap();
        assert_eq!(label.selected, vec![0]);
        assert!((label.score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn greedy_empty_when_nothing_overlaps() {
        let d = doc("Alpha beta. Gamma delta.", "completely unrelated words");
        let label = greedy_oracle(&d, &cfg(1)).unwrap();
        assert!(label.selected.is_empty());
        assert_eq!(label.score, 0.0);
        assert!(!label.fallback);
    }

    #[test]
    fn ties_prefer_fewer_sentences_then_lower_indices() {
        // {2} and {0,1} both reach F1 = 1.0; one sentence wins.
        let d = doc("Aa bb. Cc dd. Aa bb cc dd.", "aa bb cc dd");
        let label = exhaustive_oracle(&d, &cfg(1)).unwrap();
        assert_eq!(label.selected, vec![2]);

        // {0} and {1} tie exactly; smaller index wins.
        let d = doc("Aa xx. Aa yy.", "aa");
        let label = exhaustive_oracle(&d, &cfg(1)).unwrap();
        assert_eq!(label.selected, vec![0]);
    }

    #[test]
    fn over_budget_everywhere_falls_back_to_best_single() {
        let c = OracleConfig {
            n: 1,
            length_factor: 1.0,
            ..OracleConfig::default()
        };
        // Budget 1 token; every sentence is longer.
        let d = doc("The cat sat. Dogs bark.", "cat");
        for label in [
            exhaustive_oracle(&d, &c).unwrap(),
            greedy_oracle(&d, &c).unwrap(),
        ] {
            assert!(label.fallback);
            assert_eq!(label.selected, vec![0]);
            assert!((label.score - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn exhaustive_refuses_oversized_documents() {
        let text = (0..26)
            .map(|i| format!("Sentence number {i} here."))
            .collect::<Vec<_>>()
            .join(" ");
        let d = doc(&text, "sentence number here");
        let err = exhaustive_oracle(&d, &cfg(2)).unwrap_err();
        assert!(err.to_string().contains("greedy"), "{err}");
        // Greedy still labels it.
        assert!(greedy_oracle(&d, &cfg(2)).is_ok());
    }

    #[test]
    fn empty_gold_summary_is_an_error() {
        let d = doc("The cat sat.", "...");
        assert!(exhaustive_oracle(&d, &cfg(2)).is_err());
        assert!(greedy_oracle(&d, &cfg(2)).is_err());
    }

    #[test]
    fn auto_mode_switches_at_cutoff() {
        let d = doc("Aa bb. Cc dd. Ee ff.", "aa bb cc");
        let low = OracleConfig {
            n: 1,
            auto_cutoff: 2,
            ..OracleConfig::default()
        };
        assert_eq!(
            label_document(&d, &low).unwrap().mode_used,
            LabelMode::Greedy
        );
        let high = OracleConfig {
            n: 1,
            auto_cutoff: 3,
            ..OracleConfig::default()
        };
        assert_eq!(
            label_document(&d, &high).unwrap().mode_used,
            LabelMode::Exhaustive
        );
    }

    #[test]
    fn convert_skips_unlabelable_docs() {
        let docs = vec![
            Document::new("a", "The cat sat on a mat.", "the cat sat"),
            Document::new("b", "Dogs bark.", ""),
            Document::new("c", "Birds sing songs.", "birds sing"),
        ];
        let c = cfg(1);
        let outcomes: Vec<_> = convert_dataset(docs.into_iter(), &c).collect();
        assert_eq!(outcomes.len(), 3);
        let labels = outcomes
            .iter()
            .filter(|o| matches!(o, ConvertOutcome::Label(_)))
            .count();
        assert_eq!(labels, 2);
        match &outcomes[1] {
            ConvertOutcome::Skipped { doc_id, .. } => assert_eq!(doc_id, "b"),
            other => panic!("expected skip, got {other:?}"),
        }

        let empty = convert_dataset(std::iter::empty(), &c).count();
        assert_eq!(empty, 0);
    }

    fn random_doc(rng: &mut impl Rng) -> Document {
        let vocab = ["cat", "dog", "mat", "sun", "rain", "tree", "bird", "road"];
        let n_sents = rng.gen_range(1..=8);
        let sentences: Vec<String> = (0..n_sents)
            .map(|_| {
                let n_words = rng.gen_range(1..=6);
                let words: Vec<&str> = (0..n_words)
                    .map(|_| vocab[rng.gen_range(0..vocab.len())])
                    .collect();
                format!("{}.", words.join(" "))
            })
            .collect();
        let n_gold = rng.gen_range(1..=8);
        let gold: Vec<&str> = (0..n_gold)
            .map(|_| vocab[rng.gen_range(0..vocab.len())])
            .collect();
        Document::new("r", &sentences.join(" "), &gold.join(" "))
    }

    #[test]
    fn greedy_never_beats_exhaustive() {
        let mut rng = crate::math::seeded_rng(11);
        for _ in 0..300 {
            let d = random_doc(&mut rng);
            for n in [1, 2] {
                let ex = exhaustive_oracle(&d, &cfg(n)).unwrap();
                let gr = greedy_oracle(&d, &cfg(n)).unwrap();
                assert!(
                    gr.score <= ex.score,
                    "greedy {} > exhaustive {} on {:?}",
                    gr.score,
                    ex.score,
                    d.text
                );
                // Budget compliance unless flagged.
                let c = cfg(n);
                for label in [&ex, &gr] {
                    if !label.fallback {
                        let len: usize = label
                            .selected
                            .iter()
                            .map(|&i| d.sentences[i].tokens.len())
                            .sum();
                        let gold_len = crate::textproc::word_count(&d.gold_summary);
                        assert!(len as f64 <= c.length_factor * gold_len as f64);
                    }
                }
            }
        }
    }

    #[test]
    fn labeling_is_deterministic() {
        let mut rng = crate::math::seeded_rng(12);
        let c = cfg(2);
        for _ in 0..50 {
            let d = random_doc(&mut rng);
            let a = label_document(&d, &c).unwrap();
            let b = label_document(&d, &c).unwrap();
            assert_eq!(a, b);
        }
    }
}
