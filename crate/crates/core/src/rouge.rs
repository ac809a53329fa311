//! Exact ROUGE-1, ROUGE-2, and ROUGE-L (precision, recall, F1).
//!
//! N-gram matching uses clipped counts: a shared n-gram is credited
//! `min(count in candidate, count in reference)` times. With several
//! references, matches and reference counts are summed over the reference
//! set and the precision denominator scales by the number of references,
//! which reduces to the usual single-reference scores when one reference
//! is given.

use crate::textproc::ngrams;

/// Precision/recall/F1 triple for one candidate-reference comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    /// Builds a score from precision and recall; F1 is their harmonic mean,
    /// 0 when both are 0.
    pub fn from_precision_recall(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        RougeScore {
            precision,
            recall,
            f1,
        }
    }

    fn zero() -> Self {
        RougeScore {
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
        }
    }
}

/// Which ROUGE to compute: n-gram overlap or longest common subsequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RougeVariant {
    N(usize),
    L,
}

impl RougeVariant {
    pub fn label(&self) -> String {
        match self {
            RougeVariant::N(n) => format!("R-{n}"),
            RougeVariant::L => "R-L".to_string(),
        }
    }
}

impl std::str::FromStr for RougeVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "L" | "l" => Ok(RougeVariant::L),
            other => match other.parse::<usize>() {
                Ok(n) if n >= 1 => Ok(RougeVariant::N(n)),
                _ => Err(format!("invalid ROUGE variant '{s}' (expected 1, 2, ... or L)")),
            },
        }
    }
}

/// ROUGE-N of a candidate against one or more references.
///
/// Panics when `n == 0` or `references` is empty; degenerate token lists
/// yield zero scores instead of errors.
pub fn rouge_n(candidate: &[String], references: &[&[String]], n: usize) -> RougeScore {
    assert!(n >= 1, "n-gram length must be at least 1");
    assert!(!references.is_empty(), "at least one reference is required");

    let cand_grams = ngrams(candidate, n);
    let cand_total: u64 = cand_grams.values().sum();

    let mut matched: u64 = 0;
    let mut ref_total: u64 = 0;
    for reference in references {
        let ref_grams = ngrams(reference, n);
        for (gram, &ref_count) in &ref_grams {
            ref_total += ref_count;
            let cand_count = cand_grams.get(gram).copied().unwrap_or(0);
            matched += cand_count.min(ref_count);
        }
    }

    let precision_denom = cand_total * references.len() as u64;
    let precision = if precision_denom > 0 {
        matched as f64 / precision_denom as f64
    } else {
        0.0
    };
    let recall = if ref_total > 0 {
        matched as f64 / ref_total as f64
    } else {
        0.0
    };
    RougeScore::from_precision_recall(precision, recall)
}

/// Longest common subsequence length via the standard dynamic program.
pub fn lcs_length(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for ai in a {
        for (j, bj) in b.iter().enumerate() {
            curr[j + 1] = if ai == bj {
                prev[j] + 1
            } else {
                curr[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// ROUGE-L: LCS-based precision/recall against a single reference.
pub fn rouge_l(candidate: &[String], reference: &[String]) -> RougeScore {
    if candidate.is_empty() || reference.is_empty() {
        return RougeScore::zero();
    }
    let lcs = lcs_length(candidate, reference) as f64;
    RougeScore::from_precision_recall(lcs / candidate.len() as f64, lcs / reference.len() as f64)
}

/// Dispatches one (candidate, reference) pair to the requested variant.
pub fn score_pair(variant: RougeVariant, candidate: &[String], reference: &[String]) -> RougeScore {
    match variant {
        RougeVariant::N(n) => rouge_n(candidate, &[reference], n),
        RougeVariant::L => rouge_l(candidate, reference),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(words: &str) -> Vec<String> {
        words.split_whitespace().map(|w| w.to_string()).collect()
    }

    #[test]
    fn identical_texts_score_one() {
        let t = toks("the cat sat");
        let s = rouge_n(&t, &[&t], 1);
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn hand_counted_unigram_overlap() {
        let cand = toks("the cat sat on mat");
        let reference = toks("the cat lay on the mat");
        let s = rouge_n(&cand, &[&reference], 1);
        assert!((s.precision - 0.8).abs() < 1e-12);
        assert!((s.recall - 4.0 / 6.0).abs() < 1e-12);
        assert!((s.f1 - 0.7272727272727273).abs() < 1e-12);
    }

    #[test]
    fn hand_counted_bigram_overlap() {
        let cand = toks("the cat sat on mat");
        let reference = toks("the cat lay on the mat");
        let s = rouge_n(&cand, &[&reference], 2);
        assert!((s.precision - 0.25).abs() < 1e-12);
        assert!((s.recall - 0.2).abs() < 1e-12);
        assert!((s.f1 - 0.2222222222222222).abs() < 1e-12);
    }

    #[test]
    fn multi_reference_aggregation() {
        // candidate [a b], refs [a b] and [b c]: matches 2 + 1, ref total 4,
        // precision denom 2 * 2.
        let cand = toks("a b");
        let r1 = toks("a b");
        let r2 = toks("b c");
        let s = rouge_n(&cand, &[&r1, &r2], 1);
        assert!((s.precision - 3.0 / 4.0).abs() < 1e-12);
        assert!((s.recall - 3.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn empty_inputs_yield_zero() {
        let empty: Vec<String> = Vec::new();
        let r = toks("a b");
        let s = rouge_n(&empty, &[&r], 1);
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
        let s = rouge_l(&empty, &r);
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    #[should_panic(expected = "at least 1")]
    fn rouge_n_rejects_zero_order() {
        let t = toks("a");
        rouge_n(&t, &[&t], 0);
    }

    #[test]
    #[should_panic(expected = "reference")]
    fn rouge_n_rejects_no_references() {
        let t = toks("a");
        rouge_n(&t, &[], 1);
    }

    #[test]
    fn lcs_hand_cases() {
        assert_eq!(lcs_length(&toks("a b c"), &toks("a b c")), 3);
        assert_eq!(lcs_length(&toks("a b c d"), &toks("a c b d")), 3);
        assert_eq!(lcs_length(&toks(""), &toks("a")), 0);
    }

    #[test]
    fn rouge_l_hand_case() {
        let s = rouge_l(&toks("a b c d"), &toks("a c b d"));
        assert!((s.precision - 0.75).abs() < 1e-12);
        assert!((s.recall - 0.75).abs() < 1e-12);
        assert!((s.f1 - 0.75).abs() < 1e-12);
        let ident = toks("v w x y z");
        let s = rouge_l(&ident, &ident);
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn contiguous_containment_gives_full_precision() {
        let reference = toks("w x y z q");
        let cand = toks("x y z");
        for n in 1..=3 {
            assert_eq!(rouge_n(&cand, &[&reference], n).precision, 1.0);
        }
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("1".parse::<RougeVariant>().unwrap(), RougeVariant::N(1));
        assert_eq!("L".parse::<RougeVariant>().unwrap(), RougeVariant::L);
        assert!("0".parse::<RougeVariant>().is_err());
        assert!("x".parse::<RougeVariant>().is_err());
    }

    proptest! {
        /// Swapping candidate and reference swaps precision and recall.
        #[test]
        fn swap_symmetry(
            a in proptest::collection::vec("[a-c]", 0..10),
            b in proptest::collection::vec("[a-c]", 0..10),
            n in 1usize..3,
        ) {
            let a: Vec<String> = a;
            let b: Vec<String> = b;
            let ab = rouge_n(&a, &[&b], n);
            let ba = rouge_n(&b, &[&a], n);
            prop_assert_eq!(ab.precision, ba.recall);
            prop_assert_eq!(ab.recall, ba.precision);
        }

        #[test]
        fn lcs_bounds(
            a in proptest::collection::vec("[a-c]", 0..12),
            b in proptest::collection::vec("[a-c]", 0..12),
        ) {
            let a: Vec<String> = a;
            let b: Vec<String> = b;
            prop_assert!(lcs_length(&a, &b) <= a.len().min(b.len()));
            prop_assert_eq!(lcs_length(&a, &a), a.len());
        }
    }
}
