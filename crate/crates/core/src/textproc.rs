//! Deterministic tokenization, sentence segmentation, n-gram extraction,
//! and word counting.
//!
//! The rules here are deliberately simple and fully pinned down: every
//! downstream number (ROUGE scores, oracle labels, length budgets) depends
//! on them, so two runs over the same bytes must agree exactly.

use std::collections::HashMap;

/// One input record: raw text, the human reference summary, and the derived
/// sentence segmentation.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub gold_summary: String,
    pub sentences: Vec<Sentence>,
}

impl Document {
    /// Builds a document, deriving and caching its sentence list.
    pub fn new(id: impl Into<String>, text: impl Into<String>, gold_summary: impl Into<String>) -> Self {
        let text = text.into();
        let sentences = split_sentences(&text);
        Document {
            id: id.into(),
            text,
            gold_summary: gold_summary.into(),
            sentences,
        }
    }

    /// All tokens of the document, in order.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.sentences
            .iter()
            .flat_map(|s| s.tokens.iter().map(String::as_str))
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(|s| s.tokens.len()).sum()
    }
}

/// One sentence of a document; `index` is its 0-based position.
#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    pub index: usize,
    pub text: String,
    pub tokens: Vec<String>,
}

/// Dot-terminated abbreviations that never end a sentence.
const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "st", "vs", "e.g", "i.e", "etc", "u.s", "u.k",
];

/// Splits raw text into sentences.
///
/// A boundary is a `.`, `!`, or `?` followed by whitespace or end of text.
/// A `.` preceded by a listed abbreviation does not split. Segments whose
/// tokenization is empty are dropped.
pub fn split_sentences(text: &str) -> Vec<Sentence> {
    let chars: Vec<char> = text.chars().collect();
    let mut sentences = Vec::new();
    let mut start = 0;

    let flush = |segment: &[char], sentences: &mut Vec<Sentence>| {
        let trimmed: String = segment.iter().collect::<String>().trim().to_string();
        if trimmed.is_empty() {
            return;
        }
        let tokens = tokenize(&trimmed);
        if tokens.is_empty() {
            return;
        }
        let index = sentences.len();
        sentences.push(Sentence {
            index,
            text: trimmed,
            tokens,
        });
    };

    for i in 0..chars.len() {
        let c = chars[i];
        if c != '.' && c != '!' && c != '?' {
            continue;
        }
        let at_end = i + 1 == chars.len();
        if !at_end && !chars[i + 1].is_whitespace() {
            continue;
        }
        if c == '.' && is_abbreviation_before(&chars[start..i]) {
            continue;
        }
        flush(&chars[start..=i], &mut sentences);
        start = i + 1;
    }
    if start < chars.len() {
        flush(&chars[start..], &mut sentences);
    }
    sentences
}

/// Checks whether the word immediately preceding a candidate boundary dot
/// is a listed abbreviation. `segment` ends just before the dot.
fn is_abbreviation_before(segment: &[char]) -> bool {
    let word_start = segment
        .iter()
        .rposition(|c| c.is_whitespace())
        .map_or(0, |p| p + 1);
    let word = &segment[word_start..];
    // Leading punctuation like an opening quote or bracket is not part of
    // the abbreviation itself.
    let strip = word
        .iter()
        .position(|c| c.is_alphanumeric())
        .unwrap_or(word.len());
    let candidate: String = word[strip..].iter().flat_map(|c| c.to_lowercase()).collect();
    ABBREVIATIONS.contains(&candidate.as_str())
}

/// Lowercases, splits on whitespace, and strips leading/trailing
/// non-alphanumeric characters. Internal punctuation (apostrophes, hyphens,
/// dots) is kept; empty results are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split_whitespace()
        .filter_map(strip_edges)
        .collect()
}

fn strip_edges(word: &str) -> Option<String> {
    let chars: Vec<char> = word.chars().collect();
    let first = chars.iter().position(|c| c.is_alphanumeric())?;
    let last = chars.iter().rposition(|c| c.is_alphanumeric())?;
    Some(chars[first..=last].iter().collect())
}

/// All contiguous n-grams of `tokens` with multiplicity. Map keys are the
/// n-grams themselves. Empty when `tokens.len() < n`.
///
/// Panics when `n == 0`.
pub fn ngrams<'a>(tokens: &'a [String], n: usize) -> HashMap<&'a [String], u64> {
    assert!(n >= 1, "n-gram length must be at least 1");
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Number of words in `text` under this module's tokenizer.
pub fn word_count(text: &str) -> usize {
    tokenize(text).len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn texts(sentences: &[Sentence]) -> Vec<&str> {
        sentences.iter().map(|s| s.text.as_str()).collect()
    }

    #[test]
    fn empty_text_yields_no_sentences() {
        assert!(split_sentences("").is_empty());
    }

    #[test]
    fn splits_on_terminator_followed_by_space() {
        let s = split_sentences("A cat. A dog!");
        assert_eq!(texts(&s), vec!["A cat.", "A dog!"]);
        assert_eq!(s[0].index, 0);
        assert_eq!(s[1].index, 1);
    }

    #[test]
    fn abbreviation_suppresses_boundary() {
        let s = split_sentences("Dr. Smith ran.");
        assert_eq!(texts(&s), vec!["Dr. Smith ran."]);
    }

    #[test]
    fn dotted_abbreviations_suppress() {
        let s = split_sentences("Use fruit, e.g. apples. Then stop.");
        assert_eq!(texts(&s), vec!["Use fruit, e.g. apples.", "Then stop."]);
        let s = split_sentences("The U.S. economy grew. It did.");
        assert_eq!(texts(&s), vec!["The U.S. economy grew.", "It did."]);
    }

    #[test]
    fn terminator_without_space_does_not_split() {
        let s = split_sentences("Really?! Yes.");
        assert_eq!(texts(&s), vec!["Really?!", "Yes."]);
    }

    #[test]
    fn tokenless_segments_are_dropped() {
        assert!(split_sentences("... !!").is_empty());
        let s = split_sentences(". . hello");
        assert_eq!(texts(&s), vec!["hello"]);
    }

    #[test]
    fn unterminated_tail_is_a_sentence() {
        let s = split_sentences("One. two three");
        assert_eq!(texts(&s), vec!["One.", "two three"]);
    }

    #[test]
    fn exclamation_after_abbreviation_word_still_splits() {
        // Abbreviation suppression applies to dots only.
        let s = split_sentences("Stop mr! Go.");
        assert_eq!(texts(&s), vec!["Stop mr!", "Go."]);
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("The cat."), vec!["the", "cat"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("U.S.-based"), vec!["u.s.-based"]);
        assert_eq!(tokenize("don't stop"), vec!["don't", "stop"]);
        assert_eq!(tokenize("'quoted'"), vec!["quoted"]);
        assert!(tokenize("--- ...").is_empty());
    }

    #[test]
    fn word_count_matches_tokenize() {
        assert_eq!(word_count("a b c"), 3);
        assert_eq!(word_count(""), 0);
        assert_eq!(word_count("Dr. Smith ran."), 3);
    }

    #[test]
    fn ngram_counts_by_hand() {
        let toks: Vec<String> = ["a", "b", "a", "b"].iter().map(|s| s.to_string()).collect();
        let grams = ngrams(&toks, 2);
        assert_eq!(grams.len(), 2);
        assert_eq!(grams[&toks[0..2]], 2); // (a, b)
        assert_eq!(grams[&toks[1..3]], 1); // (b, a)

        let single: Vec<String> = vec!["a".to_string()];
        assert!(ngrams(&single, 2).is_empty());

        let two: Vec<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        let unigrams = ngrams(&two, 1);
        assert_eq!(unigrams.len(), 2);
        assert!(unigrams.values().all(|&c| c == 1));
    }

    #[test]
    #[should_panic(expected = "at least 1")]
    fn ngrams_rejects_zero() {
        let toks: Vec<String> = vec!["a".to_string()];
        ngrams(&toks, 0);
    }

    #[test]
    fn document_caches_sentences() {
        let doc = Document::new("d1", "A cat. A dog!", "cats");
        assert_eq!(doc.sentences.len(), 2);
        assert_eq!(doc.token_count(), 4);
        assert_eq!(doc.tokens().collect::<Vec<_>>(), vec!["a", "cat", "a", "dog"]);
    }

    proptest! {
        /// Re-splitting the joined sentence texts reproduces the same texts.
        #[test]
        fn resplit_is_idempotent(text in "[ a-zA-Z.!?]{0,80}") {
            let first = split_sentences(&text);
            let joined = first.iter().map(|s| s.text.as_str()).collect::<Vec<_>>().join(" ");
            let second = split_sentences(&joined);
            prop_assert_eq!(
                first.iter().map(|s| &s.text).collect::<Vec<_>>(),
                second.iter().map(|s| &s.text).collect::<Vec<_>>()
            );
        }

        #[test]
        fn ngram_total_multiplicity(tokens in proptest::collection::vec("[a-c]{1,2}", 0..12), n in 1usize..4) {
            let tokens: Vec<String> = tokens;
            let total: u64 = ngrams(&tokens, n).values().sum();
            let expected = (tokens.len() + 1).saturating_sub(n) as u64;
            prop_assert_eq!(total, expected);
        }

        #[test]
        fn tokenize_is_case_insensitive(text in "[ a-zA-Z.,'-]{0,60}") {
            prop_assert_eq!(tokenize(&text), tokenize(&text.to_uppercase()));
        }
    }
}
