//! Frozen dense representations for tokens, sentences, and documents.
//!
//! Two providers: a lookup table parsed from a word-vector text file, and a
//! hash-seeded pseudorandom embedder that needs no external data. Sentence
//! and document vectors are plain arithmetic means of token vectors.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::math::{fnv1a64, seeded_rng};
use crate::textproc::{Document, Sentence};

/// Dense vector of a shared, fixed dimension.
pub type Embedding = Vec<f64>;

/// Source of token vectors. The dimension is fixed at construction and
/// every emitted vector has it.
#[derive(Debug, Clone)]
pub enum EmbeddingProvider {
    Lookup { table: HashMap<String, Embedding>, dim: usize },
    Hashed { dim: usize, seed: u64 },
}

impl EmbeddingProvider {
    /// Deterministic hash-seeded provider.
    pub fn hashed(dim: usize, seed: u64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::config(format!(
                "embedding dimension must be at least 2, got {dim}"
            )));
        }
        Ok(EmbeddingProvider::Hashed { dim, seed })
    }

    pub fn dim(&self) -> usize {
        match self {
            EmbeddingProvider::Lookup { dim, .. } => *dim,
            EmbeddingProvider::Hashed { dim, .. } => *dim,
        }
    }

    /// Vector for one token; `None` on a lookup miss.
    pub fn token_vector(&self, token: &str) -> Option<Embedding> {
        match self {
            EmbeddingProvider::Lookup { table, .. } => table.get(token).cloned(),
            EmbeddingProvider::Hashed { dim, seed } => Some(hashed_embed(token, *dim, *seed)),
        }
    }

    /// Mean of the sentence's token vectors. Lookup misses contribute the
    /// zero vector; an all-miss sentence embeds to the zero vector.
    pub fn embed_sentence(&self, sentence: &Sentence) -> Embedding {
        assert!(!sentence.tokens.is_empty(), "sentence must have tokens");
        self.mean_of_tokens(sentence.tokens.iter().map(String::as_str))
    }

    /// Mean over all tokens of the document (not a mean of sentence means).
    pub fn embed_document(&self, doc: &Document) -> Result<Embedding> {
        if doc.token_count() == 0 {
            return Err(Error::data(format!(
                "document '{}' has no tokens to embed",
                doc.id
            )));
        }
        Ok(self.mean_of_tokens(doc.tokens()))
    }

    fn mean_of_tokens<'a>(&self, tokens: impl Iterator<Item = &'a str>) -> Embedding {
        let mut sum = vec![0.0; self.dim()];
        let mut count = 0usize;
        for token in tokens {
            count += 1;
            if let Some(v) = self.token_vector(token) {
                for (s, x) in sum.iter_mut().zip(&v) {
                    *s += x;
                }
            }
        }
        if count > 0 {
            for s in sum.iter_mut() {
                *s /= count as f64;
            }
        }
        sum
    }
}

/// Deterministic token vector: FNV-1a of (seed, token) seeds a ChaCha
/// stream of `dim` values uniform in [-1, 1], scaled to unit norm.
pub fn hashed_embed(token: &str, dim: usize, seed: u64) -> Embedding {
    assert!(dim >= 2, "embedding dimension must be at least 2");
    let mut bytes = Vec::with_capacity(8 + token.len());
    bytes.extend_from_slice(&seed.to_le_bytes());
    bytes.extend_from_slice(token.as_bytes());
    let mut rng = seeded_rng(fnv1a64(&bytes));
    let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let norm = crate::math::norm(&v);
    if norm == 0.0 {
        v[0] = 1.0;
        return v;
    }
    for x in v.iter_mut() {
        *x /= norm;
    }
    v
}

/// Parses a `WORDVEC v1 <n>` text file into a lookup provider.
pub fn load_vectors(path: &Path) -> Result<EmbeddingProvider> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = content.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::format(path, 1, "empty file, expected 'WORDVEC v1 <n>' header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let dim = match fields.as_slice() {
        ["WORDVEC", "v1", n] => n
            .parse::<usize>()
            .map_err(|_| Error::format(path, 1, format!("invalid dimension '{n}'")))?,
        _ => {
            return Err(Error::format(
                path,
                1,
                format!("expected 'WORDVEC v1 <n>' header, got '{header}'"),
            ))
        }
    };
    if dim < 2 {
        return Err(Error::format(
            path,
            1,
            format!("embedding dimension must be at least 2, got {dim}"),
        ));
    }

    let mut table = HashMap::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let token = parts.next().expect("non-empty line has a first field");
        let values: Vec<&str> = parts.collect();
        if values.len() != dim {
            return Err(Error::format(
                path,
                line_no,
                format!("expected {dim} values for '{token}', got {}", values.len()),
            ));
        }
        let mut vector = Vec::with_capacity(dim);
        for raw in values {
            let value: f64 = raw
                .parse()
                .map_err(|_| Error::format(path, line_no, format!("invalid float '{raw}'")))?;
            if !value.is_finite() {
                return Err(Error::format(
                    path,
                    line_no,
                    format!("non-finite value '{raw}'"),
                ));
            }
            vector.push(value);
        }
        if table.insert(token.to_string(), vector).is_some() {
            return Err(Error::format(
                path,
                line_no,
                format!("duplicate token '{token}'"),
            ));
        }
    }
    Ok(EmbeddingProvider::Lookup { table, dim })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::norm;
    use std::io::Write;

    fn lookup(entries: &[(&str, &[f64])]) -> EmbeddingProvider {
        let dim = entries[0].1.len();
        let table = entries
            .iter()
            .map(|(t, v)| (t.to_string(), v.to_vec()))
            .collect();
        EmbeddingProvider::Lookup { table, dim }
    }

    fn sentence(words: &str) -> Sentence {
        Sentence {
            index: 0,
            text: words.to_string(),
            tokens: words.split_whitespace().map(|w| w.to_string()).collect(),
        }
    }

    #[test]
    fn sentence_mean() {
        let p = lookup(&[("a", &[1.0, 0.0]), ("b", &[0.0, 1.0])]);
        assert_eq!(p.embed_sentence(&sentence("a")), vec![1.0, 0.0]);
        assert_eq!(p.embed_sentence(&sentence("a b")), vec![0.5, 0.5]);
        // all-OOV: zero vector
        assert_eq!(p.embed_sentence(&sentence("x y")), vec![0.0, 0.0]);
    }

    #[test]
    fn document_mean_is_over_all_tokens() {
        let p = lookup(&[("a", &[1.0, 0.0]), ("b", &[0.0, 3.0])]);
        // "a a. b." -> tokens a, a, b -> mean (2/3, 1)
        let doc = Document::new("d", "a a. b.", "");
        let v = p.embed_document(&doc).unwrap();
        assert!((v[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((v[1] - 1.0).abs() < 1e-15);

        let one = Document::new("d", "a b.", "");
        assert_eq!(
            p.embed_document(&one).unwrap(),
            p.embed_sentence(&one.sentences[0])
        );
    }

    #[test]
    fn document_mean_matches_naive_sum() {
        let p = EmbeddingProvider::hashed(8, 3).unwrap();
        let doc = Document::new("d", "one two three four. five six.", "");
        let v = p.embed_document(&doc).unwrap();
        let mut sum = vec![0.0; 8];
        let mut count = 0;
        for t in doc.tokens() {
            for (s, x) in sum.iter_mut().zip(&hashed_embed(t, 8, 3)) {
                *s += x;
            }
            count += 1;
        }
        for (a, s) in v.iter().zip(&sum) {
            assert!((a - s / count as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_document_is_rejected() {
        let p = EmbeddingProvider::hashed(4, 0).unwrap();
        let doc = Document::new("d", "...", "");
        assert!(p.embed_document(&doc).is_err());
    }

    #[test]
    fn hashed_embed_is_deterministic_and_unit_norm() {
        let a = hashed_embed("cat", 16, 42);
        let b = hashed_embed("cat", 16, 42);
        assert_eq!(a, b);
        assert!((norm(&a) - 1.0).abs() < 1e-9);
        assert_ne!(hashed_embed("cat", 16, 43), a);
        assert_ne!(hashed_embed("dog", 16, 42), a);
    }

    #[test]
    fn hashed_embed_no_collisions_over_many_tokens() {
        let mut seen = std::collections::HashSet::new();
        for i in 0..10_000 {
            let v = hashed_embed(&format!("tok{i}"), 8, 1);
            let bits: Vec<u64> = v.iter().map(|x| x.to_bits()).collect();
            assert!(seen.insert(bits), "collision at token {i}");
        }
    }

    #[test]
    fn load_vectors_well_formed() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "WORDVEC v1 3").unwrap();
        writeln!(f, "cat 1.0 0.5 -0.25").unwrap();
        writeln!(f, "dog 0 0 1").unwrap();
        let p = load_vectors(f.path()).unwrap();
        assert_eq!(p.dim(), 3);
        assert_eq!(p.token_vector("cat").unwrap(), vec![1.0, 0.5, -0.25]);
        assert!(p.token_vector("bird").is_none());
    }

    #[test]
    fn load_vectors_reports_bad_arity_with_line() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "WORDVEC v1 3").unwrap();
        writeln!(f, "cat 1.0 0.5 -0.25").unwrap();
        writeln!(f, "dog 0 0").unwrap();
        let err = load_vectors(f.path()).unwrap_err();
        assert!(err.to_string().contains(":3:"), "{err}");
    }

    #[test]
    fn load_vectors_rejects_duplicates() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "WORDVEC v1 2").unwrap();
        writeln!(f, "cat 1 0").unwrap();
        writeln!(f, "cat 0 1").unwrap();
        let err = load_vectors(f.path()).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn load_vectors_header_only_all_lookups_miss() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "WORDVEC v1 2").unwrap();
        let p = load_vectors(f.path()).unwrap();
        let v = p.embed_sentence(&sentence("anything here"));
        assert_eq!(v, vec![0.0, 0.0]);
    }
}
