//! Line-delimited JSON record types and file helpers: the dataset, label,
//! and summary formats the pipeline reads and writes.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc::Document;

/// One corpus document: `{"id", "text", "summary"}`. The summary may be
/// empty for inference-only corpora.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub text: String,
    pub summary: String,
}

/// One oracle label: `{"id", "selected", "score", "mode"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub id: String,
    pub selected: Vec<usize>,
    pub score: f64,
    pub mode: String,
}

/// One generated summary: `{"id", "summary", "indices"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub id: String,
    pub summary: String,
    pub indices: Vec<usize>,
}

/// Parses every line as a `T`, failing on the first malformed one.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut items = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(line)
            .map_err(|e| Error::format(path, idx + 1, e.to_string()))?;
        items.push(item);
    }
    Ok(items)
}

/// Writes one JSON object per line.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut out = String::new();
    for item in items {
        let line = serde_json::to_string(item)
            .map_err(|e| Error::data(format!("cannot serialize record: {e}")))?;
        out.push_str(&line);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Documents read from a dataset file plus warnings for skipped lines.
#[derive(Debug)]
pub struct Ingest {
    pub documents: Vec<Document>,
    pub warnings: Vec<String>,
}

/// Reads a dataset file. Malformed lines are skipped and reported with
/// their line numbers; duplicate ids and empty results are fatal.
pub fn ingest(path: &Path) -> Result<Ingest> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut documents = Vec::new();
    let mut warnings = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut duplicates: Vec<String> = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<DatasetRecord>(line) {
            Ok(record) => {
                if !seen.insert(record.id.clone()) {
                    duplicates.push(record.id.clone());
                    continue;
                }
                documents.push(Document::new(&record.id, &record.text, &record.summary));
            }
            Err(e) => {
                warnings.push(format!("{}:{}: skipped malformed line: {e}", path.display(), idx + 1));
            }
        }
    }
    if !duplicates.is_empty() {
        return Err(Error::data(format!(
            "duplicate document ids in {}: {}",
            path.display(),
            duplicates.join(", ")
        )));
    }
    if documents.is_empty() {
        return Err(Error::data(format!(
            "no valid documents in {}",
            path.display()
        )));
    }
    Ok(Ingest { documents, warnings })
}
