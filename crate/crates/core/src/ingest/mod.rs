//! Loading, validating and saving the three dataset shapes.
//!
//! All datasets are immutable once constructed and can be shared read-only
//! across threads.

mod metadata;
mod ratings;
mod responses;

pub use metadata::{load_metadata, save_metadata, MetadataTable, ModelMeta};
pub use ratings::{load_ratings, save_ratings, RatingDataset, RatingScale};
pub(crate) use responses::csv_escape;
pub use responses::{load_responses, model_accuracy, save_responses, ResponseDataset, MISSING};

use std::path::Path;

use crate::error::{Error, Result};

/// On-disk encoding of responses and ratings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    /// Guess the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") => Format::Jsonl,
            _ => Format::Csv,
        }
    }
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_string(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub(crate) fn location(path: &Path, line: u64) -> String {
    format!("{}:{}", path.display(), line)
}

/// Column lookup for a CSV header, tolerant of whitespace and an empty
/// trailing column.
pub(crate) struct Header {
    names: Vec<String>,
}

impl Header {
    pub(crate) fn new(record: &csv::StringRecord) -> Self {
        Header {
            names: record.iter().map(|s| s.trim().to_string()).collect(),
        }
    }

    pub(crate) fn find(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub(crate) fn require(&self, name: &str, path: &Path) -> Result<usize> {
        self.find(name)
            .ok_or_else(|| Error::schema(location(path, 1), format!("missing column `{name}`")))
    }

    pub(crate) fn names(&self) -> &[String] {
        &self.names
    }
}

pub(crate) fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

pub(crate) fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

pub(crate) fn field(record: &csv::StringRecord, idx: usize) -> &str {
    record.get(idx).unwrap_or("").trim()
}

/// Format a float with the shortest representation that round-trips.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x}")
}
