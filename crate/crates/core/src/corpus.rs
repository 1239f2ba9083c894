//! Corpus records and the concept catalog.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jsonl::{self, JsonlError};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("unknown concept id {0:?}")]
    UnknownConceptId(String),
    #[error("duplicate record id {0:?}")]
    DuplicateRecord(String),
    #[error("catalog entry {0:?} has an empty name")]
    EmptyConceptName(String),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
}

/// One corpus entry. Field names follow the EURLEX JSONL layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRecord {
    #[serde(rename = "celex_id")]
    pub record_id: String,
    pub title: String,
    #[serde(default)]
    pub text: String,
    #[serde(rename = "eurovoc_concepts", default)]
    pub concept_ids: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CatalogLine {
    id: String,
    title: String,
}

/// Concept id to concept name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConceptCatalog {
    entries: HashMap<String, String>,
}

impl ConceptCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: impl Into<String>, name: impl Into<String>) -> Result<(), CorpusError> {
        let id = id.into();
        let name = name.into();
        if name.trim().is_empty() {
            return Err(CorpusError::EmptyConceptName(id));
        }
        self.entries.insert(id, name);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&str> {
        self.entries.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn from_jsonl(path: &Path) -> Result<Self, CorpusError> {
        let mut catalog = Self::new();
        for line in jsonl::read_jsonl::<CatalogLine>(path)? {
            catalog.insert(line.id, line.title)?;
        }
        Ok(catalog)
    }

    /// Concept names for `record`, in record order, lowercased.
    pub fn resolve(&self, record: &DocumentRecord) -> Result<Vec<String>, CorpusError> {
        record
            .concept_ids
            .iter()
            .map(|id| {
                self.get(id)
                    .map(|n| n.trim().to_lowercase())
                    .ok_or_else(|| CorpusError::UnknownConceptId(id.clone()))
            })
            .collect()
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for ConceptCatalog {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        Self {
            entries: iter.into_iter().map(|(k, v)| (k.into(), v.into())).collect(),
        }
    }
}

/// Load a corpus file, rejecting repeated record ids.
pub fn read_corpus(path: &Path) -> Result<Vec<DocumentRecord>, CorpusError> {
    let records: Vec<DocumentRecord> = jsonl::read_jsonl(path)?;
    let mut seen = std::collections::HashSet::new();
    for r in &records {
        if !seen.insert(r.record_id.as_str()) {
            return Err(CorpusError::DuplicateRecord(r.record_id.clone()));
        }
    }
    Ok(records)
}
