//! Building question-answer style samples from labeled records.
//!
//! Each subtree of the partition is rendered as a categories list: member
//! names in pre-order joined by a delimiter. A record paired with a subtree
//! yields one sample whose first sentence is the record title and whose
//! second sentence is the rendered list. The answers are the list segments
//! whose names are among the record's concepts. Pairs without any answer are
//! dropped.
//!
//! All offsets are counted in Unicode scalar values, not bytes.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ConceptCatalog, CorpusError, DocumentRecord};
use crate::taxonomy::{Subtree, TaxonomyError, TaxonomyTree};

pub const DEFAULT_DELIMITER: &str = ", ";
const SANITIZE_REPLACEMENT: &str = ";";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("category name {0:?} contains the delimiter")]
    DelimiterCollision(String),
    #[error("delimiter {0:?} must contain a non-whitespace character")]
    InvalidDelimiter(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("unknown taxonomy node {0:?}")]
    UnknownNode(String),
    #[error("sample {sample_id}: {reason}")]
    InconsistentSegments { sample_id: String, reason: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
}

/// What to do with a category name that contains the delimiter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NamePolicy {
    #[default]
    Reject,
    /// Replace the delimiter inside names with `;`.
    Sanitize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderOptions {
    pub delimiter: String,
    pub policy: NamePolicy,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            delimiter: DEFAULT_DELIMITER.to_string(),
            policy: NamePolicy::Reject,
        }
    }
}

impl RenderOptions {
    fn core(&self) -> Result<&str, DatasetError> {
        let core = self.delimiter.trim();
        if core.is_empty() {
            return Err(DatasetError::InvalidDelimiter(self.delimiter.clone()));
        }
        Ok(core)
    }

    /// Apply the name policy; the result never contains the delimiter.
    pub fn normalize_name(&self, name: &str) -> Result<String, DatasetError> {
        let core = self.core()?;
        if !name.contains(core) {
            return Ok(name.to_string());
        }
        match self.policy {
            NamePolicy::Reject => Err(DatasetError::DelimiterCollision(name.to_string())),
            NamePolicy::Sanitize => {
                let fixed = name.replace(core, SANITIZE_REPLACEMENT);
                if fixed.contains(core) {
                    Err(DatasetError::DelimiterCollision(name.to_string()))
                } else {
                    Ok(fixed)
                }
            }
        }
    }
}

/// A category name located inside a rendered list, `[start, end)` in chars.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub name: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoriesList {
    pub subtree_id: String,
    pub delimiter: String,
    pub rendered: String,
    pub segments: Vec<Segment>,
}

impl CategoriesList {
    /// Join `names` with `delimiter`, recording each name's offsets.
    pub fn from_names<S: AsRef<str>>(subtree_id: &str, names: &[S], delimiter: &str) -> Self {
        let delim_len = delimiter.chars().count();
        let mut rendered = String::new();
        let mut segments = Vec::with_capacity(names.len());
        let mut pos = 0;
        for (i, name) in names.iter().enumerate() {
            if i > 0 {
                rendered.push_str(delimiter);
                pos += delim_len;
            }
            let name = name.as_ref();
            let len = name.chars().count();
            rendered.push_str(name);
            segments.push(Segment {
                name: name.to_string(),
                start: pos,
                end: pos + len,
            });
            pos += len;
        }
        Self {
            subtree_id: subtree_id.to_string(),
            delimiter: delimiter.to_string(),
            rendered,
            segments,
        }
    }

    /// Rebuild a list from a rendered string and its segments, recovering the
    /// delimiter from the gaps. Fails unless the segments tile the string.
    pub fn from_rendered(
        sample_id: &str,
        subtree_id: &str,
        rendered: &str,
        segments: Vec<Segment>,
    ) -> Result<Self, DatasetError> {
        let bad = |reason: String| DatasetError::InconsistentSegments {
            sample_id: sample_id.to_string(),
            reason,
        };
        let chars: Vec<char> = rendered.chars().collect();
        if segments.is_empty() {
            return Err(bad("no segments".into()));
        }
        let mut delimiter: Option<String> = None;
        let mut cursor = 0;
        for (i, seg) in segments.iter().enumerate() {
            if seg.start > seg.end || seg.end > chars.len() || seg.start < cursor {
                return Err(bad(format!("segment {i} out of order or out of bounds")));
            }
            let gap: String = chars[cursor..seg.start].iter().collect();
            if i == 0 {
                if !gap.is_empty() {
                    return Err(bad("text before first segment".into()));
                }
            } else {
                match &delimiter {
                    None => delimiter = Some(gap),
                    Some(d) if *d == gap => {}
                    Some(_) => return Err(bad(format!("irregular delimiter before segment {i}"))),
                }
            }
            let text: String = chars[seg.start..seg.end].iter().collect();
            if text != seg.name {
                return Err(bad(format!("segment {i} text {text:?} differs from name {:?}", seg.name)));
            }
            cursor = seg.end;
        }
        if cursor != chars.len() {
            return Err(bad("text after last segment".into()));
        }
        let delimiter = delimiter.unwrap_or_else(|| DEFAULT_DELIMITER.to_string());
        if delimiter.trim().is_empty() {
            return Err(bad("empty delimiter between segments".into()));
        }
        Ok(Self {
            subtree_id: subtree_id.to_string(),
            delimiter,
            rendered: rendered.to_string(),
            segments,
        })
    }
}

/// Render the member names of `subtree` as a categories list.
pub fn render_categories(
    subtree: &Subtree,
    tree: &TaxonomyTree,
    opts: &RenderOptions,
) -> Result<CategoriesList, DatasetError> {
    let names = subtree
        .member_ids
        .iter()
        .map(|id| {
            let node = tree.node(id).ok_or_else(|| DatasetError::UnknownNode(id.clone()))?;
            opts.normalize_name(&node.name)
        })
        .collect::<Result<Vec<_>, _>>()?;
    opts.core()?;
    Ok(CategoriesList::from_names(&subtree.parent_id, &names, &opts.delimiter))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuiltSample {
    pub sample_id: String,
    pub record_id: String,
    pub subtree_id: String,
    /// Record title.
    pub sentence1: String,
    /// Rendered categories list.
    pub sentence2: String,
    pub gold: Vec<Segment>,
    /// Every category of `sentence2`, gold or not.
    pub segments: Vec<Segment>,
}

impl BuiltSample {
    pub fn categories(&self) -> Result<CategoriesList, DatasetError> {
        CategoriesList::from_rendered(&self.sample_id, &self.subtree_id, &self.sentence2, self.segments.clone())
    }

    /// Check that `segments` tile `sentence2` and that gold is a non-empty
    /// subset of `segments`.
    pub fn validate(&self) -> Result<(), DatasetError> {
        let list = self.categories()?;
        let bad = |reason: &str| DatasetError::InconsistentSegments {
            sample_id: self.sample_id.clone(),
            reason: reason.to_string(),
        };
        if self.gold.is_empty() {
            return Err(bad("gold is empty"));
        }
        let all: HashSet<&Segment> = list.segments.iter().collect();
        if !self.gold.iter().all(|g| all.contains(g)) {
            return Err(bad("gold span is not a whole segment"));
        }
        Ok(())
    }
}

pub fn sample_id(record_id: &str, subtree_id: &str) -> String {
    format!("{record_id}#{subtree_id}")
}

/// Pair every record with every subtree at `level` and keep the pairs that
/// have at least one answer. Output order is record order, then subtree order.
pub fn build_samples(
    records: &[DocumentRecord],
    catalog: &ConceptCatalog,
    tree: &TaxonomyTree,
    level: usize,
    opts: &RenderOptions,
) -> Result<Vec<BuiltSample>, DatasetError> {
    if records.is_empty() {
        return Err(DatasetError::EmptyCorpus);
    }
    let lists = tree
        .subtrees_at_level(level)?
        .iter()
        .map(|st| render_categories(st, tree, opts))
        .collect::<Result<Vec<_>, _>>()?;

    let per_record = records
        .par_iter()
        .map(|record| {
            let concepts = catalog
                .resolve(record)?
                .iter()
                .map(|n| opts.normalize_name(n))
                // A concept that cannot be rendered cannot match a category.
                .filter_map(Result::ok)
                .collect::<HashSet<String>>();
            Ok(lists
                .iter()
                .filter_map(|list| pair(record, list, &concepts))
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>, DatasetError>>()?;
    Ok(per_record.into_iter().flatten().collect())
}

fn pair(record: &DocumentRecord, list: &CategoriesList, concepts: &HashSet<String>) -> Option<BuiltSample> {
    let gold: Vec<Segment> = list
        .segments
        .iter()
        .filter(|s| concepts.contains(&s.name))
        .cloned()
        .collect();
    if gold.is_empty() {
        return None;
    }
    Some(BuiltSample {
        sample_id: sample_id(&record.record_id, &list.subtree_id),
        record_id: record.record_id.clone(),
        subtree_id: list.subtree_id.clone(),
        sentence1: record.title.clone(),
        sentence2: list.rendered.clone(),
        gold,
        segments: list.segments.clone(),
    })
}

/// Shuffle the categories of `list` with a seeded uniform permutation and
/// move the gold spans along with their segments.
pub fn reorder_categories(sample: &BuiltSample, list: &CategoriesList, seed: u64) -> (BuiltSample, CategoriesList) {
    let mut order: Vec<usize> = (0..list.segments.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let gold_idx: HashSet<usize> = list
        .segments
        .iter()
        .enumerate()
        .filter(|(_, s)| sample.gold.contains(s))
        .map(|(i, _)| i)
        .collect();

    let names: Vec<&str> = order.iter().map(|&i| list.segments[i].name.as_str()).collect();
    let shuffled = CategoriesList::from_names(&list.subtree_id, &names, &list.delimiter);
    let gold = order
        .iter()
        .zip(&shuffled.segments)
        .filter(|(i, _)| gold_idx.contains(i))
        .map(|(_, s)| s.clone())
        .collect();

    let out = BuiltSample {
        sentence2: shuffled.rendered.clone(),
        gold,
        segments: shuffled.segments.clone(),
        ..sample.clone()
    };
    (out, shuffled)
}

/// Substring by char offsets.
pub fn char_slice(s: &str, start: usize, end: usize) -> Option<&str> {
    let mut idx = s.char_indices().map(|(b, _)| b).chain(std::iter::once(s.len()));
    let b0 = idx.by_ref().nth(start)?;
    let b1 = if end == start { b0 } else { idx.nth(end - start - 1)? };
    s.get(b0..b1)
}
