//! Word-level IO tags over (title, categories list) pairs and their projection
//! onto subword tokens.
//!
//! Word tags are the ground truth; subword labels are derived from them. The
//! title region is always [`IGNORE`]. Positions are addressed in a single
//! coordinate system: sentence 1 occupies chars `[0, len1)` and sentence 2 is
//! shifted by `len1 + 1`, as if the two were joined by one separator char.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::BuiltSample;

/// Excluded from loss and from scoring.
pub const IGNORE: i32 = -100;
pub const O: i32 = 0;
pub const I_CONCEPT: i32 = 1;

pub const DEFAULT_MAX_LEN: usize = 512;

pub fn tag_name(tag: i32) -> Option<&'static str> {
    match tag {
        O => Some("O"),
        I_CONCEPT => Some("I-CONCEPT"),
        _ => None,
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TaggingError {
    #[error("sample {0}: input exceeds the maximum length")]
    Overflow(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Split on whitespace, isolating every char that is neither alphanumeric nor
/// whitespace as its own token. Offsets are in chars.
pub fn word_tokenize(s: &str) -> Vec<Word> {
    let mut words = Vec::new();
    let mut current: Option<(usize, String)> = None;
    let flush = |current: &mut Option<(usize, String)>, end: usize, words: &mut Vec<Word>| {
        if let Some((start, text)) = current.take() {
            words.push(Word { text, start, end });
        }
    };
    for (i, c) in s.chars().enumerate() {
        if c.is_whitespace() {
            flush(&mut current, i, &mut words);
        } else if c.is_alphanumeric() {
            current.get_or_insert_with(|| (i, String::new())).1.push(c);
        } else {
            flush(&mut current, i, &mut words);
            words.push(Word {
                text: c.to_string(),
                start: i,
                end: i + 1,
            });
        }
    }
    flush(&mut current, s.chars().count(), &mut words);
    words
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagSequence {
    pub sample_id: String,
    pub tokens: Vec<String>,
    pub tags: Vec<i32>,
    /// Char span of each token in the joined coordinate system.
    pub spans: Vec<(usize, usize)>,
    /// Number of leading tokens that belong to sentence 1.
    pub sentence1_len: usize,
    /// Length of sentence 1 in chars.
    pub sentence1_chars: usize,
}

/// Tag every sentence-2 word that falls inside a gold segment with
/// [`I_CONCEPT`], every other sentence-2 word with [`O`], and all of
/// sentence 1 with [`IGNORE`].
pub fn tag_sample(sample: &BuiltSample) -> TagSequence {
    let s1 = word_tokenize(&sample.sentence1);
    let s2 = word_tokenize(&sample.sentence2);
    let s1_chars = sample.sentence1.chars().count();
    let shift = s1_chars + 1;

    let mut tokens = Vec::with_capacity(s1.len() + s2.len());
    let mut tags = Vec::with_capacity(tokens.capacity());
    let mut spans = Vec::with_capacity(tokens.capacity());
    for w in &s1 {
        tokens.push(w.text.clone());
        tags.push(IGNORE);
        spans.push((w.start, w.end));
    }
    for w in &s2 {
        let inside = sample.gold.iter().any(|g| g.start <= w.start && w.end <= g.end);
        tokens.push(w.text.clone());
        tags.push(if inside { I_CONCEPT } else { O });
        spans.push((w.start + shift, w.end + shift));
    }
    TagSequence {
        sample_id: sample.sample_id.clone(),
        tokens,
        tags,
        spans,
        sentence1_len: s1.len(),
        sentence1_chars: s1_chars,
    }
}

/// Token index ranges of each segment of the sample's categories list,
/// in the same indexing as [`tag_sample`].
pub fn segment_token_ranges(sample: &BuiltSample, seq: &TagSequence) -> Vec<std::ops::Range<usize>> {
    let shift = seq.sentence1_chars + 1;
    let s2 = &seq.spans[seq.sentence1_len..];
    sample
        .segments
        .iter()
        .map(|seg| {
            let lo = s2.partition_point(|&(_, e)| e <= seg.start + shift);
            let hi = s2.partition_point(|&(s, _)| s < seg.end + shift);
            (lo + seq.sentence1_len)..(hi.max(lo) + seq.sentence1_len)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlignStrategy {
    FirstSubtokenOnly,
    #[default]
    AllSubtokens,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OverflowPolicy {
    Reject,
    #[default]
    TruncateAndFlag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignmentRule {
    pub strategy: AlignStrategy,
    pub max_len: usize,
    pub overflow: OverflowPolicy,
}

impl Default for AlignmentRule {
    fn default() -> Self {
        Self {
            strategy: AlignStrategy::default(),
            max_len: DEFAULT_MAX_LEN,
            overflow: OverflowPolicy::default(),
        }
    }
}

/// A subword token as reported by a tokenizer, in joined coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubtokenSpan {
    pub start: usize,
    pub end: usize,
    pub special: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    pub labels: Vec<i32>,
    pub truncated: bool,
}

fn word_at(seq: &TagSequence, start: usize, end: usize) -> Option<usize> {
    let i = seq.spans.partition_point(|&(_, e)| e <= start);
    (i < seq.spans.len() && seq.spans[i].0 < end).then_some(i)
}

/// Project word tags onto subtokens.
pub fn align_to_subtokens(
    seq: &TagSequence,
    subtokens: &[SubtokenSpan],
    rule: &AlignmentRule,
) -> Result<Alignment, TaggingError> {
    assert!(rule.max_len > 0, "max_len must be positive");
    let truncated = subtokens.len() > rule.max_len;
    if truncated && rule.overflow == OverflowPolicy::Reject {
        return Err(TaggingError::Overflow(seq.sample_id.clone()));
    }
    let mut last_word: Option<usize> = None;
    let labels = subtokens
        .iter()
        .take(rule.max_len)
        .map(|st| {
            if st.special || st.start >= st.end || st.start < seq.sentence1_chars {
                return IGNORE;
            }
            let Some(w) = word_at(seq, st.start, st.end) else {
                return IGNORE;
            };
            let continuation = last_word == Some(w);
            last_word = Some(w);
            if continuation && rule.strategy == AlignStrategy::FirstSubtokenOnly {
                IGNORE
            } else {
                seq.tags[w]
            }
        })
        .collect();
    Ok(Alignment { labels, truncated })
}

/// Collapse subtoken predictions back to words by majority vote, ties going
/// to [`I_CONCEPT`]. Sentence-1 words get [`IGNORE`]; sentence-2 words with no
/// surviving subtoken get [`O`].
pub fn project_to_words(seq: &TagSequence, subtokens: &[SubtokenSpan], preds: &[i32]) -> Vec<i32> {
    let mut votes = vec![(0usize, 0usize); seq.tokens.len()];
    for (st, &p) in subtokens.iter().zip(preds) {
        if st.special || st.start >= st.end || !(p == O || p == I_CONCEPT) {
            continue;
        }
        if let Some(w) = word_at(seq, st.start, st.end) {
            if p == I_CONCEPT {
                votes[w].0 += 1;
            } else {
                votes[w].1 += 1;
            }
        }
    }
    votes
        .iter()
        .enumerate()
        .map(|(i, &(ones, zeros))| {
            if i < seq.sentence1_len {
                IGNORE
            } else if ones > 0 && ones >= zeros {
                I_CONCEPT
            } else {
                O
            }
        })
        .collect()
}

/// A built sample plus its word tags, one line of the tagged-samples file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedSample {
    #[serde(flatten)]
    pub sample: BuiltSample,
    pub tokens: Vec<String>,
    pub tags: Vec<i32>,
    pub sentence1_len: usize,
}

impl TaggedSample {
    pub fn new(sample: BuiltSample) -> Self {
        let seq = tag_sample(&sample);
        Self {
            sample,
            tokens: seq.tokens,
            tags: seq.tags,
            sentence1_len: seq.sentence1_len,
        }
    }

    pub fn sequence(&self) -> TagSequence {
        tag_sample(&self.sample)
    }
}
