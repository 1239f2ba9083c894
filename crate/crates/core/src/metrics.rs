//! Chunk-level scoring of IO tag sequences.
//!
//! Two modes share one report type:
//!
//! * **strict**: a predicted chunk counts only when its span equals a gold
//!   chunk exactly (seqeval default semantics for IO tags);
//! * **classification**: every category segment touched by at least one
//!   predicted `1` is selected as a whole, the prediction is rewritten to
//!   exactly those segments, and the rewritten tags are scored strictly.
//!
//! Positions where gold is [`IGNORE`] are excluded from everything, including
//! the prediction. Counts are kept as integers and ratios are exact; a zero
//! denominator yields zero.

use std::collections::HashSet;
use std::ops::Range;

use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use crate::tagging::{IGNORE, I_CONCEPT, O};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("prediction has {pred} tags, gold has {gold}")]
    LengthMismatch { pred: usize, gold: usize },
    #[error("invalid tag {value} at position {position}")]
    InvalidTag { position: usize, value: i32 },
    #[error("segment mismatch: {0}")]
    SegmentMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Strict,
    Classification,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Chunk {
    pub start: usize,
    pub end: usize,
}

impl Chunk {
    pub const LABEL: &'static str = "CONCEPT";
}

/// Maximal runs of [`I_CONCEPT`]. Any other value, [`IGNORE`] included,
/// terminates a run.
pub fn extract_chunks(tags: &[i32]) -> Vec<Chunk> {
    let mut chunks = Vec::new();
    let mut open: Option<usize> = None;
    for (i, &t) in tags.iter().enumerate() {
        match (t == I_CONCEPT, open) {
            (true, None) => open = Some(i),
            (false, Some(s)) => {
                chunks.push(Chunk { start: s, end: i });
                open = None;
            }
            _ => {}
        }
    }
    if let Some(s) = open {
        chunks.push(Chunk { start: s, end: tags.len() });
    }
    chunks
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalReport {
    pub mode: Mode,
    pub tp: u64,
    pub pred_count: u64,
    pub gold_count: u64,
    /// Scored positions where prediction equals gold.
    pub correct: u64,
    /// Positions where gold is not [`IGNORE`].
    pub scored: u64,
}

fn ratio(num: u64, den: u64) -> Ratio<u64> {
    if den == 0 {
        Ratio::from_integer(0)
    } else {
        Ratio::new(num, den)
    }
}

fn to_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

impl EvalReport {
    pub fn empty(mode: Mode) -> Self {
        Self {
            mode,
            tp: 0,
            pred_count: 0,
            gold_count: 0,
            correct: 0,
            scored: 0,
        }
    }

    pub fn precision(&self) -> Ratio<u64> {
        ratio(self.tp, self.pred_count)
    }

    pub fn recall(&self) -> Ratio<u64> {
        ratio(self.tp, self.gold_count)
    }

    pub fn f1(&self) -> Ratio<u64> {
        let (p, r) = (self.precision(), self.recall());
        if p + r == Ratio::from_integer(0) {
            return Ratio::from_integer(0);
        }
        Ratio::from_integer(2) * p * r / (p + r)
    }

    pub fn accuracy(&self) -> Ratio<u64> {
        ratio(self.correct, self.scored)
    }

    /// Micro-average: add the counts of `other`.
    pub fn merge(&mut self, other: &EvalReport) {
        debug_assert_eq!(self.mode, other.mode);
        self.tp += other.tp;
        self.pred_count += other.pred_count;
        self.gold_count += other.gold_count;
        self.correct += other.correct;
        self.scored += other.scored;
    }

    pub fn summary(&self) -> ReportSummary {
        ReportSummary {
            mode: self.mode,
            precision: to_f64(self.precision()),
            recall: to_f64(self.recall()),
            f1: to_f64(self.f1()),
            accuracy: to_f64(self.accuracy()),
            tp: self.tp,
            pred_count: self.pred_count,
            gold_count: self.gold_count,
            correct: self.correct,
            scored: self.scored,
        }
    }
}

/// Flattened, float-valued view of an [`EvalReport`] for JSON output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSummary {
    pub mode: Mode,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub tp: u64,
    pub pred_count: u64,
    pub gold_count: u64,
    pub correct: u64,
    pub scored: u64,
}

/// Check tags and return the prediction with gold-ignored positions masked.
fn masked_pred(pred: &[i32], gold: &[i32]) -> Result<Vec<i32>, MetricsError> {
    if pred.len() != gold.len() {
        return Err(MetricsError::LengthMismatch {
            pred: pred.len(),
            gold: gold.len(),
        });
    }
    pred.iter()
        .zip(gold)
        .enumerate()
        .map(|(position, (&p, &g))| {
            if !(g == IGNORE || g == O || g == I_CONCEPT) {
                return Err(MetricsError::InvalidTag { position, value: g });
            }
            if g == IGNORE {
                Ok(IGNORE)
            } else if p == O || p == I_CONCEPT {
                Ok(p)
            } else {
                Err(MetricsError::InvalidTag { position, value: p })
            }
        })
        .collect()
}

fn score(mode: Mode, pred: &[i32], gold: &[i32]) -> EvalReport {
    let gold_chunks: HashSet<Chunk> = extract_chunks(gold).into_iter().collect();
    let pred_chunks = extract_chunks(pred);
    let tp = pred_chunks.iter().filter(|c| gold_chunks.contains(c)).count();
    let scored = gold.iter().filter(|&&g| g != IGNORE).count();
    let correct = pred.iter().zip(gold).filter(|(p, g)| **g != IGNORE && p == g).count();
    EvalReport {
        mode,
        tp: tp as u64,
        pred_count: pred_chunks.len() as u64,
        gold_count: gold_chunks.len() as u64,
        correct: correct as u64,
        scored: scored as u64,
    }
}

/// Exact-span chunk matching.
pub fn evaluate_strict(pred: &[i32], gold: &[i32]) -> Result<EvalReport, MetricsError> {
    let pred = masked_pred(pred, gold)?;
    Ok(score(Mode::Strict, &pred, gold))
}

/// Rewrite `pred` so that every segment it touches is fully [`I_CONCEPT`] and
/// everything else scored is [`O`].
pub fn expand_to_segments(
    pred: &[i32],
    gold: &[i32],
    segments: &[Range<usize>],
) -> Result<Vec<i32>, MetricsError> {
    let pred = masked_pred(pred, gold)?;
    check_segments(gold, segments)?;
    let mut expanded: Vec<i32> = gold.iter().map(|&g| if g == IGNORE { IGNORE } else { O }).collect();
    for seg in segments {
        if pred[seg.clone()].contains(&I_CONCEPT) {
            expanded[seg.clone()].fill(I_CONCEPT);
        }
    }
    Ok(expanded)
}

fn check_segments(gold: &[i32], segments: &[Range<usize>]) -> Result<(), MetricsError> {
    let mut prev_end: Option<usize> = None;
    for seg in segments {
        if seg.start >= seg.end || seg.end > gold.len() {
            return Err(MetricsError::SegmentMismatch(format!("bad segment {seg:?}")));
        }
        if let Some(pe) = prev_end {
            // A separator position between segments keeps expanded chunks apart.
            if seg.start <= pe {
                return Err(MetricsError::SegmentMismatch(format!(
                    "segment {seg:?} overlaps or touches its predecessor"
                )));
            }
        }
        if gold[seg.clone()].contains(&IGNORE) {
            return Err(MetricsError::SegmentMismatch(format!("segment {seg:?} covers ignored positions")));
        }
        prev_end = Some(seg.end);
    }
    let seg_set: HashSet<(usize, usize)> = segments.iter().map(|s| (s.start, s.end)).collect();
    for c in extract_chunks(gold) {
        if !seg_set.contains(&(c.start, c.end)) {
            return Err(MetricsError::SegmentMismatch(format!(
                "gold chunk {}..{} is not a whole segment",
                c.start, c.end
            )));
        }
    }
    Ok(())
}

/// Category-level scoring: expand the prediction to whole segments, then
/// score strictly. Accuracy is measured on the expanded tags.
pub fn evaluate_classification(
    pred: &[i32],
    gold: &[i32],
    segments: &[Range<usize>],
) -> Result<EvalReport, MetricsError> {
    let expanded = expand_to_segments(pred, gold, segments)?;
    Ok(score(Mode::Classification, &expanded, gold))
}

#[cfg(test)]
mod tests {
    use super::*;

    const X: i32 = IGNORE;

    fn r(n: u64, d: u64) -> Ratio<u64> {
        Ratio::new(n, d)
    }

    #[test]
    fn chunks_basic() {
        assert_eq!(
            extract_chunks(&[X, X, 0, 1, 1, 0, 1]),
            vec![Chunk { start: 3, end: 5 }, Chunk { start: 6, end: 7 }]
        );
        assert!(extract_chunks(&[0, 0, 0]).is_empty());
        assert_eq!(extract_chunks(&[X, 1, 1, 1]), vec![Chunk { start: 1, end: 4 }]);
        assert_eq!(extract_chunks(&[1, X, 1]).len(), 2);
    }

    #[test]
    fn strict_identity() {
        let gold = [X, X, 0, 1, 1, 0, 1];
        let rep = evaluate_strict(&gold, &gold).unwrap();
        assert_eq!((rep.precision(), rep.recall(), rep.f1()), (r(1, 1), r(1, 1), r(1, 1)));
        assert_eq!(rep.accuracy(), r(1, 1));
    }

    #[test]
    fn strict_partial_overlap() {
        let gold = [X, X, 0, 1, 1, 0];
        let pred = [X, X, 0, 1, 0, 0];
        let rep = evaluate_strict(&pred, &gold).unwrap();
        assert_eq!(rep.tp, 0);
        assert_eq!((rep.precision(), rep.recall(), rep.f1()), (r(0, 1), r(0, 1), r(0, 1)));
        assert_eq!(rep.accuracy(), r(3, 4));
    }

    #[test]
    fn all_o_prediction() {
        let gold = [X, 0, 0, 1, 0];
        let pred = [X, 0, 0, 0, 0];
        let rep = evaluate_strict(&pred, &gold).unwrap();
        assert_eq!(rep.f1(), r(0, 1));
        assert_eq!(rep.accuracy(), r(3, 4));

        let none = [X, 0, 0];
        let rep = evaluate_strict(&none, &none).unwrap();
        assert_eq!((rep.precision(), rep.recall(), rep.f1()), (r(0, 1), r(0, 1), r(0, 1)));
        assert_eq!(rep.accuracy(), r(1, 1));
    }

    #[test]
    fn ignored_positions_mask_prediction() {
        let gold = [X, X, 1];
        let pred = [1, 1, 1];
        let rep = evaluate_strict(&pred, &gold).unwrap();
        assert_eq!((rep.tp, rep.pred_count), (1, 1));
    }

    #[test]
    fn errors() {
        assert_eq!(
            evaluate_strict(&[0], &[0, 0]),
            Err(MetricsError::LengthMismatch { pred: 1, gold: 2 })
        );
        assert_eq!(
            evaluate_strict(&[2, 0], &[0, 0]),
            Err(MetricsError::InvalidTag { position: 0, value: 2 })
        );
        assert!(matches!(
            evaluate_classification(&[0, 0, 0], &[1, 0, 0], &[0..1, 1..3]),
            Err(MetricsError::SegmentMismatch(_))
        ));
        // gold chunk spans only part of a segment
        assert!(matches!(
            evaluate_classification(&[0, 0, 0], &[1, 0, 0], std::slice::from_ref(&(0..2))),
            Err(MetricsError::SegmentMismatch(_))
        ));
    }

    #[test]
    fn classification_one_token_hit() {
        // "white sugar , raw sugar": gold both, pred one token of the first
        let gold = [X, 1, 1, 0, 1, 1];
        let pred = [X, 0, 1, 0, 0, 0];
        let segs = [1..3, 4..6];
        let strict = evaluate_strict(&pred, &gold).unwrap();
        let cls = evaluate_classification(&pred, &gold, &segs).unwrap();
        assert_eq!(strict.tp, 0);
        assert_eq!(cls.tp, 1);
        assert_eq!((cls.precision(), cls.recall()), (r(1, 1), r(1, 2)));
    }

    #[test]
    fn classification_set_formula() {
        // a , b , c with gold {b}; pred touches a and b
        let gold = [0, 0, 1, 0, 0];
        let pred = [1, 0, 1, 0, 0];
        let cls = evaluate_classification(&pred, &gold, &[0..1, 2..3, 4..5]).unwrap();
        assert_eq!((cls.precision(), cls.recall(), cls.f1()), (r(1, 2), r(1, 1), r(2, 3)));
    }

    #[test]
    fn classification_identity_matches_strict() {
        let gold = [X, 1, 1, 0, 0, 0, 1];
        let segs = [1..3, 4..5, 6..7];
        let s = evaluate_strict(&gold, &gold).unwrap();
        let c = evaluate_classification(&gold, &gold, &segs).unwrap();
        assert_eq!((s.tp, s.pred_count, s.gold_count, s.correct), (c.tp, c.pred_count, c.gold_count, c.correct));
    }

    #[test]
    fn merge_is_micro_average() {
        let a = evaluate_strict(&[1, 0], &[1, 0]).unwrap();
        let b = evaluate_strict(&[0, 1], &[1, 0]).unwrap();
        let mut total = EvalReport::empty(Mode::Strict);
        total.merge(&a);
        total.merge(&b);
        assert_eq!((total.tp, total.pred_count, total.gold_count), (1, 2, 2));
        assert_eq!(total.f1(), r(1, 2));
    }
}
