//! Shared test helpers: brute-force scorers, random case generators and
//! fixture paths. Nothing here calls into `hierqa::metrics`.

#![allow(dead_code)]

use std::ops::Range;
use std::path::PathBuf;

use num_rational::Ratio;
use rand::Rng;

pub const IGNORE: i32 = -100;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Counts recomputed from scratch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OracleCounts {
    pub tp: u64,
    pub pred: u64,
    pub gold: u64,
    pub correct: u64,
    pub scored: u64,
}

impl OracleCounts {
    fn r(n: u64, d: u64) -> Ratio<u64> {
        if d == 0 {
            Ratio::from_integer(0)
        } else {
            Ratio::new(n, d)
        }
    }
    pub fn precision(&self) -> Ratio<u64> {
        Self::r(self.tp, self.pred)
    }
    pub fn recall(&self) -> Ratio<u64> {
        Self::r(self.tp, self.gold)
    }
    /// Harmonic mean written as 2tp / (pred + gold).
    pub fn f1(&self) -> Ratio<u64> {
        Self::r(2 * self.tp, self.pred + self.gold)
    }
    pub fn accuracy(&self) -> Ratio<u64> {
        Self::r(self.correct, self.scored)
    }
}

fn is_one(tags: &[i32], gold: &[i32], i: usize) -> bool {
    gold[i] != IGNORE && tags[i] == 1
}

/// Is `[i, j)` a maximal run of ones (ignoring gold-ignored positions)?
fn is_maximal_run(tags: &[i32], gold: &[i32], i: usize, j: usize) -> bool {
    (i..j).all(|k| is_one(tags, gold, k))
        && (i == 0 || !is_one(tags, gold, i - 1))
        && (j == tags.len() || !is_one(tags, gold, j))
}

/// Strict scoring by enumerating every span.
pub fn oracle_strict(pred: &[i32], gold: &[i32]) -> OracleCounts {
    let n = gold.len();
    let mut c = OracleCounts::default();
    for i in 0..n {
        for j in i + 1..=n {
            let p = is_maximal_run(pred, gold, i, j);
            let g = is_maximal_run(gold, gold, i, j);
            c.pred += p as u64;
            c.gold += g as u64;
            c.tp += (p && g) as u64;
        }
    }
    for i in 0..n {
        if gold[i] != IGNORE {
            c.scored += 1;
            c.correct += (pred[i] == gold[i]) as u64;
        }
    }
    c
}

/// Classification scoring by the set formula over segments.
pub fn oracle_classification(pred: &[i32], gold: &[i32], segments: &[Range<usize>]) -> OracleCounts {
    let picked: Vec<bool> = segments
        .iter()
        .map(|s| s.clone().any(|t| is_one(pred, gold, t)))
        .collect();
    let golden: Vec<bool> = segments.iter().map(|s| gold[s.start] == 1).collect();
    let mut c = OracleCounts::default();
    for (p, g) in picked.iter().zip(&golden) {
        c.pred += *p as u64;
        c.gold += *g as u64;
        c.tp += (*p && *g) as u64;
    }
    for (i, &g) in gold.iter().enumerate() {
        if g == IGNORE {
            continue;
        }
        let expanded = segments
            .iter()
            .zip(&picked)
            .any(|(s, &p)| p && s.contains(&i)) as i32;
        c.scored += 1;
        c.correct += (expanded == g) as u64;
    }
    c
}

/// One random scoring case shaped like a tagged sample: ignored title
/// positions, then segments separated by single delimiter positions.
#[derive(Debug, Clone)]
pub struct Case {
    pub pred: Vec<i32>,
    pub gold: Vec<i32>,
    pub segments: Vec<Range<usize>>,
    pub delimiters: Vec<usize>,
}

impl Case {
    /// True when no predicted one sits on a delimiter position.
    pub fn delimiter_clean(&self) -> bool {
        self.delimiters.iter().all(|&d| self.pred[d] != 1)
    }
}

pub fn random_case<R: Rng>(rng: &mut R, max_len: usize) -> Case {
    let title = rng.gen_range(0..=4.min(max_len - 1));
    let mut gold = vec![IGNORE; title];
    let mut segments = Vec::new();
    let mut delimiters = Vec::new();
    loop {
        let len = rng.gen_range(1..=3);
        if gold.len() + len > max_len {
            // drop the dangling delimiter
            if !segments.is_empty() {
                gold.pop();
            }
            break;
        }
        if !segments.is_empty() {
            delimiters.push(gold.len() - 1);
        }
        let start = gold.len();
        let tag = i32::from(rng.gen_bool(0.3));
        gold.extend(std::iter::repeat_n(tag, len));
        segments.push(start..start + len);
        if gold.len() + 1 >= max_len || rng.gen_bool(0.15) {
            break;
        }
        gold.push(0);
    }
    if segments.is_empty() {
        // Not even one token fitted after the title.
        gold.truncate(max_len - 1);
        let start = gold.len();
        gold.push(i32::from(rng.gen_bool(0.5)));
        segments.push(start..start + 1);
    }
    let density = [0.05, 0.2, 0.5, 0.8][rng.gen_range(0..4)];
    let pred = gold
        .iter()
        .map(|&g| {
            if g == IGNORE {
                [IGNORE, 0, 1][rng.gen_range(0..3)]
            } else {
                i32::from(rng.gen_bool(density))
            }
        })
        .collect();
    Case {
        pred,
        gold,
        segments,
        delimiters,
    }
}

/// Paths of a generated taxonomy / catalog / corpus triple.
pub struct SyntheticCorpus {
    pub taxonomy: PathBuf,
    pub catalog: PathBuf,
    pub corpus: PathBuf,
}

/// Two domains with `subdomains` level-3 nodes each; every subdomain has
/// `leaves` one-word concepts. Each record carries 1..=3 concepts drawn
/// uniformly, and sometimes an id that lives nowhere in the hierarchy.
pub fn write_synthetic(
    dir: &std::path::Path,
    seed: u64,
    records: usize,
    subdomains: usize,
    leaves: usize,
) -> SyntheticCorpus {
    use rand::SeedableRng;
    use std::fmt::Write as _;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut tax = String::new();
    let mut cat = String::new();
    let mut concept_ids = Vec::new();
    for d in 0..2 {
        writeln!(tax, r#"{{"id":"d{d}","name":"Domain {d}","parent_id":null}}"#).unwrap();
        for s in 0..subdomains {
            writeln!(tax, r#"{{"id":"d{d}s{s}","name":"subdomain {d} {s}","parent_id":"d{d}"}}"#).unwrap();
            for l in 0..leaves {
                let id = format!("c{d}_{s}_{l}");
                writeln!(tax, r#"{{"id":"{id}","name":"term{d}x{s}x{l}","parent_id":"d{d}s{s}"}}"#).unwrap();
                writeln!(cat, r#"{{"id":"{id}","title":"Term{d}x{s}x{l}"}}"#).unwrap();
                concept_ids.push(id);
            }
        }
    }
    writeln!(cat, r#"{{"id":"orphan","title":"not in the tree"}}"#).unwrap();
    let mut corpus = String::new();
    for r in 0..records {
        let k = rng.gen_range(1..=3);
        let mut ids: Vec<String> = (0..k)
            .map(|_| concept_ids[rng.gen_range(0..concept_ids.len())].clone())
            .collect();
        if rng.gen_bool(0.1) {
            ids.push("orphan".into());
        }
        let line = serde_json::json!({
            "celex_id": format!("3{r:04}R0001"),
            "title": format!("Regulation number {r} on synthetic matters"),
            "text": "",
            "eurovoc_concepts": ids,
        });
        writeln!(corpus, "{line}").unwrap();
    }
    let out = SyntheticCorpus {
        taxonomy: dir.join("taxonomy.jsonl"),
        catalog: dir.join("concepts.jsonl"),
        corpus: dir.join("corpus.jsonl"),
    };
    std::fs::write(&out.taxonomy, tax).unwrap();
    std::fs::write(&out.catalog, cat).unwrap();
    std::fs::write(&out.corpus, corpus).unwrap();
    out
}
