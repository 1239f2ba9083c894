//! Command-line front end.
//!
//! Subcommands: `tree-stats`, `sample`, `build`, `reorder`, `eval`. Each one
//! reads JSONL inputs and writes its outputs into `--output-dir` (default
//! from `HIERQA_OUTPUT_DIR`, else `out`) through temp-file-and-rename, so
//! identical inputs give byte-identical files and failures leave nothing.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, ConceptCatalog};
use crate::dataset::{self, NamePolicy, RenderOptions, DEFAULT_DELIMITER};
use crate::jsonl;
use crate::metrics::{self, EvalReport, Mode, ReportSummary};
use crate::sampler::{self, SamplePlan, DEFAULT_CONFIDENCE, DEFAULT_MARGIN};
use crate::tagging::{self, TaggedSample, DEFAULT_MAX_LEN};
use crate::taxonomy::{PartitionStats, TaxonomyTree, DEFAULT_ROOT_NAME};
use crate::{Error, Result};

pub const OUTPUT_DIR_ENV: &str = "HIERQA_OUTPUT_DIR";
pub const TAGGED_SAMPLES_FILE: &str = "tagged_samples.jsonl";
pub const BUILD_REPORT_FILE: &str = "build_report.json";
pub const SAMPLED_CORPUS_FILE: &str = "sampled_corpus.jsonl";
pub const SAMPLE_PLAN_FILE: &str = "sample_plan.json";
pub const REORDERED_SAMPLES_FILE: &str = "reordered_samples.jsonl";
pub const EVAL_REPORT_FILE: &str = "eval_report.json";

/// Special tokens a BERT-style pair encoding adds: `[CLS] a [SEP] b [SEP]`.
const PAIR_SPECIAL_TOKENS: usize = 3;

#[derive(Debug, Parser)]
#[command(name = "hierqa", version, about = "Hierarchy-partitioned multi-answer QA data builder and scorer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Subtree statistics for every parent level.
    TreeStats {
        #[command(flatten)]
        taxonomy: TaxonomyArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Plan a sample size and draw a seeded sample of the corpus.
    Sample {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
        confidence: f64,
        #[arg(long, default_value_t = DEFAULT_MARGIN)]
        margin: f64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Build and tag (title, categories list) samples.
    Build {
        #[command(flatten)]
        taxonomy: TaxonomyArgs,
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
        #[arg(long, default_value_t = 3)]
        level: usize,
        /// Permit partitioning at level 1 (one list holding every node).
        #[arg(long)]
        allow_level_one: bool,
        #[arg(long, default_value = DEFAULT_DELIMITER)]
        delimiter: String,
        /// Replace the delimiter inside category names instead of failing.
        #[arg(long)]
        sanitize: bool,
        #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
        max_len: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Shuffle the categories of every tagged sample and re-tag.
    Reorder {
        #[arg(long)]
        samples: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Score predictions against tagged samples.
    Eval {
        #[arg(long)]
        samples: PathBuf,
        /// One file per checkpoint; several produce a per-epoch array.
        #[arg(long = "predictions", required = true)]
        predictions: Vec<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
        #[arg(long, value_enum, default_value_t = EvalMode::Both)]
        mode: EvalMode,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Debug, Clone, Args)]
pub struct TaxonomyArgs {
    #[arg(long)]
    pub taxonomy: PathBuf,
    #[arg(long, default_value = DEFAULT_ROOT_NAME)]
    pub root_name: String,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, env = OUTPUT_DIR_ENV, default_value = "out")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Strict,
    Classification,
    Both,
}

impl EvalMode {
    fn includes(self, mode: Mode) -> bool {
        matches!(
            (self, mode),
            (EvalMode::Both, _) | (EvalMode::Strict, Mode::Strict) | (EvalMode::Classification, Mode::Classification)
        )
    }
}

/// Settings shared by the pipeline commands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub taxonomy_path: PathBuf,
    pub catalog_path: PathBuf,
    pub corpus_path: PathBuf,
    pub output_dir: PathBuf,
    pub root_name: String,
    pub partition_level: usize,
    pub allow_level_one: bool,
    pub delimiter: String,
    pub sanitize: bool,
    pub max_len: usize,
    pub seed: u64,
    pub confidence: f64,
    pub margin: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            taxonomy_path: PathBuf::new(),
            catalog_path: PathBuf::new(),
            corpus_path: PathBuf::new(),
            output_dir: PathBuf::from("out"),
            root_name: DEFAULT_ROOT_NAME.to_string(),
            partition_level: 3,
            allow_level_one: false,
            delimiter: DEFAULT_DELIMITER.to_string(),
            sanitize: false,
            max_len: DEFAULT_MAX_LEN,
            seed: 0,
            confidence: DEFAULT_CONFIDENCE,
            margin: DEFAULT_MARGIN,
        }
    }
}

impl RunConfig {
    fn render_options(&self) -> RenderOptions {
        RenderOptions {
            delimiter: self.delimiter.clone(),
            policy: if self.sanitize { NamePolicy::Sanitize } else { NamePolicy::Reject },
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

// ---------------------------------------------------------------------------
// tree-stats

/// Partition statistics for parent levels `1..height` (at least level 1).
pub fn cmd_tree_stats(cfg: &RunConfig) -> Result<Vec<PartitionStats>> {
    let tree = TaxonomyTree::from_jsonl(&cfg.taxonomy_path, &cfg.root_name)?;
    let last = tree.height().saturating_sub(1).max(1);
    (1..=last).map(|l| tree.partition_stats(l).map_err(Error::from)).collect()
}

#[derive(Debug, Serialize)]
struct StatsRow {
    parent_level: usize,
    subtree_count: usize,
    mean_nodes: f64,
    mean_nodes_rounded: u64,
    max_nodes: usize,
    min_nodes: usize,
}

impl From<&PartitionStats> for StatsRow {
    fn from(s: &PartitionStats) -> Self {
        Self {
            parent_level: s.parent_level,
            subtree_count: s.subtree_count,
            mean_nodes: *s.mean_nodes.numer() as f64 / *s.mean_nodes.denom() as f64,
            mean_nodes_rounded: s.mean_rounded(),
            max_nodes: s.max_nodes,
            min_nodes: s.min_nodes,
        }
    }
}

pub fn stats_json(stats: &[PartitionStats]) -> String {
    let rows: Vec<StatsRow> = stats.iter().map(StatsRow::from).collect();
    serde_json::to_string_pretty(&rows).expect("stats serialize")
}

pub fn stats_text(stats: &[PartitionStats]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:>5} {:>8} {:>9} {:>8} {:>8}", "level", "subtrees", "mean", "max", "min");
    for s in stats {
        let _ = writeln!(
            out,
            "{:>5} {:>8} {:>9} {:>8} {:>8}",
            s.parent_level,
            s.subtree_count,
            s.mean_rounded(),
            s.max_nodes,
            s.min_nodes
        );
    }
    out
}

// ---------------------------------------------------------------------------
// sample

pub fn cmd_sample(cfg: &RunConfig) -> Result<SamplePlan> {
    let records = corpus::read_corpus(&cfg.corpus_path)?;
    let plan = SamplePlan::new(records.len(), cfg.confidence, cfg.margin)?;
    let drawn = sampler::draw_sample(&records, plan.size, cfg.seed)?;
    ensure_dir(&cfg.output_dir)?;
    jsonl::write_jsonl(&cfg.output_dir.join(SAMPLED_CORPUS_FILE), &drawn)?;
    jsonl::write_json(&cfg.output_dir.join(SAMPLE_PLAN_FILE), &plan)?;
    Ok(plan)
}

// ---------------------------------------------------------------------------
// build

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub partition_level: usize,
    pub records: usize,
    pub subtrees: usize,
    pub pairs_total: usize,
    pub pairs_emitted: usize,
    pub pairs_filtered: usize,
    pub filtered_fraction: f64,
    /// Samples whose word count plus pair special tokens exceeds `max_len`.
    /// Subword tokenization can only make an input longer, so this is a
    /// lower bound on the samples a model will truncate.
    pub overflow_count: usize,
    pub max_len: usize,
}

pub fn cmd_build(cfg: &RunConfig) -> Result<BuildReport> {
    if cfg.partition_level < 2 && !cfg.allow_level_one {
        return Err(Error::Config(format!(
            "partition level {} puts every category in one list; pass --allow-level-one to force it",
            cfg.partition_level
        )));
    }
    if cfg.max_len == 0 {
        return Err(Error::Config("max_len must be positive".into()));
    }
    let tree = TaxonomyTree::from_jsonl(&cfg.taxonomy_path, &cfg.root_name)?;
    let catalog = ConceptCatalog::from_jsonl(&cfg.catalog_path)?;
    let records = corpus::read_corpus(&cfg.corpus_path)?;
    let subtrees = tree.subtrees_at_level(cfg.partition_level)?.len();

    let samples = dataset::build_samples(&records, &catalog, &tree, cfg.partition_level, &cfg.render_options())?;
    let tagged: Vec<TaggedSample> = samples.into_par_iter().map(TaggedSample::new).collect();
    let overflow_count = tagged
        .iter()
        .filter(|t| t.tokens.len() + PAIR_SPECIAL_TOKENS > cfg.max_len)
        .count();

    let pairs_total = records.len() * subtrees;
    let report = BuildReport {
        partition_level: cfg.partition_level,
        records: records.len(),
        subtrees,
        pairs_total,
        pairs_emitted: tagged.len(),
        pairs_filtered: pairs_total - tagged.len(),
        filtered_fraction: if pairs_total == 0 {
            0.0
        } else {
            (pairs_total - tagged.len()) as f64 / pairs_total as f64
        },
        overflow_count,
        max_len: cfg.max_len,
    };
    ensure_dir(&cfg.output_dir)?;
    jsonl::write_jsonl(&cfg.output_dir.join(TAGGED_SAMPLES_FILE), &tagged)?;
    jsonl::write_json(&cfg.output_dir.join(BUILD_REPORT_FILE), &report)?;
    Ok(report)
}

// ---------------------------------------------------------------------------
// reorder

/// Read tagged samples, checking each against its own tokenization.
pub fn read_tagged(path: &Path) -> Result<Vec<TaggedSample>> {
    let samples: Vec<TaggedSample> = jsonl::read_jsonl(path)?;
    for s in &samples {
        s.sample.validate()?;
        let fresh = tagging::tag_sample(&s.sample);
        if fresh.tokens != s.tokens || fresh.sentence1_len != s.sentence1_len || fresh.tags != s.tags {
            return Err(Error::Config(format!(
                "{}: sample {} tokens or tags disagree with its text and gold spans",
                path.display(),
                s.sample.sample_id
            )));
        }
    }
    Ok(samples)
}

pub fn cmd_reorder(samples_path: &Path, output_dir: &Path, seed: u64) -> Result<usize> {
    let samples = read_tagged(samples_path)?;
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = samples.iter().map(|_| master.next_u64()).collect();
    let reordered = samples
        .par_iter()
        .zip(seeds)
        .map(|(s, sample_seed)| {
            let list = s.sample.categories()?;
            let (out, _) = dataset::reorder_categories(&s.sample, &list, sample_seed);
            Ok(TaggedSample::new(out))
        })
        .collect::<Result<Vec<_>>>()?;
    ensure_dir(output_dir)?;
    jsonl::write_jsonl(&output_dir.join(REORDERED_SAMPLES_FILE), &reordered)?;
    Ok(reordered.len())
}

// ---------------------------------------------------------------------------
// eval

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionLine {
    pub sample_id: String,
    pub pred_tags: Vec<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochReport {
    pub predictions: String,
    pub evaluated: usize,
    pub skipped_missing: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strict: Option<ReportSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<ReportSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalOutput {
    pub mode: EvalMode,
    pub samples: usize,
    pub evaluated: usize,
    pub skipped_missing: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strict: Option<ReportSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<ReportSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub epochs: Vec<EpochReport>,
}

/// Exact corpus-level reports for one predictions set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusScores {
    pub strict: EvalReport,
    pub classification: EvalReport,
    pub evaluated: usize,
    pub skipped_missing: usize,
}

pub fn index_predictions(
    samples: &[TaggedSample],
    preds: Vec<PredictionLine>,
) -> Result<HashMap<String, Vec<i32>>> {
    let known: std::collections::HashSet<&str> = samples.iter().map(|s| s.sample.sample_id.as_str()).collect();
    let mut map = HashMap::with_capacity(preds.len());
    for p in preds {
        if !known.contains(p.sample_id.as_str()) {
            return Err(Error::UnknownSample(p.sample_id));
        }
        if map.contains_key(&p.sample_id) {
            return Err(Error::DuplicatePrediction(p.sample_id));
        }
        map.insert(p.sample_id, p.pred_tags);
    }
    Ok(map)
}

/// Micro-averaged strict and classification scores. Samples without a
/// prediction are skipped and counted.
pub fn score_corpus(samples: &[TaggedSample], preds: &HashMap<String, Vec<i32>>) -> Result<CorpusScores> {
    let per_sample = samples
        .par_iter()
        .map(|s| {
            let id = &s.sample.sample_id;
            let Some(pred) = preds.get(id) else {
                return Ok(None);
            };
            let wrap = |source| Error::Metrics {
                sample_id: id.clone(),
                source,
            };
            let seq = s.sequence();
            let ranges = tagging::segment_token_ranges(&s.sample, &seq);
            let strict = metrics::evaluate_strict(pred, &s.tags).map_err(wrap)?;
            let cls = metrics::evaluate_classification(pred, &s.tags, &ranges).map_err(wrap)?;
            Ok(Some((strict, cls)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = CorpusScores {
        strict: EvalReport::empty(Mode::Strict),
        classification: EvalReport::empty(Mode::Classification),
        evaluated: 0,
        skipped_missing: 0,
    };
    for r in per_sample {
        match r {
            Some((s, c)) => {
                out.strict.merge(&s);
                out.classification.merge(&c);
                out.evaluated += 1;
            }
            None => out.skipped_missing += 1,
        }
    }
    Ok(out)
}

pub fn cmd_eval(samples_path: &Path, predictions: &[PathBuf], mode: EvalMode, output_dir: &Path) -> Result<EvalOutput> {
    if predictions.is_empty() {
        return Err(Error::Config("at least one predictions file is required".into()));
    }
    let samples = read_tagged(samples_path)?;
    let mut epochs = Vec::with_capacity(predictions.len());
    for path in predictions {
        let preds = index_predictions(&samples, jsonl::read_jsonl(path)?)?;
        let scores = score_corpus(&samples, &preds)?;
        epochs.push(EpochReport {
            predictions: path.display().to_string(),
            evaluated: scores.evaluated,
            skipped_missing: scores.skipped_missing,
            strict: mode.includes(Mode::Strict).then(|| scores.strict.summary()),
            classification: mode.includes(Mode::Classification).then(|| scores.classification.summary()),
        });
    }
    let last = epochs.last().cloned().expect("non-empty");
    let out = EvalOutput {
        mode,
        samples: samples.len(),
        evaluated: last.evaluated,
        skipped_missing: last.skipped_missing,
        strict: last.strict,
        classification: last.classification,
        epochs: if epochs.len() > 1 { epochs } else { Vec::new() },
    };
    ensure_dir(output_dir)?;
    jsonl::write_json(&output_dir.join(EVAL_REPORT_FILE), &out)?;
    Ok(out)
}

fn summary_text(s: &ReportSummary) -> String {
    format!(
        "{:<14} P={:.4} R={:.4} F1={:.4} acc={:.4} (tp={} pred={} gold={})",
        format!("{:?}", s.mode).to_lowercase(),
        s.precision,
        s.recall,
        s.f1,
        s.accuracy,
        s.tp,
        s.pred_count,
        s.gold_count
    )
}

// ---------------------------------------------------------------------------
// dispatch

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

/// Execute a parsed command and return what it prints on stdout.
pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::TreeStats { taxonomy, format } => {
            let cfg = RunConfig {
                taxonomy_path: taxonomy.taxonomy,
                root_name: taxonomy.root_name,
                ..Default::default()
            };
            let stats = cmd_tree_stats(&cfg)?;
            Ok(match format {
                Format::Json => stats_json(&stats),
                Format::Text => stats_text(&stats),
            })
        }
        Command::Sample {
            corpus,
            out,
            seed,
            confidence,
            margin,
            format,
        } => {
            let cfg = RunConfig {
                corpus_path: corpus,
                output_dir: out.output_dir,
                seed,
                confidence,
                margin,
                ..Default::default()
            };
            let plan = cmd_sample(&cfg)?;
            Ok(match format {
                Format::Json => to_json(&plan),
                Format::Text => format!("sampled {} of {} records (z={})", plan.size, plan.population, plan.z),
            })
        }
        Command::Build {
            taxonomy,
            catalog,
            corpus,
            out,
            level,
            allow_level_one,
            delimiter,
            sanitize,
            max_len,
            format,
        } => {
            let cfg = RunConfig {
                taxonomy_path: taxonomy.taxonomy,
                root_name: taxonomy.root_name,
                catalog_path: catalog,
                corpus_path: corpus,
                output_dir: out.output_dir,
                partition_level: level,
                allow_level_one,
                delimiter,
                sanitize,
                max_len,
                ..Default::default()
            };
            let report = cmd_build(&cfg)?;
            Ok(match format {
                Format::Json => to_json(&report),
                Format::Text => format!(
                    "{} records x {} subtrees: {} samples emitted, {} filtered, {} over max_len",
                    report.records, report.subtrees, report.pairs_emitted, report.pairs_filtered, report.overflow_count
                ),
            })
        }
        Command::Reorder { samples, out, seed } => {
            let n = cmd_reorder(&samples, &out.output_dir, seed)?;
            Ok(format!("reordered {n} samples"))
        }
        Command::Eval {
            samples,
            predictions,
            out,
            mode,
            format,
        } => {
            let report = cmd_eval(&samples, &predictions, mode, &out.output_dir)?;
            Ok(match format {
                Format::Json => to_json(&report),
                Format::Text => {
                    let mut s = format!(
                        "evaluated {} of {} samples ({} missing)\n",
                        report.evaluated, report.samples, report.skipped_missing
                    );
                    for r in report.strict.iter().chain(&report.classification) {
                        s.push_str(&summary_text(r));
                        s.push('\n');
                    }
                    s
                }
            })
        }
    }
}
