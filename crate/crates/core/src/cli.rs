//! Command-line interface.
//!
//! Subcommands cover the whole pipeline: `score` and `mine` over a pair
//! corpus, `idiom-prep` for idiom-paraphrase records, `eval` and
//! `loss-check` for metrics, and `stats` for feature-table analyses.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::corpus::{
    apply_sidecar, read_corpus, tokenize, FeatureRecord, IngestConfig, TokenMode,
};
use crate::idiom::{
    build_idiom_dictionary, ias_loss, parse_cip_record, prepend_prompt, DistributionTrack,
    IdiomRecord, LossReport, Task,
};
use crate::metrics::{bleu, sari_corpus, sari_sentence, EvalInstance, SariMode, SariOptions};
use crate::pipeline::{run_mine, score_pairs, MineOutputRecord, RunMetadata};
use crate::selection::{correlation_report, paired_t_test};
use crate::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "simpkit", version, about = "Readability-guided sentence simplification toolkit")]
pub struct Cli {
    /// Path to a TOML config file; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Dotted-path config overrides, e.g. --set filter.min_diff=0.2.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute per-pair feature records for a corpus.
    Score(ScoreArgs),
    /// Run the full mining pass: orient, filter, bin, gate.
    Mine(MineArgs),
    /// Parse idiom-paraphrase records and build the idiom dictionary.
    IdiomPrep(IdiomPrepArgs),
    /// Score system outputs with SARI and BLEU.
    Eval(EvalArgs),
    /// Compute the combined sentence / idiom loss from distribution tracks.
    LossCheck(LossCheckArgs),
    /// Correlations and the paired t-test over a feature table.
    Stats(StatsArgs),
}

#[derive(Args, Debug)]
pub struct ScoreArgs {
    /// Pair corpus (JSONL).
    #[arg(long)]
    pub input: PathBuf,
    /// Optional sidecar with trees, embeddings or WNLL tracks.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    /// Output feature table (JSONL); stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MineArgs {
    /// Pair corpus (JSONL).
    #[arg(long)]
    pub input: PathBuf,
    /// Optional sidecar with trees, embeddings or WNLL tracks.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    /// Kept pairs (JSONL); stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Selection report (JSON).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct IdiomPrepArgs {
    /// Records as JSONL ({id?, source, target}) or TSV (source, target).
    #[arg(long)]
    pub input: PathBuf,
    /// Parsed records (JSONL); stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Idiom dictionary (JSON).
    #[arg(long)]
    pub dict: Option<PathBuf>,
    /// Also emit prompted model inputs for both tasks.
    #[arg(long)]
    pub prompts: bool,
    /// Per-record parse failures (JSONL). Failures never abort the run;
    /// they surface here and in the exit code.
    #[arg(long)]
    pub errors: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EvalMetric {
    Sari,
    Bleu,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EvalMode {
    /// Mean of per-sentence SARI scores.
    Css,
    /// Corpus-level precision/recall aggregation.
    Mcts,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Evaluation rows as TSV (orig, sys, ref...) or JSONL
    /// ({orig, sys, refs}).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = EvalMetric::Both)]
    pub metric: EvalMetric,
    /// SARI aggregation mode.
    #[arg(long, value_enum, default_value_t = EvalMode::Css)]
    pub mode: EvalMode,
    /// Tokenization level; the config's token_mode when omitted.
    #[arg(long)]
    pub level: Option<String>,
}

#[derive(Args, Debug)]
pub struct LossCheckArgs {
    /// Tracks as JSONL: {id, targets, probs, span?}.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    /// Feature table (JSONL), as produced by `score`.
    #[arg(long)]
    pub input: PathBuf,
}

/// Runs the parsed CLI; the returned code is the process exit status.
pub fn run(cli: Cli) -> Result<i32> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    cfg.apply_overrides(&cli.overrides)?;

    match cli.command {
        Command::Score(args) => cmd_score(&cfg, args),
        Command::Mine(args) => cmd_mine(&cfg, args),
        Command::IdiomPrep(args) => cmd_idiom_prep(&cfg, args),
        Command::Eval(args) => cmd_eval(&cfg, args),
        Command::LossCheck(args) => cmd_loss_check(&cfg, args),
        Command::Stats(args) => cmd_stats(&cfg, args),
    }
}

fn load_pairs(
    cfg: &PipelineConfig,
    input: &Path,
    sidecar: Option<&Path>,
) -> Result<Vec<crate::corpus::ParaphrasePair>> {
    let mut pairs = read_corpus(
        input,
        &IngestConfig {
            token_mode: cfg.token_mode,
        },
    )?;
    if let Some(sc) = sidecar {
        apply_sidecar(&mut pairs, sc)?;
    }
    Ok(pairs)
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| Error::io(p, e))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

fn write_meta_sidecar(path: &Path, meta: &RunMetadata) -> Result<()> {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    let meta_path = PathBuf::from(name);
    let text = serde_json::to_string_pretty(meta).expect("metadata serializes");
    std::fs::write(&meta_path, text).map_err(|e| Error::io(&meta_path, e))
}

fn cmd_score(cfg: &PipelineConfig, args: ScoreArgs) -> Result<i32> {
    let pairs = load_pairs(cfg, &args.input, args.sidecar.as_deref())?;
    let scored = score_pairs(pairs, cfg)?;
    let mut out = open_out(args.output.as_deref())?;
    for sp in &scored {
        let line = serde_json::to_string(&sp.features).expect("feature record serializes");
        writeln!(out, "{line}").map_err(|e| Error::io(args.input.as_path(), e))?;
    }
    out.flush().ok();
    if let Some(p) = &args.output {
        write_meta_sidecar(p, &RunMetadata::new(cfg))?;
    }
    Ok(0)
}

#[derive(Serialize)]
struct MineReportDoc<'a> {
    metadata: RunMetadata,
    report: &'a crate::selection::SelectionReport,
}

fn cmd_mine(cfg: &PipelineConfig, args: MineArgs) -> Result<i32> {
    let pairs = load_pairs(cfg, &args.input, args.sidecar.as_deref())?;
    let outcome = run_mine(pairs, cfg)?;
    let mut out = open_out(args.output.as_deref())?;
    for mp in &outcome.kept {
        let rec = MineOutputRecord::from_mined(mp);
        let line = serde_json::to_string(&rec).expect("mine record serializes");
        writeln!(out, "{line}").map_err(|e| Error::io(args.input.as_path(), e))?;
    }
    out.flush().ok();
    if let Some(p) = &args.output {
        write_meta_sidecar(p, &RunMetadata::new(cfg))?;
    }
    if let Some(p) = &args.report {
        let doc = MineReportDoc {
            metadata: RunMetadata::new(cfg),
            report: &outcome.report,
        };
        let text = serde_json::to_string_pretty(&doc).expect("report serializes");
        std::fs::write(p, text).map_err(|e| Error::io(p, e))?;
    }
    Ok(0)
}

#[derive(Deserialize)]
struct RawCipRecord {
    #[serde(default)]
    id: Option<String>,
    source: String,
    target: String,
}

#[derive(Serialize)]
struct CipOutputRecord<'a> {
    #[serde(flatten)]
    record: &'a IdiomRecord,
    target_sentence: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    idiom_prompt: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    simplify_prompt: Option<String>,
}

#[derive(Serialize)]
struct CipError {
    id: String,
    line: usize,
    error: String,
}

fn read_cip_input(path: &Path) -> Result<Vec<(usize, RawCipRecord)>> {
    let is_tsv = path.extension().and_then(|e| e.to_str()) == Some("tsv");
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let raw = if is_tsv {
            let mut cols = line.split('\t');
            let source = cols.next().unwrap_or_default().to_string();
            let target = cols
                .next()
                .ok_or_else(|| Error::Malformed {
                    line: lineno,
                    msg: "expected two tab-separated columns: source, target".into(),
                })?
                .to_string();
            RawCipRecord {
                id: None,
                source,
                target,
            }
        } else {
            serde_json::from_str(&line).map_err(|e| Error::Malformed {
                line: lineno,
                msg: e.to_string(),
            })?
        };
        rows.push((lineno, raw));
    }
    Ok(rows)
}

fn cmd_idiom_prep(cfg: &PipelineConfig, args: IdiomPrepArgs) -> Result<i32> {
    let rows = read_cip_input(&args.input)?;
    let mut records = Vec::new();
    let mut failures: Vec<CipError> = Vec::new();
    for (lineno, raw) in rows {
        let id = raw.id.unwrap_or_else(|| format!("r{lineno}"));
        match parse_cip_record(id.clone(), &raw.source, &raw.target, cfg.token_mode) {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push(CipError {
                id,
                line: lineno,
                error: e.to_string(),
            }),
        }
    }

    let mut out = open_out(args.output.as_deref())?;
    for rec in &records {
        let target_sentence = rec.target_sentence(cfg.token_mode);
        let doc = CipOutputRecord {
            record: rec,
            idiom_prompt: args
                .prompts
                .then(|| prepend_prompt(Task::Idiom, &rec.idiom)),
            simplify_prompt: args
                .prompts
                .then(|| prepend_prompt(Task::Simplify, &rec.original_sentence)),
            target_sentence,
        };
        let line = serde_json::to_string(&doc).expect("record serializes");
        writeln!(out, "{line}").map_err(|e| Error::io(args.input.as_path(), e))?;
    }
    out.flush().ok();
    if let Some(p) = &args.output {
        write_meta_sidecar(p, &RunMetadata::new(cfg))?;
    }

    if let Some(p) = &args.dict {
        let dict = build_idiom_dictionary(&records);
        let text = serde_json::to_string_pretty(&dict).expect("dictionary serializes");
        std::fs::write(p, text).map_err(|e| Error::io(p, e))?;
    }

    if let Some(p) = &args.errors {
        let f = File::create(p).map_err(|e| Error::io(p, e))?;
        let mut w = BufWriter::new(f);
        for err in &failures {
            let line = serde_json::to_string(err).expect("error record serializes");
            writeln!(w, "{line}").map_err(|e| Error::io(p, e))?;
        }
    } else {
        for err in &failures {
            eprintln!("line {}: record `{}`: {}", err.line, err.id, err.error);
        }
    }

    Ok(if failures.is_empty() { 0 } else { 2 })
}

#[derive(Deserialize)]
struct RawEvalRow {
    orig: String,
    sys: String,
    refs: Vec<String>,
}

fn parse_eval_input(path: &Path, mode: TokenMode) -> Result<Vec<EvalInstance>> {
    let is_tsv = path.extension().and_then(|e| e.to_str()) == Some("tsv");
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut instances = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let row: RawEvalRow = if is_tsv {
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < 3 {
                return Err(Error::Malformed {
                    line: lineno,
                    msg: format!(
                        "expected at least 3 tab-separated columns (orig, sys, ref...), got {}",
                        cols.len()
                    ),
                });
            }
            RawEvalRow {
                orig: cols[0].to_string(),
                sys: cols[1].to_string(),
                refs: cols[2..].iter().map(|s| s.to_string()).collect(),
            }
        } else {
            serde_json::from_str(&line).map_err(|e| Error::Malformed {
                line: lineno,
                msg: e.to_string(),
            })?
        };
        if row.refs.is_empty() {
            return Err(Error::Malformed {
                line: lineno,
                msg: "at least one reference is required".into(),
            });
        }
        let mut references = Vec::with_capacity(row.refs.len());
        for r in &row.refs {
            references.push(tokenize(r, mode).map_err(|e| Error::Malformed {
                line: lineno,
                msg: e.to_string(),
            })?);
        }
        instances.push(EvalInstance {
            original: tokenize(&row.orig, mode).map_err(|e| Error::Malformed {
                line: lineno,
                msg: e.to_string(),
            })?,
            system: tokenize(&row.sys, mode).map_err(|e| Error::Malformed {
                line: lineno,
                msg: e.to_string(),
            })?,
            references,
        });
    }
    if instances.is_empty() {
        return Err(Error::InvalidInput("empty evaluation input".into()));
    }
    Ok(instances)
}

#[derive(Serialize)]
struct EvalReport {
    metadata: RunMetadata,
    instances: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    sari: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sari_sentences: Option<Vec<crate::metrics::SariScore>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bleu: Option<f64>,
}

fn cmd_eval(cfg: &PipelineConfig, args: EvalArgs) -> Result<i32> {
    let level = match args.level.as_deref() {
        None => cfg.token_mode,
        Some("char") => TokenMode::Char,
        Some("word") => TokenMode::Word,
        Some(other) => {
            return Err(Error::Config(format!(
                "unknown --level `{other}` (expected char or word)"
            )))
        }
    };
    let instances = parse_eval_input(&args.input, level)?;
    let opts = SariOptions {
        deletion_f1: cfg.metrics.deletion_f1,
    };
    let mode = match args.mode {
        EvalMode::Css => SariMode::PerSentenceMean,
        EvalMode::Mcts => SariMode::CorpusLevel,
    };
    let want_sari = matches!(args.metric, EvalMetric::Sari | EvalMetric::Both);
    let want_bleu = matches!(args.metric, EvalMetric::Bleu | EvalMetric::Both);

    let (sari, sari_sentences) = if want_sari {
        let corpus = sari_corpus(&instances, mode, opts, level)?;
        let per_sentence: Vec<_> = instances
            .iter()
            .map(|i| sari_sentence(i, opts, level))
            .collect::<Result<_>>()?;
        (Some(corpus), Some(per_sentence))
    } else {
        (None, None)
    };
    let bleu_score = if want_bleu {
        Some(bleu(&instances, cfg.metrics.bleu_smoothing)?)
    } else {
        None
    };

    let report = EvalReport {
        metadata: RunMetadata::new(cfg),
        instances: instances.len(),
        sari,
        sari_sentences,
        bleu: bleu_score,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    Ok(0)
}

#[derive(Deserialize)]
struct RawLossRow {
    id: String,
    targets: Vec<usize>,
    probs: Vec<Vec<f64>>,
    #[serde(default)]
    span: Option<(usize, usize)>,
}

#[derive(Serialize)]
struct LossRow {
    id: String,
    #[serde(flatten)]
    loss: LossReport,
}

#[derive(Serialize)]
struct LossDoc {
    metadata: RunMetadata,
    rows: Vec<LossRow>,
    mean_total: f64,
}

fn cmd_loss_check(cfg: &PipelineConfig, args: LossCheckArgs) -> Result<i32> {
    let file = File::open(&args.input).map_err(|e| Error::io(&args.input, e))?;
    let reader = BufReader::new(file);
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(&args.input, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let raw: RawLossRow = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            line: lineno,
            msg: e.to_string(),
        })?;
        let track = DistributionTrack::new(raw.probs).map_err(|e| Error::Malformed {
            line: lineno,
            msg: e.to_string(),
        })?;
        let span = raw.span.unwrap_or((0, 0));
        let loss = ias_loss(&track, &raw.targets, span).map_err(|e| Error::Malformed {
            line: lineno,
            msg: e.to_string(),
        })?;
        rows.push(LossRow { id: raw.id, loss });
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput("empty loss input".into()));
    }
    let mean_total = rows.iter().map(|r| r.loss.total).sum::<f64>() / rows.len() as f64;
    let doc = LossDoc {
        metadata: RunMetadata::new(cfg),
        rows,
        mean_total,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&doc).expect("report serializes")
    );
    Ok(0)
}

#[derive(Serialize)]
struct StatsDoc {
    metadata: RunMetadata,
    records: usize,
    correlations: crate::selection::CorrelationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    readability_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    readability_p: Option<f64>,
}

fn cmd_stats(cfg: &PipelineConfig, args: StatsArgs) -> Result<i32> {
    let file = File::open(&args.input).map_err(|e| Error::io(&args.input, e))?;
    let reader = BufReader::new(file);
    let mut records: Vec<FeatureRecord> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(&args.input, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            line: idx + 1,
            msg: e.to_string(),
        })?;
        records.push(rec);
    }
    if records.is_empty() {
        return Err(Error::InvalidInput("empty feature table".into()));
    }
    let correlations = correlation_report(&records);
    let src: Vec<f64> = records.iter().map(|r| r.rsrs_source).collect();
    let tgt: Vec<f64> = records.iter().map(|r| r.rsrs_target).collect();
    let tp = paired_t_test(&src, &tgt).ok();
    let doc = StatsDoc {
        metadata: RunMetadata::new(cfg),
        records: records.len(),
        correlations,
        readability_t: tp.map(|(t, _)| t),
        readability_p: tp.map(|(_, p)| p),
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&doc).expect("report serializes")
    );
    Ok(0)
}
