//! Output scoring: SARI against the original sentence plus multiple
//! references, and corpus BLEU.
//!
//! SARI scores three operations per n-gram order (1..=4): keeping n-grams
//! shared with the original, adding new n-grams, and deleting original
//! n-grams. Keep and add are F1 scores, deletion is precision by default.
//! Original and system counts are scaled by the reference count so that
//! n-gram credit is fractional per reference ("reference-fraction"
//! weighting). Components whose candidate and reference sets are both empty
//! score 1, so a perfect copy scores 100.
//!
//! Two corpus aggregations are supported: the per-sentence mean of sentence
//! scores, and a corpus-level pass that averages precision/recall across
//! sentences before forming F1. The two generally differ.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::corpus::TokenMode;
use crate::{Error, Result};

pub const NGRAM_MAX: usize = 4;

/// One evaluation row: original, system output, references (as token lists).
#[derive(Clone, Debug)]
pub struct EvalInstance {
    pub original: Vec<String>,
    pub system: Vec<String>,
    pub references: Vec<Vec<String>>,
}

impl EvalInstance {
    fn validate(&self) -> Result<()> {
        if self.system.is_empty() {
            return Err(Error::InvalidInput("empty system output".into()));
        }
        if self.original.is_empty() || self.references.is_empty() {
            return Err(Error::InvalidInput(
                "instance needs an original sentence and at least one reference".into(),
            ));
        }
        Ok(())
    }
}

/// All contiguous n-grams with multiplicity, for n = 1..=n_max (orders longer
/// than the token list are absent).
pub fn ngram_multiset(tokens: &[String], n_max: usize) -> Vec<HashMap<Vec<String>, u64>> {
    (1..=n_max)
        .map(|n| {
            let mut counts: HashMap<Vec<String>, u64> = HashMap::new();
            if tokens.len() >= n {
                for w in tokens.windows(n) {
                    *counts.entry(w.to_vec()).or_insert(0) += 1;
                }
            }
            counts
        })
        .collect()
}

type Counter = HashMap<Vec<String>, u64>;

fn scale(c: &Counter, factor: u64) -> Counter {
    c.iter().map(|(k, v)| (k.clone(), v * factor)).collect()
}

fn intersect(a: &Counter, b: &Counter) -> Counter {
    a.iter()
        .filter_map(|(k, &va)| b.get(k).map(|&vb| (k.clone(), va.min(vb))))
        .filter(|(_, v)| *v > 0)
        .collect()
}

fn subtract(a: &Counter, b: &Counter) -> Counter {
    a.iter()
        .filter_map(|(k, &va)| {
            let vb = b.get(k).copied().unwrap_or(0);
            (va > vb).then(|| (k.clone(), va - vb))
        })
        .collect()
}

/// Precision/recall of one operation at one n-gram order. Vacuously empty
/// candidate (or reference) sets score 1.
#[derive(Clone, Copy, Debug, Default)]
pub struct OpStats {
    pub precision: f64,
    pub recall: f64,
}

/// Per-order precision/recall for keep, add, delete.
#[derive(Clone, Debug)]
pub struct SariStats {
    pub keep: Vec<OpStats>,
    pub add: Vec<OpStats>,
    pub del: Vec<OpStats>,
}

fn fraction_score(good: &Counter, all: &Counter) -> f64 {
    if all.is_empty() {
        return 1.0;
    }
    let sum: f64 = all
        .iter()
        .map(|(k, &denom)| good.get(k).copied().unwrap_or(0) as f64 / denom as f64)
        .sum();
    sum / all.len() as f64
}

/// Computes the per-order operation statistics for one instance.
pub fn sari_stats(instance: &EvalInstance) -> Result<SariStats> {
    instance.validate()?;
    let numref = instance.references.len() as u64;
    let orig = ngram_multiset(&instance.original, NGRAM_MAX);
    let sys = ngram_multiset(&instance.system, NGRAM_MAX);
    let refs: Vec<_> = instance
        .references
        .iter()
        .map(|r| ngram_multiset(r, NGRAM_MAX))
        .collect();

    let mut keep = Vec::with_capacity(NGRAM_MAX);
    let mut add = Vec::with_capacity(NGRAM_MAX);
    let mut del = Vec::with_capacity(NGRAM_MAX);
    for n in 0..NGRAM_MAX {
        let mut r_total: Counter = HashMap::new();
        for r in &refs {
            for (k, v) in &r[n] {
                *r_total.entry(k.clone()).or_insert(0) += v;
            }
        }
        let o = scale(&orig[n], numref);
        let c = scale(&sys[n], numref);

        // Keep: n-grams retained from the original.
        let k_cand = intersect(&o, &c);
        let k_good = intersect(&k_cand, &r_total);
        let k_all = intersect(&o, &r_total);
        keep.push(OpStats {
            precision: fraction_score(&k_good, &k_cand),
            recall: fraction_score(&k_good, &k_all),
        });

        // Delete: n-grams dropped from the original. Good deletions are the
        // ones the references also drop.
        let d_cand = subtract(&o, &c);
        let d_good = subtract(&d_cand, &r_total);
        let d_all = subtract(&o, &r_total);
        del.push(OpStats {
            precision: fraction_score(&d_good, &d_cand),
            recall: fraction_score(&d_good, &d_all),
        });

        // Add: new n-grams, set semantics.
        let o_set: HashSet<&Vec<String>> = orig[n].keys().collect();
        let a_cand: HashSet<&Vec<String>> =
            sys[n].keys().filter(|k| !o_set.contains(*k)).collect();
        let a_ref: HashSet<&Vec<String>> =
            r_total.keys().filter(|k| !o_set.contains(*k)).collect();
        let a_good = a_cand.intersection(&a_ref).count() as f64;
        add.push(OpStats {
            precision: if a_cand.is_empty() {
                1.0
            } else {
                a_good / a_cand.len() as f64
            },
            recall: if a_ref.is_empty() {
                1.0
            } else {
                a_good / a_ref.len() as f64
            },
        });
    }
    Ok(SariStats { keep, add, del })
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct SariOptions {
    /// Score deletion as F1 instead of precision.
    pub deletion_f1: bool,
}

/// SARI component scores on the 0..100 scale.
#[derive(Clone, Debug, Serialize)]
pub struct SariScore {
    pub keep: f64,
    pub add: f64,
    pub del: f64,
    pub mean: f64,
    pub level: TokenMode,
}

fn op_score(stats: &[OpStats], use_f1: bool) -> f64 {
    let sum: f64 = stats
        .iter()
        .map(|s| if use_f1 { f1(s.precision, s.recall) } else { s.precision })
        .sum();
    sum / stats.len() as f64
}

/// Sentence-level SARI: per-order operation scores averaged over orders,
/// then the three operations averaged, scaled to [0, 100].
pub fn sari_sentence(
    instance: &EvalInstance,
    opts: SariOptions,
    level: TokenMode,
) -> Result<SariScore> {
    let stats = sari_stats(instance)?;
    let keep = 100.0 * op_score(&stats.keep, true);
    let add = 100.0 * op_score(&stats.add, true);
    let del = 100.0 * op_score(&stats.del, opts.deletion_f1);
    Ok(SariScore {
        keep,
        add,
        del,
        mean: (keep + add + del) / 3.0,
        level,
    })
}

/// Corpus aggregation mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SariMode {
    /// Mean of per-sentence SARI scores.
    PerSentenceMean,
    /// One corpus-level computation: precision/recall averaged across
    /// sentences per order and operation, then combined.
    CorpusLevel,
}

fn check_uniform_refs(instances: &[EvalInstance]) -> Result<usize> {
    if instances.is_empty() {
        return Err(Error::InvalidInput("empty evaluation corpus".into()));
    }
    let x = instances[0].references.len();
    for (i, inst) in instances.iter().enumerate() {
        if inst.references.len() != x {
            return Err(Error::InvalidInput(format!(
                "instance {i} has {} references, expected {x}",
                inst.references.len()
            )));
        }
    }
    Ok(x)
}

/// Corpus SARI under the chosen aggregation.
pub fn sari_corpus(
    instances: &[EvalInstance],
    mode: SariMode,
    opts: SariOptions,
    level: TokenMode,
) -> Result<f64> {
    check_uniform_refs(instances)?;
    match mode {
        SariMode::PerSentenceMean => {
            let mut sum = 0.0;
            for inst in instances {
                sum += sari_sentence(inst, opts, level)?.mean;
            }
            Ok(sum / instances.len() as f64)
        }
        SariMode::CorpusLevel => {
            let all: Vec<SariStats> = instances.iter().map(sari_stats).collect::<Result<_>>()?;
            let n = all.len() as f64;
            let mean_op = |get: fn(&SariStats) -> &Vec<OpStats>, use_f1: bool| -> f64 {
                let mut total = 0.0;
                for order in 0..NGRAM_MAX {
                    let p = all.iter().map(|s| get(s)[order].precision).sum::<f64>() / n;
                    let r = all.iter().map(|s| get(s)[order].recall).sum::<f64>() / n;
                    total += if use_f1 { f1(p, r) } else { p };
                }
                total / NGRAM_MAX as f64
            };
            let keep = mean_op(|s| &s.keep, true);
            let add = mean_op(|s| &s.add, true);
            let del = mean_op(|s| &s.del, opts.deletion_f1);
            Ok(100.0 * (keep + add + del) / 3.0)
        }
    }
}

/// Corpus BLEU: geometric mean of clipped modified n-gram precisions for
/// n = 1..=4 times the brevity penalty. Orders with no system n-grams at all
/// are skipped; without smoothing, any zero precision yields 0.
pub fn bleu(instances: &[EvalInstance], smoothing: bool) -> Result<f64> {
    if instances.is_empty() {
        return Err(Error::InvalidInput("empty evaluation corpus".into()));
    }
    let mut numer = [0u64; NGRAM_MAX];
    let mut denom = [0u64; NGRAM_MAX];
    let mut sys_len = 0usize;
    let mut ref_len = 0usize;
    for inst in instances {
        if inst.system.is_empty() {
            return Err(Error::InvalidInput("empty system output".into()));
        }
        if inst.references.is_empty() {
            return Err(Error::InvalidInput("instance without references".into()));
        }
        sys_len += inst.system.len();
        // Closest reference length; ties favor the shorter.
        ref_len += inst
            .references
            .iter()
            .map(|r| r.len())
            .min_by_key(|&l| {
                let diff = (l as i64 - inst.system.len() as i64).abs();
                (diff, l)
            })
            .unwrap();
        let sys = ngram_multiset(&inst.system, NGRAM_MAX);
        let refs: Vec<_> = inst
            .references
            .iter()
            .map(|r| ngram_multiset(r, NGRAM_MAX))
            .collect();
        for n in 0..NGRAM_MAX {
            for (gram, &c) in &sys[n] {
                let max_ref = refs
                    .iter()
                    .map(|r| r[n].get(gram).copied().unwrap_or(0))
                    .max()
                    .unwrap_or(0);
                numer[n] += c.min(max_ref);
                denom[n] += c;
            }
        }
    }

    let mut log_sum = 0.0;
    let mut orders = 0usize;
    for n in 0..NGRAM_MAX {
        if denom[n] == 0 {
            continue;
        }
        let (num, den) = if smoothing {
            (numer[n] + 1, denom[n] + 1)
        } else {
            (numer[n], denom[n])
        };
        if num == 0 {
            return Ok(0.0);
        }
        log_sum += (num as f64 / den as f64).ln();
        orders += 1;
    }
    if orders == 0 {
        return Err(Error::InvalidInput(
            "no n-gram orders with system content".into(),
        ));
    }
    let precision = (log_sum / orders as f64).exp();
    let bp = if sys_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / sys_len as f64).exp()
    };
    Ok(bp * precision)
}
