//! Pair selection: orientation by readability sign, threshold filtering,
//! binning by readability difference, per-bin feature statistics, the
//! mean-plus-or-minus-sigma quality gate, and the correlation / t-test
//! analyses over feature tables.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::corpus::{FeatureRecord, ParaphrasePair};
use crate::{Error, Result};

/// A pair together with its computed features and orientation flag.
#[derive(Clone, Debug)]
pub struct ScoredPair {
    pub pair: ParaphrasePair,
    pub features: FeatureRecord,
    pub swapped: bool,
}

/// Swaps the pair sides when the readability difference is negative, so the
/// source is always the harder side afterwards. Ties are left unchanged.
pub fn orient_pair(mut sp: ScoredPair) -> ScoredPair {
    if sp.features.rsrs_diff < 0.0 {
        sp.pair.swap_sides();
        std::mem::swap(&mut sp.features.rsrs_source, &mut sp.features.rsrs_target);
        sp.features.rsrs_diff = -sp.features.rsrs_diff;
        sp.swapped = !sp.swapped;
    }
    sp
}

/// Why a pair was rejected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    TooShort,
    BelowDiffThreshold,
    OutsideGate,
    MissingFeature,
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RejectReason::TooShort => "too-short",
            RejectReason::BelowDiffThreshold => "below-diff-threshold",
            RejectReason::OutsideGate => "outside-gate",
            RejectReason::MissingFeature => "missing-feature",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    /// Pairs with fewer tokens than this on either side are rejected.
    pub min_tokens: usize,
    /// Pairs with a readability difference strictly below this are rejected.
    pub min_diff: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_tokens: 30,
            min_diff: 0.1,
        }
    }
}

/// Threshold filter; returns the rejection reason, if any. Length is checked
/// before the difference threshold. Both thresholds are inclusive: a pair at
/// exactly `min_tokens` or `min_diff` is kept.
pub fn filter_pair(sp: &ScoredPair, cfg: &FilterConfig) -> Option<RejectReason> {
    if sp.pair.source.len() < cfg.min_tokens || sp.pair.target.len() < cfg.min_tokens {
        return Some(RejectReason::TooShort);
    }
    if sp.features.rsrs_diff < cfg.min_diff {
        return Some(RejectReason::BelowDiffThreshold);
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinStrategy {
    EqualWidth,
    EqualFrequency,
}

/// One readability-difference bin. Bins are half-open `[lower, upper)` with
/// the last bin closed above; a degenerate corpus (all differences equal)
/// yields a single bin with `lower == upper`.
#[derive(Clone, Debug, Serialize)]
pub struct Bin {
    pub index: usize,
    pub lower: f64,
    pub upper: f64,
    /// Member pair ids, in input order.
    pub members: Vec<String>,
}

/// Partitions records into `num_bins` bins by readability difference.
/// Deterministic; every record lands in exactly one bin and empty bins are
/// kept so indices are stable.
pub fn bin_records(
    records: &[FeatureRecord],
    num_bins: usize,
    strategy: BinStrategy,
) -> Result<Vec<Bin>> {
    if num_bins < 1 {
        return Err(Error::InvalidInput("num_bins must be >= 1".into()));
    }
    if records.is_empty() {
        return Err(Error::InvalidInput("cannot bin an empty record set".into()));
    }
    let lo = records.iter().map(|r| r.rsrs_diff).fold(f64::INFINITY, f64::min);
    let hi = records
        .iter()
        .map(|r| r.rsrs_diff)
        .fold(f64::NEG_INFINITY, f64::max);

    match strategy {
        BinStrategy::EqualWidth => {
            if hi == lo {
                // Degenerate: everything in one bin.
                return Ok(vec![Bin {
                    index: 0,
                    lower: lo,
                    upper: hi,
                    members: records.iter().map(|r| r.pair_id.clone()).collect(),
                }]);
            }
            let width = (hi - lo) / num_bins as f64;
            let mut bins: Vec<Bin> = (0..num_bins)
                .map(|i| Bin {
                    index: i,
                    lower: lo + i as f64 * width,
                    upper: lo + (i + 1) as f64 * width,
                    members: Vec::new(),
                })
                .collect();
            for r in records {
                let mut idx = ((r.rsrs_diff - lo) / width).floor() as usize;
                if idx >= num_bins {
                    idx = num_bins - 1;
                }
                bins[idx].members.push(r.pair_id.clone());
            }
            Ok(bins)
        }
        BinStrategy::EqualFrequency => {
            let mut order: Vec<usize> = (0..records.len()).collect();
            order.sort_by(|&a, &b| {
                records[a]
                    .rsrs_diff
                    .partial_cmp(&records[b].rsrs_diff)
                    .unwrap()
                    .then_with(|| records[a].pair_id.cmp(&records[b].pair_id))
            });
            let n = records.len();
            let base = n / num_bins;
            let extra = n % num_bins;
            let mut bins = Vec::with_capacity(num_bins);
            let mut cursor = 0usize;
            for i in 0..num_bins {
                let size = base + usize::from(i < extra);
                let chunk = &order[cursor..cursor + size];
                cursor += size;
                let lower = chunk
                    .first()
                    .map(|&k| records[k].rsrs_diff)
                    .unwrap_or(f64::NAN);
                let upper = chunk
                    .last()
                    .map(|&k| records[k].rsrs_diff)
                    .unwrap_or(f64::NAN);
                let mut members: Vec<usize> = chunk.to_vec();
                members.sort_unstable(); // back to input order
                bins.push(Bin {
                    index: i,
                    lower,
                    upper,
                    members: members.iter().map(|&k| records[k].pair_id.clone()).collect(),
                });
            }
            Ok(bins)
        }
    }
}

/// Mean / standard deviation of one feature over the bin members where the
/// feature is present.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

/// Per-bin statistics for the three similarity features. A feature absent on
/// every member has no stats.
#[derive(Clone, Debug, Default, Serialize)]
pub struct BinStats {
    pub lev: Option<FeatureStats>,
    pub syn: Option<FeatureStats>,
    pub sem: Option<FeatureStats>,
    pub count: usize,
}

fn feature_stats(values: &[f64], sample_std: bool) -> Option<FeatureStats> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let std = if sample_std {
        if values.len() > 1 {
            (ss / (n - 1.0)).sqrt()
        } else {
            0.0
        }
    } else {
        (ss / n).sqrt()
    };
    Some(FeatureStats {
        mean,
        std,
        count: values.len(),
    })
}

/// Computes per-feature statistics over a bin. Population standard deviation
/// by default; `sample_std` switches to the n-1 denominator.
pub fn bin_stats(
    bin: &Bin,
    records: &HashMap<&str, &FeatureRecord>,
    sample_std: bool,
) -> Result<BinStats> {
    if bin.members.is_empty() {
        return Err(Error::InvalidInput(format!("bin {} is empty", bin.index)));
    }
    let mut lev = Vec::new();
    let mut syn = Vec::new();
    let mut sem = Vec::new();
    for id in &bin.members {
        let r = records
            .get(id.as_str())
            .ok_or_else(|| Error::InvalidInput(format!("bin member `{id}` not in record set")))?;
        lev.push(r.lev_sim);
        if let Some(v) = r.syn_sim {
            syn.push(v);
        }
        if let Some(v) = r.sem_sim {
            sem.push(v);
        }
    }
    Ok(BinStats {
        lev: feature_stats(&lev, sample_std),
        syn: feature_stats(&syn, sample_std),
        sem: feature_stats(&sem, sample_std),
        count: bin.members.len(),
    })
}

/// What to do with pairs missing a feature at the gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingFeaturePolicy {
    /// Gate only on the features the record has.
    Ignore,
    /// Reject records lacking any of the three features.
    Reject,
}

/// Gate outcome for one record.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateOutcome {
    Keep,
    Reject(RejectReason),
}

/// The band test: keep iff every feature present in both the record and the
/// bin statistics lies within mean +/- std, inclusive on both ends.
pub fn quality_gate(
    record: &FeatureRecord,
    stats: &BinStats,
    policy: MissingFeaturePolicy,
) -> GateOutcome {
    if policy == MissingFeaturePolicy::Reject
        && (record.syn_sim.is_none() || record.sem_sim.is_none())
    {
        return GateOutcome::Reject(RejectReason::MissingFeature);
    }
    let checks = [
        (Some(record.lev_sim), stats.lev),
        (record.syn_sim, stats.syn),
        (record.sem_sim, stats.sem),
    ];
    for (value, st) in checks {
        if let (Some(v), Some(st)) = (value, st) {
            if v < st.mean - st.std || v > st.mean + st.std {
                return GateOutcome::Reject(RejectReason::OutsideGate);
            }
        }
    }
    GateOutcome::Keep
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MineConfig {
    pub filter: FilterConfig,
    pub num_bins: usize,
    pub strategy: BinStrategy,
    /// Use the sample (n-1) standard deviation instead of population.
    pub sample_std: bool,
    /// Bins with fewer members fall back to global statistics for gating.
    pub min_bin_size: usize,
    pub missing_feature: MissingFeaturePolicy,
}

impl Default for MineConfig {
    fn default() -> Self {
        MineConfig {
            filter: FilterConfig::default(),
            num_bins: 10,
            strategy: BinStrategy::EqualWidth,
            sample_std: false,
            min_bin_size: 1,
            missing_feature: MissingFeaturePolicy::Ignore,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BinReport {
    pub index: usize,
    pub lower: f64,
    pub upper: f64,
    pub total: usize,
    pub kept: usize,
    pub stats: BinStats,
}

/// Full accounting of one mining run: kept and rejected ids partition the
/// input.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SelectionReport {
    pub input: usize,
    pub kept: Vec<String>,
    pub rejected: Vec<(String, RejectReason)>,
    pub bins: Vec<BinReport>,
}

/// Result of [`mine`]: the kept pairs in input order plus the report.
#[derive(Debug)]
pub struct MineOutcome {
    pub kept: Vec<MinedPair>,
    pub report: SelectionReport,
}

/// One kept pair with its bin assignment.
#[derive(Debug)]
pub struct MinedPair {
    pub scored: ScoredPair,
    pub bin: usize,
}

/// Runs orient -> filter -> bin -> stats -> gate over scored pairs.
/// Deterministic for a fixed config; kept pairs come out in input order.
pub fn mine(scored: Vec<ScoredPair>, cfg: &MineConfig) -> Result<MineOutcome> {
    let mut report = SelectionReport {
        input: scored.len(),
        ..Default::default()
    };

    let mut survivors: Vec<ScoredPair> = Vec::new();
    for sp in scored {
        let sp = orient_pair(sp);
        match filter_pair(&sp, &cfg.filter) {
            Some(reason) => report.rejected.push((sp.pair.id.clone(), reason)),
            None => survivors.push(sp),
        }
    }

    if survivors.is_empty() {
        return Ok(MineOutcome {
            kept: Vec::new(),
            report,
        });
    }

    let records: Vec<FeatureRecord> = survivors.iter().map(|sp| sp.features.clone()).collect();
    let by_id: HashMap<&str, &FeatureRecord> =
        records.iter().map(|r| (r.pair_id.as_str(), r)).collect();
    let bins = bin_records(&records, cfg.num_bins, cfg.strategy)?;

    let global_stats = {
        let all = Bin {
            index: 0,
            lower: f64::NAN,
            upper: f64::NAN,
            members: records.iter().map(|r| r.pair_id.clone()).collect(),
        };
        bin_stats(&all, &by_id, cfg.sample_std)?
    };

    let mut decision: HashMap<String, (usize, GateOutcome)> = HashMap::new();
    for bin in &bins {
        if bin.members.is_empty() {
            report.bins.push(BinReport {
                index: bin.index,
                lower: bin.lower,
                upper: bin.upper,
                total: 0,
                kept: 0,
                stats: BinStats::default(),
            });
            continue;
        }
        let stats = bin_stats(bin, &by_id, cfg.sample_std)?;
        let gating_stats = if bin.members.len() < cfg.min_bin_size {
            &global_stats
        } else {
            &stats
        };
        let mut kept_in_bin = 0usize;
        for id in &bin.members {
            let outcome = quality_gate(by_id[id.as_str()], gating_stats, cfg.missing_feature);
            if outcome == GateOutcome::Keep {
                kept_in_bin += 1;
            }
            decision.insert(id.clone(), (bin.index, outcome));
        }
        report.bins.push(BinReport {
            index: bin.index,
            lower: bin.lower,
            upper: bin.upper,
            total: bin.members.len(),
            kept: kept_in_bin,
            stats,
        });
    }

    let mut kept = Vec::new();
    for sp in survivors {
        let (bin_idx, outcome) = decision[&sp.pair.id];
        match outcome {
            GateOutcome::Keep => {
                report.kept.push(sp.pair.id.clone());
                kept.push(MinedPair {
                    scored: sp,
                    bin: bin_idx,
                });
            }
            GateOutcome::Reject(reason) => report.rejected.push((sp.pair.id.clone(), reason)),
        }
    }
    Ok(MineOutcome { kept, report })
}

/// Sample Pearson correlation with its two-sided p-value from the
/// t-distribution on n-2 degrees of freedom.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "pearson requires equal lengths >= 3, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Domain("pearson over a zero-variance input".into()));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = n - 2.0;
    let p = if r.abs() >= 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        two_sided_t_pvalue(t, df)?
    };
    Ok((r, p))
}

/// Paired t-test over d = a - b: t = mean(d) / (sd(d) / sqrt(n)) with the
/// sample standard deviation, two-sided p on n-1 degrees of freedom.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "paired t-test requires equal lengths >= 2, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let ss: f64 = d.iter().map(|v| (v - mean) * (v - mean)).sum();
    let sd = (ss / (n - 1.0)).sqrt();
    if sd == 0.0 {
        return Err(Error::Domain(
            "paired t-test is degenerate: all differences identical".into(),
        ));
    }
    let t = mean / (sd / n.sqrt());
    let p = two_sided_t_pvalue(t, n - 1.0)?;
    Ok((t, p))
}

fn two_sided_t_pvalue(t: f64, df: f64) -> Result<f64> {
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::Domain(format!("t-distribution with df {df}: {e}")))?;
    Ok(2.0 * (1.0 - dist.cdf(t.abs())))
}

/// Correlation of one feature against the readability difference.
#[derive(Clone, Debug, Serialize)]
pub struct CorrelationEntry {
    pub r: f64,
    pub p: f64,
    pub n: usize,
}

/// Correlations between the readability difference and each similarity
/// feature over a feature table. Features present on fewer than 3 records
/// have no entry.
#[derive(Clone, Debug, Serialize)]
pub struct CorrelationReport {
    pub lev: Option<CorrelationEntry>,
    pub syn: Option<CorrelationEntry>,
    pub sem: Option<CorrelationEntry>,
}

pub fn correlation_report(records: &[FeatureRecord]) -> CorrelationReport {
    fn corr(pairs: Vec<(f64, f64)>) -> Option<CorrelationEntry> {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        pearson(&x, &y).ok().map(|(r, p)| CorrelationEntry { r, p, n: x.len() })
    }
    CorrelationReport {
        lev: corr(records.iter().map(|r| (r.rsrs_diff, r.lev_sim)).collect()),
        syn: corr(
            records
                .iter()
                .filter_map(|r| r.syn_sim.map(|v| (r.rsrs_diff, v)))
                .collect(),
        ),
        sem: corr(
            records
                .iter()
                .filter_map(|r| r.sem_sim.map(|v| (r.rsrs_diff, v)))
                .collect(),
        ),
    }
}
