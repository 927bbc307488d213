//! Idiom-paraphrase data preparation and the span-restricted loss core.
//!
//! Input records carry the original sentence and a masked copy joined by
//! `[SEP]` in the source, and the masked span's explanation after the mask
//! marker in the target. Parsing recovers the idiom by aligning the two
//! source segments, substitutes the explanation into the masked sentence,
//! and locates the explanation's token span for the auxiliary loss.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::corpus::{tokenize, TokenMode};
use crate::readability::PROB_FLOOR;
use crate::{Error, Result};

pub const SEP: &str = "[SEP]";
pub const MASK: &str = "<extra_id_0>";
pub const END_MASK: &str = "<extra_id_1>";
pub const NULL_FILLER: &str = "[null]";

/// Task prompt prefixes, byte-exact.
pub const IDIOM_PROMPT: &str = "请解释以下成语的意思: ";
pub const SIMPLIFY_PROMPT: &str = "请简化以下句子: ";

/// One parsed idiom-paraphrase record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdiomRecord {
    pub id: String,
    pub original_sentence: String,
    pub masked_sentence: String,
    pub idiom: String,
    pub explanation: String,
    /// The masked sentence with the explanation substituted, tokenized.
    pub target_sentence_tokens: Vec<String>,
    /// `[start, end)` token indices of the explanation in the target tokens.
    pub explanation_span: (usize, usize),
}

impl IdiomRecord {
    /// Detokenized target sentence (joined with the mode's joiner).
    pub fn target_sentence(&self, mode: TokenMode) -> String {
        self.target_sentence_tokens.join(mode.joiner())
    }
}

/// Parses one record from its raw `source` and `target` fields.
///
/// The source must contain exactly one `[SEP]`; its second segment carries
/// exactly one mask marker. The explanation is the target text between the
/// marker and the next filler/terminator marker. Records with more than one
/// mask are unsupported.
pub fn parse_cip_record(
    id: impl Into<String>,
    source: &str,
    target: &str,
    mode: TokenMode,
) -> Result<IdiomRecord> {
    let id = id.into();
    let sep_count = source.matches(SEP).count();
    if sep_count != 1 {
        return Err(Error::InvalidInput(format!(
            "record `{id}`: source must contain exactly one {SEP}, found {sep_count}"
        )));
    }
    let (original, masked) = source.split_once(SEP).expect("checked above");
    let original = original.trim();
    let masked = masked.trim();
    if original.is_empty() || masked.is_empty() {
        return Err(Error::InvalidInput(format!(
            "record `{id}`: empty source segment"
        )));
    }
    let mask_count = masked.matches(MASK).count();
    if mask_count == 0 {
        return Err(Error::InvalidInput(format!(
            "record `{id}`: masked segment lacks the {MASK} marker"
        )));
    }
    if mask_count > 1 || masked.contains(END_MASK) {
        return Err(Error::InvalidInput(format!(
            "record `{id}`: multiple masks are not supported (one idiom per record)"
        )));
    }

    let (prefix, suffix) = masked.split_once(MASK).expect("checked above");
    let prefix = prefix.trim_end();
    let suffix = suffix.trim_start();

    // Align the unmasked segment against the masked one: the idiom is what
    // sits between the shared prefix and suffix.
    if !original.starts_with(prefix) || !original.ends_with(suffix) {
        return Err(Error::InvalidInput(format!(
            "record `{id}`: masked and unmasked segments do not align around the marker"
        )));
    }
    if prefix.len() + suffix.len() >= original.len() {
        return Err(Error::InvalidInput(format!(
            "record `{id}`: alignment leaves no idiom between prefix and suffix"
        )));
    }
    let idiom = original[prefix.len()..original.len() - suffix.len()].trim();
    if idiom.is_empty() {
        return Err(Error::InvalidInput(format!(
            "record `{id}`: aligned idiom is empty"
        )));
    }

    // Explanation: target text between the mask and the next marker.
    let after = target.split_once(MASK).map(|(_, rest)| rest).ok_or_else(|| {
        Error::InvalidInput(format!("record `{id}`: target lacks the {MASK} marker"))
    })?;
    let end = [NULL_FILLER, END_MASK]
        .iter()
        .filter_map(|m| after.find(m))
        .min()
        .unwrap_or(after.len());
    let explanation = after[..end].trim();
    if explanation.is_empty() {
        return Err(Error::InvalidInput(format!(
            "record `{id}`: empty explanation in target"
        )));
    }

    // Substitute the explanation into the masked sentence and locate it.
    let reconstructed = format!("{prefix}{explanation}{suffix}");
    let target_tokens = tokenize(&reconstructed, mode)?;
    let hint = if prefix.trim().is_empty() {
        0
    } else {
        tokenize(prefix, mode)?.len()
    };
    let span = explanation_indices(&target_tokens, explanation, mode, Some(hint))?;

    Ok(IdiomRecord {
        id,
        original_sentence: original.to_string(),
        masked_sentence: masked.to_string(),
        idiom: idiom.to_string(),
        explanation: explanation.to_string(),
        target_sentence_tokens: target_tokens,
        explanation_span: span,
    })
}

/// Finds the `[start, end)` token span whose tokens reconstruct
/// `explanation`. When multiple occurrences exist, the span at `hint` (the
/// known substitution offset) is preferred, else the first occurrence.
pub fn explanation_indices(
    target_tokens: &[String],
    explanation: &str,
    mode: TokenMode,
    hint: Option<usize>,
) -> Result<(usize, usize)> {
    let exp_tokens = tokenize(explanation, mode)?;
    let w = exp_tokens.len();
    if w == 0 || w > target_tokens.len() {
        return Err(Error::InvalidInput(
            "explanation does not occur in the target tokens".into(),
        ));
    }
    let matches: Vec<usize> = (0..=target_tokens.len() - w)
        .filter(|&i| target_tokens[i..i + w] == exp_tokens[..])
        .collect();
    if matches.is_empty() {
        return Err(Error::InvalidInput(
            "explanation does not occur in the target tokens".into(),
        ));
    }
    let start = match hint {
        Some(h) if matches.contains(&h) => h,
        _ => matches[0],
    };
    Ok((start, start + w))
}

/// Idiom surface form -> explanation spans, with deterministic ordering.
#[derive(Clone, Debug, Default, Serialize)]
pub struct IdiomDictionary {
    pub entries: BTreeMap<String, Vec<DictionarySpan>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DictionarySpan {
    pub record_id: String,
    pub start: usize,
    pub end: usize,
}

impl IdiomDictionary {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Aggregates explanation spans per idiom; spans are ordered by record id.
pub fn build_idiom_dictionary(records: &[IdiomRecord]) -> IdiomDictionary {
    let mut dict = IdiomDictionary::default();
    for r in records {
        dict.entries
            .entry(r.idiom.clone())
            .or_default()
            .push(DictionarySpan {
                record_id: r.id.clone(),
                start: r.explanation_span.0,
                end: r.explanation_span.1,
            });
    }
    for spans in dict.entries.values_mut() {
        spans.sort_by(|a, b| a.record_id.cmp(&b.record_id));
    }
    dict
}

/// The two multi-task training tasks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Idiom,
    Simplify,
}

/// Concatenates the exact task prompt with the sentence.
pub fn prepend_prompt(task: Task, sentence: &str) -> String {
    match task {
        Task::Idiom => format!("{IDIOM_PROMPT}{sentence}"),
        Task::Simplify => format!("{SIMPLIFY_PROMPT}{sentence}"),
    }
}

/// Per-position probability distributions over a finite vocabulary, as
/// exported from a model (logits after softmax).
#[derive(Clone, Debug)]
pub struct DistributionTrack {
    rows: Vec<Vec<f64>>,
}

impl DistributionTrack {
    /// Validates that every row is a probability distribution: entries
    /// nonnegative and summing to 1 within 1e-6.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "distribution row {i} is empty"
                )));
            }
            let mut sum = 0.0;
            for &p in row {
                if !p.is_finite() || p < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "distribution row {i} has an invalid entry {p}"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidInput(format!(
                    "distribution row {i} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(DistributionTrack { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// Mean negative log-likelihood of the target tokens over the selected
/// positions: all positions, or only the span when given. Probabilities
/// below the shared floor are clamped. An empty selection scores 0.
pub fn cross_entropy(
    track: &DistributionTrack,
    targets: &[usize],
    span: Option<(usize, usize)>,
) -> Result<f64> {
    if targets.len() > track.len() {
        return Err(Error::InvalidInput(format!(
            "{} target tokens but only {} distribution rows",
            targets.len(),
            track.len()
        )));
    }
    let (start, end) = span.unwrap_or((0, targets.len()));
    if start > end || end > targets.len() {
        return Err(Error::InvalidInput(format!(
            "span [{start}, {end}) out of bounds for {} targets",
            targets.len()
        )));
    }
    if start == end {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for i in start..end {
        let row = &track.rows()[i];
        let t = targets[i];
        let p = *row.get(t).ok_or_else(|| {
            Error::InvalidInput(format!(
                "target index {t} out of vocabulary (size {}) at position {i}",
                row.len()
            ))
        })?;
        sum += -p.max(PROB_FLOOR).ln();
    }
    Ok(sum / (end - start) as f64)
}

/// Combined loss: the sentence term over all positions, the idiom term over
/// the explanation span, and their exact sum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LossReport {
    pub sentence_loss: f64,
    pub idiom_loss: f64,
    pub total: f64,
}

pub fn ias_loss(
    track: &DistributionTrack,
    targets: &[usize],
    explanation_span: (usize, usize),
) -> Result<LossReport> {
    let sentence_loss = cross_entropy(track, targets, None)?;
    let idiom_loss = cross_entropy(track, targets, Some(explanation_span))?;
    Ok(LossReport {
        sentence_loss,
        idiom_loss,
        total: sentence_loss + idiom_loss,
    })
}
