//! WNLL-based readability scoring.
//!
//! The score for a sentence is the rank-weighted average of its per-token
//! negative log-likelihoods: values are sorted ascending and the i-th
//! smallest is weighted by sqrt(i). Higher scores mean harder-to-read text.
//! All logs are natural; externally supplied tracks must use the same base.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::corpus::{Sentence, WnllTrack};
use crate::{Error, Result};

/// Probabilities below this floor are clamped before taking the log so that
/// file-supplied values cannot produce infinities.
pub const PROB_FLOOR: f64 = 1e-12;

/// Counts clamping events so runs can report how often the floor was hit.
#[derive(Debug, Default)]
pub struct ClampCounter(AtomicU64);

impl ClampCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }

    fn bump(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }
}

/// Negative log-likelihood of the actual next token: -ln(p). Strict variant;
/// rejects probabilities outside (0, 1].
pub fn wnll_from_prob(p: f64) -> Result<f64> {
    if !p.is_finite() || p <= 0.0 || p > 1.0 {
        return Err(Error::Domain(format!(
            "probability must lie in (0, 1], got {p}"
        )));
    }
    Ok(-p.ln())
}

/// As [`wnll_from_prob`] but clamps values below [`PROB_FLOOR`] to the floor,
/// recording each clamp. Probabilities above 1 are still rejected.
pub fn wnll_from_prob_clamped(p: f64, clamps: &ClampCounter) -> Result<f64> {
    if !p.is_finite() || p > 1.0 {
        return Err(Error::Domain(format!(
            "probability must lie in (-inf, 1], got {p}"
        )));
    }
    let p = if p < PROB_FLOOR {
        clamps.bump();
        PROB_FLOOR
    } else {
        p
    };
    Ok(-p.ln())
}

/// Readability score of one sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct RsrsScore {
    pub value: f64,
    pub sentence_id: String,
}

/// Rank-weighted readability score over a WNLL track:
/// sum over i of sqrt(i) * WNLL_(i), divided by the token count, where
/// WNLL_(i) is the i-th smallest value (1-based rank).
pub fn rsrs(track: &WnllTrack) -> Result<f64> {
    if track.is_empty() {
        return Err(Error::InvalidInput("rsrs over an empty track".into()));
    }
    let mut sorted = track.values.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("track values are finite"));
    let s = sorted.len() as f64;
    let sum: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, v)| ((i + 1) as f64).sqrt() * v)
        .sum();
    Ok(sum / s)
}

/// Maps a sentence to its WNLL track. Implementations must produce one finite
/// nonnegative value per token.
pub trait WnllSource: Send + Sync {
    fn track(&self, sentence: &Sentence) -> Result<WnllTrack>;
}

/// Scores one sentence: attached track if present, otherwise the model.
pub fn sentence_track(
    sentence: &Sentence,
    attached: Option<&WnllTrack>,
    model: Option<&dyn WnllSource>,
) -> Result<WnllTrack> {
    if let Some(t) = attached {
        return Ok(t.clone());
    }
    if let Some(m) = model {
        return m.track(sentence);
    }
    Err(Error::InvalidInput(format!(
        "no WNLL track attached to `{}` and no model configured",
        sentence.id
    )))
}

pub fn score_sentence(
    sentence: &Sentence,
    attached: Option<&WnllTrack>,
    model: Option<&dyn WnllSource>,
) -> Result<RsrsScore> {
    let track = sentence_track(sentence, attached, model)?;
    Ok(RsrsScore {
        value: rsrs(&track)?,
        sentence_id: sentence.id.clone(),
    })
}

/// RSRS(source) - RSRS(target); positive when the target reads simpler.
pub fn rsrs_diff(
    pair: &crate::corpus::ParaphrasePair,
    model: Option<&dyn WnllSource>,
) -> Result<f64> {
    let src = score_sentence(&pair.source, pair.source_wnll.as_ref(), model)?;
    let tgt = score_sentence(&pair.target, pair.target_wnll.as_ref(), model)?;
    Ok(src.value - tgt.value)
}

const BOS: &str = "<s>";

/// Additive-k smoothed n-gram language model over tokens, the default WNLL
/// provider. Contexts are padded with a begin-of-sentence symbol; the
/// vocabulary is the set of distinct training tokens.
#[derive(Debug)]
pub struct NgramLm {
    order: usize,
    k: f64,
    ngram_counts: HashMap<Vec<String>, u64>,
    context_counts: HashMap<Vec<String>, u64>,
    vocab: Vec<String>,
}

impl NgramLm {
    pub fn train(corpus: &[Vec<String>], order: usize, k: f64) -> Result<Self> {
        if order < 1 {
            return Err(Error::InvalidInput("n-gram order must be >= 1".into()));
        }
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidInput(format!(
                "smoothing constant must be > 0, got {k}"
            )));
        }
        if corpus.is_empty() || corpus.iter().all(|s| s.is_empty()) {
            return Err(Error::InvalidInput("training corpus is empty".into()));
        }
        let mut ngram_counts: HashMap<Vec<String>, u64> = HashMap::new();
        let mut context_counts: HashMap<Vec<String>, u64> = HashMap::new();
        let mut vocab_set: std::collections::BTreeSet<String> = Default::default();
        for sent in corpus {
            if sent.is_empty() {
                continue;
            }
            for tok in sent {
                vocab_set.insert(tok.clone());
            }
            let padded = pad(sent, order);
            for i in (order - 1)..padded.len() {
                let context = padded[i + 1 - order..i].to_vec();
                let ngram = padded[i + 1 - order..=i].to_vec();
                *context_counts.entry(context).or_insert(0) += 1;
                *ngram_counts.entry(ngram).or_insert(0) += 1;
            }
        }
        Ok(NgramLm {
            order,
            k,
            ngram_counts,
            context_counts,
            vocab: vocab_set.into_iter().collect(),
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    /// Smoothed probability of `token` following `context` (the last
    /// order-1 tokens, BOS-padded).
    pub fn prob(&self, context: &[String], token: &str) -> f64 {
        let mut ngram: Vec<String> = context.to_vec();
        ngram.push(token.to_string());
        let num = self.ngram_counts.get(&ngram).copied().unwrap_or(0) as f64 + self.k;
        let den = self.context_counts.get(context).copied().unwrap_or(0) as f64
            + self.k * self.vocab.len() as f64;
        num / den
    }
}

fn pad(tokens: &[String], order: usize) -> Vec<String> {
    let mut padded = vec![BOS.to_string(); order - 1];
    padded.extend(tokens.iter().cloned());
    padded
}

impl WnllSource for NgramLm {
    fn track(&self, sentence: &Sentence) -> Result<WnllTrack> {
        if sentence.is_empty() {
            return Err(Error::InvalidInput(format!(
                "sentence `{}` has no tokens",
                sentence.id
            )));
        }
        let padded = pad(&sentence.tokens, self.order);
        let mut values = Vec::with_capacity(sentence.len());
        for i in (self.order - 1)..padded.len() {
            let context = &padded[i + 1 - self.order..i];
            let p = self.prob(context, &padded[i]);
            // Smoothed probabilities are strictly positive; still clamp the
            // numeric tail against rounding.
            values.push(-p.max(PROB_FLOOR).ln());
        }
        WnllTrack::new(values)
    }
}

/// Trains the default WNLL provider.
pub fn ngram_wnll(corpus: &[Vec<String>], order: usize, k: f64) -> Result<NgramLm> {
    NgramLm::train(corpus, order, k)
}
