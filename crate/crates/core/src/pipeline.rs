//! End-to-end wiring: builds the WNLL provider and embeddings declared in the
//! config, computes per-pair features, and runs the mining pass.

use serde::Serialize;

use crate::config::{EmbeddingSourceKind, PipelineConfig, TreeSourceKind, WnllSourceKind};
use crate::corpus::{FeatureRecord, ParaphrasePair, Sentence};
use crate::readability::{score_sentence, NgramLm, WnllSource};
use crate::selection::{mine, MineOutcome, MinedPair, ScoredPair};
use crate::similarity::{hashed_char_ngram_embedding, lev_sim, sem_sim, syn_sim};
use crate::{Error, Result};

/// Trains the n-gram WNLL provider on both sides of the corpus, or returns
/// `None` when the config expects file-supplied tracks.
pub fn build_wnll_model(
    pairs: &[ParaphrasePair],
    cfg: &PipelineConfig,
) -> Result<Option<NgramLm>> {
    match cfg.wnll.source {
        WnllSourceKind::File => Ok(None),
        WnllSourceKind::Ngram => {
            let mut sentences: Vec<Vec<String>> = Vec::with_capacity(pairs.len() * 2);
            for p in pairs {
                sentences.push(p.source.tokens.clone());
                sentences.push(p.target.tokens.clone());
            }
            if sentences.is_empty() {
                return Err(Error::InvalidInput(
                    "cannot train the n-gram model on an empty corpus".into(),
                ));
            }
            Ok(Some(NgramLm::train(
                &sentences,
                cfg.wnll.order,
                cfg.wnll.k,
            )?))
        }
    }
}

fn embedding_for(
    sentence: &Sentence,
    attached: Option<&Vec<f64>>,
    cfg: &PipelineConfig,
) -> Option<Vec<f64>> {
    match cfg.embedding.source {
        EmbeddingSourceKind::None => None,
        EmbeddingSourceKind::File => attached.cloned(),
        // Sentences shorter than the n-gram width have no embedding; the
        // semantic feature is simply absent for them.
        EmbeddingSourceKind::Hashed => {
            hashed_char_ngram_embedding(sentence, cfg.embedding.dim, cfg.embedding.n).ok()
        }
    }
}

/// Computes the feature record for one pair: readability on both sides plus
/// the surface, syntactic and semantic similarities. Missing trees or
/// embeddings leave the corresponding feature unset.
pub fn compute_features(
    pair: &ParaphrasePair,
    model: Option<&dyn WnllSource>,
    cfg: &PipelineConfig,
) -> Result<FeatureRecord> {
    let rsrs_source = score_sentence(&pair.source, pair.source_wnll.as_ref(), model)?.value;
    let rsrs_target = score_sentence(&pair.target, pair.target_wnll.as_ref(), model)?.value;
    let lev = lev_sim(&pair.source.tokens, &pair.target.tokens)?;

    let syn = match cfg.trees.source {
        TreeSourceKind::None => None,
        TreeSourceKind::File => match (&pair.source_tree, &pair.target_tree) {
            (Some(a), Some(b)) => Some(syn_sim(a, b)),
            _ => None,
        },
    };

    let src_emb = embedding_for(&pair.source, pair.source_embedding.as_ref(), cfg);
    let tgt_emb = embedding_for(&pair.target, pair.target_embedding.as_ref(), cfg);
    let sem = match (src_emb, tgt_emb) {
        (Some(u), Some(v)) => Some(sem_sim(&u, &v)?),
        _ => None,
    };

    Ok(FeatureRecord {
        pair_id: pair.id.clone(),
        rsrs_source,
        rsrs_target,
        rsrs_diff: rsrs_source - rsrs_target,
        lev_sim: lev,
        syn_sim: syn,
        sem_sim: sem,
    })
}

/// Scores every pair in input order.
pub fn score_pairs(pairs: Vec<ParaphrasePair>, cfg: &PipelineConfig) -> Result<Vec<ScoredPair>> {
    let model = build_wnll_model(&pairs, cfg)?;
    let model_ref: Option<&dyn WnllSource> = model.as_ref().map(|m| m as &dyn WnllSource);
    let mut scored = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let features = compute_features(&pair, model_ref, cfg)?;
        scored.push(ScoredPair {
            pair,
            features,
            swapped: false,
        });
    }
    Ok(scored)
}

/// Scores and mines a corpus in one shot.
pub fn run_mine(pairs: Vec<ParaphrasePair>, cfg: &PipelineConfig) -> Result<MineOutcome> {
    let scored = score_pairs(pairs, cfg)?;
    mine(scored, &cfg.mine_config())
}

/// Run provenance stamped into every report and written alongside JSONL
/// outputs.
#[derive(Clone, Debug, Serialize)]
pub struct RunMetadata {
    pub tool_version: &'static str,
    pub config_hash: String,
}

impl RunMetadata {
    pub fn new(cfg: &PipelineConfig) -> Self {
        RunMetadata {
            tool_version: env!("CARGO_PKG_VERSION"),
            config_hash: cfg.resolved_hash(),
        }
    }
}

/// One mined pair as written to the output JSONL.
#[derive(Clone, Debug, Serialize)]
pub struct MineOutputRecord {
    pub id: String,
    pub source: String,
    pub target: String,
    pub swapped: bool,
    pub bin: usize,
    pub rsrs_source: f64,
    pub rsrs_target: f64,
    pub rsrs_diff: f64,
    pub lev_sim: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub syn_sim: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sem_sim: Option<f64>,
}

impl MineOutputRecord {
    pub fn from_mined(mp: &MinedPair) -> Self {
        let f = &mp.scored.features;
        MineOutputRecord {
            id: mp.scored.pair.id.clone(),
            source: mp.scored.pair.source.raw.clone(),
            target: mp.scored.pair.target.raw.clone(),
            swapped: mp.scored.swapped,
            bin: mp.bin,
            rsrs_source: f.rsrs_source,
            rsrs_target: f.rsrs_target,
            rsrs_diff: f.rsrs_diff,
            lev_sim: f.lev_sim,
            syn_sim: f.syn_sim,
            sem_sim: f.sem_sim,
        }
    }
}
