//! Run configuration: a TOML document with `--set key=value` overrides.
//! Unknown keys are rejected everywhere so a typo cannot silently fall back
//! to a default.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::TokenMode;
use crate::selection::{BinStrategy, FilterConfig, MineConfig, MissingFeaturePolicy};
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, rename_all = "snake_case")]
pub struct PipelineConfig {
    pub token_mode: TokenMode,
    pub wnll: WnllSpec,
    pub embedding: EmbeddingSpec,
    pub trees: TreeSpec,
    pub filter: FilterConfig,
    pub binning: BinningSpec,
    pub gate: GateSpec,
    pub metrics: MetricsSpec,
    /// Seed for synthetic-data generation; recorded for reproducibility.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            token_mode: TokenMode::Char,
            wnll: WnllSpec::default(),
            embedding: EmbeddingSpec::default(),
            trees: TreeSpec::default(),
            filter: FilterConfig::default(),
            binning: BinningSpec::default(),
            gate: GateSpec::default(),
            metrics: MetricsSpec::default(),
            seed: 42,
        }
    }
}

/// Where WNLL tracks come from: corpus/sidecar fields, or the built-in
/// n-gram model trained on the corpus text.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WnllSpec {
    pub source: WnllSourceKind,
    pub order: usize,
    pub k: f64,
}

impl Default for WnllSpec {
    fn default() -> Self {
        WnllSpec {
            source: WnllSourceKind::Ngram,
            order: 3,
            k: 0.1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WnllSourceKind {
    File,
    Ngram,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingSpec {
    pub source: EmbeddingSourceKind,
    pub dim: usize,
    pub n: usize,
}

impl Default for EmbeddingSpec {
    fn default() -> Self {
        EmbeddingSpec {
            source: EmbeddingSourceKind::Hashed,
            dim: 64,
            n: 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingSourceKind {
    File,
    Hashed,
    None,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeSpec {
    pub source: TreeSourceKind,
}

impl Default for TreeSpec {
    fn default() -> Self {
        TreeSpec {
            source: TreeSourceKind::File,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeSourceKind {
    File,
    None,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, rename_all = "snake_case")]
pub struct BinningSpec {
    pub num_bins: usize,
    pub strategy: BinStrategy,
    pub sample_std: bool,
    pub min_bin_size: usize,
}

impl Default for BinningSpec {
    fn default() -> Self {
        BinningSpec {
            num_bins: 10,
            strategy: BinStrategy::EqualWidth,
            sample_std: false,
            min_bin_size: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateSpec {
    pub missing_feature: MissingFeaturePolicy,
}

impl Default for GateSpec {
    fn default() -> Self {
        GateSpec {
            missing_feature: MissingFeaturePolicy::Ignore,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsSpec {
    pub deletion_f1: bool,
    pub bleu_smoothing: bool,
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: PipelineConfig =
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `key=value` overrides with dotted paths, e.g.
    /// `filter.min_diff=0.2`.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        if overrides.is_empty() {
            return Ok(());
        }
        let mut value =
            toml::Value::try_from(&*self).map_err(|e| Error::Config(e.to_string()))?;
        for item in overrides {
            let (path, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{item}` is not key=value")))?;
            let parsed = parse_override_value(raw);
            set_path(&mut value, path.trim(), parsed)?;
        }
        *self = value
            .try_into()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.wnll.order < 1 {
            return Err(Error::Config("wnll.order must be >= 1".into()));
        }
        if !(self.wnll.k > 0.0) {
            return Err(Error::Config("wnll.k must be > 0".into()));
        }
        if self.embedding.source == EmbeddingSourceKind::Hashed && self.embedding.dim < 8 {
            return Err(Error::Config("embedding.dim must be >= 8".into()));
        }
        if self.embedding.n < 1 {
            return Err(Error::Config("embedding.n must be >= 1".into()));
        }
        if self.binning.num_bins < 1 {
            return Err(Error::Config("binning.num_bins must be >= 1".into()));
        }
        if !(self.filter.min_diff.is_finite()) {
            return Err(Error::Config("filter.min_diff must be finite".into()));
        }
        Ok(())
    }

    pub fn mine_config(&self) -> MineConfig {
        MineConfig {
            filter: self.filter,
            num_bins: self.binning.num_bins,
            strategy: self.binning.strategy,
            sample_std: self.binning.sample_std,
            min_bin_size: self.binning.min_bin_size,
            missing_feature: self.gate.missing_feature,
        }
    }

    /// SHA-256 of the canonical serialized config; stamped into every output
    /// so runs are attributable.
    pub fn resolved_hash(&self) -> String {
        let text = toml::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn parse_override_value(raw: &str) -> toml::Value {
    let raw = raw.trim();
    if let Ok(b) = raw.parse::<bool>() {
        return toml::Value::Boolean(b);
    }
    if let Ok(i) = raw.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return toml::Value::Float(f);
    }
    toml::Value::String(raw.to_string())
}

fn set_path(root: &mut toml::Value, path: &str, new: toml::Value) -> Result<()> {
    let mut current = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = current
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{path}`: `{part}` is not a table")))?;
        if i + 1 == parts.len() {
            if !table.contains_key(*part) {
                return Err(Error::Config(format!("unknown config key `{path}`")));
            }
            table.insert(part.to_string(), new);
            return Ok(());
        }
        current = table
            .get_mut(*part)
            .ok_or_else(|| Error::Config(format!("unknown config section `{part}`")))?;
    }
    unreachable!("split never yields an empty iterator")
}
