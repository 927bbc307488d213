//! Domain types and corpus file ingestion.
//!
//! The pair corpus is JSONL, one object per line with keys `id`, `source`,
//! `target` and optional `source_tree` / `target_tree` (bracketed strings),
//! `source_embedding` / `target_embedding` (number arrays) and
//! `source_wnll` / `target_wnll` (number arrays). Optional fields may also be
//! supplied via sidecar files keyed by `id`; absence disables the
//! corresponding feature downstream instead of failing.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tokenization granularity. Word mode expects pre-segmented,
/// whitespace-delimited input; the toolkit does not embed a segmenter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenMode {
    Char,
    Word,
}

impl TokenMode {
    /// Joiner reproducing `raw` (up to whitespace normalization) from tokens.
    pub fn joiner(self) -> &'static str {
        match self {
            TokenMode::Char => "",
            TokenMode::Word => " ",
        }
    }
}

/// Splits `raw` into tokens. Char mode yields Unicode scalar values with
/// whitespace removed; word mode splits on whitespace.
pub fn tokenize(raw: &str, mode: TokenMode) -> Result<Vec<String>> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(Error::InvalidInput(
            "cannot tokenize empty (or whitespace-only) text".into(),
        ));
    }
    let tokens: Vec<String> = match mode {
        TokenMode::Char => trimmed
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| c.to_string())
            .collect(),
        TokenMode::Word => trimmed.split_whitespace().map(str::to_string).collect(),
    };
    Ok(tokens)
}

/// A sentence with its tokenization.
#[derive(Clone, Debug, PartialEq)]
pub struct Sentence {
    pub id: String,
    pub raw: String,
    pub tokens: Vec<String>,
}

impl Sentence {
    pub fn new(id: impl Into<String>, raw: impl Into<String>, mode: TokenMode) -> Result<Self> {
        let raw = raw.into();
        let tokens = tokenize(&raw, mode)?;
        Ok(Sentence {
            id: id.into(),
            raw,
            tokens,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Per-token negative log-likelihood track (natural log).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WnllTrack {
    pub values: Vec<f64>,
}

impl WnllTrack {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "WNLL value at position {i} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(WnllTrack { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Ordered labeled tree in the bracketed constituency format.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseTree {
    pub label: String,
    pub children: Vec<ParseTree>,
}

impl ParseTree {
    pub fn leaf(label: impl Into<String>) -> Self {
        ParseTree {
            label: label.into(),
            children: Vec::new(),
        }
    }

    pub fn node(label: impl Into<String>, children: Vec<ParseTree>) -> Self {
        ParseTree {
            label: label.into(),
            children,
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(ParseTree::node_count).sum::<usize>()
    }

    /// Serializes to the bracketed form accepted by [`parse_bracketed_tree`].
    /// Childless nodes are emitted as bare tokens.
    pub fn to_bracketed(&self) -> String {
        fn emit(t: &ParseTree, out: &mut String, root: bool) {
            if t.children.is_empty() && !root {
                out.push_str(&t.label);
                return;
            }
            out.push('(');
            out.push_str(&t.label);
            for c in &t.children {
                out.push(' ');
                emit(c, out, false);
            }
            out.push(')');
        }
        let mut s = String::new();
        emit(self, &mut s, true);
        s
    }
}

/// Parses `(LABEL child*)` with bare tokens as leaves.
pub fn parse_bracketed_tree(text: &str) -> Result<ParseTree> {
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0usize;
    skip_ws(&chars, &mut pos);
    if pos == chars.len() {
        return Err(Error::TreeParse {
            pos,
            msg: "empty input".into(),
        });
    }
    let tree = parse_node(&chars, &mut pos)?;
    skip_ws(&chars, &mut pos);
    if pos != chars.len() {
        return Err(Error::TreeParse {
            pos,
            msg: "trailing content after tree".into(),
        });
    }
    Ok(tree)
}

fn skip_ws(chars: &[char], pos: &mut usize) {
    while *pos < chars.len() && chars[*pos].is_whitespace() {
        *pos += 1;
    }
}

fn read_token(chars: &[char], pos: &mut usize) -> String {
    let start = *pos;
    while *pos < chars.len()
        && !chars[*pos].is_whitespace()
        && chars[*pos] != '('
        && chars[*pos] != ')'
    {
        *pos += 1;
    }
    chars[start..*pos].iter().collect()
}

fn parse_node(chars: &[char], pos: &mut usize) -> Result<ParseTree> {
    if chars[*pos] == '(' {
        *pos += 1;
        skip_ws(chars, pos);
        let label = read_token(chars, pos);
        if label.is_empty() {
            return Err(Error::TreeParse {
                pos: *pos,
                msg: "expected node label after '('".into(),
            });
        }
        let mut children = Vec::new();
        loop {
            skip_ws(chars, pos);
            if *pos >= chars.len() {
                return Err(Error::TreeParse {
                    pos: *pos,
                    msg: "unbalanced parentheses: missing ')'".into(),
                });
            }
            if chars[*pos] == ')' {
                *pos += 1;
                break;
            }
            children.push(parse_node(chars, pos)?);
        }
        Ok(ParseTree::node(label, children))
    } else if chars[*pos] == ')' {
        Err(Error::TreeParse {
            pos: *pos,
            msg: "unexpected ')'".into(),
        })
    } else {
        let label = read_token(chars, pos);
        if label.is_empty() {
            return Err(Error::TreeParse {
                pos: *pos,
                msg: "expected token".into(),
            });
        }
        Ok(ParseTree::leaf(label))
    }
}

/// One source/target pair with whatever optional evidence the corpus supplies.
#[derive(Clone, Debug)]
pub struct ParaphrasePair {
    pub id: String,
    pub source: Sentence,
    pub target: Sentence,
    pub source_tree: Option<ParseTree>,
    pub target_tree: Option<ParseTree>,
    pub source_embedding: Option<Vec<f64>>,
    pub target_embedding: Option<Vec<f64>>,
    pub source_wnll: Option<WnllTrack>,
    pub target_wnll: Option<WnllTrack>,
}

impl ParaphrasePair {
    /// Checks the cross-field invariants: track lengths match token counts and
    /// embeddings (when both present) share a dimension of at least 1.
    pub fn validate(&self) -> Result<()> {
        if let Some(t) = &self.source_wnll {
            if t.len() != self.source.len() {
                return Err(Error::InvalidInput(format!(
                    "pair `{}`: source WNLL track length {} != token count {}",
                    self.id,
                    t.len(),
                    self.source.len()
                )));
            }
        }
        if let Some(t) = &self.target_wnll {
            if t.len() != self.target.len() {
                return Err(Error::InvalidInput(format!(
                    "pair `{}`: target WNLL track length {} != token count {}",
                    self.id,
                    t.len(),
                    self.target.len()
                )));
            }
        }
        if let (Some(u), Some(v)) = (&self.source_embedding, &self.target_embedding) {
            if u.is_empty() || u.len() != v.len() {
                return Err(Error::InvalidInput(format!(
                    "pair `{}`: embedding dimensions {} and {} must be equal and >= 1",
                    self.id,
                    u.len(),
                    v.len()
                )));
            }
        }
        Ok(())
    }

    /// Swaps the source and target sides (with all attached evidence).
    pub fn swap_sides(&mut self) {
        std::mem::swap(&mut self.source, &mut self.target);
        std::mem::swap(&mut self.source_tree, &mut self.target_tree);
        std::mem::swap(&mut self.source_embedding, &mut self.target_embedding);
        std::mem::swap(&mut self.source_wnll, &mut self.target_wnll);
    }
}

/// Per-pair feature scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub pair_id: String,
    pub rsrs_source: f64,
    pub rsrs_target: f64,
    pub rsrs_diff: f64,
    pub lev_sim: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub syn_sim: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sem_sim: Option<f64>,
}

/// Ingestion options.
#[derive(Clone, Copy, Debug)]
pub struct IngestConfig {
    pub token_mode: TokenMode,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            token_mode: TokenMode::Char,
        }
    }
}

/// Wire format of one pair-corpus line.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct PairRecord {
    pub id: String,
    pub source: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_tree: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_tree: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_embedding: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_embedding: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_wnll: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_wnll: Option<Vec<f64>>,
}

impl PairRecord {
    pub fn into_pair(self, config: &IngestConfig) -> Result<ParaphrasePair> {
        let source = Sentence::new(format!("{}#src", self.id), self.source, config.token_mode)?;
        let target = Sentence::new(format!("{}#tgt", self.id), self.target, config.token_mode)?;
        let pair = ParaphrasePair {
            id: self.id,
            source,
            target,
            source_tree: self.source_tree.as_deref().map(parse_bracketed_tree).transpose()?,
            target_tree: self.target_tree.as_deref().map(parse_bracketed_tree).transpose()?,
            source_embedding: self.source_embedding,
            target_embedding: self.target_embedding,
            source_wnll: self.source_wnll.map(WnllTrack::new).transpose()?,
            target_wnll: self.target_wnll.map(WnllTrack::new).transpose()?,
        };
        pair.validate()?;
        Ok(pair)
    }
}

/// Reads a pair corpus in file order. Malformed lines and duplicate ids are
/// errors; blank lines are skipped.
pub fn read_corpus(path: impl AsRef<Path>, config: &IngestConfig) -> Result<Vec<ParaphrasePair>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut pairs = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let record: PairRecord = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            line: lineno,
            msg: e.to_string(),
        })?;
        if !seen.insert(record.id.clone()) {
            return Err(Error::DuplicateId(record.id));
        }
        let pair = record.into_pair(config).map_err(|e| Error::Malformed {
            line: lineno,
            msg: e.to_string(),
        })?;
        pairs.push(pair);
    }
    Ok(pairs)
}

/// One sidecar line; any subset of the optional fields may be present.
#[derive(Clone, Debug, Deserialize)]
pub struct SidecarRecord {
    pub id: String,
    #[serde(default)]
    pub source_tree: Option<String>,
    #[serde(default)]
    pub target_tree: Option<String>,
    #[serde(default)]
    pub source_embedding: Option<Vec<f64>>,
    #[serde(default)]
    pub target_embedding: Option<Vec<f64>>,
    #[serde(default)]
    pub source_wnll: Option<Vec<f64>>,
    #[serde(default)]
    pub target_wnll: Option<Vec<f64>>,
}

/// Merges a sidecar file (embeddings, trees or WNLL tracks keyed by id) into
/// already-loaded pairs. Ids without a matching pair are ignored.
pub fn apply_sidecar(pairs: &mut [ParaphrasePair], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut index: HashMap<String, usize> = HashMap::new();
    for (i, p) in pairs.iter().enumerate() {
        index.insert(p.id.clone(), i);
    }
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let rec: SidecarRecord = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            line: lineno,
            msg: e.to_string(),
        })?;
        let Some(&i) = index.get(&rec.id) else {
            continue;
        };
        let pair = &mut pairs[i];
        if let Some(t) = rec.source_tree.as_deref() {
            pair.source_tree = Some(parse_bracketed_tree(t)?);
        }
        if let Some(t) = rec.target_tree.as_deref() {
            pair.target_tree = Some(parse_bracketed_tree(t)?);
        }
        if let Some(e) = rec.source_embedding {
            pair.source_embedding = Some(e);
        }
        if let Some(e) = rec.target_embedding {
            pair.target_embedding = Some(e);
        }
        if let Some(v) = rec.source_wnll {
            pair.source_wnll = Some(WnllTrack::new(v)?);
        }
        if let Some(v) = rec.target_wnll {
            pair.target_wnll = Some(WnllTrack::new(v)?);
        }
        pair.validate().map_err(|e| Error::Malformed {
            line: lineno,
            msg: e.to_string(),
        })?;
    }
    Ok(())
}
