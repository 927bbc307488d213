//! Pairwise linguistic similarity features: weighted Levenshtein similarity,
//! ordered tree edit distance over depth-truncated constituency trees, and
//! embedding cosine similarity.

use crate::corpus::{ParseTree, Sentence};
use crate::{Error, Result};

pub const INSERT_COST: u64 = 1;
pub const DELETE_COST: u64 = 1;
pub const REPLACE_COST: u64 = 2;

/// Constituency trees are truncated to this level before comparison
/// (root = level 1).
pub const SYN_TRUNCATE_LEVEL: usize = 3;

/// Minimum weighted edit cost transforming `a` into `b` with insert/delete
/// cost 1 and replace cost 2. With these weights the distance equals
/// |a| + |b| - 2 * LCS(a, b).
pub fn weighted_edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> u64 {
    let (n, m) = (a.len(), b.len());
    let mut prev: Vec<u64> = (0..=m as u64).map(|j| j * INSERT_COST).collect();
    let mut curr = vec![0u64; m + 1];
    for i in 1..=n {
        curr[0] = i as u64 * DELETE_COST;
        for j in 1..=m {
            let sub = if a[i - 1] == b[j - 1] { 0 } else { REPLACE_COST };
            curr[j] = (prev[j] + DELETE_COST)
                .min(curr[j - 1] + INSERT_COST)
                .min(prev[j - 1] + sub);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[m]
}

/// (sum - ldist) / sum over the weighted edit distance; equals
/// 2 * LCS / (|a| + |b|), so the result lies in [0, 1].
pub fn lev_sim<T: PartialEq>(a: &[T], b: &[T]) -> Result<f64> {
    let sum = a.len() + b.len();
    if sum == 0 {
        return Err(Error::InvalidInput(
            "lev_sim over two empty token lists".into(),
        ));
    }
    let ldist = weighted_edit_distance(a, b);
    Ok((sum as f64 - ldist as f64) / sum as f64)
}

/// Removes all nodes deeper than `max_level`, counting the root as level 1.
pub fn truncate_tree(t: &ParseTree, max_level: usize) -> ParseTree {
    fn go(t: &ParseTree, level: usize, max_level: usize) -> ParseTree {
        let children = if level >= max_level {
            Vec::new()
        } else {
            t.children.iter().map(|c| go(c, level + 1, max_level)).collect()
        };
        ParseTree {
            label: t.label.clone(),
            children,
        }
    }
    go(t, 1, max_level)
}

// Postorder tables for the Zhang-Shasha computation.
struct ZsTree {
    labels: Vec<String>,
    // Leftmost-leaf descendant, by postorder index.
    lld: Vec<usize>,
    // Keyroots in increasing postorder.
    keyroots: Vec<usize>,
}

impl ZsTree {
    fn build(t: &ParseTree) -> Self {
        let mut labels = Vec::new();
        let mut lld = Vec::new();
        fn post(t: &ParseTree, labels: &mut Vec<String>, lld: &mut Vec<usize>) -> usize {
            let mut first_leaf = None;
            for c in &t.children {
                let leaf = post(c, labels, lld);
                first_leaf.get_or_insert(leaf);
            }
            let idx = labels.len();
            labels.push(t.label.clone());
            lld.push(first_leaf.unwrap_or(idx));
            lld[idx]
        }
        post(t, &mut labels, &mut lld);
        // A keyroot is the highest node among those sharing a leftmost leaf.
        let mut max_for_lld: std::collections::HashMap<usize, usize> = Default::default();
        for (i, &l) in lld.iter().enumerate() {
            let e = max_for_lld.entry(l).or_insert(i);
            if i > *e {
                *e = i;
            }
        }
        let mut keyroots: Vec<usize> = max_for_lld.into_values().collect();
        keyroots.sort_unstable();
        ZsTree {
            labels,
            lld,
            keyroots,
        }
    }

    fn len(&self) -> usize {
        self.labels.len()
    }
}

/// Ordered tree edit distance (Zhang-Shasha) with unit insert/delete costs
/// and the given relabel cost.
pub fn tree_edit_distance_with_costs(t1: &ParseTree, t2: &ParseTree, relabel: u64) -> u64 {
    let a = ZsTree::build(t1);
    let b = ZsTree::build(t2);
    let (n, m) = (a.len(), b.len());
    let mut td = vec![vec![0u64; m]; n];
    for &i in &a.keyroots {
        for &j in &b.keyroots {
            forest_dist(&a, &b, i, j, relabel, &mut td);
        }
    }
    td[n - 1][m - 1]
}

fn forest_dist(a: &ZsTree, b: &ZsTree, i: usize, j: usize, relabel: u64, td: &mut [Vec<u64>]) {
    let li = a.lld[i];
    let lj = b.lld[j];
    let rows = i - li + 2;
    let cols = j - lj + 2;
    let mut fd = vec![vec![0u64; cols]; rows];
    for x in 1..rows {
        fd[x][0] = fd[x - 1][0] + DELETE_COST;
    }
    for y in 1..cols {
        fd[0][y] = fd[0][y - 1] + INSERT_COST;
    }
    for x in 1..rows {
        for y in 1..cols {
            let di = li + x - 1;
            let dj = lj + y - 1;
            if a.lld[di] == li && b.lld[dj] == lj {
                let cost = if a.labels[di] == b.labels[dj] { 0 } else { relabel };
                fd[x][y] = (fd[x - 1][y] + DELETE_COST)
                    .min(fd[x][y - 1] + INSERT_COST)
                    .min(fd[x - 1][y - 1] + cost);
                td[di][dj] = fd[x][y];
            } else {
                let px = a.lld[di] - li;
                let py = b.lld[dj] - lj;
                fd[x][y] = (fd[x - 1][y] + DELETE_COST)
                    .min(fd[x][y - 1] + INSERT_COST)
                    .min(fd[px][py] + td[di][dj]);
            }
        }
    }
}

/// Unit-cost ordered tree edit distance.
pub fn tree_edit_distance(t1: &ParseTree, t2: &ParseTree) -> u64 {
    tree_edit_distance_with_costs(t1, t2, 1)
}

/// 1 - TED(t1', t2') / max(nodes(t1'), nodes(t2')) where t1', t2' are the
/// level-3 truncations. Inputs are truncated defensively; the result is
/// clamped to [0, 1].
pub fn syn_sim(t1: &ParseTree, t2: &ParseTree) -> f64 {
    syn_sim_with(t1, t2, SYN_TRUNCATE_LEVEL, 1)
}

pub fn syn_sim_with(t1: &ParseTree, t2: &ParseTree, max_level: usize, relabel: u64) -> f64 {
    let a = truncate_tree(t1, max_level);
    let b = truncate_tree(t2, max_level);
    let ted = tree_edit_distance_with_costs(&a, &b, relabel) as f64;
    let denom = a.node_count().max(b.node_count()) as f64;
    (1.0 - ted / denom).clamp(0.0, 1.0)
}

/// Cosine similarity of two equal-dimension non-zero vectors.
pub fn sem_sim(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() || u.is_empty() {
        return Err(Error::InvalidInput(format!(
            "cosine requires equal non-zero dimensions, got {} and {}",
            u.len(),
            v.len()
        )));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Domain("cosine of a zero vector".into()));
    }
    Ok(dot / (nu * nv))
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Deterministic bag-of-character-n-grams embedding: each n-gram of the
/// whitespace-stripped sentence text is hashed to one of `dim` buckets and
/// the count vector is L2-normalized. A stand-in for learned sentence
/// encoders when none are supplied.
pub fn hashed_char_ngram_embedding(s: &Sentence, dim: usize, n: usize) -> Result<Vec<f64>> {
    if dim < 8 {
        return Err(Error::InvalidInput(format!(
            "embedding dimension must be >= 8, got {dim}"
        )));
    }
    if n < 1 {
        return Err(Error::InvalidInput("n-gram size must be >= 1".into()));
    }
    let chars: Vec<char> = s.raw.chars().filter(|c| !c.is_whitespace()).collect();
    if chars.len() < n {
        return Err(Error::InvalidInput(format!(
            "sentence `{}` is shorter than the n-gram size {n}",
            s.id
        )));
    }
    let mut vec = vec![0.0f64; dim];
    for window in chars.windows(n) {
        let gram: String = window.iter().collect();
        let bucket = (fnv1a(gram.as_bytes()) % dim as u64) as usize;
        vec[bucket] += 1.0;
    }
    let norm = vec.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in &mut vec {
        *v /= norm;
    }
    Ok(vec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_bracketed_tree, TokenMode};

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    #[test]
    fn edit_distance_identity() {
        assert_eq!(weighted_edit_distance(&["a", "b"], &["a", "b"]), 0);
    }

    #[test]
    fn edit_distance_swap_costs_two() {
        assert_eq!(weighted_edit_distance(&["a", "b"], &["b", "a"]), 2);
    }

    #[test]
    fn edit_distance_kitten_sitting() {
        // 6 + 7 - 2 * LCS with LCS = 4.
        assert_eq!(
            weighted_edit_distance(&chars("kitten"), &chars("sitting")),
            5
        );
    }

    #[test]
    fn edit_distance_empty_sides() {
        assert_eq!(weighted_edit_distance::<char>(&[], &[]), 0);
        assert_eq!(weighted_edit_distance(&[], &chars("abc")), 3);
        assert_eq!(weighted_edit_distance(&chars("ab"), &[]), 2);
    }

    #[test]
    fn lev_sim_examples() {
        assert_eq!(lev_sim(&chars("abc"), &chars("abc")).unwrap(), 1.0);
        assert_eq!(lev_sim(&["a", "b"], &["b", "a"]).unwrap(), 0.5);
        assert_eq!(lev_sim(&chars("ab"), &chars("cd")).unwrap(), 0.0);
        assert!(lev_sim::<char>(&[], &[]).is_err());
    }

    #[test]
    fn truncate_keeps_three_levels() {
        let t = parse_bracketed_tree("(S (NP (DT the) (NN cat)) (VP (VB sat)))").unwrap();
        let cut = truncate_tree(&t, 3);
        let expect = parse_bracketed_tree("(S (NP DT NN) (VP VB))").unwrap();
        assert_eq!(cut, expect);
        // Shallow trees are unchanged.
        let shallow = parse_bracketed_tree("(S (NP) (VP))").unwrap();
        assert_eq!(truncate_tree(&shallow, 3), shallow);
        let single = parse_bracketed_tree("(X)").unwrap();
        assert_eq!(truncate_tree(&single, 3), single);
    }

    #[test]
    fn ted_identical_is_zero() {
        let t = parse_bracketed_tree("(S (NP (DT the)) (VP))").unwrap();
        assert_eq!(tree_edit_distance(&t, &t), 0);
    }

    #[test]
    fn ted_relabel_is_one() {
        let a = parse_bracketed_tree("(A)").unwrap();
        let b = parse_bracketed_tree("(B)").unwrap();
        assert_eq!(tree_edit_distance(&a, &b), 1);
    }

    #[test]
    fn ted_single_delete() {
        let a = parse_bracketed_tree("(S (NP) (VP))").unwrap();
        let b = parse_bracketed_tree("(S (NP))").unwrap();
        assert_eq!(tree_edit_distance(&a, &b), 1);
        assert_eq!(tree_edit_distance(&b, &a), 1);
    }

    #[test]
    fn ted_deeper_case() {
        let a = parse_bracketed_tree("(S (NP (DT) (NN)) (VP (VB)))").unwrap();
        let b = parse_bracketed_tree("(S (NP (DT)) (VP (VB) (NN)))").unwrap();
        // Move NN from under NP to under VP: delete + insert = 2.
        assert_eq!(tree_edit_distance(&a, &b), 2);
    }

    #[test]
    fn syn_sim_examples() {
        let a = parse_bracketed_tree("(S (NP) (VP))").unwrap();
        let b = parse_bracketed_tree("(S (NP))").unwrap();
        assert_eq!(syn_sim(&a, &a), 1.0);
        assert!((syn_sim(&a, &b) - (1.0 - 1.0 / 3.0)).abs() < 1e-12);
        let x = parse_bracketed_tree("(X)").unwrap();
        let y = parse_bracketed_tree("(Y)").unwrap();
        assert_eq!(syn_sim(&x, &y), 0.0);
    }

    #[test]
    fn cosine_examples() {
        assert!((sem_sim(&[1.0, 2.0], &[1.0, 2.0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(sem_sim(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((sem_sim(&[1.0, 0.0], &[1.0, 1.0]).unwrap() - 1.0 / 2f64.sqrt()).abs() < 1e-9);
        assert!(sem_sim(&[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(sem_sim(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn cosine_scale_invariant() {
        let r1 = sem_sim(&[1.0, 2.0, 3.0], &[2.0, 0.5, 1.0]).unwrap();
        let r2 = sem_sim(&[3.0, 6.0, 9.0], &[1.0, 0.25, 0.5]).unwrap();
        assert!((r1 - r2).abs() < 1e-12);
    }

    #[test]
    fn hashed_embedding_deterministic() {
        let s = Sentence::new("s", "有条理的句子", TokenMode::Char).unwrap();
        let a = hashed_char_ngram_embedding(&s, 64, 2).unwrap();
        let b = hashed_char_ngram_embedding(&s, 64, 2).unwrap();
        assert_eq!(a, b);
        assert!((sem_sim(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        let norm: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn hashed_embedding_too_short() {
        let s = Sentence::new("s", "字", TokenMode::Char).unwrap();
        assert!(hashed_char_ngram_embedding(&s, 64, 2).is_err());
        assert!(hashed_char_ngram_embedding(&s, 4, 1).is_err());
    }
}
