//! Independent oracles used by the acceptance and property suites. Each
//! reimplements its quantity from the defining formulas with different
//! algorithms and data structures than the library.

#![allow(dead_code)]

use std::collections::BTreeMap;

use simpkit::corpus::ParseTree;
use simpkit::metrics::EvalInstance;

/// Minimum edit cost by exhaustive enumeration of edit scripts (delete 1,
/// insert 1, replace 2), no memoization. Exponential; only for short inputs.
pub fn edit_cost_enumerated(a: &[u8], b: &[u8]) -> u64 {
    fn go(a: &[u8], b: &[u8]) -> u64 {
        match (a.split_first(), b.split_first()) {
            (None, None) => 0,
            (None, Some(_)) => b.len() as u64,
            (Some(_), None) => a.len() as u64,
            (Some((&x, ra)), Some((&y, rb))) => {
                let del = 1 + go(ra, b);
                let ins = 1 + go(a, rb);
                let sub = if x == y { 0 } else { 2 } + go(ra, rb);
                del.min(ins).min(sub)
            }
        }
    }
    go(a, b)
}

/// Minimum edit cost by recursion over edit scripts with memoization on the
/// remaining suffix pair. Distinct from the library's iterative rolling-row
/// table.
pub fn edit_cost_recursive(a: &[u8], b: &[u8]) -> u64 {
    fn go(a: &[u8], b: &[u8], i: usize, j: usize, memo: &mut [Vec<Option<u64>>]) -> u64 {
        if i == a.len() {
            return (b.len() - j) as u64;
        }
        if j == b.len() {
            return (a.len() - i) as u64;
        }
        if let Some(v) = memo[i][j] {
            return v;
        }
        let del = 1 + go(a, b, i + 1, j, memo);
        let ins = 1 + go(a, b, i, j + 1, memo);
        let sub = if a[i] == b[j] { 0 } else { 2 } + go(a, b, i + 1, j + 1, memo);
        let v = del.min(ins).min(sub);
        memo[i][j] = Some(v);
        v
    }
    let mut memo = vec![vec![None; b.len()]; a.len()];
    go(a, b, 0, 0, &mut memo)
}

/// Longest common subsequence length by the classic grid recurrence.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> u64 {
    let mut row = vec![0u64; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// A labeled ordered tree in flat preorder form, for the tree-edit oracles.
/// At most 6 nodes so node sets fit in a bitmask.
pub struct MaskTree {
    pub n: usize,
    pub label: Vec<u8>,
    /// Bitmask of the direct children of each node.
    pub children: Vec<u8>,
    /// Preorder entry / postorder exit ranks, for the mapping oracle.
    pub pre: Vec<usize>,
    pub post: Vec<usize>,
    /// Subtree size of each node.
    pub size: Vec<usize>,
}

impl MaskTree {
    pub fn build(t: &ParseTree) -> MaskTree {
        fn walk(
            t: &ParseTree,
            out: &mut MaskTree,
            post_clock: &mut usize,
        ) -> (usize, usize) {
            let id = out.n;
            out.n += 1;
            out.label.push(t.label.as_bytes()[0]);
            out.children.push(0);
            out.pre.push(id);
            out.post.push(0);
            out.size.push(0);
            let mut size = 1;
            for c in &t.children {
                let (cid, csize) = walk(c, out, post_clock);
                out.children[id] |= 1 << cid;
                size += csize;
            }
            out.post[id] = *post_clock;
            *post_clock += 1;
            out.size[id] = size;
            (id, size)
        }
        let mut out = MaskTree {
            n: 0,
            label: Vec::new(),
            children: Vec::new(),
            pre: Vec::new(),
            post: Vec::new(),
            size: Vec::new(),
        };
        let mut clock = 0;
        walk(t, &mut out, &mut clock);
        assert!(out.n <= 6, "mask oracle supports at most 6 nodes");
        out
    }

    fn forest_size(&self, mask: u8) -> u64 {
        let mut total = 0;
        for r in 0..self.n {
            if mask & (1 << r) != 0 {
                total += self.size[r] as u64;
            }
        }
        total
    }
}

/// Tree edit distance (unit costs) by direct recursion on the forest
/// decomposition: delete the rightmost root of either forest, or match the
/// two rightmost roots and recurse into their child forests. Forests are
/// encoded as bitmasks over the node ids.
pub fn ted_forest_recursion(a: &MaskTree, b: &MaskTree) -> u64 {
    fn rightmost_root(mask: u8) -> usize {
        (7 - mask.leading_zeros()) as usize
    }
    fn solve(a: &MaskTree, b: &MaskTree, ma: u8, mb: u8, memo: &mut [u8; 4096]) -> u64 {
        if ma == 0 {
            return b.forest_size(mb);
        }
        if mb == 0 {
            return a.forest_size(ma);
        }
        let key = ((ma as usize) << 6) | mb as usize;
        if memo[key] != u8::MAX {
            return memo[key] as u64;
        }
        let ra = rightmost_root(ma);
        let rb = rightmost_root(mb);
        let del_a = 1 + solve(a, b, (ma & !(1 << ra)) | a.children[ra], mb, memo);
        let del_b = 1 + solve(a, b, ma, (mb & !(1 << rb)) | b.children[rb], memo);
        let relabel = u64::from(a.label[ra] != b.label[rb]);
        let matched = relabel
            + solve(a, b, a.children[ra], b.children[rb], memo)
            + solve(a, b, ma & !(1 << ra), mb & !(1 << rb), memo);
        let best = del_a.min(del_b).min(matched);
        memo[key] = best as u8;
        best
    }
    let mut memo = [u8::MAX; 4096];
    solve(a, b, 1, 1, &mut memo)
}

/// Tree edit distance by exhaustive enumeration of valid mappings: every
/// injective partial map that preserves both the preorder and postorder
/// orderings (the Tai mapping conditions). Exponential; small trees only.
pub fn ted_mapping_enumeration(a: &MaskTree, b: &MaskTree) -> u64 {
    fn valid(pairs: &[(usize, usize)], a: &MaskTree, b: &MaskTree) -> bool {
        for (i, &(a1, b1)) in pairs.iter().enumerate() {
            for &(a2, b2) in &pairs[i + 1..] {
                if (a.pre[a1] < a.pre[a2]) != (b.pre[b1] < b.pre[b2]) {
                    return false;
                }
                if (a.post[a1] < a.post[a2]) != (b.post[b1] < b.post[b2]) {
                    return false;
                }
            }
        }
        true
    }
    fn go(
        next_a: usize,
        used_b: u8,
        pairs: &mut Vec<(usize, usize)>,
        a: &MaskTree,
        b: &MaskTree,
        best: &mut u64,
    ) {
        if next_a == a.n {
            if valid(pairs, a, b) {
                let relabels: u64 = pairs
                    .iter()
                    .map(|&(x, y)| u64::from(a.label[x] != b.label[y]))
                    .sum();
                let cost = relabels
                    + (a.n - pairs.len()) as u64
                    + (b.n - pairs.len()) as u64;
                *best = (*best).min(cost);
            }
            return;
        }
        go(next_a + 1, used_b, pairs, a, b, best);
        for y in 0..b.n {
            if used_b & (1 << y) == 0 {
                pairs.push((next_a, y));
                go(next_a + 1, used_b | (1 << y), pairs, a, b, best);
                pairs.pop();
            }
        }
    }
    let mut best = (a.n + b.n) as u64;
    go(0, 0, &mut Vec::new(), a, b, &mut best);
    best
}

/// All ordered trees with exactly `nodes` nodes over the given labels.
pub fn all_trees(nodes: usize, labels: &[&str]) -> Vec<ParseTree> {
    fn shapes(n: usize) -> Vec<ParseTree> {
        if n == 0 {
            return Vec::new();
        }
        forests(n - 1)
            .into_iter()
            .map(|children| ParseTree::node("X", children))
            .collect()
    }
    fn forests(n: usize) -> Vec<Vec<ParseTree>> {
        if n == 0 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for first in 1..=n {
            for head in shapes(first) {
                for tail in forests(n - first) {
                    let mut f = Vec::with_capacity(1 + tail.len());
                    f.push(head.clone());
                    f.extend(tail);
                    out.push(f);
                }
            }
        }
        out
    }
    fn labelings(t: &ParseTree, labels: &[&str]) -> Vec<ParseTree> {
        let mut child_combos: Vec<Vec<ParseTree>> = vec![Vec::new()];
        for c in &t.children {
            let opts = labelings(c, labels);
            let mut next = Vec::with_capacity(child_combos.len() * opts.len());
            for prefix in &child_combos {
                for o in &opts {
                    let mut p = prefix.clone();
                    p.push(o.clone());
                    next.push(p);
                }
            }
            child_combos = next;
        }
        let mut out = Vec::new();
        for l in labels {
            for combo in &child_combos {
                out.push(ParseTree::node(*l, combo.clone()));
            }
        }
        out
    }
    shapes(nodes)
        .iter()
        .flat_map(|s| labelings(s, labels))
        .collect()
}

type GramCounts = BTreeMap<String, f64>;

fn grams(tokens: &[String], n: usize) -> GramCounts {
    let mut out = GramCounts::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *out.entry(w.join("\u{1}")).or_insert(0.0) += 1.0;
        }
    }
    out
}

fn scaled(counts: &GramCounts, factor: f64) -> GramCounts {
    counts.iter().map(|(k, v)| (k.clone(), v * factor)).collect()
}

fn minimum(x: &GramCounts, y: &GramCounts) -> GramCounts {
    x.iter()
        .filter_map(|(k, &v)| y.get(k).map(|&w| (k.clone(), v.min(w))))
        .filter(|(_, v)| *v > 0.0)
        .collect()
}

fn difference(x: &GramCounts, y: &GramCounts) -> GramCounts {
    x.iter()
        .map(|(k, &v)| (k.clone(), v - y.get(k).copied().unwrap_or(0.0)))
        .filter(|(_, v)| *v > 0.0)
        .collect()
}

fn avg_fraction(good: &GramCounts, all: &GramCounts) -> f64 {
    if all.is_empty() {
        return 1.0;
    }
    let s: f64 = all
        .iter()
        .map(|(k, &v)| good.get(k).copied().unwrap_or(0.0) / v)
        .sum();
    s / all.len() as f64
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Direct SARI evaluation from the defining fractional-count formulas over
/// sorted string-keyed gram tables. Returns (keep, add, del, mean) on the
/// 0..100 scale with deletion scored as precision.
pub fn sari_direct(instance: &EvalInstance) -> (f64, f64, f64, f64) {
    let numref = instance.references.len() as f64;
    let mut keep_orders = Vec::new();
    let mut add_orders = Vec::new();
    let mut del_orders = Vec::new();
    for n in 1..=4 {
        let o = scaled(&grams(&instance.original, n), numref);
        let s = scaled(&grams(&instance.system, n), numref);
        let mut r = GramCounts::new();
        for rf in &instance.references {
            for (k, v) in grams(rf, n) {
                *r.entry(k).or_insert(0.0) += v;
            }
        }

        let keep_cand = minimum(&o, &s);
        let keep_good = minimum(&keep_cand, &r);
        let keep_all = minimum(&o, &r);
        keep_orders.push(f1(
            avg_fraction(&keep_good, &keep_cand),
            avg_fraction(&keep_good, &keep_all),
        ));

        let del_cand = difference(&o, &s);
        let del_good = difference(&del_cand, &r);
        del_orders.push(avg_fraction(&del_good, &del_cand));

        let o_unscaled = grams(&instance.original, n);
        let add_cand: Vec<String> = grams(&instance.system, n)
            .keys()
            .filter(|k| !o_unscaled.contains_key(*k))
            .cloned()
            .collect();
        let add_ref: Vec<String> = r
            .keys()
            .filter(|k| !o_unscaled.contains_key(*k))
            .cloned()
            .collect();
        let good = add_cand.iter().filter(|k| add_ref.contains(k)).count() as f64;
        let p = if add_cand.is_empty() {
            1.0
        } else {
            good / add_cand.len() as f64
        };
        let rr = if add_ref.is_empty() {
            1.0
        } else {
            good / add_ref.len() as f64
        };
        add_orders.push(f1(p, rr));
    }
    let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let keep = 100.0 * avg(&keep_orders);
    let add = 100.0 * avg(&add_orders);
    let del = 100.0 * avg(&del_orders);
    (keep, add, del, (keep + add + del) / 3.0)
}

/// Natural log of the gamma function (Lanczos approximation, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // Reflection.
        return std::f64::consts::PI.ln()
            - (std::f64::consts::PI * x).sin().ln()
            - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, c) in COEFFS.iter().enumerate() {
        acc += c / (x + i as f64 + 1.0);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn t_pdf(x: f64, df: f64) -> f64 {
    let c = (ln_gamma((df + 1.0) / 2.0)
        - ln_gamma(df / 2.0)
        - 0.5 * (df * std::f64::consts::PI).ln())
    .exp();
    c * (1.0 + x * x / df).powf(-(df + 1.0) / 2.0)
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fb: f64, fm: f64, eps: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() < 15.0 * eps {
        left + right + (left + right - whole) / 15.0
    } else {
        simpson(f, a, m, fa, fm, flm, eps / 2.0, depth - 1)
            + simpson(f, m, b, fm, fb, frm, eps / 2.0, depth - 1)
    }
}

/// Two-sided p-value of a t statistic by adaptive-Simpson integration of the
/// t density.
pub fn t_pvalue_integrated(t: f64, df: f64) -> f64 {
    let t = t.abs();
    if t == 0.0 {
        return 1.0;
    }
    let f = |x: f64| t_pdf(x, df);
    let (fa, fb, fm) = (f(0.0), f(t), f(0.5 * t));
    let central = simpson(&f, 0.0, t, fa, fb, fm, 1e-13, 40);
    (2.0 * (0.5 - central)).clamp(0.0, 1.0)
}

/// Pearson r by direct formula evaluation.
pub fn pearson_direct(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    cov / (vx.sqrt() * vy.sqrt())
}

/// Paired t statistic by direct formula evaluation.
pub fn paired_t_direct(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var: f64 = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    mean / (var.sqrt() / n.sqrt())
}
