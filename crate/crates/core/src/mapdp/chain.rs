//! Colinear chaining of minimizer anchors.
//!
//! Within one (strand, reference) group the DP is
//!
//! ```text
//! f(i) = max( w, max_j f(j) + min(w, dq, dr) - gap_coef * |dr - dq| )
//! ```
//!
//! over predecessors with `0 < dq <= G` and `0 < dr <= G`, where `dr` is the
//! reference distance and `dq` the query distance. For reverse-strand
//! anchors the query runs backwards along the read, so `dq` is measured on
//! the negated read coordinate.

use serde::{Deserialize, Serialize};

use super::MapError;
use crate::refindex::Anchor;
use crate::seq::Strand;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub match_weight: f64,
    pub gap_coef: f64,
    pub max_gap: u32,
    pub min_chain_anchors: usize,
    /// Seed length, only used to turn anchor positions into spans.
    pub seed_len: u32,
}

impl Default for ChainParams {
    fn default() -> Self {
        ChainParams {
            match_weight: 15.0,
            gap_coef: 0.1,
            max_gap: 5000,
            min_chain_anchors: 1,
            seed_len: 15,
        }
    }
}

impl ChainParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.match_weight > 0.0 && self.match_weight.is_finite()) {
            return Err(format!(
                "match weight must be positive, got {}",
                self.match_weight
            ));
        }
        if !(self.gap_coef >= 0.0 && self.gap_coef.is_finite()) {
            return Err(format!(
                "gap coefficient must be non-negative, got {}",
                self.gap_coef
            ));
        }
        if self.max_gap == 0 {
            return Err("max gap must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub strand: Strand,
    pub ref_id: u32,
    pub score: f64,
    /// Increasing in reference position; read positions increase for `+`
    /// chains and decrease for `-` chains.
    pub anchors: Vec<Anchor>,
    pub ref_start: u64,
    pub ref_end: u64,
    pub read_start: u64,
    pub read_end: u64,
}

impl Chain {
    fn from_anchors(anchors: Vec<Anchor>, score: f64, seed_len: u32) -> Chain {
        let first = anchors[0];
        let last = anchors[anchors.len() - 1];
        let (lo, hi) = anchors.iter().fold((u32::MAX, 0), |(lo, hi), a| {
            (lo.min(a.read_pos), hi.max(a.read_pos))
        });
        Chain {
            strand: first.strand,
            ref_id: first.ref_id,
            score,
            ref_start: first.ref_pos as u64,
            ref_end: last.ref_pos as u64 + seed_len as u64,
            read_start: lo as u64,
            read_end: hi as u64 + seed_len as u64,
            anchors,
        }
    }
}

/// Query coordinate along the chaining direction.
fn qpos(a: &Anchor) -> i64 {
    match a.strand {
        Strand::Forward => a.read_pos as i64,
        Strand::Reverse => -(a.read_pos as i64),
    }
}

fn link_score(dq: i64, dr: i64, p: &ChainParams) -> f64 {
    let overlap = p.match_weight.min(dq as f64).min(dr as f64);
    overlap - p.gap_coef * (dr - dq).abs() as f64
}

/// Path score of a chain, accumulated left to right.
fn rescore(path: &[Anchor], p: &ChainParams) -> f64 {
    let mut s = p.match_weight;
    for w in path.windows(2) {
        s += link_score(
            qpos(&w[1]) - qpos(&w[0]),
            w[1].ref_pos as i64 - w[0].ref_pos as i64,
            p,
        );
    }
    s
}

fn group_bounds(anchors: &[Anchor]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=anchors.len() {
        if i == anchors.len()
            || (anchors[i].strand, anchors[i].ref_id)
                != (anchors[start].strand, anchors[start].ref_id)
        {
            out.push((start, i));
            start = i;
        }
    }
    out
}

fn chain_group(g: &[Anchor], p: &ChainParams, out: &mut Vec<Chain>) {
    let n = g.len();
    let mut f = vec![0f64; n];
    let mut pred = vec![usize::MAX; n];
    let max_gap = p.max_gap as i64;
    for i in 0..n {
        let mut best = p.match_weight;
        let mut arg = usize::MAX;
        let (qi, ri) = (qpos(&g[i]), g[i].ref_pos as i64);
        for j in (0..i).rev() {
            let dr = ri - g[j].ref_pos as i64;
            if dr > max_gap {
                break;
            }
            let dq = qi - qpos(&g[j]);
            if dr <= 0 || dq <= 0 || dq > max_gap {
                continue;
            }
            let s = f[j] + link_score(dq, dr, p);
            if s > best {
                best = s;
                arg = j;
            }
        }
        f[i] = best;
        pred[i] = arg;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| f[b].total_cmp(&f[a]).then(a.cmp(&b)));
    let mut used = vec![false; n];
    // Released anchors may precede `end` in the order, hence the outer loop.
    while used.iter().any(|u| !u) {
        for &end in &order {
            if used[end] {
                continue;
            }
            let mut path = Vec::new();
            let mut cur = end;
            while cur != usize::MAX && !used[cur] {
                used[cur] = true;
                path.push(cur);
                cur = pred[cur];
            }
            path.reverse();
            let score = if cur == usize::MAX {
                f[end]
            } else {
                // The head of this path was claimed by a better chain. Keep the
                // best-scoring suffix and release the rest; released anchors have
                // are picked up by a later pass.
                let mut best_t = path.len() - 1;
                let mut best_sum = 0.0;
                let mut sum = 0.0;
                for t in (0..path.len() - 1).rev() {
                    let (a, b) = (&g[path[t]], &g[path[t + 1]]);
                    sum += link_score(qpos(b) - qpos(a), b.ref_pos as i64 - a.ref_pos as i64, p);
                    if sum >= best_sum {
                        best_sum = sum;
                        best_t = t;
                    }
                }
                for &i in &path[..best_t] {
                    used[i] = false;
                }
                path.drain(..best_t);
                let kept: Vec<Anchor> = path.iter().map(|&i| g[i]).collect();
                rescore(&kept, p)
            };
            if path.len() < p.min_chain_anchors {
                continue;
            }
            let anchors = path.iter().map(|&i| g[i]).collect();
            out.push(Chain::from_anchors(anchors, score, p.seed_len));
        }
    }
}

/// Chains sorted anchors; returns chains best-first.
pub fn chain(anchors: &[Anchor], p: &ChainParams) -> Vec<Chain> {
    debug_assert!(
        anchors.windows(2).all(|w| w[0] <= w[1]),
        "anchors must be sorted"
    );
    let mut out = Vec::new();
    for (s, e) in group_bounds(anchors) {
        chain_group(&anchors[s..e], p, &mut out);
    }
    out.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.ref_id.cmp(&b.ref_id))
            .then(a.ref_start.cmp(&b.ref_start))
            .then(a.read_start.cmp(&b.read_start))
    });
    out
}

pub const BRUTEFORCE_MAX_ANCHORS: usize = 14;

/// Best chain score by enumerating every anchor subset. 0 for no anchors.
pub fn chain_bruteforce(anchors: &[Anchor], p: &ChainParams) -> Result<f64, MapError> {
    if anchors.len() > BRUTEFORCE_MAX_ANCHORS {
        return Err(MapError::TooManyAnchors {
            got: anchors.len(),
            max: BRUTEFORCE_MAX_ANCHORS,
        });
    }
    let mut sorted = anchors.to_vec();
    sorted.sort();
    let n = sorted.len();
    let g = p.max_gap as i64;
    let mut best = 0f64;
    let mut path: Vec<Anchor> = Vec::with_capacity(n);
    for mask in 1u32..(1u32 << n) {
        path.clear();
        path.extend((0..n).filter(|i| mask >> i & 1 == 1).map(|i| sorted[i]));
        let mut ok = true;
        let mut score = p.match_weight;
        for w in path.windows(2) {
            let (a, b) = (w[0], w[1]);
            if (a.strand, a.ref_id) != (b.strand, b.ref_id) {
                ok = false;
                break;
            }
            let dr = b.ref_pos as i64 - a.ref_pos as i64;
            let dq = if b.strand == Strand::Forward {
                b.read_pos as i64 - a.read_pos as i64
            } else {
                a.read_pos as i64 - b.read_pos as i64
            };
            if !(0 < dr && dr <= g && 0 < dq && dq <= g) {
                ok = false;
                break;
            }
            let m = if dq < dr { dq as f64 } else { dr as f64 };
            let m = if p.match_weight < m {
                p.match_weight
            } else {
                m
            };
            score += m - p.gap_coef * ((dr - dq).abs() as f64);
        }
        if ok && score > best {
            best = score;
        }
    }
    Ok(best)
}

/// Concatenates per-chunk anchor lists of one read into a sorted list.
pub fn merge_chunk_anchors<'a, I>(chunks: I) -> Result<Vec<Anchor>, MapError>
where
    I: IntoIterator<Item = (&'a str, &'a [Anchor])>,
{
    let mut read: Option<&str> = None;
    let mut out = Vec::new();
    for (id, anchors) in chunks {
        match read {
            Some(r) if r != id => return Err(MapError::MixedReads(r.to_string(), id.to_string())),
            _ => read = Some(id),
        }
        out.extend_from_slice(anchors);
    }
    out.sort_unstable();
    Ok(out)
}
