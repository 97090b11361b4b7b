//! Banded local alignment with affine gaps.
//!
//! A gap of length `L` scores `gap_open + L * gap_extend`. The band follows a
//! guide diagonal per query row; for read alignment the guide is interpolated
//! between the chain's anchors so indels accumulated across a long read stay
//! inside a narrow band.

use serde::{Deserialize, Serialize};

use super::{Chain, MapError};
use crate::genio::{Read, Reference};
use crate::seq::{revcomp, Strand};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignParams {
    pub match_score: i32,
    pub mismatch: i32,
    pub gap_open: i32,
    pub gap_extend: i32,
    pub band: usize,
    pub flank: usize,
}

impl Default for AlignParams {
    fn default() -> Self {
        AlignParams {
            match_score: 2,
            mismatch: -4,
            gap_open: -4,
            gap_extend: -2,
            band: 500,
            flank: 100,
        }
    }
}

impl AlignParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.match_score <= 0 {
            return Err(format!(
                "match score must be positive, got {}",
                self.match_score
            ));
        }
        if self.mismatch > 0 || self.gap_open > 0 || self.gap_extend > 0 {
            return Err("mismatch and gap penalties must be <= 0".into());
        }
        if self.band == 0 {
            return Err("band must be at least 1".into());
        }
        Ok(())
    }
}

/// Extents are half-open. `read_*` are forward-strand read coordinates and
/// `ref_*` absolute reference coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub score: i32,
    pub ref_start: u64,
    pub ref_end: u64,
    pub read_start: u64,
    pub read_end: u64,
    pub matches: u64,
    pub block_len: u64,
}

const NEG: i32 = i32::MIN / 4;

const H_ZERO: u8 = 0;
const H_DIAG: u8 = 1;
const H_E: u8 = 2;
const H_F: u8 = 3;
const E_EXT: u8 = 4;
const F_EXT: u8 = 8;

/// Raw local alignment outcome in query/target coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalHit {
    pub score: i32,
    pub q_start: usize,
    pub q_end: usize,
    pub t_start: usize,
    pub t_end: usize,
    pub matches: usize,
    pub block_len: usize,
}

/// Local alignment of `q` against `t`. Row `i` (1-based, query base `i-1`)
/// covers target columns `center(i) ± band`; `center` must be nondecreasing.
pub fn banded_local_align<F>(q: &[u8], t: &[u8], p: &AlignParams, center: F) -> LocalHit
where
    F: Fn(usize) -> i64,
{
    let (m, n) = (q.len(), t.len());
    let none = LocalHit {
        score: 0,
        q_start: 0,
        q_end: 0,
        t_start: 0,
        t_end: 0,
        matches: 0,
        block_len: 0,
    };
    if m == 0 || n == 0 {
        return none;
    }
    let band = p.band as i64;
    let open = p.gap_open + p.gap_extend;
    let (ms, mm, ge) = (p.match_score, p.mismatch, p.gap_extend);

    // Row buffers span every column. Outside its window a buffer holds
    // H = 0 (local restart) and F = NEG, so the inner loop needs no window
    // checks.
    let mut h_prev = vec![0i32; n + 1];
    let mut f_prev = vec![NEG; n + 1];
    let mut h_cur = vec![0i32; n + 1];
    let mut f_cur = vec![NEG; n + 1];
    // Window of the row currently stored in the `cur` buffers.
    let mut cur_win = (1usize, 0usize);
    // Per-row window [lo, hi] of 1-based columns and offset into `dirs`.
    let mut win = vec![(1usize, 0usize, 0usize); m + 1];
    let mut dirs: Vec<u8> = Vec::new();
    let mut best = (0i32, 0usize, 0usize);
    let mut prev_lo = 1usize;

    for i in 1..=m {
        if cur_win.0 <= cur_win.1 {
            h_cur[cur_win.0..=cur_win.1].fill(0);
            f_cur[cur_win.0..=cur_win.1].fill(NEG);
        }
        let c = center(i);
        let lo = (c - band).max(1);
        let hi = (c + band).min(n as i64);
        if lo > hi {
            win[i] = (1, 0, dirs.len());
        } else {
            let (lo, hi) = (lo as usize, hi as usize);
            debug_assert!(lo >= prev_lo, "band center must be nondecreasing");
            prev_lo = lo;
            let off = dirs.len();
            let width = hi - lo + 1;
            win[i] = (lo, hi, off);
            dirs.resize(off + width, 0);
            let row_dirs = &mut dirs[off..];
            let hp = &h_prev[lo..=hi];
            let fp = &f_prev[lo..=hi];
            let tt = &t[lo - 1..hi];
            let hc = &mut h_cur[lo..=hi];
            let fc = &mut f_cur[lo..=hi];
            let qb = q[i - 1];
            let mut h_diag = h_prev[lo - 1];
            let mut e = NEG;
            let mut h_left = 0i32;
            let mut row_best = (0i32, 0usize);
            for k in 0..width {
                let h_up = hp[k];
                let e_ext = e + ge;
                let e_open = h_left + open;
                let e_from_ext = e_ext > e_open;
                e = e_ext.max(e_open);
                let f_ext = fp[k] + ge;
                let f_open = h_up + open;
                let f_from_ext = f_ext > f_open;
                let f = f_ext.max(f_open);

                let diag = h_diag + if qb == tt[k] { ms } else { mm };
                h_diag = h_up;
                // strict comparisons: ties prefer restart, then diagonal,
                // then the horizontal gap
                let h1 = diag.max(0);
                let src1 = if diag > 0 { H_DIAG } else { H_ZERO };
                let h2 = h1.max(e);
                let src2 = if e > h1 { H_E } else { src1 };
                let h = h2.max(f);
                let src = if f > h2 { H_F } else { src2 };
                let d =
                    src | if e_from_ext { E_EXT } else { 0 } | if f_from_ext { F_EXT } else { 0 };
                hc[k] = h;
                fc[k] = f;
                h_left = h;
                row_dirs[k] = d | src;
                if h > row_best.0 {
                    row_best = (h, k);
                }
            }
            if row_best.0 > best.0 {
                best = (row_best.0, i, lo + row_best.1);
            }
        }
        std::mem::swap(&mut h_prev, &mut h_cur);
        std::mem::swap(&mut f_prev, &mut f_cur);
        // `cur` now holds row i - 1; its window is the one recorded for it.
        cur_win = (win[i - 1].0, win[i - 1].1);
    }

    let (score, ie, je) = best;
    if score == 0 {
        return none;
    }
    let dir_at = |i: usize, j: usize| -> Option<u8> {
        let (lo, hi, off) = win[i];
        (i >= 1 && j >= lo && j <= hi).then(|| dirs[off + j - lo])
    };
    let (mut i, mut j) = (ie, je);
    let (mut matches, mut block) = (0usize, 0usize);
    #[derive(PartialEq)]
    enum St {
        H,
        E,
        F,
    }
    let mut st = St::H;
    while let Some(d) = dir_at(i, j) {
        match st {
            St::H => match d & 3 {
                H_DIAG => {
                    matches += (q[i - 1] == t[j - 1]) as usize;
                    block += 1;
                    i -= 1;
                    j -= 1;
                }
                H_E => st = St::E,
                H_F => st = St::F,
                _ => break,
            },
            St::E => {
                block += 1;
                if d & E_EXT == 0 {
                    st = St::H;
                }
                j -= 1;
            }
            St::F => {
                block += 1;
                if d & F_EXT == 0 {
                    st = St::H;
                }
                i -= 1;
            }
        }
    }
    debug_assert!(st == St::H, "traceback ended inside a gap");
    LocalHit {
        score,
        q_start: i,
        q_end: ie,
        t_start: j,
        t_end: je,
        matches,
        block_len: block,
    }
}

/// Full-matrix local alignment (band wide enough to cover every cell).
pub fn local_align(q: &[u8], t: &[u8], p: &AlignParams) -> LocalHit {
    let p = AlignParams {
        band: q.len() + t.len() + 1,
        ..*p
    };
    banded_local_align(q, t, &p, |_| 0)
}

/// Aligns `read` to the reference region around `chain`.
///
/// The region covers the chain's reference span extended by the read bases
/// outside the chain (projected along the diagonal) plus `p.flank`, clipped
/// to the reference.
pub fn align(
    read: &Read,
    chain: &Chain,
    reference: &Reference,
    p: &AlignParams,
) -> Result<AlignmentResult, MapError> {
    if chain.anchors.is_empty() {
        return Err(MapError::EmptyChain);
    }
    let len = read.len() as i64;
    // seed length, recovered from the chain's read span
    let k = (chain.read_end - chain.read_start) as i64
        - (chain.anchors.iter().map(|a| a.read_pos).max().unwrap()
            - chain.anchors.iter().map(|a| a.read_pos).min().unwrap()) as i64;
    let query = match chain.strand {
        Strand::Forward => read.bases.clone(),
        Strand::Reverse => revcomp(&read.bases),
    };
    // Anchor positions in query orientation, increasing.
    let mut guide: Vec<(i64, i64)> = chain
        .anchors
        .iter()
        .map(|a| {
            let qp = match chain.strand {
                Strand::Forward => a.read_pos as i64,
                Strand::Reverse => len - a.read_pos as i64 - k,
            };
            (qp, a.ref_pos as i64)
        })
        .collect();
    guide.sort_unstable();
    let (q0, r0) = guide[0];
    let (q1, r1) = *guide.last().unwrap();
    let ref_len = reference.len() as i64;
    let start = (r0 - q0 - p.flank as i64).max(0);
    let end = (r1 + k + (len - q1 - k) + p.flank as i64).min(ref_len);
    if start >= end {
        return Err(MapError::EmptyRegion);
    }
    let target = &reference.bases[start as usize..end as usize];

    // Target column (1-based) on the guide diagonal for query row i.
    let center = |i: usize| -> i64 {
        let qi = i as i64 - 1;
        let pos = guide.partition_point(|&(gq, _)| gq <= qi);
        let r = if pos == 0 {
            r0 + (qi - q0)
        } else if pos == guide.len() {
            r1 + (qi - q1)
        } else {
            let (qa, ra) = guide[pos - 1];
            let (qb, rb) = guide[pos];
            ra + (qi - qa) * (rb - ra) / (qb - qa)
        };
        r - start + 1
    };
    let hit = banded_local_align(&query, target, p, center);
    let (read_start, read_end) = match chain.strand {
        Strand::Forward => (hit.q_start as u64, hit.q_end as u64),
        Strand::Reverse => (
            (len as usize - hit.q_end) as u64,
            (len as usize - hit.q_start) as u64,
        ),
    };
    Ok(AlignmentResult {
        score: hit.score,
        ref_start: start as u64 + hit.t_start as u64,
        ref_end: start as u64 + hit.t_end as u64,
        read_start,
        read_end,
        matches: hit.matches as u64,
        block_len: hit.block_len as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refindex::Anchor;
    use proptest::prelude::*;

    /// Unbanded Gotoh local alignment score, kept deliberately naive.
    fn gotoh_score(q: &[u8], t: &[u8], p: &AlignParams) -> i32 {
        let (m, n) = (q.len(), t.len());
        let mut h = vec![vec![0i64; n + 1]; m + 1];
        let mut e = vec![vec![i64::MIN / 2; n + 1]; m + 1];
        let mut f = vec![vec![i64::MIN / 2; n + 1]; m + 1];
        let (go, ge) = (p.gap_open as i64, p.gap_extend as i64);
        let mut best = 0;
        for i in 1..=m {
            for j in 1..=n {
                e[i][j] = (h[i][j - 1] + go + ge).max(e[i][j - 1] + ge);
                f[i][j] = (h[i - 1][j] + go + ge).max(f[i - 1][j] + ge);
                let s = if q[i - 1] == t[j - 1] {
                    p.match_score
                } else {
                    p.mismatch
                } as i64;
                h[i][j] = 0.max(h[i - 1][j - 1] + s).max(e[i][j]).max(f[i][j]);
                best = best.max(h[i][j]);
            }
        }
        best as i32
    }

    fn longest_common_substring(a: &[u8], b: &[u8]) -> usize {
        let mut best = 0;
        let mut prev = vec![0usize; b.len() + 1];
        for i in 1..=a.len() {
            let mut cur = vec![0usize; b.len() + 1];
            for j in 1..=b.len() {
                if a[i - 1] == b[j - 1] {
                    cur[j] = prev[j - 1] + 1;
                    best = best.max(cur[j]);
                }
            }
            prev = cur;
        }
        best
    }

    fn dna() -> impl Strategy<Value = Vec<u8>> {
        prop::collection::vec(prop::sample::select(b"ACGT".to_vec()), 0..40)
    }

    #[test]
    fn identity() {
        let s = b"ACGTTGCAAGGCTTAC";
        let h = local_align(s, s, &AlignParams::default());
        assert_eq!(h.score, 2 * s.len() as i32);
        assert_eq!(
            (h.q_start, h.q_end, h.t_start, h.t_end),
            (0, s.len(), 0, s.len())
        );
        assert_eq!((h.matches, h.block_len), (s.len(), s.len()));
    }

    #[test]
    fn small_hand_case() {
        let h = local_align(b"ACGT", b"AGGT", &AlignParams::default());
        assert_eq!(h.score, 4);
        assert_eq!((h.q_start, h.q_end, h.t_start, h.t_end), (2, 4, 2, 4));
    }

    #[test]
    fn no_positive_cell() {
        let h = local_align(b"AAAA", b"CCCC", &AlignParams::default());
        assert_eq!(h.score, 0);
        assert_eq!(local_align(b"", b"ACGT", &AlignParams::default()).score, 0);
    }

    #[test]
    fn affine_gap() {
        // 10 matches, a 2-base deletion from the query, 10 matches:
        // 40 - (4 + 2*2) = 32
        let t = b"ACGTACGGTCAATTGGCCAAGTCA";
        let mut q = t[..10].to_vec();
        q.extend_from_slice(&t[12..22]);
        let h = local_align(&q, t, &AlignParams::default());
        assert_eq!(h.score, 32);
        assert_eq!(h.block_len, 22);
        assert_eq!(h.matches, 20);
        assert_eq!(h.score, gotoh_score(&q, t, &AlignParams::default()));
    }

    proptest! {
        #[test]
        fn matches_naive_gotoh(q in dna(), t in dna()) {
            let p = AlignParams::default();
            let h = local_align(&q, &t, &p);
            prop_assert_eq!(h.score, gotoh_score(&q, &t, &p));
            prop_assert!(h.q_start <= h.q_end && h.q_end <= q.len());
            prop_assert!(h.t_start <= h.t_end && h.t_end <= t.len());
            prop_assert!(h.matches <= h.block_len);
            if h.score > 0 {
                // Traceback extents re-aligned on their own reproduce the score.
                let sub = local_align(&q[h.q_start..h.q_end], &t[h.t_start..h.t_end], &p);
                prop_assert_eq!(sub.score, h.score);
            }
        }

        #[test]
        fn symmetric(q in dna(), t in dna()) {
            let p = AlignParams { gap_open: -3, ..AlignParams::default() };
            prop_assert_eq!(local_align(&q, &t, &p).score, local_align(&t, &q, &p).score);
        }

        #[test]
        fn lower_bound(q in dna(), t in dna()) {
            let p = AlignParams::default();
            let lcs = longest_common_substring(&q, &t) as i32;
            prop_assert!(local_align(&q, &t, &p).score >= p.match_score * lcs);
        }

        #[test]
        fn narrow_band_never_beats_full(q in dna(), t in dna(), band in 1usize..8) {
            let p = AlignParams { band, ..AlignParams::default() };
            let banded = banded_local_align(&q, &t, &p, |i| i as i64);
            prop_assert!(banded.score <= local_align(&q, &t, &p).score);
        }
    }

    fn read_of(bases: &[u8]) -> Read {
        Read::new("r", bases.to_vec(), vec![30; bases.len()])
    }

    fn exact_chain(strand: Strand, read_len: u32, ref_start: u32, k: u32) -> Chain {
        let anchors = (0..read_len - k)
            .step_by(50)
            .map(|off| Anchor {
                strand,
                ref_id: 0,
                ref_pos: ref_start + off,
                read_pos: match strand {
                    Strand::Forward => off,
                    Strand::Reverse => read_len - off - k,
                },
            })
            .collect::<Vec<_>>();
        let lo = anchors.iter().map(|a| a.read_pos).min().unwrap() as u64;
        let hi = anchors.iter().map(|a| a.read_pos).max().unwrap() as u64;
        Chain {
            strand,
            ref_id: 0,
            score: 0.0,
            ref_start: anchors[0].ref_pos as u64,
            ref_end: anchors.last().unwrap().ref_pos as u64 + k as u64,
            read_start: lo,
            read_end: hi + k as u64,
            anchors,
        }
    }

    #[test]
    fn strand_twins_align_identically() {
        let r = crate::genio::random_reference("chr", 20_000, 9);
        let fwd = read_of(&r.bases[5000..7000]);
        let rev = read_of(&revcomp(&fwd.bases));
        let p = AlignParams {
            band: 20,
            ..AlignParams::default()
        };
        let a = align(&fwd, &exact_chain(Strand::Forward, 2000, 5000, 15), &r, &p).unwrap();
        let b = align(&rev, &exact_chain(Strand::Reverse, 2000, 5000, 15), &r, &p).unwrap();
        assert_eq!(a.score, 4000);
        assert_eq!(a, b);
        assert_eq!(
            (a.ref_start, a.ref_end, a.read_start, a.read_end),
            (5000, 7000, 0, 2000)
        );
    }

    #[test]
    fn region_clipped_to_reference() {
        let r = crate::genio::random_reference("chr", 3000, 2);
        let read = read_of(&r.bases[0..500]);
        let a = align(
            &read,
            &exact_chain(Strand::Forward, 500, 0, 15),
            &r,
            &AlignParams::default(),
        )
        .unwrap();
        assert_eq!((a.ref_start, a.ref_end), (0, 500));
        let empty = Reference::new("tiny", b"ACGT".to_vec());
        let mut c = exact_chain(Strand::Forward, 500, 0, 15);
        for a in &mut c.anchors {
            a.ref_pos += 10_000;
        }
        assert!(matches!(
            align(&read, &c, &empty, &AlignParams::default()),
            Err(MapError::EmptyRegion)
        ));
    }
}
