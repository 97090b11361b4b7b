//! Minimizer extraction, the reference index and per-chunk seeding.
//!
//! k-mers are 2-bit packed (A=0, C=1, G=2, T=3) into one `u64`, so `k <= 31`.
//! With `canonical` set, a k-mer and its reverse complement share the smaller
//! of the two codes and the strand records which orientation won.

mod io;

use std::collections::HashMap;
use std::collections::VecDeque;
use std::hash::{BuildHasherDefault, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chunkqc::Chunk;
use crate::genio::Reference;
use crate::seq::{base_code, Strand};

pub use io::{load_index, read_index, save_index, write_index, INDEX_MAGIC};

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("invalid index parameters: {0}")]
    InvalidParams(String),
    #[error("no reference is at least {0} bases long")]
    AllReferencesTooShort(usize),
    #[error("too many references or reference too long for 32-bit coordinates")]
    TooLarge,
    #[error("index parameters {index:?} do not match seeding parameters {query:?}")]
    ParamsMismatch {
        index: IndexParams,
        query: IndexParams,
    },
    #[error("not a genpip index")]
    NotIndex,
    #[error("unsupported index format version {0:?}")]
    VersionMismatch(String),
    #[error("index file truncated or corrupted (checksum mismatch)")]
    Corrupt,
    #[error("index i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexParams {
    pub k: usize,
    pub w: usize,
    pub canonical: bool,
}

impl Default for IndexParams {
    fn default() -> Self {
        IndexParams {
            k: 15,
            w: 10,
            canonical: true,
        }
    }
}

impl IndexParams {
    pub fn validate(&self) -> Result<(), IndexError> {
        if !(1..=31).contains(&self.k) {
            return Err(IndexError::InvalidParams(format!(
                "k = {} outside 1..=31",
                self.k
            )));
        }
        if self.w == 0 || self.w > u16::MAX as usize {
            return Err(IndexError::InvalidParams(format!(
                "w = {} outside 1..=65535",
                self.w
            )));
        }
        Ok(())
    }

    /// Shortest sequence that holds one full window.
    pub fn min_len(&self) -> usize {
        self.k + self.w - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Minimizer {
    pub code: u64,
    pub pos: usize,
    pub strand: Strand,
}

/// Packed codes of every k-mer start position; `None` where the k-mer holds a
/// non-ACGT base.
fn kmer_codes(seq: &[u8], p: &IndexParams) -> Vec<Option<(u64, Strand)>> {
    let k = p.k;
    if seq.len() < k {
        return Vec::new();
    }
    let mask = if k == 32 {
        u64::MAX
    } else {
        (1u64 << (2 * k)) - 1
    };
    let shift = 2 * (k as u64 - 1);
    let mut fwd = 0u64;
    let mut rev = 0u64;
    let mut valid = 0usize;
    let mut out = Vec::with_capacity(seq.len() - k + 1);
    for (i, &b) in seq.iter().enumerate() {
        match base_code(b) {
            Some(c) => {
                fwd = ((fwd << 2) | c) & mask;
                rev = (rev >> 2) | ((3 - c) << shift);
                valid += 1;
            }
            None => valid = 0,
        }
        if i + 1 >= k {
            let best = if p.canonical && rev < fwd {
                (rev, Strand::Reverse)
            } else {
                (fwd, Strand::Forward)
            };
            out.push((valid >= k).then_some(best));
        }
    }
    out
}

/// Window minimizers of `seq`, sorted by position. Ties go to the leftmost
/// k-mer; a k-mer chosen by consecutive windows is reported once.
pub fn minimizers(seq: &[u8], p: &IndexParams) -> Vec<Minimizer> {
    if seq.len() < p.min_len() {
        return Vec::new();
    }
    let codes = kmer_codes(seq, p);
    let mut out: Vec<Minimizer> = Vec::new();
    // positions with nondecreasing codes; the front is the window minimum
    let mut window: VecDeque<usize> = VecDeque::with_capacity(p.w);
    for (i, code) in codes.iter().enumerate() {
        if let Some((c, _)) = code {
            while let Some(&back) = window.back() {
                if codes[back].unwrap().0 > *c {
                    window.pop_back();
                } else {
                    break;
                }
            }
            window.push_back(i);
        }
        if i + 1 < p.w {
            continue;
        }
        let start = i + 1 - p.w;
        while window.front().is_some_and(|&f| f < start) {
            window.pop_front();
        }
        if let Some(&front) = window.front() {
            if out.last().is_none_or(|m| m.pos != front) {
                let (code, strand) = codes[front].unwrap();
                out.push(Minimizer {
                    code,
                    pos: front,
                    strand,
                });
            }
        }
    }
    out
}

/// One occurrence of a minimizer in the reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Location {
    pub ref_id: u32,
    pub pos: u32,
    pub strand: Strand,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefMeta {
    pub name: String,
    pub len: u64,
}

/// splitmix64 finalizer over the packed code; invertible, so distinct codes
/// never collide before bucketing.
#[derive(Default)]
pub struct KmerHasher(u64);

impl Hasher for KmerHasher {
    fn finish(&self) -> u64 {
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0 << 8) | b as u64;
        }
    }

    fn write_u64(&mut self, n: u64) {
        self.0 = n;
    }
}

pub type KmerMap<V> = HashMap<u64, V, BuildHasherDefault<KmerHasher>>;

/// Minimizer code to reference locations. Location lists are sorted by
/// `(ref_id, pos)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinimizerIndex {
    pub params: IndexParams,
    pub table: KmerMap<Vec<Location>>,
    pub ref_meta: Vec<RefMeta>,
}

impl MinimizerIndex {
    pub fn lookup(&self, code: u64) -> &[Location] {
        self.table.get(&code).map_or(&[], Vec::as_slice)
    }

    pub fn num_minimizers(&self) -> usize {
        self.table.len()
    }

    pub fn num_locations(&self) -> usize {
        self.table.values().map(Vec::len).sum()
    }

    /// Occupied fraction of the hash table's allocated slots.
    pub fn load_factor(&self) -> f64 {
        if self.table.capacity() == 0 {
            0.0
        } else {
            self.table.len() as f64 / self.table.capacity() as f64
        }
    }
}

pub fn build_index(refs: &[Reference], p: &IndexParams) -> Result<MinimizerIndex, IndexError> {
    p.validate()?;
    if !refs.iter().any(|r| r.len() >= p.min_len()) {
        return Err(IndexError::AllReferencesTooShort(p.min_len()));
    }
    if refs.len() > u32::MAX as usize || refs.iter().any(|r| r.len() > u32::MAX as usize) {
        return Err(IndexError::TooLarge);
    }
    let mut table: KmerMap<Vec<Location>> = KmerMap::default();
    for (ref_id, r) in refs.iter().enumerate() {
        for m in minimizers(&r.bases, p) {
            table.entry(m.code).or_default().push(Location {
                ref_id: ref_id as u32,
                pos: m.pos as u32,
                strand: m.strand,
            });
        }
    }
    let ref_meta = refs
        .iter()
        .map(|r| RefMeta {
            name: r.name.clone(),
            len: r.len() as u64,
        })
        .collect();
    Ok(MinimizerIndex {
        params: *p,
        table,
        ref_meta,
    })
}

/// A minimizer match between a read and the reference.
///
/// `read_pos` is in forward read coordinates; for `Strand::Reverse` anchors
/// the read matches the reverse complement of the reference. Field order
/// gives the chaining sort order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Anchor {
    pub strand: Strand,
    pub ref_id: u32,
    pub ref_pos: u32,
    pub read_pos: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedConfig {
    pub params: IndexParams,
    /// Minimizers with more reference hits than this are skipped as repeats.
    pub max_occ: usize,
}

impl Default for SeedConfig {
    fn default() -> Self {
        SeedConfig {
            params: IndexParams::default(),
            max_occ: 500,
        }
    }
}

/// Queries the chunk's minimizers against the index.
pub fn seed_chunk(
    chunk: &Chunk<'_>,
    idx: &MinimizerIndex,
    cfg: &SeedConfig,
) -> Result<Vec<Anchor>, IndexError> {
    if cfg.params != idx.params {
        return Err(IndexError::ParamsMismatch {
            index: idx.params,
            query: cfg.params,
        });
    }
    let mut anchors = Vec::new();
    for m in minimizers(chunk.bases, &idx.params) {
        let hits = idx.lookup(m.code);
        if hits.len() > cfg.max_occ {
            continue;
        }
        let read_pos = (chunk.offset + m.pos) as u32;
        anchors.extend(hits.iter().map(|loc| Anchor {
            strand: loc.strand.relative_to(m.strand),
            ref_id: loc.ref_id,
            ref_pos: loc.pos,
            read_pos,
        }));
    }
    anchors.sort_unstable();
    Ok(anchors)
}
