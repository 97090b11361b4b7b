//! Chunk decomposition and chunk-level read quality control.
//!
//! A read of `N` bases is cut into `ceil(N / C)` chunks of `C` bases (the
//! last one possibly shorter). Each chunk's quality sum (SQS) is an exact
//! integer, so folding chunk sums and dividing once reproduces the whole-read
//! average quality bit for bit, in any merge order.
//!
//! Quality-score-based rejection samples a few evenly spread chunks, averages
//! their qualities per base and rejects the read when that average is
//! strictly below the threshold.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genio::Read;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChunkError {
    #[error("chunk size must be at least 1")]
    ZeroChunkSize,
    #[error("read {0} is empty")]
    EmptyRead(String),
}

/// A contiguous slice of a read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Chunk<'a> {
    pub read_id: &'a str,
    pub index: usize,
    pub offset: usize,
    pub bases: &'a [u8],
    pub quals: &'a [u8],
}

impl Chunk<'_> {
    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }
}

pub fn num_chunks(read_len: usize, chunk_size: usize) -> usize {
    read_len.div_ceil(chunk_size)
}

pub fn split_into_chunks(read: &Read, chunk_size: usize) -> Result<Vec<Chunk<'_>>, ChunkError> {
    if chunk_size == 0 {
        return Err(ChunkError::ZeroChunkSize);
    }
    if read.is_empty() {
        return Err(ChunkError::EmptyRead(read.id.clone()));
    }
    Ok(read
        .bases
        .chunks(chunk_size)
        .zip(read.quals.chunks(chunk_size))
        .enumerate()
        .map(|(index, (bases, quals))| Chunk {
            read_id: &read.id,
            index,
            offset: index * chunk_size,
            bases,
            quals,
        })
        .collect())
}

/// Sum of the chunk's base qualities.
pub fn chunk_sqs(chunk: &Chunk<'_>) -> u64 {
    chunk.quals.iter().map(|&q| q as u64).sum()
}

/// Running quality sum and base count for a (partial) read.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SqsAccumulator {
    pub sum_q: u64,
    pub n_bases: u64,
}

impl SqsAccumulator {
    pub fn merge(self, chunk: &Chunk<'_>) -> SqsAccumulator {
        merge_aqs(self, chunk)
    }

    /// Per-base average, `None` while empty.
    pub fn average(&self) -> Option<f64> {
        (self.n_bases > 0).then(|| self.sum_q as f64 / self.n_bases as f64)
    }
}

pub fn merge_aqs(acc: SqsAccumulator, chunk: &Chunk<'_>) -> SqsAccumulator {
    SqsAccumulator {
        sum_q: acc.sum_q + chunk_sqs(chunk),
        n_bases: acc.n_bases + chunk.len() as u64,
    }
}

/// Average read quality over all bases, divided once at the end.
pub fn read_aqs(read: &Read) -> Result<f64, ChunkError> {
    if read.is_empty() {
        return Err(ChunkError::EmptyRead(read.id.clone()));
    }
    let sum: u64 = read.quals.iter().map(|&q| q as u64).sum();
    Ok(sum as f64 / read.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QsrConfig {
    /// Number of sampled chunks.
    pub n_qs: usize,
    /// Per-base Phred threshold; reads strictly below are rejected.
    pub theta_qs: f64,
}

impl Default for QsrConfig {
    fn default() -> Self {
        QsrConfig {
            n_qs: 2,
            theta_qs: 7.0,
        }
    }
}

/// Round-half-to-even of `num / den` for non-negative integers.
fn div_round_even(num: usize, den: usize) -> usize {
    let (q, r) = (num / den, num % den);
    match (2 * r).cmp(&den) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => q + (q & 1),
    }
}

/// Evenly spread chunk indices, always including the first chunk and (for
/// `n_qs >= 2`) the last one. Sorted and unique.
pub fn qsr_sample_indices(num_chunks: usize, n_qs: usize) -> Vec<usize> {
    if num_chunks == 0 || n_qs == 0 {
        return Vec::new();
    }
    if n_qs >= num_chunks {
        return (0..num_chunks).collect();
    }
    if n_qs == 1 {
        return vec![0];
    }
    let mut idx: Vec<usize> = (0..n_qs)
        .map(|i| div_round_even(i * (num_chunks - 1), n_qs - 1))
        .collect();
    idx.dedup();
    idx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QsrDecision {
    pub reject: bool,
    pub sampled_avg: f64,
}

/// Per-base average quality of the sampled chunks against `theta_qs`.
///
/// Panics if `samples` holds no bases.
pub fn qsr_decide(samples: &[Chunk<'_>], cfg: &QsrConfig) -> QsrDecision {
    let acc = samples
        .iter()
        .fold(SqsAccumulator::default(), |acc, c| merge_aqs(acc, c));
    let sampled_avg = acc.average().expect("QSR needs at least one sampled base");
    QsrDecision {
        reject: sampled_avg < cfg.theta_qs,
        sampled_avg,
    }
}
