//! Anchor chaining, banded affine-gap alignment and the mapping gates.

mod align;
mod chain;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use align::{align, banded_local_align, local_align, AlignParams, AlignmentResult, LocalHit};
pub use chain::{
    chain, chain_bruteforce, merge_chunk_anchors, Chain, ChainParams, BRUTEFORCE_MAX_ANCHORS,
};

use crate::seq::Strand;

#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error("brute-force chaining is limited to {max} anchors, got {got}")]
    TooManyAnchors { got: usize, max: usize },
    #[error("anchor lists belong to different reads ({0} vs {1})")]
    MixedReads(String, String),
    #[error("alignment region is empty after clipping to the reference")]
    EmptyRegion,
    #[error("chain has no anchors")]
    EmptyChain,
    #[error("chain refers to reference {0}, which is not loaded")]
    UnknownReference(u32),
}

/// Terminal state of a read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReadStatus {
    #[serde(rename = "REJ_QSR")]
    RejectedQsr,
    #[serde(rename = "REJ_CMR")]
    RejectedCmr,
    #[serde(rename = "UNMAPPED")]
    Unmapped,
    #[serde(rename = "MAPPED")]
    Mapped,
}

impl ReadStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ReadStatus::RejectedQsr => "REJ_QSR",
            ReadStatus::RejectedCmr => "REJ_CMR",
            ReadStatus::Unmapped => "UNMAPPED",
            ReadStatus::Mapped => "MAPPED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub ref_id: u32,
    pub start: u64,
    pub end: u64,
    pub strand: Strand,
}

/// Per-read outcome. `alignment` is present iff the read is mapped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingResult {
    pub read_id: String,
    pub read_len: u64,
    pub status: ReadStatus,
    /// Read-level best chain score, or the large-chunk score for REJ_CMR.
    pub best_chain_score: Option<f64>,
    /// Set when the read was discarded by whole-read quality control.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub low_quality: bool,
    pub region: Option<Region>,
    pub alignment: Option<AlignmentResult>,
}

impl MappingResult {
    pub fn unmapped(
        read_id: &str,
        read_len: usize,
        status: ReadStatus,
        score: Option<f64>,
    ) -> Self {
        MappingResult {
            read_id: read_id.to_string(),
            read_len: read_len as u64,
            status,
            best_chain_score: score,
            low_quality: false,
            region: None,
            alignment: None,
        }
    }

    pub fn alignment_score(&self) -> Option<i32> {
        self.alignment.as_ref().map(|a| a.score)
    }
}

/// Chain-mapping rejection on a large chunk: score per examined base
/// strictly below `theta_cm` rejects.
pub fn cmr_decide(large_chunk_score: f64, bases_so_far: usize, theta_cm: f64) -> bool {
    debug_assert!(bases_so_far > 0);
    large_chunk_score / (bases_so_far as f64) < theta_cm
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateOutcome {
    Pass,
    Stop,
}

/// Read-level gate before alignment, same per-base convention as
/// [`cmr_decide`].
pub fn read_gate(read_chain_best: f64, read_len: usize, theta: f64) -> GateOutcome {
    if cmr_decide(read_chain_best, read_len.max(1), theta) {
        GateOutcome::Stop
    } else {
        GateOutcome::Pass
    }
}
