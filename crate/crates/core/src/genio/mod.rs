//! Ingestion and emission of genomic data.
//!
//! FASTA references, FASTQ reads (Phred+33), PAF-style mapping output,
//! dataset statistics and a seeded synthetic read generator.

mod fasta;
mod fastq;
mod paf;
mod stats;
mod synth;

use std::path::PathBuf;

use thiserror::Error;

pub use fasta::{parse_fasta, parse_fasta_reader, read_single_fasta, write_fasta, AmbiguityPolicy};
pub use fastq::{parse_fastq, read_fastq, write_fastq, FastqReader, PHRED_OFFSET};
pub use paf::{write_paf, write_paf_to, PafRecord};
pub use stats::{dataset_stats, DatasetStats};
pub use synth::{
    random_reference, synth_reads, write_ground_truth, GroundTruth, Origin, SynthParams,
};

/// Highest Phred score representable in Phred+33 printable ASCII ('~').
pub const MAX_PHRED: u8 = 93;

#[derive(Debug, Error)]
pub enum GenioError {
    #[error("cannot open {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("i/o error: {0}")]
    Stream(#[from] std::io::Error),
    #[error("empty FASTA")]
    EmptyFasta,
    #[error("not FASTA: first non-blank line does not start with '>'")]
    NotFasta,
    #[error("empty record {0}")]
    EmptyRecord(String),
    #[error("invalid character {ch:?} in record {record}")]
    InvalidBase { record: String, ch: char },
    #[error("truncated record {0}")]
    Truncated(String),
    #[error("malformed FASTQ header: {0:?}")]
    BadHeader(String),
    #[error("length mismatch at record {0}")]
    LengthMismatch(String),
    #[error("quality character {ch:?} out of range at record {record}")]
    BadQuality { record: String, ch: char },
    #[error("empty read stream")]
    EmptyStream,
    #[error("invalid synthetic parameters: {0}")]
    InvalidParams(String),
    #[error("reference {name} has length {len}, shorter than len_max {len_max}")]
    ReferenceTooShort {
        name: String,
        len: usize,
        len_max: usize,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = GenioError> = std::result::Result<T, E>;

/// A reference sequence. Bases are uppercase `A/C/G/T` after loading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reference {
    pub name: String,
    pub bases: Vec<u8>,
}

impl Reference {
    pub fn new(name: impl Into<String>, bases: Vec<u8>) -> Self {
        Reference {
            name: name.into(),
            bases,
        }
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }
}

/// A basecalled read with per-base Phred scores.
///
/// `bases` holds uppercase `A/C/G/T` (an `N` from the basecaller is kept
/// and simply never participates in a k-mer).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Read {
    pub id: String,
    pub bases: Vec<u8>,
    pub quals: Vec<u8>,
}

impl Read {
    pub fn new(id: impl Into<String>, bases: Vec<u8>, quals: Vec<u8>) -> Self {
        debug_assert_eq!(bases.len(), quals.len());
        Read {
            id: id.into(),
            bases,
            quals,
        }
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }
}
