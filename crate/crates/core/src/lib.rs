//! Chunk-granularity genome analysis: basecall-output processing, quality
//! score and chunk-mapping early rejection, minimizer seeding, DP chaining,
//! banded alignment, and an event-driven timing/energy model of four
//! execution regimes (sequential, decoupled, chunk pipeline, chunk pipeline
//! with early rejection).
//!
//! Module map:
//! - [`bench`]: the seeded desk-scale benchmark dataset.
//! - [`genio`]: FASTA/FASTQ ingestion, PAF emission, dataset statistics and
//!   the seeded synthetic read generator.
//! - [`chunkqc`]: chunk decomposition, chunk quality sums and the
//!   quality-score-based rejection decision.
//! - [`refindex`]: minimizers, the reference index and per-chunk seeding.
//! - [`mapdp`]: anchor chaining, affine-gap alignment and the mapping gates.
//! - [`pipeline`]: per-read orchestration, work accounting and the timing
//!   simulator.
//! - [`costmodel`]: latency/energy/area tables and comparisons.

pub mod bench;
pub mod chunkqc;
pub mod costmodel;
pub mod genio;
pub mod mapdp;
pub mod pipeline;
pub mod refindex;
pub mod seq;
