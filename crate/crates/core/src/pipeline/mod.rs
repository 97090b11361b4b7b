//! Per-read orchestration in four execution regimes, work accounting, the
//! run report, and the event-driven timing model.
//!
//! - `SEQUENTIAL`: the whole dataset is basecalled, then quality-checked,
//!   then mapped; every stage is a global barrier.
//! - `DECOUPLED`: a basecalling machine and a mapping machine overlap
//!   across reads, joined by a transfer stage.
//! - `CP`: chunks flow through basecalling, quality scoring, seeding and
//!   chaining independently, overlapping across chunks and reads.
//! - `CP_ER`: `CP` with quality-score and chunk-mapping early rejection.

mod flow;
mod sim;
mod sweep;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use flow::{run_read, ReadOutcome};
pub use sim::{simulate_timing, Admission, StageStats, TimingEvent, TimingReport};
pub use sweep::{sweep, write_sweep_csv, SweepParam, SweepRow, SweepSpec, SWEEP_CSV_HEADER};

use crate::chunkqc::{ChunkError, QsrConfig};
use crate::costmodel::{energy_total, CostModel};
use crate::genio::{Read, Reference};
use crate::mapdp::{AlignParams, ChainParams, MapError, MappingResult, ReadStatus};
use crate::refindex::{IndexError, MinimizerIndex, SeedConfig};

pub const REPORT_SCHEMA: &str = "genpip.run_report/1";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Chunk(#[from] ChunkError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("references do not match the index: {0}")]
    RefMismatch(String),
    #[error("read {read} ({bases} bases) does not fit the {buffer} ({limit})")]
    BufferOverflow {
        read: String,
        bases: u64,
        buffer: &'static str,
        limit: u64,
    },
    #[error("result sets differ: {0}")]
    MismatchedReads(String),
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "SEQUENTIAL")]
    Sequential,
    #[serde(rename = "DECOUPLED")]
    Decoupled,
    #[serde(rename = "CP")]
    Cp,
    #[serde(rename = "CP_ER")]
    CpEr,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Sequential, Mode::Decoupled, Mode::Cp, Mode::CpEr];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Sequential => "SEQUENTIAL",
            Mode::Decoupled => "DECOUPLED",
            Mode::Cp => "CP",
            Mode::CpEr => "CP_ER",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "sequential" | "seq" => Ok(Mode::Sequential),
            "decoupled" => Ok(Mode::Decoupled),
            "cp" => Ok(Mode::Cp),
            "cp-er" => Ok(Mode::CpEr),
            _ => Err(format!(
                "unknown mode {s:?} (expected sequential, decoupled, cp or cp-er)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stage {
    #[serde(rename = "BC")]
    Bc,
    #[serde(rename = "XFER")]
    Xfer,
    #[serde(rename = "CQS")]
    Cqs,
    #[serde(rename = "SEED")]
    Seed,
    #[serde(rename = "CHAIN")]
    Chain,
    #[serde(rename = "ALIGN")]
    Align,
}

impl Stage {
    /// Also the global phase order of SEQUENTIAL runs.
    pub const ALL: [Stage; 6] = [
        Stage::Bc,
        Stage::Xfer,
        Stage::Cqs,
        Stage::Seed,
        Stage::Chain,
        Stage::Align,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Bc => "BC",
            Stage::Xfer => "XFER",
            Stage::Cqs => "CQS",
            Stage::Seed => "SEED",
            Stage::Chain => "CHAIN",
            Stage::Align => "ALIGN",
        }
    }

    fn idx(self) -> usize {
        self as usize
    }
}

/// One unit of simulated work. `amount` is 1 for chunk jobs, the read
/// length for ALIGN and the byte count for XFER. `deps` index earlier jobs
/// of the same read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageJob {
    pub stage: Stage,
    /// `None` for read-level jobs.
    pub chunk: Option<u32>,
    pub amount: u64,
    pub deps: Vec<u32>,
}

impl StageJob {
    pub fn chunk_job(stage: Stage, chunk: usize, deps: Vec<u32>) -> StageJob {
        StageJob {
            stage,
            chunk: Some(chunk as u32),
            amount: 1,
            deps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErConfig {
    pub qsr: QsrConfig,
    pub n_cm: usize,
    /// Per-base chaining score threshold of the large-chunk check.
    pub theta_cm: f64,
    pub qsr_enabled: bool,
    pub cmr_enabled: bool,
    /// Chain only the `n_cm` consecutive chunks, not the QSR samples too.
    pub strict_large_chunk: bool,
}

impl Default for ErConfig {
    fn default() -> Self {
        ErConfig {
            qsr: QsrConfig::default(),
            n_cm: 5,
            theta_cm: 0.005 * ChainParams::default().match_weight,
            qsr_enabled: true,
            cmr_enabled: true,
            strict_large_chunk: false,
        }
    }
}

/// Controller buffers. Signal bytes per base covers the raw signal of one
/// basecalled base (2 bytes of base + quality, inflated tenfold).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BufferConfig {
    pub read_queue_bytes: u64,
    pub chunk_buffer_bases: u64,
    pub signal_bytes_per_base: u64,
    /// Block read admission on a full chunk buffer instead of only
    /// rejecting reads that can never fit.
    pub model_stalls: bool,
}

impl Default for BufferConfig {
    fn default() -> Self {
        BufferConfig {
            read_queue_bytes: 6_000_000,
            chunk_buffer_bases: 2_300_000,
            signal_bytes_per_base: 20,
            model_stalls: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub chunk_size: usize,
    pub er: ErConfig,
    pub seed: SeedConfig,
    pub chain: ChainParams,
    pub align: AlignParams,
    pub read_gate: bool,
    /// Per-base threshold of the read-level gate before alignment.
    pub read_gate_theta: f64,
    pub buffers: BufferConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let er = ErConfig::default();
        PipelineConfig {
            mode: Mode::CpEr,
            chunk_size: 300,
            er,
            seed: SeedConfig::default(),
            chain: ChainParams::default(),
            align: AlignParams::default(),
            read_gate: true,
            read_gate_theta: er.theta_cm,
            buffers: BufferConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.chunk_size == 0 {
            return bad("chunk size must be at least 1".into());
        }
        if self.er.qsr_enabled && self.er.qsr.n_qs == 0 {
            return bad("n_qs must be at least 1".into());
        }
        if self.er.cmr_enabled && self.er.n_cm == 0 {
            return bad("n_cm must be at least 1".into());
        }
        for (name, v) in [
            ("theta_qs", self.er.qsr.theta_qs),
            ("theta_cm", self.er.theta_cm),
            ("read gate threshold", self.read_gate_theta),
        ] {
            if !v.is_finite() || v < 0.0 {
                return bad(format!(
                    "{name} must be a finite non-negative number, got {v}"
                ));
            }
        }
        self.seed.params.validate()?;
        self.chain.validate().map_err(PipelineError::Config)?;
        self.align.validate().map_err(PipelineError::Config)?;
        if self.chain.seed_len as usize != self.seed.params.k {
            return bad(format!(
                "chain seed length {} differs from k = {}",
                self.chain.seed_len, self.seed.params.k
            ));
        }
        Ok(())
    }
}

/// Everything a read needs besides its own bases.
#[derive(Debug, Clone, Copy)]
pub struct MapContext<'a> {
    pub index: &'a MinimizerIndex,
    pub refs: &'a [Reference],
    pub cfg: PipelineConfig,
}

impl<'a> MapContext<'a> {
    pub fn new(
        index: &'a MinimizerIndex,
        refs: &'a [Reference],
        cfg: PipelineConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if cfg.seed.params != index.params {
            return Err(IndexError::ParamsMismatch {
                index: index.params,
                query: cfg.seed.params,
            }
            .into());
        }
        if refs.len() != index.ref_meta.len() {
            return Err(PipelineError::RefMismatch(format!(
                "{} references loaded, index has {}",
                refs.len(),
                index.ref_meta.len()
            )));
        }
        for (r, m) in refs.iter().zip(&index.ref_meta) {
            if r.name != m.name || r.len() as u64 != m.len {
                return Err(PipelineError::RefMismatch(format!(
                    "{} ({} bp) vs indexed {} ({} bp)",
                    r.name,
                    r.len(),
                    m.name,
                    m.len
                )));
            }
        }
        Ok(MapContext { index, refs, cfg })
    }

    pub fn with_mode(&self, mode: Mode) -> Self {
        let mut c = *self;
        c.cfg.mode = mode;
        c
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkCounts {
    pub chunks_basecalled: u64,
    pub chunks_cqs: u64,
    pub chunks_seeded: u64,
    pub chunks_chained: u64,
    pub reads_aligned: u64,
    pub reads_rejected_qsr: u64,
    pub reads_rejected_cmr: u64,
    pub reads_unmapped: u64,
    pub reads_mapped: u64,
    pub bytes_transferred: u64,
    pub bases_basecalled: u64,
    pub bases_aligned: u64,
}

impl WorkCounts {
    pub fn add(&mut self, o: &WorkCounts) {
        self.chunks_basecalled += o.chunks_basecalled;
        self.chunks_cqs += o.chunks_cqs;
        self.chunks_seeded += o.chunks_seeded;
        self.chunks_chained += o.chunks_chained;
        self.reads_aligned += o.reads_aligned;
        self.reads_rejected_qsr += o.reads_rejected_qsr;
        self.reads_rejected_cmr += o.reads_rejected_cmr;
        self.reads_unmapped += o.reads_unmapped;
        self.reads_mapped += o.reads_mapped;
        self.bytes_transferred += o.bytes_transferred;
        self.bases_basecalled += o.bases_basecalled;
        self.bases_aligned += o.bases_aligned;
    }

    pub fn num_reads(&self) -> u64 {
        self.reads_rejected_qsr + self.reads_rejected_cmr + self.reads_unmapped + self.reads_mapped
    }
}

/// Functional result of a dataset run, in input order.
#[derive(Debug, Clone)]
pub struct DatasetRun {
    pub mode: Mode,
    pub outcomes: Vec<ReadOutcome>,
    pub work: WorkCounts,
    pub fingerprint: u64,
}

impl DatasetRun {
    pub fn results(&self) -> Vec<MappingResult> {
        self.outcomes.iter().map(|o| o.result.clone()).collect()
    }

    pub fn jobs(&self) -> Vec<&[StageJob]> {
        self.outcomes.iter().map(|o| o.jobs.as_slice()).collect()
    }

    pub fn read_lengths(&self) -> Vec<u64> {
        self.outcomes.iter().map(|o| o.result.read_len).collect()
    }
}

/// FNV-1a over read ids and lengths; identifies the dataset in reports.
pub fn dataset_fingerprint(reads: &[Read]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h = (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    for r in reads {
        eat(r.id.as_bytes());
        eat(&[0]);
        eat(&(r.len() as u64).to_le_bytes());
    }
    h
}

fn check_buffers(reads: &[Read], b: &BufferConfig) -> Result<()> {
    for r in reads {
        let bases = r.len() as u64;
        if bases > b.chunk_buffer_bases {
            return Err(PipelineError::BufferOverflow {
                read: r.id.clone(),
                bases,
                buffer: "chunk buffer",
                limit: b.chunk_buffer_bases,
            });
        }
        if bases * b.signal_bytes_per_base > b.read_queue_bytes {
            return Err(PipelineError::BufferOverflow {
                read: r.id.clone(),
                bases,
                buffer: "read queue",
                limit: b.read_queue_bytes,
            });
        }
    }
    Ok(())
}

/// Runs every read through the configured mode. Reads are evaluated on the
/// current rayon pool; results keep input order.
pub fn run_dataset(reads: &[Read], ctx: &MapContext<'_>) -> Result<DatasetRun> {
    check_buffers(reads, &ctx.cfg.buffers)?;
    let outcomes = reads
        .par_iter()
        .map(|r| run_read(r, ctx))
        .collect::<Result<Vec<_>>>()?;
    let mut work = WorkCounts::default();
    for o in &outcomes {
        work.add(&o.work);
    }
    Ok(DatasetRun {
        mode: ctx.cfg.mode,
        outcomes,
        work,
        fingerprint: dataset_fingerprint(reads),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionMetrics {
    pub rejection_ratio: f64,
    /// Present only when a reference run without early rejection is given.
    pub fn_ratio_qsr: Option<f64>,
    pub fn_ratio_cmr: Option<f64>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Rejection ratio and, given `oracle` (the same reads run in CP mode),
/// the false-negative ratios of both rejection checks.
pub fn rejection_metrics(
    er: &[MappingResult],
    oracle: Option<&[MappingResult]>,
) -> Result<RejectionMetrics> {
    let is = |s| move |r: &&MappingResult| r.status == s;
    let n_qsr = er.iter().filter(is(ReadStatus::RejectedQsr)).count();
    let n_cmr = er.iter().filter(is(ReadStatus::RejectedCmr)).count();
    let mut m = RejectionMetrics {
        rejection_ratio: ratio(n_qsr + n_cmr, er.len()),
        fn_ratio_qsr: None,
        fn_ratio_cmr: None,
    };
    if let Some(oracle) = oracle {
        if oracle.len() != er.len() {
            return Err(PipelineError::MismatchedReads(format!(
                "{} vs {} reads",
                er.len(),
                oracle.len()
            )));
        }
        let (mut fn_qsr, mut fn_cmr) = (0, 0);
        for (a, o) in er.iter().zip(oracle) {
            if a.read_id != o.read_id {
                return Err(PipelineError::MismatchedReads(format!(
                    "{} vs {}",
                    a.read_id, o.read_id
                )));
            }
            match a.status {
                ReadStatus::RejectedQsr if !o.low_quality => fn_qsr += 1,
                ReadStatus::RejectedCmr if o.status == ReadStatus::Mapped => fn_cmr += 1,
                _ => {}
            }
        }
        m.fn_ratio_qsr = Some(ratio(fn_qsr, n_qsr));
        m.fn_ratio_cmr = Some(ratio(fn_cmr, n_cmr));
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub chunk_size: usize,
    pub n_qs: usize,
    pub theta_qs: f64,
    pub n_cm: usize,
    pub theta_cm: f64,
    pub qsr_enabled: bool,
    pub cmr_enabled: bool,
    pub strict_large_chunk: bool,
    pub read_gate: bool,
    pub read_gate_theta: f64,
    pub k: usize,
    pub w: usize,
    pub band: usize,
}

impl From<&PipelineConfig> for ReportParams {
    fn from(c: &PipelineConfig) -> Self {
        ReportParams {
            chunk_size: c.chunk_size,
            n_qs: c.er.qsr.n_qs,
            theta_qs: c.er.qsr.theta_qs,
            n_cm: c.er.n_cm,
            theta_cm: c.er.theta_cm,
            qsr_enabled: c.er.qsr_enabled,
            cmr_enabled: c.er.cmr_enabled,
            strict_large_chunk: c.er.strict_large_chunk,
            read_gate: c.read_gate,
            read_gate_theta: c.read_gate_theta,
            k: c.seed.params.k,
            w: c.seed.params.w,
            band: c.align.band,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub mode: Mode,
    pub num_reads: u64,
    pub dataset_fingerprint: String,
    pub params: ReportParams,
    pub makespan_ns: u64,
    pub stages: Vec<StageStats>,
    pub work_counts: WorkCounts,
    pub energy_pj: u64,
    pub energy_j: f64,
    pub metrics: RejectionMetrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reads: Option<Vec<MappingResult>>,
}

/// Simulates `run` under `cost` (honoring the buffer-stall setting) and
/// assembles the report.
pub fn build_report(
    run: &DatasetRun,
    cfg: &PipelineConfig,
    cost: &CostModel,
    metrics: RejectionMetrics,
    per_read: bool,
) -> RunReport {
    let jobs = run.jobs();
    let lens = run.read_lengths();
    let admission = cfg.buffers.model_stalls.then(|| Admission {
        capacity_bases: cfg.buffers.chunk_buffer_bases,
        read_bases: &lens,
    });
    let timing = simulate_timing(&jobs, cost, run.mode, admission, false);
    let energy_pj = energy_total(&run.work, cost, run.mode);
    RunReport {
        schema: REPORT_SCHEMA.to_string(),
        mode: run.mode,
        num_reads: run.outcomes.len() as u64,
        dataset_fingerprint: format!("{:016x}", run.fingerprint),
        params: ReportParams::from(cfg),
        makespan_ns: timing.makespan_ns,
        stages: timing.stages,
        work_counts: run.work.clone(),
        energy_pj,
        energy_j: energy_pj as f64 * 1e-12,
        metrics,
        reads: per_read.then(|| run.results()),
    }
}

/// Functional run, optional CP reference run for false-negative metrics,
/// timing and energy.
pub fn evaluate(
    reads: &[Read],
    ctx: &MapContext<'_>,
    cost: &CostModel,
    oracle: bool,
    per_read: bool,
) -> Result<RunReport> {
    let run = run_dataset(reads, ctx)?;
    let results = run.results();
    let oracle_results = if oracle {
        Some(if ctx.cfg.mode == Mode::Cp {
            results.clone()
        } else {
            run_dataset(reads, &ctx.with_mode(Mode::Cp))?.results()
        })
    } else {
        None
    };
    let metrics = rejection_metrics(&results, oracle_results.as_deref())?;
    Ok(build_report(&run, &ctx.cfg, cost, metrics, per_read))
}
