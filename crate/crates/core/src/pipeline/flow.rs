//! Per-read flow: which chunks are processed, in what order, and where the
//! read stops.

use super::{MapContext, Mode, Result, Stage, StageJob, WorkCounts};
use crate::chunkqc::{
    chunk_sqs, qsr_decide, qsr_sample_indices, split_into_chunks, Chunk, SqsAccumulator,
};
use crate::genio::Read;
use crate::mapdp::{
    align, chain, cmr_decide, merge_chunk_anchors, read_gate, Chain, GateOutcome, MappingResult,
    ReadStatus, Region,
};
use crate::refindex::{seed_chunk, Anchor};

/// Terminal result of one read, the jobs it issued and the work it did.
#[derive(Debug, Clone)]
pub struct ReadOutcome {
    pub result: MappingResult,
    pub jobs: Vec<StageJob>,
    pub work: WorkCounts,
}

struct ReadRun<'r, 'c> {
    read: &'r Read,
    ctx: &'c MapContext<'c>,
    chunks: Vec<Chunk<'r>>,
    anchors: Vec<Option<Vec<Anchor>>>,
    bc_job: Vec<Option<u32>>,
    cqs_job: Vec<Option<u32>>,
    seed_job: Vec<Option<u32>>,
    chain_job: Vec<Option<u32>>,
    jobs: Vec<StageJob>,
    work: WorkCounts,
}

impl<'r, 'c> ReadRun<'r, 'c> {
    fn push(&mut self, stage: Stage, chunk: Option<usize>, amount: u64, deps: Vec<u32>) -> u32 {
        self.jobs.push(StageJob {
            stage,
            chunk: chunk.map(|c| c as u32),
            amount,
            deps,
        });
        (self.jobs.len() - 1) as u32
    }

    fn basecall(&mut self, c: usize, deps: Vec<u32>) {
        debug_assert!(self.bc_job[c].is_none());
        self.bc_job[c] = Some(self.push(Stage::Bc, Some(c), 1, deps));
        self.work.chunks_basecalled += 1;
        self.work.bases_basecalled += self.chunks[c].len() as u64;
    }

    fn quality(&mut self, c: usize, deps: Vec<u32>) {
        self.cqs_job[c] = Some(self.push(Stage::Cqs, Some(c), 1, deps));
        self.work.chunks_cqs += 1;
    }

    fn seed(&mut self, c: usize, deps: Vec<u32>) -> Result<()> {
        self.anchors[c] = Some(seed_chunk(
            &self.chunks[c],
            self.ctx.index,
            &self.ctx.cfg.seed,
        )?);
        self.seed_job[c] = Some(self.push(Stage::Seed, Some(c), 1, deps));
        self.work.chunks_seeded += 1;
        Ok(())
    }

    fn chain_chunk(&mut self, c: usize) {
        let dep = self.seed_job[c].expect("chunk seeded before chaining");
        self.chain_job[c] = Some(self.push(Stage::Chain, Some(c), 1, vec![dep]));
        self.work.chunks_chained += 1;
    }

    /// Seeding and chaining of an already quality-scored chunk.
    fn map_chunk(&mut self, c: usize) -> Result<()> {
        let dep = self.cqs_job[c].expect("chunk scored before seeding");
        self.seed(c, vec![dep])?;
        self.chain_chunk(c);
        Ok(())
    }

    /// The full per-chunk path BC, CQS, SEED, CHAIN.
    fn process_chunk(&mut self, c: usize, bc_deps: Vec<u32>) -> Result<()> {
        self.basecall(c, bc_deps);
        let bc = self.bc_job[c].unwrap();
        self.quality(c, vec![bc]);
        self.map_chunk(c)
    }

    fn jobs_of(v: &[Option<u32>], which: &[usize]) -> Vec<u32> {
        which.iter().filter_map(|&c| v[c]).collect()
    }

    fn chains_over(&self, which: &[usize]) -> Result<Vec<Chain>> {
        let lists: Vec<&[Anchor]> = which
            .iter()
            .map(|&c| self.anchors[c].as_deref().unwrap_or(&[]))
            .collect();
        let merged = merge_chunk_anchors(lists.into_iter().map(|a| (self.read.id.as_str(), a)))?;
        Ok(chain(&merged, &self.ctx.cfg.chain))
    }

    fn read_qc_fails(&self) -> bool {
        let acc = self
            .chunks
            .iter()
            .fold(SqsAccumulator::default(), |acc, c| SqsAccumulator {
                sum_q: acc.sum_q + chunk_sqs(c),
                n_bases: acc.n_bases + c.len() as u64,
            });
        acc.average().expect("read has bases") < self.ctx.cfg.er.qsr.theta_qs
    }

    fn finish(self, status: ReadStatus, score: Option<f64>, low_quality: bool) -> ReadOutcome {
        let mut result = MappingResult::unmapped(&self.read.id, self.read.len(), status, score);
        result.low_quality = low_quality;
        self.done(result)
    }

    fn done(mut self, result: MappingResult) -> ReadOutcome {
        match result.status {
            ReadStatus::RejectedQsr => self.work.reads_rejected_qsr += 1,
            ReadStatus::RejectedCmr => self.work.reads_rejected_cmr += 1,
            ReadStatus::Unmapped => self.work.reads_unmapped += 1,
            ReadStatus::Mapped => self.work.reads_mapped += 1,
        }
        ReadOutcome {
            result,
            jobs: self.jobs,
            work: self.work,
        }
    }

    /// Read-level chaining, gate and alignment once every chunk is chained.
    fn map_read(mut self) -> Result<ReadOutcome> {
        let all: Vec<usize> = (0..self.chunks.len()).collect();
        let chains = self.chains_over(&all)?;
        let best = chains.first().map_or(0.0, |c| c.score);
        let cfg = &self.ctx.cfg;
        if cfg.read_gate
            && read_gate(best, self.read.len(), cfg.read_gate_theta) == GateOutcome::Stop
        {
            return Ok(self.finish(ReadStatus::Unmapped, Some(best), false));
        }
        let Some(top) = chains.into_iter().next() else {
            return Ok(self.finish(ReadStatus::Unmapped, Some(best), false));
        };
        let deps = Self::jobs_of(&self.chain_job, &all);
        self.push(Stage::Align, None, self.read.len() as u64, deps);
        self.work.reads_aligned += 1;
        self.work.bases_aligned += self.read.len() as u64;
        let reference = self
            .ctx
            .refs
            .get(top.ref_id as usize)
            .ok_or(crate::mapdp::MapError::UnknownReference(top.ref_id))?;
        let aln = align(self.read, &top, reference, &cfg.align)?;
        if aln.score <= 0 {
            return Ok(self.finish(ReadStatus::Unmapped, Some(best), false));
        }
        let result = MappingResult {
            read_id: self.read.id.clone(),
            read_len: self.read.len() as u64,
            status: ReadStatus::Mapped,
            best_chain_score: Some(best),
            low_quality: false,
            region: Some(Region {
                ref_id: top.ref_id,
                start: aln.ref_start,
                end: aln.ref_end,
                strand: top.strand,
            }),
            alignment: Some(aln),
        };
        Ok(self.done(result))
    }
}

fn chunk_pipeline(mut run: ReadRun<'_, '_>) -> Result<ReadOutcome> {
    for c in 0..run.chunks.len() {
        run.process_chunk(c, vec![])?;
    }
    if run.read_qc_fails() {
        return Ok(run.finish(ReadStatus::Unmapped, None, true));
    }
    run.map_read()
}

fn early_rejection(mut run: ReadRun<'_, '_>) -> Result<ReadOutcome> {
    let er = run.ctx.cfg.er;
    let m = run.chunks.len();

    let samples = if er.qsr_enabled {
        qsr_sample_indices(m, er.qsr.n_qs)
    } else {
        vec![]
    };
    for &c in &samples {
        run.basecall(c, vec![]);
        let bc = run.bc_job[c].unwrap();
        run.quality(c, vec![bc]);
    }
    let mut gate = ReadRun::jobs_of(&run.cqs_job, &samples);
    if !samples.is_empty() {
        let picked: Vec<Chunk<'_>> = samples.iter().map(|&c| run.chunks[c]).collect();
        if qsr_decide(&picked, &er.qsr).reject {
            return Ok(run.finish(ReadStatus::RejectedQsr, None, false));
        }
    }

    if er.cmr_enabled {
        let next: Vec<usize> = (0..m)
            .filter(|c| run.bc_job[*c].is_none())
            .take(er.n_cm)
            .collect();
        for &c in &next {
            run.process_chunk(c, gate.clone())?;
        }
        let mut large = next;
        if !er.strict_large_chunk {
            for &c in &samples {
                run.map_chunk(c)?;
            }
            large.extend_from_slice(&samples);
            large.sort_unstable();
        }
        if !large.is_empty() {
            let score = run.chains_over(&large)?.first().map_or(0.0, |c| c.score);
            let bases: usize = large.iter().map(|&c| run.chunks[c].len()).sum();
            if cmr_decide(score, bases, er.theta_cm) {
                return Ok(run.finish(ReadStatus::RejectedCmr, Some(score), false));
            }
            gate = ReadRun::jobs_of(&run.chain_job, &large);
        }
    }

    for c in 0..m {
        if run.bc_job[c].is_none() {
            run.process_chunk(c, gate.clone())?;
        } else if run.chain_job[c].is_none() {
            run.map_chunk(c)?;
        }
    }
    if run.read_qc_fails() {
        return Ok(run.finish(ReadStatus::Unmapped, None, true));
    }
    run.map_read()
}

fn read_granular(mut run: ReadRun<'_, '_>, transfer: bool) -> Result<ReadOutcome> {
    let m = run.chunks.len();
    for c in 0..m {
        run.basecall(c, vec![]);
    }
    let mut qc_deps: Vec<u32> = run.bc_job.iter().flatten().copied().collect();
    if transfer {
        let bytes = 2 * run.read.len() as u64;
        qc_deps = vec![run.push(Stage::Xfer, None, bytes, qc_deps)];
        run.work.bytes_transferred += bytes;
    }
    for c in 0..m {
        run.quality(c, qc_deps.clone());
    }
    if run.read_qc_fails() {
        return Ok(run.finish(ReadStatus::Unmapped, None, true));
    }
    let seed_deps: Vec<u32> = run.cqs_job.iter().flatten().copied().collect();
    for c in 0..m {
        run.seed(c, seed_deps.clone())?;
        run.chain_chunk(c);
    }
    run.map_read()
}

/// Runs one read through `ctx.cfg.mode`.
pub fn run_read(read: &Read, ctx: &MapContext<'_>) -> Result<ReadOutcome> {
    let chunks = split_into_chunks(read, ctx.cfg.chunk_size)?;
    let m = chunks.len();
    let run = ReadRun {
        read,
        ctx,
        chunks,
        anchors: vec![None; m],
        bc_job: vec![None; m],
        cqs_job: vec![None; m],
        seed_job: vec![None; m],
        chain_job: vec![None; m],
        jobs: Vec::with_capacity(4 * m + 2),
        work: WorkCounts::default(),
    };
    match ctx.cfg.mode {
        Mode::Cp => chunk_pipeline(run),
        Mode::CpEr => early_rejection(run),
        Mode::Sequential => read_granular(run, false),
        Mode::Decoupled => read_granular(run, true),
    }
}
