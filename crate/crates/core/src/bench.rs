//! The shipped desk-scale benchmark: a seeded random reference and a seeded
//! read set with a known fraction of unmappable reads.

use crate::genio::{random_reference, synth_reads, GroundTruth, Read, Reference, SynthParams};
use crate::pipeline::PipelineConfig;
use crate::refindex::{build_index, IndexParams, MinimizerIndex};

pub const BENCH_REF_LEN: usize = 1_000_000;
pub const BENCH_REF_NAME: &str = "bench_ref";
pub const BENCH_SEED: u64 = 1;
pub const BENCH_BAND: usize = 32;

/// 1000 reads, 10% junk, no low-quality reads (so the expected rejection
/// ratio equals the junk fraction).
pub fn bench_synth_params() -> SynthParams {
    SynthParams {
        lowq_frac: 0.0,
        rng_seed: BENCH_SEED,
        ..SynthParams::default()
    }
}

pub fn bench_reference() -> Reference {
    random_reference(BENCH_REF_NAME, BENCH_REF_LEN, BENCH_SEED)
}

/// Default pipeline settings with a 32-base alignment band. The band follows
/// the chain between anchors, so indel drift stays well inside it.
pub fn bench_config() -> PipelineConfig {
    let mut c = PipelineConfig::default();
    c.align.band = BENCH_BAND;
    c
}

pub struct Benchmark {
    pub reference: Reference,
    pub index: MinimizerIndex,
    pub reads: Vec<Read>,
    pub truth: Vec<GroundTruth>,
}

impl Benchmark {
    /// Builds reference, index and reads for `params` on the benchmark
    /// reference.
    pub fn with_params(params: &SynthParams) -> Benchmark {
        let reference = bench_reference();
        let index = build_index(std::slice::from_ref(&reference), &IndexParams::default())
            .expect("valid index");
        let (reads, truth) = synth_reads(&reference, params).expect("valid synth params");
        Benchmark {
            reference,
            index,
            reads,
            truth,
        }
    }

    pub fn shipped() -> Benchmark {
        Self::with_params(&bench_synth_params())
    }

    pub fn refs(&self) -> &[Reference] {
        std::slice::from_ref(&self.reference)
    }
}
