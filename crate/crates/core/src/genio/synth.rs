use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{GenioError, Read, Reference, Result, MAX_PHRED};
use crate::seq::{revcomp, Strand, BASES};

/// Standard deviation of the per-base quality distribution around a read's
/// mean quality parameter.
const QUAL_SIGMA: f64 = 2.0;

const READ_STREAM: u64 = 1;

/// Parameters of the synthetic nanopore-style read generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub num_reads: usize,
    pub len_min: usize,
    pub len_max: usize,
    pub sub_rate: f64,
    pub ins_rate: f64,
    pub del_rate: f64,
    /// Fraction of reads drawn as uniform random sequence.
    pub junk_frac: f64,
    /// Fraction of reads whose qualities centre on `qual_low_mean`.
    pub lowq_frac: f64,
    pub qual_high_mean: f64,
    pub qual_low_mean: f64,
    pub rng_seed: u64,
}

impl Default for SynthParams {
    /// E. coli R9-like composition: ~88% accurate reads, 20.5% low-quality
    /// and 10% unmappable reads, mean length ~9 kb.
    fn default() -> Self {
        SynthParams {
            num_reads: 1000,
            len_min: 3000,
            len_max: 15000,
            sub_rate: 0.06,
            ins_rate: 0.03,
            del_rate: 0.03,
            junk_frac: 0.10,
            lowq_frac: 0.205,
            qual_high_mean: 9.0,
            qual_low_mean: 4.5,
            rng_seed: 1,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(GenioError::InvalidParams(msg));
        for (name, v) in [
            ("sub_rate", self.sub_rate),
            ("ins_rate", self.ins_rate),
            ("del_rate", self.del_rate),
            ("junk_frac", self.junk_frac),
            ("lowq_frac", self.lowq_frac),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} outside [0, 1]"));
            }
        }
        if self.junk_frac + self.lowq_frac > 1.0 {
            return bad("junk_frac + lowq_frac exceeds 1".into());
        }
        if self.sub_rate + self.ins_rate + self.del_rate > 1.0 {
            return bad("error rates sum above 1".into());
        }
        if self.len_min < 1 || self.len_min > self.len_max {
            return bad(format!(
                "length range {}..={} is empty",
                self.len_min, self.len_max
            ));
        }
        for (name, v) in [
            ("qual_high_mean", self.qual_high_mean),
            ("qual_low_mean", self.qual_low_mean),
        ] {
            if !(0.0..=MAX_PHRED as f64).contains(&v) {
                return bad(format!("{name} = {v} outside [0, {MAX_PHRED}]"));
            }
        }
        Ok(())
    }
}

/// Where a synthetic read came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "OriginRepr", try_from = "OriginRepr")]
pub enum Origin {
    /// Forward-strand start of the sampled reference interval.
    Ref(u64),
    Junk,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum OriginRepr {
    Pos(u64),
    Tag(String),
}

impl From<Origin> for OriginRepr {
    fn from(o: Origin) -> Self {
        match o {
            Origin::Ref(p) => OriginRepr::Pos(p),
            Origin::Junk => OriginRepr::Tag("JUNK".into()),
        }
    }
}

impl TryFrom<OriginRepr> for Origin {
    type Error = String;

    fn try_from(r: OriginRepr) -> std::result::Result<Self, String> {
        match r {
            OriginRepr::Pos(p) => Ok(Origin::Ref(p)),
            OriginRepr::Tag(t) if t == "JUNK" => Ok(Origin::Junk),
            OriginRepr::Tag(t) => Err(format!("unknown origin {t:?}")),
        }
    }
}

/// Ground-truth label of one synthetic read (one JSON line in the sidecar).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub id: String,
    pub origin: Origin,
    /// `None` for junk reads.
    pub strand: Option<Strand>,
    pub is_lowq: bool,
}

impl GroundTruth {
    pub fn is_junk(&self) -> bool {
        self.origin == Origin::Junk
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Normal,
    LowQ,
    Junk,
}

/// Uniform i.i.d. random reference, used for desk-scale benchmarks.
pub fn random_reference(name: &str, len: usize, seed: u64) -> Reference {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bases = (0..len).map(|_| BASES[rng.random_range(0..4)]).collect();
    Reference::new(name, bases)
}

/// Generates reads from `reference`. Category counts are exact
/// (`round(frac * num_reads)`) and their order is shuffled.
pub fn synth_reads(
    reference: &Reference,
    p: &SynthParams,
) -> Result<(Vec<Read>, Vec<GroundTruth>)> {
    p.validate()?;
    if p.len_max > reference.len() {
        return Err(GenioError::ReferenceTooShort {
            name: reference.name.clone(),
            len: reference.len(),
            len_max: p.len_max,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.rng_seed);
    // Reads draw from their own stream: with a shared seed, junk reads would
    // otherwise replay a shifted copy of a generated reference.
    rng.set_stream(READ_STREAM);
    let n_junk = ((p.junk_frac * p.num_reads as f64).round() as usize).min(p.num_reads);
    let n_lowq = ((p.lowq_frac * p.num_reads as f64).round() as usize).min(p.num_reads - n_junk);
    let mut kinds = vec![Kind::Normal; p.num_reads];
    kinds[..n_junk].fill(Kind::Junk);
    kinds[n_junk..n_junk + n_lowq].fill(Kind::LowQ);
    kinds.shuffle(&mut rng);

    let width = p.num_reads.saturating_sub(1).to_string().len();
    let mut reads = Vec::with_capacity(p.num_reads);
    let mut truth = Vec::with_capacity(p.num_reads);
    for (i, kind) in kinds.into_iter().enumerate() {
        let id = format!("synth{i:0width$}");
        let len = rng.random_range(p.len_min..=p.len_max);
        let (bases, origin, strand) = if kind == Kind::Junk {
            let bases: Vec<u8> = (0..len).map(|_| BASES[rng.random_range(0..4)]).collect();
            (bases, Origin::Junk, None)
        } else {
            let start = rng.random_range(0..=reference.len() - len);
            let strand = if rng.random_bool(0.5) {
                Strand::Forward
            } else {
                Strand::Reverse
            };
            let slice = &reference.bases[start..start + len];
            let template = match strand {
                Strand::Forward => slice.to_vec(),
                Strand::Reverse => revcomp(slice),
            };
            (
                mutate(&template, p, &mut rng),
                Origin::Ref(start as u64),
                Some(strand),
            )
        };
        let mean = if kind == Kind::LowQ {
            p.qual_low_mean
        } else {
            p.qual_high_mean
        };
        let quals = draw_quals(bases.len(), mean, &mut rng);
        reads.push(Read::new(id.clone(), bases, quals));
        truth.push(GroundTruth {
            id,
            origin,
            strand,
            is_lowq: kind == Kind::LowQ,
        });
    }
    Ok((reads, truth))
}

fn mutate(template: &[u8], p: &SynthParams, rng: &mut ChaCha8Rng) -> Vec<u8> {
    if p.sub_rate == 0.0 && p.ins_rate == 0.0 && p.del_rate == 0.0 {
        return template.to_vec();
    }
    let mut out = Vec::with_capacity(template.len() + template.len() / 8);
    for &b in template {
        let r: f64 = rng.random();
        if r < p.del_rate {
            continue;
        } else if r < p.del_rate + p.ins_rate {
            out.push(BASES[rng.random_range(0..4)]);
            out.push(b);
        } else if r < p.del_rate + p.ins_rate + p.sub_rate {
            let others: Vec<u8> = BASES.iter().copied().filter(|&x| x != b).collect();
            out.push(others[rng.random_range(0..3)]);
        } else {
            out.push(b);
        }
    }
    if out.is_empty() {
        // a read must keep at least one base
        out.push(template[0]);
    }
    out
}

/// Clamped discrete Gaussian around `mean`.
fn draw_quals(n: usize, mean: f64, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let normal = Normal::new(mean, QUAL_SIGMA).expect("finite sigma");
    (0..n)
        .map(|_| normal.sample(rng).round().clamp(0.0, MAX_PHRED as f64) as u8)
        .collect()
}

/// Writes the ground-truth sidecar as JSON lines.
pub fn write_ground_truth<W: Write>(mut out: W, truth: &[GroundTruth]) -> Result<()> {
    for t in truth {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
