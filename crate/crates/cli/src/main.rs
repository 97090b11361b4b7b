//! `genpip` command-line frontend.
//!
//! Exit codes: 0 on success, 1 on runtime or I/O failure, 2 on invalid
//! arguments or configuration.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use genpip::bench;
use genpip::costmodel::{area_power_summary, compare, load_cost_config, CostModel};
use genpip::genio::{
    dataset_stats, parse_fasta, random_reference, read_fastq, synth_reads, write_fasta,
    write_fastq, write_ground_truth, write_paf, AmbiguityPolicy, FastqReader, Reference,
    SynthParams,
};
use genpip::pipeline::{
    evaluate, sweep, write_sweep_csv, MapContext, Mode, PipelineConfig, RunReport, SweepParam,
    SweepSpec,
};
use genpip::refindex::{build_index, load_index, save_index, IndexParams, MinimizerIndex};

#[derive(Parser)]
#[command(
    name = "genpip",
    version,
    about = "Chunk-based read mapping with early rejection, plus a timing and energy model"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a minimizer index of a FASTA reference.
    Index(IndexArgs),
    /// Map reads in one execution mode and write the run report.
    Run(RunArgs),
    /// Generate synthetic reads with ground-truth labels.
    Synth(SynthArgs),
    /// Vary one early-rejection parameter and write one CSV row per value.
    Sweep(SweepArgs),
    /// Print read-set statistics as JSON.
    Stats(StatsArgs),
    /// Compare two run reports (baseline first).
    Compare(CompareArgs),
    /// Print the area and power summary of a cost configuration.
    Cost(CostArgs),
}

#[derive(Args)]
struct IndexArgs {
    /// Reference FASTA.
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Output index file.
    #[arg(short, long)]
    output: PathBuf,
    /// k-mer length (1..=31).
    #[arg(long, default_value_t = 15, value_parser = clap::value_parser!(u8).range(1..=31))]
    k: u8,
    /// Minimizer window in k-mers.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u16).range(1..))]
    w: u16,
    /// Index forward-strand k-mers only.
    #[arg(long, alias = "no-canonical")]
    forward_only: bool,
    /// Seed for resolving ambiguous reference bases.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PipelineArgs {
    /// Index built by `genpip index`.
    #[arg(long)]
    index: PathBuf,
    /// Reference FASTA the index was built from.
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Reads (FASTQ, Phred+33).
    #[arg(long)]
    reads: PathBuf,
    /// sequential, decoupled, cp or cp-er.
    #[arg(long, default_value = "cp-er")]
    mode: Mode,
    /// Bases per chunk.
    #[arg(long, default_value_t = 300)]
    chunk_size: usize,
    /// Chunks sampled by the quality-score check.
    #[arg(long = "nqs", alias = "n-qs", default_value_t = 2)]
    n_qs: usize,
    /// Mean-quality rejection threshold (Phred).
    #[arg(long = "tqs", alias = "theta-qs", default_value_t = 7.0)]
    theta_qs: f64,
    /// Consecutive chunks in the chunk-mapping check.
    #[arg(long = "ncm", alias = "n-cm", default_value_t = 5)]
    n_cm: usize,
    /// Chaining score per examined base below which a read is rejected
    /// [default: 0.005 x match weight].
    #[arg(long = "tcm", alias = "theta-cm")]
    theta_cm: Option<f64>,
    /// Whole-read chaining threshold applied before alignment [default: tcm].
    #[arg(long)]
    read_gate_theta: Option<f64>,
    /// Align every read with a chain, however weak.
    #[arg(long)]
    no_read_gate: bool,
    /// Disable quality-score rejection.
    #[arg(long)]
    no_qsr: bool,
    /// Disable chunk-mapping rejection.
    #[arg(long)]
    no_cmr: bool,
    /// Chain only the consecutive chunks in the chunk-mapping check.
    #[arg(long)]
    cmr_strict_large_chunk: bool,
    /// Chaining weight per anchor [default: k].
    #[arg(long)]
    match_weight: Option<f64>,
    /// Chaining gap penalty per base of diagonal drift.
    #[arg(long, default_value_t = 0.1)]
    gap_coef: f64,
    /// Largest gap between chained anchors.
    #[arg(long, default_value_t = 5000)]
    max_gap: u32,
    #[arg(long, default_value_t = 1)]
    min_chain_anchors: usize,
    /// Minimizers with more reference hits are skipped.
    #[arg(long, default_value_t = 500)]
    max_occ: usize,
    #[arg(long = "match", default_value_t = 2)]
    match_score: i32,
    #[arg(long, default_value_t = -4, allow_negative_numbers = true)]
    mismatch: i32,
    #[arg(long, default_value_t = -4, allow_negative_numbers = true)]
    gap_open: i32,
    #[arg(long, default_value_t = -2, allow_negative_numbers = true)]
    gap_extend: i32,
    /// Alignment band half-width around the chain.
    #[arg(long, default_value_t = 500)]
    band: usize,
    /// Reference bases added on each side of the aligned region.
    #[arg(long, default_value_t = 100)]
    flank: usize,
    /// Cost configuration TOML [default: built-in].
    #[arg(long, env = "GENPIP_COST_CONFIG")]
    cost: Option<PathBuf>,
    /// Block basecalling when the chunk buffer is full instead of failing
    /// on oversized reads.
    #[arg(long)]
    model_buffer_stalls: bool,
    /// Worker threads [default: available parallelism].
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
    /// Seed for resolving ambiguous reference bases.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Also run CP on the same reads to fill the false-negative ratios.
    #[arg(long)]
    oracle: bool,
    /// Include every read's mapping result in the report.
    #[arg(long)]
    per_read: bool,
    /// Report path [default: stdout].
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Write mappings as PAF.
    #[arg(long)]
    paf: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Draw reads from this FASTA (first record).
    #[arg(long = "ref", conflicts_with_all = ["random_ref", "benchmark"])]
    reference: Option<PathBuf>,
    /// Draw reads from a random reference of this length.
    #[arg(long, conflicts_with = "benchmark")]
    random_ref: Option<usize>,
    /// Name of the random reference.
    #[arg(long, default_value = "synth_ref")]
    ref_name: String,
    /// Write the random reference as FASTA.
    #[arg(long)]
    ref_out: Option<PathBuf>,
    /// Generate the shipped benchmark (reference and reads); the other
    /// read parameters are ignored.
    #[arg(long)]
    benchmark: bool,
    #[arg(long, default_value_t = 1000)]
    num_reads: usize,
    #[arg(long, default_value_t = 3000)]
    len_min: usize,
    #[arg(long, default_value_t = 15000)]
    len_max: usize,
    #[arg(long, default_value_t = 0.06)]
    sub_rate: f64,
    #[arg(long, default_value_t = 0.03)]
    ins_rate: f64,
    #[arg(long, default_value_t = 0.03)]
    del_rate: f64,
    /// Fraction of reads that are random sequence.
    #[arg(long, default_value_t = 0.10)]
    junk_frac: f64,
    /// Fraction of reads with low base qualities.
    #[arg(long, default_value_t = 0.205)]
    lowq_frac: f64,
    #[arg(long, default_value_t = 9.0)]
    qual_high: f64,
    #[arg(long, default_value_t = 4.5)]
    qual_low: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output FASTQ.
    #[arg(short, long)]
    output: PathBuf,
    /// Ground-truth JSONL [default: <output>.truth.jsonl].
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// n_qs, n_cm, chunk_size, theta_qs or theta_cm (also nqs, ncm,
    /// chunk-size, tqs, tcm).
    #[arg(long)]
    param: SweepParam,
    /// Comma-separated values, swept in the given order.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    values: Vec<f64>,
    /// CSV path [default: stdout].
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    reads: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    baseline: PathBuf,
    candidate: PathBuf,
    /// Print JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CostArgs {
    #[arg(long, env = "GENPIP_COST_CONFIG")]
    cost: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

/// Failures split by exit code.
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

type Res<T = ()> = Result<T, Failure>;

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(anyhow!("{msg}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Index(a) => cmd_index(a),
        Cmd::Run(a) => cmd_run(a),
        Cmd::Synth(a) => cmd_synth(a),
        Cmd::Sweep(a) => cmd_sweep(a),
        Cmd::Stats(a) => cmd_stats(a),
        Cmd::Compare(a) => cmd_compare(a),
        Cmd::Cost(a) => cmd_cost(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("genpip: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("genpip: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Writes to `path`, or to stdout when absent.
fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> anyhow::Result<()> {
    let mut out = output(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn load_refs(path: &Path, seed: u64) -> anyhow::Result<Vec<Reference>> {
    parse_fasta(path, AmbiguityPolicy::SkipRandom { seed })
        .with_context(|| format!("reading {}", path.display()))
}

fn load_cost(path: Option<&Path>) -> Res<CostModel> {
    match path {
        Some(p) => {
            load_cost_config(p).map_err(|e| Failure::Runtime(anyhow!("{}: {e}", p.display())))
        }
        None => Ok(CostModel::default()),
    }
}

fn cmd_index(a: IndexArgs) -> Res {
    let params = IndexParams {
        k: a.k as usize,
        w: a.w as usize,
        canonical: !a.forward_only,
    };
    params.validate().map_err(usage)?;
    let refs = load_refs(&a.reference, a.seed)?;
    let idx = build_index(&refs, &params).map_err(usage)?;
    save_index(&idx, &a.output).with_context(|| format!("writing {}", a.output.display()))?;
    println!("references\t{}", refs.len());
    println!("minimizers\t{}", idx.num_minimizers());
    println!("locations\t{}", idx.num_locations());
    println!("load_factor\t{:.4}", idx.load_factor());
    Ok(())
}

/// Loaded inputs plus a validated configuration.
struct Prepared {
    index: MinimizerIndex,
    refs: Vec<Reference>,
    reads: Vec<genpip::genio::Read>,
    cfg: PipelineConfig,
    cost: CostModel,
}

impl PipelineArgs {
    fn config(&self, index: &MinimizerIndex) -> PipelineConfig {
        let mut c = PipelineConfig::default();
        let k = index.params.k;
        c.mode = self.mode;
        c.chunk_size = self.chunk_size;
        c.er.qsr.n_qs = self.n_qs;
        c.er.qsr.theta_qs = self.theta_qs;
        c.er.n_cm = self.n_cm;
        c.er.qsr_enabled = !self.no_qsr;
        c.er.cmr_enabled = !self.no_cmr;
        c.er.strict_large_chunk = self.cmr_strict_large_chunk;
        c.seed.params = index.params;
        c.seed.max_occ = self.max_occ;
        c.chain.match_weight = self.match_weight.unwrap_or(k as f64);
        c.chain.gap_coef = self.gap_coef;
        c.chain.max_gap = self.max_gap;
        c.chain.min_chain_anchors = self.min_chain_anchors;
        c.chain.seed_len = k as u32;
        c.er.theta_cm = self.theta_cm.unwrap_or(0.005 * c.chain.match_weight);
        c.read_gate = !self.no_read_gate;
        c.read_gate_theta = self.read_gate_theta.unwrap_or(c.er.theta_cm);
        c.align.match_score = self.match_score;
        c.align.mismatch = self.mismatch;
        c.align.gap_open = self.gap_open;
        c.align.gap_extend = self.gap_extend;
        c.align.band = self.band;
        c.align.flank = self.flank;
        c.buffers.model_stalls = self.model_buffer_stalls;
        c
    }

    fn prepare(&self) -> Res<Prepared> {
        let cost = load_cost(self.cost.as_deref())?;
        let index =
            load_index(&self.index).map_err(|e| anyhow!("{}: {e}", self.index.display()))?;
        let cfg = self.config(&index);
        cfg.validate().map_err(usage)?;
        let refs = load_refs(&self.reference, self.seed)?;
        let reads =
            read_fastq(&self.reads).with_context(|| format!("reading {}", self.reads.display()))?;
        Ok(Prepared {
            index,
            refs,
            reads,
            cfg,
            cost,
        })
    }

    fn pool(&self) -> anyhow::Result<rayon::ThreadPool> {
        let n = match self.threads {
            Some(n) => n as usize,
            None => std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
        };
        Ok(rayon::ThreadPoolBuilder::new().num_threads(n).build()?)
    }
}

fn cmd_run(a: RunArgs) -> Res {
    let p = a.pipeline.prepare()?;
    let ctx = MapContext::new(&p.index, &p.refs, p.cfg).map_err(|e| anyhow!(e))?;
    eprintln!(
        "genpip: mapping {} reads in {} mode",
        p.reads.len(),
        p.cfg.mode
    );
    let pool = a.pipeline.pool()?;
    let report = pool
        .install(|| {
            evaluate(
                &p.reads,
                &ctx,
                &p.cost,
                a.oracle,
                a.per_read || a.paf.is_some(),
            )
        })
        .map_err(|e| anyhow!(e))?;
    if let Some(paf) = &a.paf {
        let results = report.reads.as_deref().unwrap_or_default();
        write_paf(paf, results, &p.index.ref_meta)
            .with_context(|| format!("writing {}", paf.display()))?;
    }
    let report = if a.per_read {
        report
    } else {
        RunReport {
            reads: None,
            ..report
        }
    };
    write_json(a.output.as_deref(), &report)?;
    eprintln!(
        "genpip: {} mapped, makespan {} ns, energy {:.6} J",
        report.work_counts.reads_mapped, report.makespan_ns, report.energy_j
    );
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Res {
    let p = a.pipeline.prepare()?;
    let spec = SweepSpec {
        param: a.param,
        values: a.values,
        gate_follows_theta_cm: a.pipeline.read_gate_theta.is_none(),
    };
    spec.validate().map_err(usage)?;
    let ctx = MapContext::new(&p.index, &p.refs, p.cfg).map_err(|e| anyhow!(e))?;
    eprintln!(
        "genpip: sweeping {} over {} values",
        spec.param,
        spec.values.len()
    );
    let pool = a.pipeline.pool()?;
    let rows = pool
        .install(|| sweep(&p.reads, &ctx, &p.cost, &spec))
        .map_err(|e| anyhow!(e))?;
    let out = output(a.output.as_deref())?;
    write_sweep_csv(out, &rows).context("writing sweep CSV")?;
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Res {
    let (reference, params) = if a.benchmark {
        (bench::bench_reference(), bench::bench_synth_params())
    } else {
        let reference = match (&a.reference, a.random_ref) {
            (Some(path), _) => load_refs(path, a.seed)?.swap_remove(0),
            (None, Some(len)) => random_reference(&a.ref_name, len, a.seed),
            (None, None) => {
                return Err(usage(
                    "one of --ref, --random-ref or --benchmark is required",
                ))
            }
        };
        let params = SynthParams {
            num_reads: a.num_reads,
            len_min: a.len_min,
            len_max: a.len_max,
            sub_rate: a.sub_rate,
            ins_rate: a.ins_rate,
            del_rate: a.del_rate,
            junk_frac: a.junk_frac,
            lowq_frac: a.lowq_frac,
            qual_high_mean: a.qual_high,
            qual_low_mean: a.qual_low,
            rng_seed: a.seed,
        };
        (reference, params)
    };
    let (reads, truth) = synth_reads(&reference, &params).map_err(usage)?;
    if let Some(path) = &a.ref_out {
        write_fasta(create(path)?, std::slice::from_ref(&reference), 80)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    write_fastq(create(&a.output)?, &reads)
        .with_context(|| format!("writing {}", a.output.display()))?;
    let truth_path = a.truth.unwrap_or_else(|| {
        let mut s = a.output.clone().into_os_string();
        s.push(".truth.jsonl");
        PathBuf::from(s)
    });
    write_ground_truth(create(&truth_path)?, &truth)
        .with_context(|| format!("writing {}", truth_path.display()))?;
    eprintln!(
        "genpip: wrote {} reads to {}",
        reads.len(),
        a.output.display()
    );
    Ok(())
}

fn cmd_stats(a: StatsArgs) -> Res {
    let f = File::open(&a.reads).with_context(|| format!("cannot open {}", a.reads.display()))?;
    let stats = dataset_stats(FastqReader::new(io::BufReader::new(f)))
        .with_context(|| format!("reading {}", a.reads.display()))?;
    write_json(None, &stats)?;
    Ok(())
}

fn load_report(path: &Path) -> anyhow::Result<RunReport> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    serde_json::from_reader(io::BufReader::new(f))
        .with_context(|| format!("{} is not a run report", path.display()))
}

fn cmd_compare(a: CompareArgs) -> Res {
    let base = load_report(&a.baseline)?;
    let cand = load_report(&a.candidate)?;
    let cmp = compare(&base, &cand).map_err(|e| anyhow!(e))?;
    if a.json {
        write_json(None, &cmp)?;
    } else {
        println!("{cmp}");
    }
    Ok(())
}

fn cmd_cost(a: CostArgs) -> Res {
    let cost = load_cost(a.cost.as_deref())?;
    let summary = area_power_summary(&cost).map_err(|e| anyhow!(e))?;
    if a.json {
        write_json(None, &summary)?;
    } else {
        println!("{summary}");
    }
    Ok(())
}
