use std::sync::OnceLock;

use genpip::costmodel::{area_power_summary, compare, load_cost_config, CostModel};
use genpip::genio::{
    random_reference, synth_reads, GroundTruth, Origin, Read, Reference, SynthParams,
};
use genpip::mapdp::ReadStatus;
use genpip::pipeline::{evaluate, run_dataset, MapContext, Mode, PipelineConfig, RunReport};
use genpip::refindex::{build_index, IndexParams, MinimizerIndex};
use genpip::seq::Strand;

struct Data {
    refs: Vec<Reference>,
    index: MinimizerIndex,
    reads: Vec<Read>,
    truth: Vec<GroundTruth>,
}

fn data() -> &'static Data {
    static D: OnceLock<Data> = OnceLock::new();
    D.get_or_init(|| {
        let reference = random_reference("chr", 300_000, 21);
        let params = SynthParams {
            num_reads: 150,
            len_min: 1500,
            len_max: 9000,
            rng_seed: 22,
            ..SynthParams::default()
        };
        let (reads, truth) = synth_reads(&reference, &params).unwrap();
        let refs = vec![reference];
        let index = build_index(&refs, &IndexParams::default()).unwrap();
        Data {
            refs,
            index,
            reads,
            truth,
        }
    })
}

fn config(mode: Mode) -> PipelineConfig {
    let mut c = PipelineConfig {
        mode,
        ..PipelineConfig::default()
    };
    c.align.band = 32;
    c
}

fn ctx(mode: Mode) -> MapContext<'static> {
    let d = data();
    MapContext::new(&d.index, &d.refs, config(mode)).unwrap()
}

fn report(mode: Mode) -> RunReport {
    evaluate(&data().reads, &ctx(mode), &CostModel::default(), true, true).unwrap()
}

#[test]
fn non_rejecting_modes_agree_read_by_read() {
    let reads = &data().reads;
    let cp = run_dataset(reads, &ctx(Mode::Cp)).unwrap().results();
    for mode in [Mode::Sequential, Mode::Decoupled] {
        assert_eq!(
            run_dataset(reads, &ctx(mode)).unwrap().results(),
            cp,
            "{mode}"
        );
    }
}

#[test]
fn early_rejection_only_removes_work() {
    let reads = &data().reads;
    let cp = run_dataset(reads, &ctx(Mode::Cp)).unwrap();
    let er = run_dataset(reads, &ctx(Mode::CpEr)).unwrap();
    for (a, b) in cp.outcomes.iter().zip(&er.outcomes) {
        assert!(b.work.chunks_basecalled <= a.work.chunks_basecalled);
        assert!(b.work.chunks_seeded <= a.work.chunks_seeded);
        assert!(b.work.chunks_chained <= a.work.chunks_chained);
        assert!(b.work.reads_aligned <= a.work.reads_aligned);
        match b.result.status {
            ReadStatus::RejectedQsr | ReadStatus::RejectedCmr => {}
            _ => assert_eq!(
                a.result, b.result,
                "read {} kept by early rejection",
                a.result.read_id
            ),
        }
    }
    assert!(er.work.chunks_basecalled < cp.work.chunks_basecalled);
}

#[test]
fn work_counts_match_outcomes() {
    let d = data();
    for mode in Mode::ALL {
        let run = run_dataset(&d.reads, &ctx(mode)).unwrap();
        let res = run.results();
        let count = |s| res.iter().filter(|r| r.status == s).count() as u64;
        let w = &run.work;
        assert_eq!(w.num_reads(), d.reads.len() as u64);
        assert_eq!(w.reads_mapped, count(ReadStatus::Mapped));
        assert_eq!(w.reads_unmapped, count(ReadStatus::Unmapped));
        assert_eq!(w.reads_rejected_qsr, count(ReadStatus::RejectedQsr));
        assert_eq!(w.reads_rejected_cmr, count(ReadStatus::RejectedCmr));
        assert!(w.chunks_seeded <= w.chunks_basecalled);
        assert!(w.reads_aligned >= w.reads_mapped);
        if mode != Mode::CpEr {
            assert_eq!(w.reads_rejected_qsr + w.reads_rejected_cmr, 0);
            let total: u64 = d.reads.iter().map(|r| r.len() as u64).sum();
            assert_eq!(w.bases_basecalled, total);
        }
    }
}

#[test]
fn mappings_agree_with_ground_truth() {
    let d = data();
    let res = run_dataset(&d.reads, &ctx(Mode::CpEr)).unwrap().results();
    let mut mapped_good = 0;
    for (r, t) in res.iter().zip(&d.truth) {
        assert_eq!(r.read_id, t.id);
        match t.origin {
            Origin::Junk => assert_ne!(r.status, ReadStatus::Mapped, "junk read {} mapped", t.id),
            Origin::Ref(start) if r.status == ReadStatus::Mapped => {
                let region = r.region.unwrap();
                let aln = r.alignment.as_ref().unwrap();
                assert_eq!(Some(region.strand), t.strand);
                let (s, e) = (start, start + r.read_len);
                assert!(
                    aln.ref_start < e && s < aln.ref_end,
                    "read {} aligned away from its origin",
                    t.id
                );
                if !t.is_lowq {
                    mapped_good += 1;
                }
            }
            _ => {}
        }
    }
    let good = d
        .truth
        .iter()
        .filter(|t| !t.is_junk() && !t.is_lowq)
        .count();
    assert_eq!(mapped_good, good, "every high-quality reference read maps");
    assert!(d.truth.iter().any(|t| t.strand == Some(Strand::Reverse)));
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| serde_json::to_string(&report(Mode::CpEr)).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(1));
}

#[test]
fn report_round_trips_and_compares() {
    let seq = report(Mode::Sequential);
    let er = report(Mode::CpEr);
    let text = serde_json::to_string(&er).unwrap();
    let back: RunReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, er);
    let cmp = compare(&seq, &er).unwrap();
    assert!(cmp.speedup > 1.0);
    assert!(cmp.work_reduction > 1.0);
    assert!(cmp.energy_savings > 1.0);
}

#[test]
fn makespans_follow_mode_order() {
    let spans: Vec<u64> = [Mode::CpEr, Mode::Cp, Mode::Decoupled, Mode::Sequential]
        .into_iter()
        .map(|m| report(m).makespan_ns)
        .collect();
    assert!(spans.windows(2).all(|w| w[0] <= w[1]), "{spans:?}");
}

#[test]
fn shipped_cost_file_reproduces_area_and_power_table() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/config/default_cost.toml");
    let c = load_cost_config(path).unwrap();
    assert_eq!(c, CostModel::default());
    let s = area_power_summary(&c).unwrap();
    let got: Vec<(String, String, String)> = s
        .modules
        .iter()
        .map(|m| (m.tag.clone(), m.power_w.to_string(), m.area_mm2.to_string()))
        .collect();
    let want = [
        ("basecalling", "27.4", "49.2"),
        ("read_mapping", "114.5", "93.1"),
        ("controller", "5.3", "21.5"),
    ]
    .map(|(a, b, c)| (a.to_string(), b.to_string(), c.to_string()));
    assert_eq!(got, want);
    assert_eq!(s.total_power_w.to_string(), "147.2");
    assert_eq!(s.total_area_mm2.to_string(), "163.8");
}
