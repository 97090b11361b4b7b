use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn genpip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_genpip"))
        .args(args)
        .env_remove("GENPIP_COST_CONFIG")
        .output()
        .expect("spawn genpip")
}

fn ok(args: &[&str]) -> Output {
    let out = genpip(args);
    assert!(
        out.status.success(),
        "genpip {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A small reference, its index and 60 reads with low-quality and junk reads.
struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        let f = Fixture { dir };
        ok(&[
            "synth",
            "--random-ref",
            "150000",
            "--ref-out",
            s(&f.path("ref.fa")),
            "--num-reads",
            "60",
            "--len-min",
            "2000",
            "--len-max",
            "8000",
            "--seed",
            "5",
            "-o",
            s(&f.path("reads.fq")),
        ]);
        ok(&[
            "index",
            "--ref",
            s(&f.path("ref.fa")),
            "-o",
            s(&f.path("ref.idx")),
        ]);
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn pipeline_args(&self) -> Vec<String> {
        [
            "--index", "ref.idx", "--ref", "ref.fa", "--reads", "reads.fq", "--band", "32",
        ]
        .iter()
        .map(|a| {
            if a.contains('.') {
                s(&self.path(a)).to_string()
            } else {
                a.to_string()
            }
        })
        .collect()
    }

    fn run(&self, extra: &[&str]) -> Output {
        let mut args = vec!["run".to_string()];
        args.extend(self.pipeline_args());
        args.extend(extra.iter().map(|a| a.to_string()));
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        genpip(&refs)
    }

    fn report(&self, name: &str, extra: &[&str]) -> Value {
        let out = self.path(name);
        let mut args = vec!["-o", s(&out)];
        args.extend_from_slice(extra);
        let res = self.run(&args);
        assert!(
            res.status.success(),
            "{}",
            String::from_utf8_lossy(&res.stderr)
        );
        serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap()
    }
}

#[test]
fn help_and_version() {
    assert!(ok(&["--help"]).stdout.starts_with(b"Chunk-based"));
    assert!(ok(&["--version"]).stdout.starts_with(b"genpip "));
    let run_help = String::from_utf8(ok(&["run", "--help"]).stdout).unwrap();
    assert!(run_help.contains("[default: 300]"));
    assert!(run_help.contains("GENPIP_COST_CONFIG"));
}

#[test]
fn bad_arguments_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(&dir.path().join("x.idx")).to_string();
    for args in [
        vec!["index", "--ref", "r.fa", "-o", &out, "--k", "0"],
        vec!["index", "--ref", "r.fa", "-o", &out, "--k", "32"],
        vec!["index", "--ref", "r.fa"],
        vec!["frobnicate"],
        vec![
            "run", "--index", "a", "--ref", "b", "--reads", "c", "--mode", "turbo",
        ],
        vec![
            "sweep", "--index", "a", "--ref", "b", "--reads", "c", "--param", "band", "--values",
            "1",
        ],
        vec!["synth", "-o", &out],
    ] {
        let res = genpip(&args);
        assert_eq!(
            res.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&res.stderr)
        );
    }
}

#[test]
fn index_is_deterministic_and_missing_reference_exits_1() {
    let f = Fixture::new();
    let again = f.path("again.idx");
    let out = ok(&["index", "--ref", s(&f.path("ref.fa")), "-o", s(&again)]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("minimizers\t"), "{text}");
    assert!(text.contains("load_factor\t"), "{text}");
    assert_eq!(
        std::fs::read(f.path("ref.idx")).unwrap(),
        std::fs::read(&again).unwrap()
    );

    let missing = f.path("nope.fa");
    let res = genpip(&["index", "--ref", s(&missing), "-o", s(&again)]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains(s(&missing)));
}

#[test]
fn missing_index_exits_1_naming_the_path() {
    let f = Fixture::new();
    let missing = f.path("missing.idx");
    let res = genpip(&[
        "run",
        "--index",
        s(&missing),
        "--ref",
        s(&f.path("ref.fa")),
        "--reads",
        s(&f.path("reads.fq")),
    ]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains(s(&missing)));
}

#[test]
fn invalid_configuration_exits_2() {
    let f = Fixture::new();
    let res = f.run(&["--chunk-size", "0"]);
    assert_eq!(
        res.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let res = f.run(&["--tcm", "-1"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn forward_only_index_runs_and_bad_cost_exits_1() {
    let f = Fixture::new();
    let other = f.path("fwd.idx");
    ok(&[
        "index",
        "--ref",
        s(&f.path("ref.fa")),
        "-o",
        s(&other),
        "--forward-only",
    ]);
    let res = genpip(&[
        "run",
        "--index",
        s(&other),
        "--ref",
        s(&f.path("ref.fa")),
        "--reads",
        s(&f.path("reads.fq")),
        "--no-qsr",
    ]);
    assert!(
        res.status.success(),
        "an index fixes its own k-mer parameters"
    );

    let cost = f.path("cost.toml");
    std::fs::write(&cost, "cost_schema = 1\n").unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_genpip"));
    cmd.arg("run")
        .args(f.pipeline_args())
        .env("GENPIP_COST_CONFIG", &cost);
    let res = cmd.output().unwrap();
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("cost.toml"));
}

#[test]
fn run_report_schema_and_paf() {
    let f = Fixture::new();
    let paf = f.path("out.paf");
    let report = f.report(
        "er.json",
        &[
            "--mode",
            "cp-er",
            "--nqs",
            "2",
            "--ncm",
            "5",
            "--chunk-size",
            "300",
            "--oracle",
            "--paf",
            s(&paf),
        ],
    );
    for key in [
        "schema",
        "mode",
        "num_reads",
        "dataset_fingerprint",
        "params",
        "makespan_ns",
        "stages",
        "work_counts",
        "energy_pj",
        "energy_j",
        "metrics",
    ] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert!(report.get("reads").is_none());
    assert_eq!(report["schema"], "genpip.run_report/1");
    assert_eq!(report["mode"], "CP_ER");
    assert_eq!(report["num_reads"], 60);
    let m = &report["metrics"];
    assert!(m["rejection_ratio"].as_f64().unwrap() > 0.0);
    assert!(m["fn_ratio_qsr"].is_number());
    assert!(m["fn_ratio_cmr"].is_number());
    let stages: Vec<&str> = report["stages"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["stage"].as_str().unwrap())
        .collect();
    assert_eq!(stages, ["BC", "CQS", "SEED", "CHAIN", "ALIGN"]);

    let paf = std::fs::read_to_string(&paf).unwrap();
    assert_eq!(paf.lines().count(), 60);
    for line in paf.lines() {
        assert!(line.split('\t').count() >= 13, "{line}");
    }
    let mapped = report["work_counts"]["reads_mapped"].as_u64().unwrap() as usize;
    assert_eq!(
        paf.lines().filter(|l| l.ends_with("st:Z:MAPPED")).count(),
        mapped
    );

    let per_read = f.report("per_read.json", &["--per-read"]);
    assert_eq!(per_read["reads"].as_array().unwrap().len(), 60);
}

#[test]
fn sequential_versus_cp_and_compare() {
    let f = Fixture::new();
    f.report("seq.json", &["--mode", "sequential"]);
    f.report("cp.json", &["--mode", "cp"]);
    let out = ok(&[
        "compare",
        s(&f.path("seq.json")),
        s(&f.path("cp.json")),
        "--json",
    ]);
    let cmp: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cmp["baseline"], "SEQUENTIAL");
    assert_eq!(cmp["candidate"], "CP");
    assert!(cmp["speedup"].as_f64().unwrap() > 1.0);

    let out = ok(&[
        "compare",
        s(&f.path("cp.json")),
        s(&f.path("cp.json")),
        "--json",
    ]);
    let cmp: Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["speedup", "energy_savings", "work_reduction"] {
        assert_eq!(cmp[key].as_f64(), Some(1.0), "{key}");
    }
    let text =
        String::from_utf8(ok(&["compare", s(&f.path("cp.json")), s(&f.path("cp.json"))]).stdout)
            .unwrap();
    assert!(text.contains("speedup") && text.ends_with('\n'), "{text}");

    let res = genpip(&["compare", s(&f.path("cp.json")), s(&f.path("reads.fq"))]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn sweep_rows_match_run() {
    let f = Fixture::new();
    let mut args = vec!["sweep".to_string()];
    args.extend(f.pipeline_args());
    args.extend(["--param", "nqs", "--values", "2,3,4,5,6"].map(String::from));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let csv = String::from_utf8(ok(&refs).stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "param,value,rejection_ratio,fn_ratio_qsr,fn_ratio_cmr,chunks_basecalled,makespan_ns,energy_nj");
    assert_eq!(lines.len(), 6);
    let values: Vec<&str> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(values, ["2", "3", "4", "5", "6"]);

    let mut args = vec!["sweep".to_string()];
    args.extend(f.pipeline_args());
    args.extend(["--param", "n_cm", "--values", "3"].map(String::from));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let csv = String::from_utf8(ok(&refs).stdout).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();

    let report = f.report("ncm3.json", &["--ncm", "3", "--oracle"]);
    let m = &report["metrics"];
    assert_eq!(row[0], "n_cm");
    assert_eq!(
        row[2].parse::<f64>().unwrap(),
        m["rejection_ratio"].as_f64().unwrap()
    );
    assert_eq!(
        row[3].parse::<f64>().unwrap(),
        m["fn_ratio_qsr"].as_f64().unwrap()
    );
    assert_eq!(
        row[4].parse::<f64>().unwrap(),
        m["fn_ratio_cmr"].as_f64().unwrap()
    );
    assert_eq!(
        row[5].parse::<u64>().unwrap(),
        report["work_counts"]["chunks_basecalled"].as_u64().unwrap()
    );
    assert_eq!(
        row[6].parse::<u64>().unwrap(),
        report["makespan_ns"].as_u64().unwrap()
    );
    let pj = report["energy_pj"].as_u64().unwrap();
    assert_eq!(row[7], format!("{}.{:03}", pj / 1000, pj % 1000));
}

#[test]
fn synth_composition_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let fa = dir.path().join("ref.fa");
    let fq = dir.path().join("reads.fq");
    ok(&[
        "synth",
        "--random-ref",
        "100000",
        "--ref-out",
        s(&fa),
        "--len-min",
        "500",
        "--len-max",
        "1500",
        "-o",
        s(&fq),
    ]);
    let fq2 = dir.path().join("from_file.fq");
    ok(&[
        "synth",
        "--ref",
        s(&fa),
        "--num-reads",
        "1000",
        "--junk-frac",
        "0.10",
        "--lowq-frac",
        "0.205",
        "--len-min",
        "500",
        "--len-max",
        "1500",
        "--seed",
        "1",
        "-o",
        s(&fq2),
    ]);
    let truth = std::fs::read_to_string(dir.path().join("from_file.fq.truth.jsonl")).unwrap();
    let rows: Vec<Value> = truth
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 1000);
    assert_eq!(rows.iter().filter(|r| r["origin"] == "JUNK").count(), 100);
    assert_eq!(rows.iter().filter(|r| r["is_lowq"] == true).count(), 205);

    let stats: Value = serde_json::from_slice(&ok(&["stats", "--reads", s(&fq2)]).stdout).unwrap();
    assert_eq!(stats["num_reads"], 1000);
    assert!(stats["mean_len"].as_f64().unwrap() > 0.0);

    let fq3 = dir.path().join("again.fq");
    ok(&[
        "synth",
        "--ref",
        s(&fa),
        "--num-reads",
        "1000",
        "--len-min",
        "500",
        "--len-max",
        "1500",
        "-o",
        s(&fq3),
    ]);
    assert_eq!(std::fs::read(&fq2).unwrap(), std::fs::read(&fq3).unwrap());

    let res = genpip(&["stats", "--reads", s(&dir.path().join("absent.fq"))]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn cost_summary_totals() {
    let text = String::from_utf8(ok(&["cost"]).stdout).unwrap();
    let last = text.lines().last().unwrap();
    assert_eq!(
        last.split_whitespace().collect::<Vec<_>>(),
        ["total", "147.2", "163.8"]
    );
    let json: Value = serde_json::from_slice(&ok(&["cost", "--json"]).stdout).unwrap();
    assert_eq!(json["total_power_w"].as_f64(), Some(147.2));
    assert_eq!(json["total_area_mm2"].as_f64(), Some(163.8));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let f = Fixture::new();
    let a = f.path("a.json");
    let b = f.path("b.json");
    f.report("a.json", &["--threads", "1", "--oracle"]);
    f.report("b.json", &["--threads", "3", "--oracle"]);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}
