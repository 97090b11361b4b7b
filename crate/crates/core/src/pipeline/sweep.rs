//! One-parameter sensitivity sweeps over a fixed read set.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    build_report, rejection_metrics, run_dataset, MapContext, Mode, PipelineError, Result,
};
use crate::costmodel::CostModel;
use crate::genio::Read;
use crate::mapdp::MappingResult;

pub const SWEEP_CSV_HEADER: &str =
    "param,value,rejection_ratio,fn_ratio_qsr,fn_ratio_cmr,chunks_basecalled,makespan_ns,energy_nj";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    NQs,
    NCm,
    ChunkSize,
    ThetaQs,
    ThetaCm,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::NQs => "n_qs",
            SweepParam::NCm => "n_cm",
            SweepParam::ChunkSize => "chunk_size",
            SweepParam::ThetaQs => "theta_qs",
            SweepParam::ThetaCm => "theta_cm",
        }
    }

    fn is_integer(self) -> bool {
        matches!(
            self,
            SweepParam::NQs | SweepParam::NCm | SweepParam::ChunkSize
        )
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "nqs" => Ok(SweepParam::NQs),
            "ncm" => Ok(SweepParam::NCm),
            "chunksize" => Ok(SweepParam::ChunkSize),
            "tqs" | "thetaqs" => Ok(SweepParam::ThetaQs),
            "tcm" | "thetacm" => Ok(SweepParam::ThetaCm),
            _ => Err(format!(
                "unknown sweep parameter {s:?} (expected n_qs, n_cm, chunk_size, theta_qs or theta_cm)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    /// Move the read-level gate threshold together with `theta_cm`.
    pub gate_follows_theta_cm: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(PipelineError::Config(
                "sweep needs at least one value".into(),
            ));
        }
        for &v in &self.values {
            if !v.is_finite() || v < 0.0 || (self.param.is_integer() && v.fract() != 0.0) {
                return Err(PipelineError::Config(format!(
                    "invalid value {v} for {}",
                    self.param
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: SweepParam,
    pub value: f64,
    pub rejection_ratio: f64,
    pub fn_ratio_qsr: Option<f64>,
    pub fn_ratio_cmr: Option<f64>,
    pub chunks_basecalled: u64,
    pub makespan_ns: u64,
    pub energy_pj: u64,
}

impl SweepRow {
    pub fn csv_line(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}.{:03}",
            self.param,
            self.value,
            self.rejection_ratio,
            opt(self.fn_ratio_qsr),
            opt(self.fn_ratio_cmr),
            self.chunks_basecalled,
            self.makespan_ns,
            self.energy_pj / 1000,
            self.energy_pj % 1000
        )
    }
}

/// Runs `ctx` once per value with the swept field replaced. False-negative
/// ratios come from a CP run of the same reads; CP results are shared across
/// values that do not change them.
pub fn sweep(
    reads: &[Read],
    ctx: &MapContext<'_>,
    cost: &CostModel,
    spec: &SweepSpec,
) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut oracle_cache: HashMap<(usize, u64, u64, bool), Vec<MappingResult>> = HashMap::new();
    let mut rows = Vec::with_capacity(spec.values.len());
    for &value in &spec.values {
        let mut cfg = ctx.cfg;
        match spec.param {
            SweepParam::NQs => cfg.er.qsr.n_qs = value as usize,
            SweepParam::NCm => cfg.er.n_cm = value as usize,
            SweepParam::ChunkSize => cfg.chunk_size = value as usize,
            SweepParam::ThetaQs => cfg.er.qsr.theta_qs = value,
            SweepParam::ThetaCm => {
                cfg.er.theta_cm = value;
                if spec.gate_follows_theta_cm {
                    cfg.read_gate_theta = value;
                }
            }
        }
        let run_ctx = MapContext::new(ctx.index, ctx.refs, cfg)?;
        let run = run_dataset(reads, &run_ctx)?;
        let results = run.results();
        let key = (
            cfg.chunk_size,
            cfg.er.qsr.theta_qs.to_bits(),
            cfg.read_gate_theta.to_bits(),
            cfg.read_gate,
        );
        let oracle = match oracle_cache.get(&key) {
            Some(o) => o,
            None => {
                let o = if cfg.mode == Mode::Cp {
                    results.clone()
                } else {
                    run_dataset(reads, &run_ctx.with_mode(Mode::Cp))?.results()
                };
                oracle_cache.entry(key).or_insert(o)
            }
        };
        let metrics = rejection_metrics(&results, Some(oracle))?;
        let report = build_report(&run, &cfg, cost, metrics, false);
        rows.push(SweepRow {
            param: spec.param,
            value,
            rejection_ratio: report.metrics.rejection_ratio,
            fn_ratio_qsr: report.metrics.fn_ratio_qsr,
            fn_ratio_cmr: report.metrics.fn_ratio_cmr,
            chunks_basecalled: report.work_counts.chunks_basecalled,
            makespan_ns: report.makespan_ns,
            energy_pj: report.energy_pj,
        });
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv_line())?;
    }
    out.flush()
}
