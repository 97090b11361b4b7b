//! Ratios between two runs over the same dataset.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::CostError;
use crate::pipeline::{Mode, RunReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub baseline: Mode,
    pub candidate: Mode,
    /// baseline makespan / candidate makespan
    pub speedup: f64,
    /// baseline energy / candidate energy
    pub energy_savings: f64,
    /// baseline chunks basecalled / candidate chunks basecalled
    pub work_reduction: f64,
}

fn ratio(a: u64, b: u64, what: &'static str) -> Result<f64, CostError> {
    match (a, b) {
        (0, 0) => Ok(1.0),
        (0, _) | (_, 0) => Err(CostError::ZeroRatio(what)),
        _ => Ok(a as f64 / b as f64),
    }
}

pub fn compare(a: &RunReport, b: &RunReport) -> Result<ComparisonReport, CostError> {
    if a.num_reads != b.num_reads || a.dataset_fingerprint != b.dataset_fingerprint {
        return Err(CostError::DatasetMismatch(a.num_reads, b.num_reads));
    }
    Ok(ComparisonReport {
        baseline: a.mode,
        candidate: b.mode,
        speedup: ratio(a.makespan_ns, b.makespan_ns, "makespan")?,
        energy_savings: ratio(a.energy_pj, b.energy_pj, "energy")?,
        work_reduction: ratio(
            a.work_counts.chunks_basecalled,
            b.work_counts.chunks_basecalled,
            "chunks basecalled",
        )?,
    })
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<16}{:>12}", "baseline", self.baseline.as_str())?;
        writeln!(f, "{:<16}{:>12}", "candidate", self.candidate.as_str())?;
        writeln!(f, "{:<16}{:>11.4}x", "speedup", self.speedup)?;
        writeln!(f, "{:<16}{:>11.4}x", "energy savings", self.energy_savings)?;
        write!(f, "{:<16}{:>11.4}x", "work reduction", self.work_reduction)
    }
}
