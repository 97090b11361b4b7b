use serde::{Deserialize, Serialize};

use super::{GenioError, Read, Result};

/// Summary statistics over a read set.
///
/// Per-read quality is the arithmetic mean of its Phred scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub num_reads: u64,
    pub total_bases: u64,
    pub mean_len: f64,
    pub median_len: f64,
    pub mean_q: f64,
    pub median_q: f64,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

pub fn dataset_stats<I>(reads: I) -> Result<DatasetStats>
where
    I: IntoIterator<Item = Result<Read>>,
{
    let mut lens = Vec::new();
    let mut quals = Vec::new();
    let mut total_bases = 0u64;
    let mut len_sum = 0u64;
    for read in reads {
        let read = read?;
        let n = read.len() as u64;
        total_bases += n;
        len_sum += n;
        lens.push(n as f64);
        let qsum: u64 = read.quals.iter().map(|&q| q as u64).sum();
        quals.push(if n == 0 { 0.0 } else { qsum as f64 / n as f64 });
    }
    if lens.is_empty() {
        return Err(GenioError::EmptyStream);
    }
    let count = lens.len() as f64;
    let mean_q = quals.iter().sum::<f64>() / count;
    Ok(DatasetStats {
        num_reads: lens.len() as u64,
        total_bases,
        mean_len: len_sum as f64 / count,
        median_len: median(&mut lens),
        mean_q,
        median_q: median(&mut quals),
    })
}
