//! PAF output. Every read gets one line; unmapped and rejected reads use `*`
//! for the target fields and carry their status in an `st:Z:` tag.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{GenioError, Result};
use crate::mapdp::{MappingResult, ReadStatus};
use crate::refindex::RefMeta;

const MAPQ_UNAVAILABLE: u8 = 255;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PafRecord {
    pub qname: String,
    pub qlen: u64,
    pub qstart: u64,
    pub qend: u64,
    pub strand: char,
    pub tname: String,
    pub tlen: Option<u64>,
    pub tstart: Option<u64>,
    pub tend: Option<u64>,
    pub matches: u64,
    pub block_len: u64,
    pub mapq: u8,
    pub score: Option<i32>,
    pub status: ReadStatus,
}

impl PafRecord {
    pub fn from_result(r: &MappingResult, refs: &[RefMeta]) -> PafRecord {
        let mut rec = PafRecord {
            qname: r.read_id.clone(),
            qlen: r.read_len,
            qstart: 0,
            qend: 0,
            strand: '*',
            tname: "*".into(),
            tlen: None,
            tstart: None,
            tend: None,
            matches: 0,
            block_len: 0,
            mapq: MAPQ_UNAVAILABLE,
            score: None,
            status: r.status,
        };
        if let (Some(region), Some(aln)) = (&r.region, &r.alignment) {
            let meta = refs.get(region.ref_id as usize);
            rec.qstart = aln.read_start;
            rec.qend = aln.read_end;
            rec.strand = region.strand.as_char();
            rec.tname = meta.map_or_else(|| region.ref_id.to_string(), |m| m.name.clone());
            rec.tlen = meta.map(|m| m.len);
            rec.tstart = Some(region.start);
            rec.tend = Some(region.end);
            rec.matches = aln.matches;
            rec.block_len = aln.block_len;
            rec.score = Some(aln.score);
        }
        rec
    }
}

struct Opt(Option<u64>);

impl fmt::Display for Opt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{v}"),
            None => f.write_str("*"),
        }
    }
}

impl fmt::Display for PafRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.qname,
            self.qlen,
            self.qstart,
            self.qend,
            self.strand,
            self.tname,
            Opt(self.tlen),
            Opt(self.tstart),
            Opt(self.tend),
            self.matches,
            self.block_len,
            self.mapq
        )?;
        if let Some(s) = self.score {
            write!(f, "\tAS:i:{s}")?;
        }
        write!(f, "\tst:Z:{}", self.status.as_str())
    }
}

pub fn write_paf_to<W: Write>(
    mut out: W,
    results: &[MappingResult],
    refs: &[RefMeta],
) -> Result<()> {
    for r in results {
        writeln!(out, "{}", PafRecord::from_result(r, refs)).map_err(GenioError::Stream)?;
    }
    out.flush().map_err(GenioError::Stream)
}

pub fn write_paf(
    path: impl AsRef<Path>,
    results: &[MappingResult],
    refs: &[RefMeta],
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| GenioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_paf_to(BufWriter::new(file), results, refs)
}
