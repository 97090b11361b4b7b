use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{GenioError, Read, Result};

pub const PHRED_OFFSET: u8 = 33;

/// Streaming reader over 4-line FASTQ records.
///
/// Memory use is bounded by the current record; lines are reused between
/// records.
pub struct FastqReader<R> {
    inner: R,
    line: String,
    done: bool,
}

impl<R: BufRead> FastqReader<R> {
    pub fn new(inner: R) -> Self {
        FastqReader {
            inner,
            line: String::new(),
            done: false,
        }
    }

    fn next_line(&mut self) -> Result<Option<&str>> {
        self.line.clear();
        if self.inner.read_line(&mut self.line)? == 0 {
            return Ok(None);
        }
        Ok(Some(self.line.trim_end_matches(['\n', '\r'])))
    }

    fn next_record(&mut self) -> Result<Option<Read>> {
        // skip blank lines between records
        let id = loop {
            match self.next_line()? {
                None => return Ok(None),
                Some("") => continue,
                Some(header) => {
                    let Some(rest) = header.strip_prefix('@') else {
                        return Err(GenioError::BadHeader(header.to_string()));
                    };
                    break rest.split_whitespace().next().unwrap_or("").to_string();
                }
            }
        };
        let bases: Vec<u8> = match self.next_line()? {
            Some(s) => s.bytes().map(|b| b.to_ascii_uppercase()).collect(),
            None => return Err(GenioError::Truncated(id)),
        };
        if let Some(&bad) = bases
            .iter()
            .find(|b| !matches!(b, b'A' | b'C' | b'G' | b'T' | b'N'))
        {
            return Err(GenioError::InvalidBase {
                record: id,
                ch: bad as char,
            });
        }
        match self.next_line()? {
            Some(s) if s.starts_with('+') => {}
            _ => return Err(GenioError::Truncated(id)),
        }
        let qual_line = match self.next_line()? {
            Some(s) => s.as_bytes().to_vec(),
            None => return Err(GenioError::Truncated(id)),
        };
        if qual_line.len() != bases.len() {
            return Err(GenioError::LengthMismatch(id));
        }
        let mut quals = Vec::with_capacity(qual_line.len());
        for c in qual_line {
            if !(b'!'..=b'~').contains(&c) {
                return Err(GenioError::BadQuality {
                    record: id,
                    ch: c as char,
                });
            }
            quals.push(c - PHRED_OFFSET);
        }
        Ok(Some(Read { id, bases, quals }))
    }
}

impl<R: BufRead> Iterator for FastqReader<R> {
    type Item = Result<Read>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.next_record() {
            Ok(Some(r)) => Some(Ok(r)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Opens a FASTQ file as a record stream.
pub fn parse_fastq(path: impl AsRef<Path>) -> Result<FastqReader<BufReader<File>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| GenioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(FastqReader::new(BufReader::new(file)))
}

/// Reads a whole FASTQ file into memory.
pub fn read_fastq(path: impl AsRef<Path>) -> Result<Vec<Read>> {
    parse_fastq(path)?.collect()
}

pub fn write_fastq<'a, W: Write>(
    mut out: W,
    reads: impl IntoIterator<Item = &'a Read>,
) -> Result<()> {
    for r in reads {
        out.write_all(b"@")?;
        out.write_all(r.id.as_bytes())?;
        out.write_all(b"\n")?;
        out.write_all(&r.bases)?;
        out.write_all(b"\n+\n")?;
        let q: Vec<u8> = r.quals.iter().map(|q| q + PHRED_OFFSET).collect();
        out.write_all(&q)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
