use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GenioError, Reference, Result};

/// What to do with IUPAC ambiguity codes (including `N`) in a reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmbiguityPolicy {
    /// Replace each ambiguous base by a base drawn from the code's
    /// compatible set with a seeded RNG.
    SkipRandom { seed: u64 },
    /// Treat ambiguity codes as invalid characters.
    Reject,
}

impl Default for AmbiguityPolicy {
    fn default() -> Self {
        AmbiguityPolicy::SkipRandom { seed: 0 }
    }
}

fn iupac_choices(b: u8) -> Option<&'static [u8]> {
    Some(match b {
        b'R' => b"AG",
        b'Y' => b"CT",
        b'S' => b"CG",
        b'W' => b"AT",
        b'K' => b"GT",
        b'M' => b"AC",
        b'B' => b"CGT",
        b'D' => b"AGT",
        b'H' => b"ACT",
        b'V' => b"ACG",
        b'N' => b"ACGT",
        _ => return None,
    })
}

/// Parses every record of a FASTA file. Records are never concatenated.
pub fn parse_fasta(path: impl AsRef<Path>, policy: AmbiguityPolicy) -> Result<Vec<Reference>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| GenioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_fasta_reader(BufReader::new(file), policy)
}

/// Convenience accessor returning the first record only.
pub fn read_single_fasta(path: impl AsRef<Path>, policy: AmbiguityPolicy) -> Result<Reference> {
    parse_fasta(path, policy)?
        .into_iter()
        .next()
        .ok_or(GenioError::EmptyFasta)
}

pub fn parse_fasta_reader<R: BufRead>(
    reader: R,
    policy: AmbiguityPolicy,
) -> Result<Vec<Reference>> {
    let mut rng = match policy {
        AmbiguityPolicy::SkipRandom { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        AmbiguityPolicy::Reject => None,
    };
    let mut refs: Vec<Reference> = Vec::new();
    let mut current: Option<Reference> = None;

    for line in reader.lines() {
        let line = line?;
        let line = line.trim_end();
        if let Some(header) = line.strip_prefix('>') {
            if let Some(done) = current.take() {
                refs.push(finish(done)?);
            }
            let name = header.split_whitespace().next().unwrap_or("").to_string();
            current = Some(Reference::new(name, Vec::new()));
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let Some(rec) = current.as_mut() else {
            return Err(GenioError::NotFasta);
        };
        for &raw in line.trim().as_bytes() {
            let b = raw.to_ascii_uppercase();
            match b {
                b'A' | b'C' | b'G' | b'T' => rec.bases.push(b),
                _ => match (iupac_choices(b), rng.as_mut()) {
                    (Some(choices), Some(rng)) => {
                        rec.bases.push(choices[rng.random_range(0..choices.len())])
                    }
                    _ => {
                        return Err(GenioError::InvalidBase {
                            record: rec.name.clone(),
                            ch: raw as char,
                        })
                    }
                },
            }
        }
    }
    if let Some(done) = current.take() {
        refs.push(finish(done)?);
    }
    if refs.is_empty() {
        return Err(GenioError::EmptyFasta);
    }
    Ok(refs)
}

fn finish(rec: Reference) -> Result<Reference> {
    if rec.bases.is_empty() {
        Err(GenioError::EmptyRecord(rec.name))
    } else {
        Ok(rec)
    }
}

/// Writes references as FASTA with `width` bases per line.
pub fn write_fasta<'a, W: Write>(
    mut out: W,
    refs: impl IntoIterator<Item = &'a Reference>,
    width: usize,
) -> Result<()> {
    let width = width.max(1);
    for r in refs {
        writeln!(out, ">{}", r.name)?;
        for line in r.bases.chunks(width) {
            out.write_all(line)?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    Ok(())
}
