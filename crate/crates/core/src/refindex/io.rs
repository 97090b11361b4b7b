//! Binary index file.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        6 bytes   "GPIDX1"
//! k            u8
//! w            u16
//! canonical    u8        0 or 1
//! n_refs       u32
//!   name_len   u32, name (UTF-8), length u64        per reference
//! n_codes      u64
//!   code u64, count u32, count x (ref_id u32, pos u32, strand u8)
//!                                                   per code, ascending
//! checksum     u64       FNV-1a over every preceding byte
//! ```
//!
//! Codes are written in ascending order so rebuilding from the same inputs
//! yields a byte-identical file.

use std::fs;
use std::path::Path;

use super::{IndexError, IndexParams, KmerMap, Location, MinimizerIndex, RefMeta};
use crate::seq::Strand;

pub const INDEX_MAGIC: &[u8; 6] = b"GPIDX1";
const MAGIC_STEM: &[u8; 5] = b"GPIDX";

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn write_index(idx: &MinimizerIndex) -> Vec<u8> {
    let mut buf = Vec::with_capacity(32 + idx.num_locations() * 9 + idx.num_minimizers() * 12);
    buf.extend_from_slice(INDEX_MAGIC);
    buf.push(idx.params.k as u8);
    buf.extend_from_slice(&(idx.params.w as u16).to_le_bytes());
    buf.push(idx.params.canonical as u8);
    buf.extend_from_slice(&(idx.ref_meta.len() as u32).to_le_bytes());
    for m in &idx.ref_meta {
        buf.extend_from_slice(&(m.name.len() as u32).to_le_bytes());
        buf.extend_from_slice(m.name.as_bytes());
        buf.extend_from_slice(&m.len.to_le_bytes());
    }
    let mut codes: Vec<u64> = idx.table.keys().copied().collect();
    codes.sort_unstable();
    buf.extend_from_slice(&(codes.len() as u64).to_le_bytes());
    for code in codes {
        let locs = &idx.table[&code];
        buf.extend_from_slice(&code.to_le_bytes());
        buf.extend_from_slice(&(locs.len() as u32).to_le_bytes());
        for l in locs {
            buf.extend_from_slice(&l.ref_id.to_le_bytes());
            buf.extend_from_slice(&l.pos.to_le_bytes());
            buf.push(matches!(l.strand, Strand::Reverse) as u8);
        }
    }
    let sum = fnv1a(&buf);
    buf.extend_from_slice(&sum.to_le_bytes());
    buf
}

pub fn save_index(idx: &MinimizerIndex, path: impl AsRef<Path>) -> Result<(), IndexError> {
    fs::write(path, write_index(idx))?;
    Ok(())
}

pub fn load_index(path: impl AsRef<Path>) -> Result<MinimizerIndex, IndexError> {
    read_index(&fs::read(path)?)
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexError> {
        let end = self.pos.checked_add(n).ok_or(IndexError::Corrupt)?;
        let s = self.data.get(self.pos..end).ok_or(IndexError::Corrupt)?;
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, IndexError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, IndexError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, IndexError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, IndexError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn read_index(bytes: &[u8]) -> Result<MinimizerIndex, IndexError> {
    if bytes.len() < INDEX_MAGIC.len() || &bytes[..MAGIC_STEM.len()] != MAGIC_STEM {
        return Err(IndexError::NotIndex);
    }
    if &bytes[..INDEX_MAGIC.len()] != INDEX_MAGIC {
        return Err(IndexError::VersionMismatch(
            String::from_utf8_lossy(&bytes[..INDEX_MAGIC.len()]).into_owned(),
        ));
    }
    if bytes.len() < INDEX_MAGIC.len() + 8 {
        return Err(IndexError::Corrupt);
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    if fnv1a(body) != u64::from_le_bytes(tail.try_into().unwrap()) {
        return Err(IndexError::Corrupt);
    }

    let mut c = Cursor {
        data: body,
        pos: INDEX_MAGIC.len(),
    };
    let params = IndexParams {
        k: c.u8()? as usize,
        w: c.u16()? as usize,
        canonical: match c.u8()? {
            0 => false,
            1 => true,
            _ => return Err(IndexError::Corrupt),
        },
    };
    params.validate()?;
    let n_refs = c.u32()?;
    let mut ref_meta = Vec::new();
    for _ in 0..n_refs {
        let n = c.u32()? as usize;
        let name = String::from_utf8(c.take(n)?.to_vec()).map_err(|_| IndexError::Corrupt)?;
        ref_meta.push(RefMeta {
            name,
            len: c.u64()?,
        });
    }
    let n_codes = c.u64()?;
    let mut table = KmerMap::default();
    for _ in 0..n_codes {
        let code = c.u64()?;
        let count = c.u32()? as usize;
        let mut locs = Vec::with_capacity(count.min(body.len() / 9));
        for _ in 0..count {
            let ref_id = c.u32()?;
            let pos = c.u32()?;
            let strand = match c.u8()? {
                0 => Strand::Forward,
                1 => Strand::Reverse,
                _ => return Err(IndexError::Corrupt),
            };
            if ref_id as usize >= ref_meta.len() {
                return Err(IndexError::Corrupt);
            }
            locs.push(Location {
                ref_id,
                pos,
                strand,
            });
        }
        table.insert(code, locs);
    }
    if c.pos != body.len() {
        return Err(IndexError::Corrupt);
    }
    Ok(MinimizerIndex {
        params,
        table,
        ref_meta,
    })
}
