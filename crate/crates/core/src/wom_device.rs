//! A strict write-once memory and its text image format.
//!
//! The device accepts a new state only if it dominates the current one
//! coordinatewise; any attempt to clear a programmed cell is rejected.
//!
//! Image layout (LF line endings):
//!
//! ```text
//! WOMIMG 1
//! t=<int> n=<int> m=<int> l=<int>
//! k=<k_2>,..,<k_t>
//! p=<num>/<den>,..
//! round=<int>
//! block=<i>            (only when the image holds more than one block)
//! header=<hex>
//! data<i>=<hex>        (i = 1..m)
//! side<j>=<hex>        (j = 2..t, the round whose hash index it stores)
//! crc32=<8 hex digits>
//! ```
//!
//! Each region is hex of its bits packed least-significant-bit first,
//! the CRC-32 (IEEE) covers every byte before the trailer line.

use std::fmt::Write as _;

use bitvec::prelude::*;

use crate::capacity::{WeightVector, WomParams};
use crate::error::ImageError;
use crate::{Error, Result};

pub const IMAGE_MAGIC: &str = "WOMIMG 1";

pub type Cells = BitVec<u8, Lsb0>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Device {
    cells: Cells,
    writes_applied: u64,
    cells_programmed: u64,
}

impl Device {
    /// An erased device of `len` cells.
    pub fn new(len: usize) -> Self {
        Device { cells: bitvec![u8, Lsb0; 0; len], writes_applied: 0, cells_programmed: 0 }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &BitSlice<u8, Lsb0> {
        &self.cells
    }

    pub fn writes_applied(&self) -> u64 {
        self.writes_applied
    }

    pub fn cells_programmed(&self) -> u64 {
        self.cells_programmed
    }

    pub fn weight(&self) -> u64 {
        self.cells.count_ones() as u64
    }

    /// Replaces the content with `next` if no programmed cell is cleared.
    /// On violation the device is left untouched.
    pub fn apply_write(&mut self, next: &BitSlice<u8, Lsb0>) -> Result<()> {
        if next.len() != self.cells.len() {
            return Err(Error::usage(format!(
                "write of {} cells to a device of {}",
                next.len(),
                self.cells.len()
            )));
        }
        if let Some(index) = self.cells.iter_ones().find(|&i| !next[i]) {
            return Err(Error::WriteOnceViolation { index });
        }
        let fresh = next.count_ones() - self.cells.count_ones();
        self.cells.copy_from_bitslice(next);
        self.writes_applied += 1;
        self.cells_programmed += fresh as u64;
        Ok(())
    }
}

/// Everything an image records besides the cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageMeta {
    pub params: WomParams,
    pub blocks: u64,
    pub round: u32,
}

fn region_hex(bits: &BitSlice<u8, Lsb0>) -> String {
    let mut owned: Cells = bits.to_bitvec();
    owned.force_align();
    owned.set_uninitialized(false);
    hex::encode(owned.as_raw_slice())
}

fn regions(params: &WomParams) -> Vec<(String, usize, usize)> {
    let n = params.n() as usize;
    let mut out = vec![("header".to_string(), 0, params.t() as usize)];
    for i in 0..params.m() {
        out.push((format!("data{}", i + 1), params.data_offset(i) as usize, n));
    }
    for j in 2..=params.t() {
        out.push((format!("side{j}"), params.side_offset(j) as usize, 2 * n));
    }
    out
}

/// Renders the image of a device holding `blocks` consecutive basic blocks.
pub fn save_image(dev: &Device, meta: &ImageMeta) -> Result<String> {
    let p = &meta.params;
    let n0 = p.n0() as usize;
    if meta.blocks == 0 || dev.len() as u64 != p.n0() * meta.blocks {
        return Err(Error::usage(format!(
            "device of {} cells does not hold {} blocks of {n0}",
            dev.len(),
            meta.blocks
        )));
    }
    let mut s = String::new();
    let k: Vec<String> = p.k().iter().map(u32::to_string).collect();
    // writing to a String cannot fail
    let _ = writeln!(s, "{IMAGE_MAGIC}");
    let _ = writeln!(s, "t={} n={} m={} l={}", p.t(), p.n(), p.m(), p.l());
    let _ = writeln!(s, "k={}", k.join(","));
    let _ = writeln!(s, "p={}", p.weights());
    let _ = writeln!(s, "round={}", meta.round);
    let layout = regions(p);
    for b in 0..meta.blocks as usize {
        if meta.blocks > 1 {
            let _ = writeln!(s, "block={b}");
        }
        let block = &dev.cells()[b * n0..(b + 1) * n0];
        for (name, offset, len) in &layout {
            let _ = writeln!(s, "{name}={}", region_hex(&block[*offset..offset + len]));
        }
    }
    let crc = crc32fast::hash(s.as_bytes());
    let _ = writeln!(s, "crc32={crc:08x}");
    Ok(s)
}

struct Lines<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> std::result::Result<(usize, &'a str), ImageError> {
        let line = self.lines.get(self.pos).ok_or_else(|| ImageError::Truncated(what.to_string()))?;
        self.pos += 1;
        Ok((self.pos, line))
    }

    fn value(&mut self, key: &str) -> std::result::Result<(usize, &'a str), ImageError> {
        let (no, line) = self.next(key)?;
        match line.split_once('=') {
            Some((k, v)) if k == key => Ok((no, v)),
            _ => Err(malformed(no, format!("expected `{key}=`, found {line:?}"))),
        }
    }
}

fn malformed(line: usize, reason: impl Into<String>) -> ImageError {
    ImageError::Malformed { line, reason: reason.into() }
}

fn parse_num<T: std::str::FromStr>(line: usize, v: &str) -> std::result::Result<T, ImageError> {
    v.trim().parse().map_err(|_| malformed(line, format!("not a number: {v:?}")))
}

/// Parses an image produced by [`save_image`].
pub fn load_image(text: &str) -> Result<(Device, ImageMeta)> {
    let magic = text.lines().next().unwrap_or_default();
    if magic != IMAGE_MAGIC {
        return Err(ImageError::BadMagic(magic.to_string()).into());
    }
    let body_end = text.trim_end_matches('\n').rfind('\n').map(|i| i + 1).unwrap_or(0);
    let (body, trailer) = text.split_at(body_end);
    let stored = trailer
        .trim_end_matches('\n')
        .strip_prefix("crc32=")
        .ok_or_else(|| ImageError::Truncated("crc32 trailer".into()))?;
    let stored = u32::from_str_radix(stored, 16)
        .ok()
        .filter(|_| stored.len() == 8)
        .ok_or_else(|| malformed(body.lines().count() + 1, format!("bad checksum field {stored:?}")))?;
    let computed = crc32fast::hash(body.as_bytes());
    if stored != computed {
        return Err(ImageError::Checksum { stored, computed }.into());
    }

    let mut lines = Lines { lines: body.lines().collect(), pos: 1 };
    let (no, dims) = lines.next("dimensions")?;
    let mut fields = [0u64; 4];
    let names = ["t", "n", "m", "l"];
    let parts: Vec<&str> = dims.split(' ').collect();
    if parts.len() != 4 {
        return Err(malformed(no, "expected `t=.. n=.. m=.. l=..`").into());
    }
    for ((part, name), slot) in parts.iter().zip(names).zip(&mut fields) {
        match part.split_once('=') {
            Some((k, v)) if k == name => *slot = parse_num(no, v)?,
            _ => return Err(malformed(no, format!("expected `{name}=`, found {part:?}")).into()),
        }
    }
    let [t, n, m, l] = fields;
    let (no, k) = lines.value("k")?;
    let k: Vec<u32> = if k.is_empty() {
        Vec::new()
    } else {
        k.split(',').map(|v| parse_num(no, v)).collect::<std::result::Result<_, _>>()?
    };
    let (no, p) = lines.value("p")?;
    let p: WeightVector = p.parse().map_err(|e: Error| malformed(no, e.to_string()))?;
    let (no, round) = lines.value("round")?;
    let round: u32 = parse_num(no, round)?;
    let narrow = |v: u64| u32::try_from(v).map_err(|_| malformed(2, format!("{v} out of range")));
    let params = WomParams::manual(narrow(t)?, narrow(n)?, m, narrow(l)?, k, p)
        .map_err(|e| malformed(2, e.to_string()))?;
    if round > params.t() {
        return Err(malformed(no, format!("round {round} exceeds t = {}", params.t())).into());
    }
    if !params.desk_executable() {
        return Err(malformed(2, "image parameters are not executable").into());
    }

    let remaining = lines.lines.len() - lines.pos;
    let layout = regions(&params);
    let multi = lines.lines.get(lines.pos).is_some_and(|l| l.starts_with("block="));
    let per_block = layout.len() + usize::from(multi);
    if remaining == 0 || !remaining.is_multiple_of(per_block) || (!multi && remaining != per_block) {
        return Err(
            ImageError::Truncated(format!("{remaining} region lines for blocks of {per_block}")).into()
        );
    }
    let blocks = remaining / per_block;
    let n0 = params.n0() as usize;
    let mut cells = bitvec![u8, Lsb0; 0; n0 * blocks];
    for b in 0..blocks {
        if multi {
            let (no, idx) = lines.value("block")?;
            if parse_num::<usize>(no, idx)? != b {
                return Err(malformed(no, format!("expected block {b}")).into());
            }
        }
        let block = &mut cells[b * n0..(b + 1) * n0];
        for (name, offset, len) in &layout {
            let (no, hex_str) = lines.value(name)?;
            let bytes = hex::decode(hex_str).map_err(|e| malformed(no, e.to_string()))?;
            if bytes.len() != len.div_ceil(8) || !hex_str.bytes().all(|c| !c.is_ascii_uppercase()) {
                return Err(
                    malformed(no, format!("{name} must be {} lowercase hex bytes", len.div_ceil(8))).into()
                );
            }
            let bits = BitSlice::<u8, Lsb0>::from_slice(&bytes);
            if bits[*len..].any() {
                return Err(malformed(no, format!("{name} has bits beyond its {len} cells")).into());
            }
            block[*offset..offset + len].copy_from_bitslice(&bits[..*len]);
        }
        let header = &block[..params.t() as usize];
        let header_round = header.count_ones() as u32;
        if header.first_zero().unwrap_or(header.len()) != header_round as usize || header_round != round {
            return Err(malformed(no, format!("block {b} header disagrees with round {round}")).into());
        }
    }
    let programmed = cells.count_ones() as u64;
    let device = Device { cells, writes_applied: round as u64, cells_programmed: programmed };
    Ok((device, ImageMeta { params, blocks: blocks as u64, round }))
}
