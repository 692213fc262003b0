//! File formats: binary fields, PGM masks, JSON sidecars. All writers go
//! through [`write_atomic`] (temp file in the target directory, then rename).
//!
//! Binary field layout, little-endian:
//!
//! ```text
//! u32 d | u64 n (d times, one per axis) | f64 L | u8 dtype | f64 values…
//! ```
//!
//! `dtype` is 0 for real values and 1 for complex values stored as
//! interleaved (re, im) pairs; values are row-major with the last axis fastest.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::Mask;
use crate::hamiltonian::{ComplexField, Field, Grid};
use crate::{Error, Result};

pub const DTYPE_REAL: u8 = 0;
pub const DTYPE_COMPLEX: u8 = 1;

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Error::invalid(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn header(grid: &Grid, dtype: u8) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 8 * grid.d + 9);
    out.extend_from_slice(&(grid.d as u32).to_le_bytes());
    for _ in 0..grid.d {
        out.extend_from_slice(&(grid.n as u64).to_le_bytes());
    }
    out.extend_from_slice(&grid.length.to_le_bytes());
    out.push(dtype);
    out
}

pub fn encode_field(field: &Field) -> Vec<u8> {
    let mut out = header(field.grid(), DTYPE_REAL);
    out.reserve(8 * field.values().len());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn encode_complex_field(field: &ComplexField) -> Vec<u8> {
    let mut out = header(field.re.grid(), DTYPE_COMPLEX);
    for (a, b) in field.re.values().iter().zip(field.im.values()) {
        out.extend_from_slice(&a.to_le_bytes());
        out.extend_from_slice(&b.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::invalid("truncated field file"))?;
        self.pos = end;
        Ok(chunk.try_into().unwrap())
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take::<8>()?))
    }
}

/// Decodes either dtype; complex files come back as (re, Some(im)).
pub fn decode_field(bytes: &[u8]) -> Result<(Field, Option<Field>)> {
    let mut r = Reader { bytes, pos: 0 };
    let d = u32::from_le_bytes(r.take::<4>()?) as usize;
    if d == 0 || d > 16 {
        return Err(Error::invalid(format!(
            "implausible dimension {d} in field header"
        )));
    }
    let mut ns = Vec::with_capacity(d);
    for _ in 0..d {
        ns.push(u64::from_le_bytes(r.take::<8>()?) as usize);
    }
    if ns.iter().any(|&n| n != ns[0]) {
        return Err(Error::invalid("only cubic grids are supported"));
    }
    let length = r.f64()?;
    let dtype = r.take::<1>()?[0];
    let grid = Grid::new(d, length, ns[0])?;
    let count = grid.len();
    match dtype {
        DTYPE_REAL => {
            let values = (0..count).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            Ok((Field::from_values(grid, values)?, None))
        }
        DTYPE_COMPLEX => {
            let mut re = Vec::with_capacity(count);
            let mut im = Vec::with_capacity(count);
            for _ in 0..count {
                re.push(r.f64()?);
                im.push(r.f64()?);
            }
            Ok((
                Field::from_values(grid, re)?,
                Some(Field::from_values(grid, im)?),
            ))
        }
        other => Err(Error::invalid(format!("unknown dtype {other}"))),
    }
}

/// Sidecar written next to every binary field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub d: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
    pub h: f64,
    pub dtype: String,
    pub norm: f64,
    pub role: String,
}

pub fn write_field(path: &Path, field: &Field, role: &str) -> Result<()> {
    write_atomic(path, &encode_field(field))?;
    let g = field.grid();
    let meta = FieldMeta {
        d: g.d,
        n: g.n,
        length: g.length,
        h: g.h(),
        dtype: "f64".into(),
        norm: field.norm(),
        role: role.into(),
    };
    write_json(&path.with_extension("json"), &meta)
}

/// Binary PGM (P5), 0/255. Rows run over the first axis; a 1D mask is one
/// row, and 3D masks are stacked slice by slice.
pub fn encode_pgm(mask: &Mask) -> Vec<u8> {
    let g = mask.grid();
    let (width, height) = match g.d {
        1 => (g.n, 1),
        _ => (g.n, g.len() / g.n),
    };
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(
        mask.indicator()
            .iter()
            .map(|&v| if v > 0.5 { 255u8 } else { 0 }),
    );
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskMeta {
    pub covered_fraction: f64,
    pub delta: f64,
    pub d: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
}

pub fn write_mask(path: &Path, mask: &Mask) -> Result<()> {
    write_atomic(path, &encode_pgm(mask))?;
    let g = mask.grid();
    let meta = MaskMeta {
        covered_fraction: mask.covered_fraction(),
        delta: mask.delta(),
        d: g.d,
        n: g.n,
        length: g.length,
    };
    write_json(&path.with_extension("json"), &meta)
}
