//! On-disk feature matrices.
//!
//! Binary layout, little-endian: magic `ASFE`, `u16` version, `u32` row
//! count, `u16` band count, then per row a `u32` frame index, a `u8` stride
//! and `n_bands` `f32` values.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::filterbank::FeatureMatrix;
use crate::sparsity::Stride;

pub const MAGIC: &[u8; 4] = b"ASFE";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeatureFormat {
    #[default]
    Csv,
    Binary,
}

impl std::str::FromStr for FeatureFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "bin" | "binary" => Ok(Self::Binary),
            _ => Err(Error::invalid(format!("unknown feature format {s:?}"))),
        }
    }
}

pub fn write_features<W: Write>(m: &FeatureMatrix, format: FeatureFormat, w: W) -> Result<()> {
    match format {
        FeatureFormat::Csv => write_csv(m, w),
        FeatureFormat::Binary => write_binary(m, w),
    }
}

pub fn read_features<R: BufRead>(format: FeatureFormat, r: R) -> Result<FeatureMatrix> {
    match format {
        FeatureFormat::Csv => read_csv(r),
        FeatureFormat::Binary => read_binary(r),
    }
}

pub fn write_binary<W: Write>(m: &FeatureMatrix, mut w: W) -> Result<()> {
    let n_rows = u32::try_from(m.n_rows()).map_err(|_| Error::invalid("too many rows"))?;
    let n_bands = u16::try_from(m.n_bands).map_err(|_| Error::invalid("too many bands"))?;
    let mut buf = Vec::with_capacity(12 + m.n_rows() * (5 + 4 * m.n_bands));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&n_rows.to_le_bytes());
    buf.extend_from_slice(&n_bands.to_le_bytes());
    for row in &m.rows {
        buf.extend_from_slice(&row.frame_index.to_le_bytes());
        buf.push(row.stride.as_u8());
        for v in &row.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

fn take<const N: usize>(r: &mut impl Read, what: &str) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Parse(format!("truncated feature file at {what}")),
        _ => Error::Io(e),
    })?;
    Ok(b)
}

fn parse_stride(v: u8) -> Result<Stride> {
    match Stride::from_u8(v) {
        Some(s) if s != Stride::Skip => Ok(s),
        _ => Err(Error::Parse(format!("bad stride value {v}"))),
    }
}

pub fn read_binary<R: Read>(mut r: R) -> Result<FeatureMatrix> {
    if &take::<4>(&mut r, "magic")? != MAGIC {
        return Err(Error::Parse("bad magic".into()));
    }
    let version = u16::from_le_bytes(take(&mut r, "version")?);
    if version != VERSION {
        return Err(Error::Format {
            field: "version",
            detail: format!("expected {VERSION}, got {version}"),
        });
    }
    let n_rows = u32::from_le_bytes(take(&mut r, "row count")?);
    let n_bands = u16::from_le_bytes(take(&mut r, "band count")?) as usize;
    let mut m = FeatureMatrix::new(n_bands);
    for _ in 0..n_rows {
        let idx = u32::from_le_bytes(take(&mut r, "frame index")?);
        let stride = parse_stride(take::<1>(&mut r, "stride")?[0])?;
        let values = (0..n_bands)
            .map(|_| Ok(f32::from_le_bytes(take(&mut r, "value")?)))
            .collect::<Result<Vec<_>>>()?;
        m.push(idx, stride, values)?;
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Parse("trailing bytes after feature rows".into()));
    }
    Ok(m)
}

/// Header `frame_index,stride,band_0,...`; values use the shortest text that
/// parses back to the same `f32`.
pub fn write_csv<W: Write>(m: &FeatureMatrix, mut w: W) -> Result<()> {
    let mut out = String::from("frame_index,stride");
    for k in 0..m.n_bands {
        out.push_str(&format!(",band_{k}"));
    }
    out.push('\n');
    for row in &m.rows {
        out.push_str(&format!("{},{}", row.frame_index, row.stride.as_u8()));
        for v in &row.values {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

pub fn read_csv<R: BufRead>(r: R) -> Result<FeatureMatrix> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty feature file".into()))??;
    let cols: Vec<&str> = header.trim_end().split(',').collect();
    if cols.len() < 2 || cols[0] != "frame_index" || cols[1] != "stride" {
        return Err(Error::Parse(format!("bad header {header:?}")));
    }
    let n_bands = cols.len() - 2;
    let mut m = FeatureMatrix::new(n_bands);
    for (ln, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Parse(format!("line {}: bad {what}", ln + 2));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != n_bands + 2 {
            return Err(bad("column count"));
        }
        let idx: u32 = f[0].parse().map_err(|_| bad("frame index"))?;
        let stride = parse_stride(f[1].parse().map_err(|_| bad("stride"))?)?;
        let values = f[2..]
            .iter()
            .map(|s| s.parse::<f32>().map_err(|_| bad("value")))
            .collect::<Result<Vec<_>>>()?;
        m.push(idx, stride, values)?;
    }
    Ok(m)
}
