//! HFLD binary and CSV encodings of a [`HeightField`].
//!
//! HFLD layout (little-endian): `"HFLD"`, `u16` version, `u32 nx`, `u32 ny`,
//! `f64 cell`, `f64 origin_x`, `f64 origin_y`, then `nx * ny` `f32` heights
//! row-major. Heights are stored in single precision.

use std::fmt::Write as _;
use std::path::Path;

use super::{FieldDims, HeightField};
use crate::io::{read_file, write_atomic, Reader};
use crate::{Error, Result};

pub const HFLD_MAGIC: &[u8; 4] = b"HFLD";
pub const HFLD_VERSION: u16 = 1;

impl HeightField {
    pub fn to_hfld_bytes(&self) -> Vec<u8> {
        let d = self.dims();
        let mut out = Vec::with_capacity(38 + 4 * d.len());
        out.extend_from_slice(HFLD_MAGIC);
        out.extend_from_slice(&HFLD_VERSION.to_le_bytes());
        out.extend_from_slice(&(d.nx as u32).to_le_bytes());
        out.extend_from_slice(&(d.ny as u32).to_le_bytes());
        out.extend_from_slice(&d.cell.to_le_bytes());
        out.extend_from_slice(&d.origin[0].to_le_bytes());
        out.extend_from_slice(&d.origin[1].to_le_bytes());
        for h in self.heights() {
            out.extend_from_slice(&(*h as f32).to_le_bytes());
        }
        out
    }

    pub fn from_hfld_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader::new(buf, "HFLD");
        if r.take(4)? != HFLD_MAGIC {
            return Err(Error::format("HFLD", "bad magic"));
        }
        let version = r.u16()?;
        if version != HFLD_VERSION {
            return Err(Error::format("HFLD", format!("unsupported version {version}")));
        }
        let nx = r.u32()? as usize;
        let ny = r.u32()? as usize;
        let cell = r.f64()?;
        let origin = [r.f64()?, r.f64()?];
        let dims = FieldDims::new(nx, ny, cell, origin).map_err(|e| Error::format("HFLD", e.to_string()))?;
        let mut heights = Vec::with_capacity(dims.len());
        for _ in 0..dims.len() {
            heights.push(f64::from(r.f32()?));
        }
        r.finish()?;
        HeightField::new(dims, heights).map_err(|e| Error::format("HFLD", e.to_string()))
    }

    /// `ny` lines of `nx` comma-separated heights; row `j` is line `j`.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::new();
        for j in 0..self.ny() {
            for i in 0..self.nx() {
                if i > 0 {
                    s.push(',');
                }
                write!(s, "{}", self.get(i, j)).unwrap();
            }
            s.push('\n');
        }
        s
    }

    /// CSV carries no geometry, so cell size and origin are supplied.
    pub fn from_csv_str(text: &str, cell: f64, origin: [f64; 2]) -> Result<Self> {
        let mut heights = Vec::new();
        let mut nx = None;
        let mut ny = 0;
        for (line_no, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let before = heights.len();
            for tok in line.split(',') {
                let v: f64 = tok.trim().parse().map_err(|_| {
                    Error::format("CSV heightfield", format!("line {}: bad number {tok:?}", line_no + 1))
                })?;
                heights.push(v);
            }
            let width = heights.len() - before;
            match nx {
                None => nx = Some(width),
                Some(w) if w != width => {
                    return Err(Error::format(
                        "CSV heightfield",
                        format!("line {} has {width} values, expected {w}", line_no + 1),
                    ))
                }
                _ => {}
            }
            ny += 1;
        }
        let dims = FieldDims::new(nx.unwrap_or(0), ny, cell, origin)?;
        HeightField::new(dims, heights)
    }
}

pub fn write_hfld(path: impl AsRef<Path>, field: &HeightField) -> Result<()> {
    write_atomic(path, &field.to_hfld_bytes())
}

pub fn read_hfld(path: impl AsRef<Path>) -> Result<HeightField> {
    let path = path.as_ref();
    HeightField::from_hfld_bytes(&read_file(path)?).map_err(|e| match e {
        Error::Format { what, reason } => Error::Format {
            what,
            reason: format!("{}: {reason}", path.display()),
        },
        other => other,
    })
}

pub fn write_csv(path: impl AsRef<Path>, field: &HeightField) -> Result<()> {
    write_atomic(path, field.to_csv_string().as_bytes())
}

pub fn read_csv(path: impl AsRef<Path>, cell: f64, origin: [f64; 2]) -> Result<HeightField> {
    let bytes = read_file(path.as_ref())?;
    let text = String::from_utf8(bytes).map_err(|_| Error::format("CSV heightfield", "not UTF-8"))?;
    HeightField::from_csv_str(&text, cell, origin)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_field() -> HeightField {
        let dims = FieldDims::new(7, 5, 0.1, [-0.3, 1.0]).unwrap();
        HeightField::from_fn(dims, |x, y| 0.25 * x + y * y).unwrap()
    }

    #[test]
    fn hfld_header_layout() {
        let b = sample_field().to_hfld_bytes();
        assert_eq!(&b[0..4], b"HFLD");
        assert_eq!(u16::from_le_bytes([b[4], b[5]]), 1);
        assert_eq!(u32::from_le_bytes(b[6..10].try_into().unwrap()), 7);
        assert_eq!(u32::from_le_bytes(b[10..14].try_into().unwrap()), 5);
        assert_eq!(f64::from_le_bytes(b[14..22].try_into().unwrap()), 0.1);
        assert_eq!(b.len(), 38 + 4 * 35);
    }

    #[test]
    fn hfld_roundtrip_at_single_precision() {
        let f = sample_field();
        let g = HeightField::from_hfld_bytes(&f.to_hfld_bytes()).unwrap();
        assert_eq!(f.dims(), g.dims());
        for (a, b) in f.heights().iter().zip(g.heights()) {
            assert_eq!(*b, f64::from(*a as f32));
        }
    }

    #[test]
    fn hfld_rejects_corruption() {
        let mut b = sample_field().to_hfld_bytes();
        assert!(HeightField::from_hfld_bytes(&b[..b.len() - 1]).is_err());
        b[4] = 9;
        assert!(HeightField::from_hfld_bytes(&b).is_err());
        b[0] = b'X';
        assert!(HeightField::from_hfld_bytes(&b).is_err());
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let f = sample_field();
        let g = HeightField::from_csv_str(&f.to_csv_string(), 0.1, [-0.3, 1.0]).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn csv_rejects_ragged_rows() {
        assert!(HeightField::from_csv_str("1,2,3\n4,5\n", 0.1, [0.0, 0.0]).is_err());
        assert!(HeightField::from_csv_str("1,x\n1,2\n", 0.1, [0.0, 0.0]).is_err());
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let f = sample_field();
        write_hfld(dir.path().join("a.hfld"), &f).unwrap();
        let g = read_hfld(dir.path().join("a.hfld")).unwrap();
        assert_eq!(g.dims(), f.dims());
        write_csv(dir.path().join("a.csv"), &f).unwrap();
        assert_eq!(read_csv(dir.path().join("a.csv"), 0.1, [-0.3, 1.0]).unwrap(), f);
    }
}
