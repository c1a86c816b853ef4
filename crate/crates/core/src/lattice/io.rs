//! Binary and CSV persistence for grid-sampled fields.
//!
//! Binary layout (little endian):
//!
//! ```text
//! magic  "MGF1"        4 bytes
//! dim    u8            2 or 3
//! kind   u8            0 = real, 1 = complex
//! m      u32           nodes per edge
//! center f64 × dim
//! edge   f64
//! values f64 × mⁿ (real) or (re, im) f64 pairs × mⁿ (complex)
//! ```

use std::fmt::Write as _;
use std::io::{Read, Write};

use num_complex::Complex;

use super::{Cube, Grid, GridFunction};
use crate::error::{Error, Result};
use crate::scalar::Real;

const MAGIC: &[u8; 4] = b"MGF1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Real,
    Complex,
}

/// Serialize `u`; `Real` drops imaginary parts (they must be zero).
pub fn write_binary<T: Real, W: Write>(u: &GridFunction<T>, kind: ValueKind, mut w: W) -> Result<()> {
    let io = |e: std::io::Error| Error::Format(e.to_string());
    let g = u.grid();
    w.write_all(MAGIC).map_err(io)?;
    w.write_all(&[g.dim() as u8, matches!(kind, ValueKind::Complex) as u8]).map_err(io)?;
    w.write_all(&(g.m() as u32).to_le_bytes()).map_err(io)?;
    for &c in g.cube().center() {
        w.write_all(&c.as_f64().to_le_bytes()).map_err(io)?;
    }
    w.write_all(&g.cube().edge().as_f64().to_le_bytes()).map_err(io)?;
    for z in u.values() {
        if kind == ValueKind::Real && z.im != T::zero() {
            return Err(Error::Format("complex values cannot be stored as real".into()));
        }
        w.write_all(&z.re.as_f64().to_le_bytes()).map_err(io)?;
        if kind == ValueKind::Complex {
            w.write_all(&z.im.as_f64().to_le_bytes()).map_err(io)?;
        }
    }
    Ok(())
}

pub fn read_binary<T: Real, R: Read>(mut r: R) -> Result<(GridFunction<T>, ValueKind)> {
    let io = |e: std::io::Error| Error::Format(format!("truncated field file: {e}"));
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let mut hdr = [0u8; 2];
    r.read_exact(&mut hdr).map_err(io)?;
    let dim = hdr[0] as usize;
    let kind = match hdr[1] {
        0 => ValueKind::Real,
        1 => ValueKind::Complex,
        k => return Err(Error::Format(format!("unknown value kind {k}"))),
    };
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4).map_err(io)?;
    let m = u32::from_le_bytes(b4) as usize;
    let mut f = || -> Result<f64> {
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8).map_err(io)?;
        Ok(f64::from_le_bytes(b8))
    };
    let center = (0..dim).map(|_| f().map(T::lit)).collect::<Result<Vec<_>>>()?;
    let edge = T::lit(f()?);
    let grid = Grid::new(Cube::new(center, edge)?, m)?;
    let mut values = Vec::with_capacity(grid.node_count());
    for _ in 0..grid.node_count() {
        let re = T::lit(f()?);
        let im = if kind == ValueKind::Complex { T::lit(f()?) } else { T::zero() };
        values.push(Complex::new(re, im));
    }
    Ok((GridFunction::new(grid, values)?, kind))
}

/// Debug export: one row per node with coordinates and value parts.
pub fn to_csv<T: Real>(u: &GridFunction<T>) -> String {
    let g = u.grid();
    let axes = ["x1", "x2", "x3"];
    let mut out = String::new();
    let _ = writeln!(out, "{},re,im", axes[..g.dim()].join(","));
    for (i, z) in u.values().iter().enumerate() {
        let x = g.node_coord(i);
        for xk in x.iter().take(g.dim()) {
            let _ = write!(out, "{},", xk.as_f64());
        }
        let _ = writeln!(out, "{},{}", z.re.as_f64(), z.im.as_f64());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::rasterize;

    #[test]
    fn binary_roundtrip() {
        let g = rasterize(&Cube::<f64>::new(vec![0.5, -0.25, 2.0], 1.5).unwrap(), 4).unwrap();
        let u = GridFunction::from_fn(g, |x| Complex::new(x[0] * x[1], x[2].cos())).unwrap();
        let mut buf = Vec::new();
        write_binary(&u, ValueKind::Complex, &mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 2 + 4 + 8 * 4 + 16 * 64);
        let (back, kind) = read_binary::<f64, _>(buf.as_slice()).unwrap();
        assert_eq!(kind, ValueKind::Complex);
        assert_eq!(back, u);
    }

    #[test]
    fn real_kind_rejects_imaginary() {
        let g = rasterize(&Cube::<f64>::unit(2).unwrap(), 3).unwrap();
        let u = GridFunction::constant(g, Complex::new(1.0, 1.0));
        assert!(write_binary(&u, ValueKind::Real, Vec::new()).is_err());
    }

    #[test]
    fn truncated_input_is_an_error() {
        let g = rasterize(&Cube::<f64>::unit(2).unwrap(), 3).unwrap();
        let u = GridFunction::from_real_fn(g, |x| x[0]).unwrap();
        let mut buf = Vec::new();
        write_binary(&u, ValueKind::Real, &mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_binary::<f64, _>(buf.as_slice()).is_err());
        assert!(read_binary::<f64, _>(&b"XXXX"[..]).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let g = rasterize(&Cube::<f64>::unit(2).unwrap(), 3).unwrap();
        let csv = to_csv(&GridFunction::from_real_fn(g, |x| x[0] + x[1]).unwrap());
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "x1,x2,re,im");
        assert_eq!(lines.len(), 10);
        assert_eq!(lines[9], "1,1,2,0");
    }
}
