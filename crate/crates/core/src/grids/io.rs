//! Chunked little-endian binary format for sparse scalar grids.
//!
//! Layout: magic `HSGR`, version `u32`, `dx: f64`, `origin: [f64; 3]`, then
//! one record per allocated block: block index `[i32; 3]` followed by 512
//! `f32` values (x fastest). Inactive voxels are written as NaN so the
//! activity mask survives a round trip.

use std::io::{Read, Write};

use super::block::{BlockGrid, Coord, BLOCK_VOLUME};
use super::{Lattice, LevelSet};
use crate::{Error, Result, Vec3};

pub const MAGIC: &[u8; 4] = b"HSGR";
pub const VERSION: u32 = 1;

pub fn write_grid<W: Write>(mut w: W, lattice: &Lattice, grid: &BlockGrid<f64>) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&lattice.dx.to_le_bytes())?;
    for a in 0..3 {
        w.write_all(&lattice.origin[a].to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(12 + 4 * BLOCK_VOLUME);
    for (b, values, mask) in grid.blocks() {
        buf.clear();
        for a in 0..3 {
            buf.extend_from_slice(&b[a].to_le_bytes());
        }
        for (o, v) in values.iter().enumerate() {
            let active = mask[o >> 6] >> (o & 63) & 1 == 1;
            let x = if active { *v as f32 } else { f32::NAN };
            buf.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_grid<R: Read>(mut r: R, background: f64) -> Result<(Lattice, BlockGrid<f64>)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic, expected HSGR".into()));
    }
    let version = u32::from_le_bytes(read_n(&mut r)?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dx = f64::from_le_bytes(read_n(&mut r)?);
    let mut origin = Vec3::zeros();
    for a in 0..3 {
        origin[a] = f64::from_le_bytes(read_n(&mut r)?);
    }
    if !(dx > 0.0) || !origin.iter().all(|v| v.is_finite()) {
        return Err(Error::Format("invalid lattice header".into()));
    }
    let lattice = Lattice::new(dx, origin);
    let mut grid = BlockGrid::new(background);
    let mut rec = vec![0u8; 12 + 4 * BLOCK_VOLUME];
    loop {
        match read_record(&mut r, &mut rec)? {
            false => break,
            true => {
                let mut b: Coord = [0; 3];
                for a in 0..3 {
                    b[a] = i32::from_le_bytes(rec[4 * a..4 * a + 4].try_into().unwrap());
                }
                for o in 0..BLOCK_VOLUME {
                    let s = 12 + 4 * o;
                    let v = f32::from_le_bytes(rec[s..s + 4].try_into().unwrap());
                    if !v.is_nan() {
                        let oi = o as i32;
                        let c = [b[0] * 8 + (oi & 7), b[1] * 8 + ((oi >> 3) & 7), b[2] * 8 + (oi >> 6)];
                        grid.set(c, v as f64);
                    }
                }
            }
        }
    }
    Ok((lattice, grid))
}

pub fn write_levelset<W: Write>(w: W, ls: &LevelSet) -> Result<()> {
    write_grid(w, &ls.lattice, &ls.values)
}

pub fn read_levelset<R: Read>(r: R, bandwidth: f64) -> Result<LevelSet> {
    let (lattice, values) = read_grid(r, bandwidth)?;
    Ok(LevelSet {
        lattice,
        bandwidth,
        values,
    })
}

fn read_n<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

/// Reads one full record; `false` on clean end of stream.
fn read_record<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<bool> {
    let mut got = 0;
    while got < buf.len() {
        let n = r.read(&mut buf[got..])?;
        if n == 0 {
            if got == 0 {
                return Ok(false);
            }
            return Err(Error::Format("truncated block record".into()));
        }
        got += n;
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let lat = Lattice::new(0.02, Vec3::new(1.0, -2.0, 0.5));
        let mut g = BlockGrid::new(0.3);
        g.set([-1, 0, 9], 0.125);
        g.set([4, 4, 4], -0.25);
        g.set([17, -30, 2], 1.5);
        let mut bytes = Vec::new();
        write_grid(&mut bytes, &lat, &g).unwrap();
        assert_eq!(&bytes[..4], b"HSGR");
        assert_eq!(bytes.len(), 4 + 4 + 8 + 24 + 3 * (12 + 2048));
        let (lat2, g2) = read_grid(&bytes[..], 0.3).unwrap();
        assert_eq!(lat2, lat);
        assert_eq!(g2.coords(), g.coords());
        for (c, v) in g.iter() {
            assert_eq!(g2.value(c), v);
        }
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        assert!(matches!(read_grid(&b"NOPE\x01\0\0\0"[..], 0.0), Err(Error::Format(_))));
        let lat = Lattice::new(1.0, Vec3::zeros());
        let mut g = BlockGrid::new(0.0);
        g.set([0, 0, 0], 1.0);
        let mut bytes = Vec::new();
        write_grid(&mut bytes, &lat, &g).unwrap();
        bytes.truncate(bytes.len() - 5);
        assert!(matches!(read_grid(&bytes[..], 0.0), Err(Error::Format(_))));
    }
}
