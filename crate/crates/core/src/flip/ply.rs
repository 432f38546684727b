//! ASCII PLY particle dumps with `x y z vx vy vz` as float64 properties.

use std::io::{BufRead, Write};

use super::ParticleSet;
use crate::{Error, Result, Vec3};

pub fn write_ply<W: Write>(mut w: W, ps: &ParticleSet) -> Result<()> {
    writeln!(w, "ply")?;
    writeln!(w, "format ascii 1.0")?;
    writeln!(w, "element vertex {}", ps.len())?;
    for p in ["x", "y", "z", "vx", "vy", "vz"] {
        writeln!(w, "property double {p}")?;
    }
    writeln!(w, "end_header")?;
    for (x, v) in ps.positions.iter().zip(&ps.velocities) {
        writeln!(w, "{} {} {} {} {} {}", x.x, x.y, x.z, v.x, v.y, v.z)?;
    }
    Ok(())
}

pub fn read_ply<R: BufRead>(r: R) -> Result<ParticleSet> {
    let mut lines = r.lines();
    let mut next = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::Format("unexpected end of PLY".into()))?
            .map_err(Error::from)
    };
    if next()?.trim() != "ply" {
        return Err(Error::Format("missing ply magic".into()));
    }
    let mut count = None;
    let mut props = Vec::new();
    loop {
        let l = next()?;
        let t: Vec<&str> = l.split_whitespace().collect();
        match t.as_slice() {
            ["format", "ascii", _] => {}
            ["format", ..] => return Err(Error::Format("only ASCII PLY is supported".into())),
            ["element", "vertex", n] => {
                count = Some(n.parse::<usize>().map_err(|_| Error::Format("bad vertex count".into()))?)
            }
            ["property", _, name] => props.push(name.to_string()),
            ["end_header"] => break,
            _ => {}
        }
    }
    let want = ["x", "y", "z", "vx", "vy", "vz"];
    if props != want {
        return Err(Error::Format(format!("expected properties {want:?}, got {props:?}")));
    }
    let n = count.ok_or_else(|| Error::Format("missing vertex element".into()))?;
    let mut ps = ParticleSet::new();
    for _ in 0..n {
        let l = next()?;
        let v: Vec<f64> = l
            .split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Format("bad particle record".into()))?;
        if v.len() != 6 {
            return Err(Error::Format("particle record needs 6 values".into()));
        }
        ps.push(Vec3::new(v[0], v[1], v[2]), Vec3::new(v[3], v[4], v[5]));
    }
    Ok(ps)
}
