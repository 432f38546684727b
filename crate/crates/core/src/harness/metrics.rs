//! Per-frame metrics as CSV.

use std::io::Write;

use crate::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub frame: usize,
    pub t: f64,
    pub max_rel_div: f64,
    pub volume: f64,
    pub probes: Vec<f64>,
}

/// Writes the header on creation and one line per row. Floats use the
/// shortest representation that round-trips.
pub struct MetricsWriter<W: Write> {
    out: W,
    probes: usize,
}

impl<W: Write> MetricsWriter<W> {
    pub fn new(mut out: W, probes: usize) -> Result<Self> {
        let mut header = String::from("frame,t,max_rel_div,volume");
        for i in 0..probes {
            header.push_str(&format!(",probe_{i}"));
        }
        writeln!(out, "{header}")?;
        Ok(Self { out, probes })
    }

    pub fn write(&mut self, row: &MetricsRow) -> Result<()> {
        assert_eq!(row.probes.len(), self.probes, "probe count");
        let mut line = format!("{},{:?},{:?},{:?}", row.frame, row.t, row.max_rel_div, row.volume);
        for p in &row.probes {
            line.push_str(&format!(",{p:?}"));
        }
        writeln!(self.out, "{line}")?;
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Parses metrics text back into rows (header skipped).
pub fn read_metrics(text: &str) -> std::result::Result<Vec<MetricsRow>, String> {
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() < 4 {
            return Err(format!("line {}: too few columns", n + 1));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| format!("line {}: {e}", n + 1));
        rows.push(MetricsRow {
            frame: f[0].parse().map_err(|e| format!("line {}: {e}", n + 1))?,
            t: num(f[1])?,
            max_rel_div: num(f[2])?,
            volume: num(f[3])?,
            probes: f[4..].iter().map(|s| num(s)).collect::<std::result::Result<_, _>>()?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_round_trip() {
        let mut w = MetricsWriter::new(Vec::new(), 2).unwrap();
        let row = MetricsRow {
            frame: 3,
            t: 0.1 + 0.2,
            max_rel_div: 1.0e-9 / 3.0,
            volume: 2.0 / 3.0,
            probes: vec![0.1, -1e-300],
        };
        w.write(&row).unwrap();
        let text = String::from_utf8(w.into_inner()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("frame,t,max_rel_div,volume,probe_0,probe_1"));
        assert_eq!(lines.next(), Some("3,0.30000000000000004,3.3333333333333337e-10,0.6666666666666666,0.1,-1e-300"));
        assert_eq!(read_metrics(&text).unwrap(), vec![row]);
    }
}
