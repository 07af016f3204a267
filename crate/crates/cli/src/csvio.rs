//! Curve CSV input (`curve_id,time,value`, long format) and grid-evaluated
//! output tables.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use pada::{FtsDataset, SampledCurve, TimeGrid};

const HEADER: [&str; 3] = ["curve_id", "time", "value"];

/// Curves ordered by id. Rows need not be sorted. Rows with an empty value
/// are treated as missing; curves left with no observations are skipped.
pub fn read_curves<R: Read>(reader: R) -> Result<FtsDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers().context("reading CSV header")?.iter().map(str::to_owned).collect();
    if header != HEADER {
        bail!("line 1: expected header `curve_id,time,value`, found `{}`", header.join(","));
    }
    let mut curves: BTreeMap<u64, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| anyhow!("line {line}: {e}"))?;
        if rec.len() != 3 {
            bail!("line {line}: expected 3 fields, found {}", rec.len());
        }
        let id: u64 = rec[0].parse().map_err(|_| anyhow!("line {line}: curve_id `{}` is not an integer", &rec[0]))?;
        let t: f64 = rec[1].parse().map_err(|_| anyhow!("line {line}: time `{}` is not a number", &rec[1]))?;
        if !(0.0..=1.0).contains(&t) {
            bail!("line {line}: time {t} outside [0, 1]");
        }
        let entry = curves.entry(id).or_default();
        if rec[2].is_empty() {
            continue;
        }
        let v: f64 = rec[2].parse().map_err(|_| anyhow!("line {line}: value `{}` is not a number", &rec[2]))?;
        if !v.is_finite() {
            bail!("line {line}: value must be finite");
        }
        entry.0.push(t);
        entry.1.push(v);
    }
    let mut out = Vec::with_capacity(curves.len());
    for (id, (times, values)) in curves {
        if times.is_empty() {
            log::warn!("curve {id} has no observed values; skipped");
            continue;
        }
        out.push(SampledCurve::new(id as usize, times, values)?);
    }
    if out.len() < 2 {
        bail!("need at least 2 non-empty curves, found {}", out.len());
    }
    Ok(FtsDataset::new(out)?)
}

pub fn read_curves_file(path: &Path) -> Result<FtsDataset> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_curves(std::io::BufReader::new(f)).with_context(|| format!("in {}", path.display()))
}

pub fn write_curves<W: Write>(writer: W, data: &FtsDataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HEADER)?;
    for c in data.curves() {
        for (t, v) in c.times().iter().zip(c.values()) {
            w.write_record([c.id().to_string(), t.to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn grid_header(grid: &TimeGrid, lead: &[&str]) -> Vec<String> {
    lead.iter().map(|s| s.to_string()).chain(grid.points().iter().map(|t| format!("t={t}"))).collect()
}

/// One row per curve: `curve_id, x(t_1), ..., x(t_G)`.
pub fn write_grid_table<W: Write>(writer: W, grid: &TimeGrid, rows: &[(usize, &[f64])]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(grid_header(grid, &["curve_id"]))?;
    for (id, vals) in rows {
        w.write_record(std::iter::once(id.to_string()).chain(vals.iter().map(|v| v.to_string())))?;
    }
    w.flush()?;
    Ok(())
}

/// One row per `(curve, band)`: `curve_id, band, x(t_1), ..., x(t_G)`.
pub fn write_band_table<W: Write>(writer: W, grid: &TimeGrid, rows: &[(usize, &str, &[f64])]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(grid_header(grid, &["curve_id", "band"]))?;
    for (id, band, vals) in rows {
        w.write_record([id.to_string(), band.to_string()].into_iter().chain(vals.iter().map(|v| v.to_string())))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_unsorted_rows() {
        let s = "curve_id,time,value\n2,0.5,1.0\n1,0.9,3.0\n1,0.1,2.0\n2,0.2,4.0\n";
        let d = read_curves(s.as_bytes()).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.curve(1).times(), &[0.1, 0.9]);
        assert_eq!(d.curve(2).values(), &[4.0, 1.0]);
    }

    #[test]
    fn bad_row_reports_line() {
        let s = "curve_id,time,value\n1,0.5,1.0\n1,abc,2.0\n2,0.1,1\n";
        let e = read_curves(s.as_bytes()).unwrap_err().to_string();
        assert!(e.contains("line 3"), "{e}");
        let s = "curve_id,time,value\n1,0.5,1.0\n2,1.5,2.0\n";
        assert!(read_curves(s.as_bytes()).unwrap_err().to_string().contains("line 3"));
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(read_curves("id,t,y\n1,0.5,1\n".as_bytes()).is_err());
    }

    #[test]
    fn empty_curve_skipped() {
        let s = "curve_id,time,value\n1,0.5,1.0\n2,0.3,\n3,0.1,2.0\n4,0.2,1.0\n";
        let d = read_curves(s.as_bytes()).unwrap();
        assert_eq!(d.len(), 3);
        // the dataset renumbers 1..=J, so input curve 3 becomes curve 2
        assert_eq!((d.curve(2).id(), d.curve(2).times()), (2, &[0.1][..]));
    }

    #[test]
    fn round_trip() {
        let s = "curve_id,time,value\n1,0.1,2\n1,0.9,3\n2,0.5,-1.25\n";
        let d = read_curves(s.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_curves(&mut buf, &d).unwrap();
        assert_eq!(read_curves(buf.as_slice()).unwrap(), d);
    }
}
