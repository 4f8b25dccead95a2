//! CSV point clouds: one point per row, comma-separated decimal floats, with
//! an optional single header row detected by a non-numeric first row.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use heatfit::PointCloud;

use crate::HarnessError;

fn io_err(path: &Path, source: std::io::Error) -> HarnessError {
    HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn read_cloud(path: &Path) -> Result<PointCloud, HarnessError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    parse_cloud(file, &path.display().to_string())
}

/// Parses CSV text from any reader; `label` names the source in errors.
pub fn parse_cloud<R: Read>(reader: R, label: &str) -> Result<PointCloud, HarnessError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut dim: Option<usize> = None;
    let mut coords = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| HarnessError::Csv {
            path: label.to_string(),
            message: e.to_string(),
        })?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Vec<Result<f64, &str>> = record.iter().map(|c| c.parse::<f64>().map_err(|_| c)).collect();
        if row == 1 && parsed.iter().any(Result::is_err) {
            continue;
        }
        let expected = *dim.get_or_insert(parsed.len());
        if parsed.len() != expected {
            return Err(HarnessError::Ragged {
                path: label.to_string(),
                row,
                expected,
                found: parsed.len(),
            });
        }
        for (col, cell) in parsed.into_iter().enumerate() {
            match cell {
                Ok(v) if v.is_finite() => coords.push(v),
                Ok(_) | Err(_) => {
                    return Err(HarnessError::BadCell {
                        path: label.to_string(),
                        row,
                        column: col + 1,
                        cell: record.get(col).unwrap_or_default().to_string(),
                    })
                }
            }
        }
    }
    let dim = dim.ok_or(heatfit::Error::EmptyInput)?;
    Ok(PointCloud::from_flat(dim, coords)?)
}

/// Writes one row per point using the shortest decimal form that parses back
/// to the identical `f64`.
pub fn write_cloud(cloud: &PointCloud, path: &Path) -> Result<(), HarnessError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    format_cloud(cloud, &mut out).map_err(|e| io_err(path, e))?;
    out.flush().map_err(|e| io_err(path, e))
}

pub fn format_cloud<W: Write>(cloud: &PointCloud, out: &mut W) -> std::io::Result<()> {
    for p in cloud.iter() {
        let mut first = true;
        for v in p {
            if !first {
                out.write_all(b",")?;
            }
            write!(out, "{v}")?;
            first = false;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes tidy long-format `series,x,y` rows for external plotting tools.
pub fn write_tidy(rows: &[(String, f64, f64)], path: &Path) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::Csv {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let csv_err = |e: csv::Error| HarnessError::Csv {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    w.write_record(["series", "x", "y"]).map_err(csv_err)?;
    for (s, x, y) in rows {
        w.write_record([s.clone(), x.to_string(), y.to_string()]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| io_err(path, e))
}
