use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use super::engine::{Summary, TrialRecord, RECORD_HEADER};
use crate::error::{Error, Result};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv { path: path.to_path_buf(), source }
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(io_err(dir)),
        _ => Ok(()),
    }
}

pub fn write_records_csv(path: &Path, records: &[TrialRecord]) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(RECORD_HEADER).map_err(csv_err(path))?;
    for r in records {
        w.write_record(r.csv_fields()).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads a records CSV back as rows of strings keyed by the header.
pub fn read_records_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for row in r.records() {
        rows.push(row.map_err(csv_err(path))?.iter().map(String::from).collect());
    }
    Ok((header, rows))
}

pub fn write_summary_json(path: &Path, summary: &Summary) -> Result<()> {
    ensure_parent(path)?;
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, summary).map_err(|e| Error::Io { path: path.to_path_buf(), source: e.into() })?;
    writeln!(w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

/// Plot-ready log-log columns, one row per cell.
pub fn write_rates_csv(path: &Path, summary: &Summary) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record([
        "s",
        "n",
        "log_n",
        "log_mean_err_2inf",
        "log_mean_err_frob",
        "log_mean_err_proj_spectral",
        "log_mean_submatrix_concentration",
        "log_cor_bound",
    ])
    .map_err(csv_err(path))?;
    for c in &summary.cells {
        let f = |x: f64| format!("{:.16e}", x.ln());
        w.write_record([
            c.s.to_string(),
            c.n.to_string(),
            f(c.n as f64),
            f(c.err_2inf.mean),
            f(c.err_frob.mean),
            f(c.err_proj_spectral.mean),
            f(c.submatrix_concentration.mean),
            f(c.cor_bound),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}
