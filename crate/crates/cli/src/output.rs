//! Atomic file output and CSV rendering.

use std::io::Write;
use std::path::Path;

use relbgk::diagnostics::{IndifferentiabilityReport, ProbeReport};
use relbgk::dynamics::SeriesRow;

use crate::error::{CliError, CliResult};

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Shortest round-trip representation in exponent form.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

fn render(header: Vec<String>, rows: Vec<Vec<String>>) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Output(e.to_string());
    w.write_record(&header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::Output(e.to_string()))
}

/// `step,time,n_i,ux_i,uy_i,uz_i,T_i (per species),entropy,h_monitor,max_residual,beta_tilde`.
pub fn series_csv(rows: &[SeriesRow], n_species: usize) -> CliResult<Vec<u8>> {
    let mut header = vec!["step".to_string(), "time".to_string()];
    for i in 0..n_species {
        for q in ["n", "ux", "uy", "uz", "T"] {
            header.push(format!("{q}_{i}"));
        }
    }
    header.extend(["entropy", "h_monitor", "max_residual", "beta_tilde"].map(String::from));
    let body = rows
        .iter()
        .map(|r| {
            let mut v = vec![r.step.to_string(), num(r.time)];
            for s in &r.species {
                v.extend([num(s.n), num(s.u[0]), num(s.u[1]), num(s.u[2]), num(s.temperature)]);
            }
            v.extend([num(r.entropy), num(r.h_monitor), num(r.max_residual), num(r.beta_tilde)]);
            v
        })
        .collect();
    render(header, body)
}

pub fn probe_csv(report: &ProbeReport) -> CliResult<Vec<u8>> {
    let header = ["epsilon", "beta_tilde", "inv_beta", "scaled_temperature", "temperature_defect", "l1", "linf", "error"]
        .map(String::from)
        .to_vec();
    let body = report
        .rows
        .iter()
        .map(|r| {
            vec![
                num(r.epsilon),
                num(r.beta_tilde),
                num(r.inv_beta),
                num(r.scaled_temperature),
                num(r.temperature_defect),
                num(r.l1),
                num(r.linf),
                r.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    render(header, body)
}

pub fn indifferentiability_csv(report: &IndifferentiabilityReport) -> CliResult<Vec<u8>> {
    let body = report
        .l1_history
        .iter()
        .enumerate()
        .map(|(k, d)| vec![(k + 1).to_string(), num(*d)])
        .collect();
    render(vec!["step".into(), "l1".into()], body)
}

pub fn table(header: &[&str], rows: &[Vec<String>]) -> CliResult<Vec<u8>> {
    render(header.iter().map(|s| s.to_string()).collect(), rows.to_vec())
}
