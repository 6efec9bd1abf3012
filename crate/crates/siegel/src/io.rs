//! Rotation-number specs, report files, field dumps and heatmaps.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use siegel_core::arithmetic::{cf_expand, named, ArithmeticError, ContinuedFraction};
use siegel_core::measure::GridField;

/// Version of every JSON document written by this crate.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("cannot parse rotation number {0:?}")]
    BadTheta(String),
    #[error(transparent)]
    Arithmetic(#[from] ArithmeticError),
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Parses `golden`, `silver`, `david-demo`, a decimal in `(0, 1)`, a
/// fraction `p/q`, or a quotient list `[a1, a2, ...]`.
pub fn parse_theta(spec: &str, depth: usize) -> Result<ContinuedFraction, IoError> {
    let s = spec.trim();
    match s {
        "golden" => return Ok(named::golden(depth)),
        "silver" => return Ok(named::silver(depth)),
        "david-demo" => return Ok(named::david_demo(depth.min(25))?),
        _ => {}
    }
    if let Some(list) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
        let quotients = list
            .split(',')
            .map(|a| a.trim().parse::<u64>().ok().filter(|&a| a > 0))
            .collect::<Option<Vec<u64>>>()
            .ok_or_else(|| IoError::BadTheta(spec.into()))?;
        return Ok(ContinuedFraction::from_quotients(&quotients)?);
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: u128 = p.trim().parse().map_err(|_| IoError::BadTheta(spec.into()))?;
        let q: u128 = q.trim().parse().map_err(|_| IoError::BadTheta(spec.into()))?;
        return Ok(ContinuedFraction::from_ratio(p, q, depth)?);
    }
    let x: f64 = s.parse().map_err(|_| IoError::BadTheta(spec.into()))?;
    Ok(cf_expand(x, depth)?)
}

/// The value of `θ` without requiring an irrational expansion: rationals
/// and decimals pass through, so the renderer can warn about them instead.
pub fn parse_theta_value(spec: &str, depth: usize) -> Result<f64, IoError> {
    let s = spec.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: u64 = p.trim().parse().map_err(|_| IoError::BadTheta(spec.into()))?;
        let q: u64 = q.trim().parse().map_err(|_| IoError::BadTheta(spec.into()))?;
        if q == 0 || p >= q {
            return Err(IoError::BadTheta(spec.into()));
        }
        return Ok(p as f64 / q as f64);
    }
    if let Ok(x) = s.parse::<f64>() {
        return if x > 0.0 && x < 1.0 { Ok(x) } else { Err(IoError::BadTheta(spec.into())) };
    }
    Ok(parse_theta(spec, depth)?.value)
}

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File { path: path.display().to_string(), source }
}

pub fn ensure_dir(dir: &Path) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(file_err(dir))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(file_err(path))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(file_err(path))
}

/// CSV to an arbitrary writer, e.g. stdout.
pub fn csv_to<T: Serialize>(out: impl Write, rows: &[T]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|source| IoError::File { path: "<stream>".into(), source })
}

/// Flat little-endian dump: chart id (u8), half width (f64), resolution
/// (u64), then the values as f64.
pub fn field_bytes(field: &GridField) -> Vec<u8> {
    let mut out = Vec::with_capacity(17 + 8 * field.values.len());
    out.push(field.chart.id());
    out.extend_from_slice(&field.half_width.to_le_bytes());
    out.extend_from_slice(&(field.resolution as u64).to_le_bytes());
    for v in &field.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Grey-to-amber P6 heatmap of `values` over `[lo, hi]`, top row first.
pub fn heatmap_ppm(field: &GridField, lo: f64, hi: f64) -> Vec<u8> {
    let n = field.resolution;
    let mut out = format!("P6\n{n} {n}\n255\n").into_bytes();
    let span = if hi > lo { hi - lo } else { 1.0 };
    for row in (0..n).rev() {
        for col in 0..n {
            let v = field.values[row * n + col];
            let t = ((v - lo) / span).clamp(0.0, 1.0);
            let px = if field.weights[row * n + col] == 0.0 {
                [0, 0, 0]
            } else {
                [(40.0 + 210.0 * t) as u8, (40.0 + 150.0 * t) as u8, (60.0 - 40.0 * t) as u8]
            };
            out.extend_from_slice(&px);
        }
    }
    out
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    fs::write(path, bytes).map_err(file_err(path))
}
