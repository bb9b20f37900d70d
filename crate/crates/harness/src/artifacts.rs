//! Per-chain sample dumps: a little-endian `f64` stream plus a JSON sidecar.
//!
//! Each row of the stream holds the position after one iteration followed by
//! its potential energy, region index and acceptance flag (0 or 1).

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use sahmc::{Algorithm, RunRecord, SamplerConfig, ThetaSnapshot};
use serde::{Deserialize, Serialize};

use crate::config::TargetSpec;
use crate::error::{HarnessError, HarnessResult};

pub const FORMAT: &str = "f64le-rows";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    /// Stream file name, relative to the sidecar.
    pub data: String,
    pub columns: Vec<String>,
    pub rows: usize,
    pub spec: TargetSpec,
    pub algorithm: Algorithm,
    pub target: String,
    pub dim: usize,
    pub config: SamplerConfig,
    pub momentum_trace: Vec<f64>,
    pub theta_trace: Vec<ThetaSnapshot>,
    pub visit_counts: Vec<u64>,
    pub final_theta: Option<Vec<f64>>,
    pub divergences: u64,
    pub wall_time: f64,
    pub warnings: Vec<String>,
}

pub fn columns(dim: usize) -> Vec<String> {
    (1..=dim)
        .map(|i| format!("x{i}"))
        .chain(["energy", "region", "accepted"].map(String::from))
        .collect()
}

/// Writes `path` through a temporary sibling and a rename, so readers never
/// observe a partial file.
pub fn write_atomic(
    path: &Path,
    fill: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> HarnessResult<()> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp)?);
        fill(&mut w)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| HarnessError::io(format!("writing {}", path.display()), e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> HarnessResult<()> {
    let text = serde_json::to_string_pretty(value)?;
    write_atomic(path, |w| {
        w.write_all(text.as_bytes())?;
        w.write_all(b"\n")
    })
}

/// Saves `record` as `<stem>.bin` and `<stem>.json` in `dir`, plus
/// `<stem>.csv` when `csv` is set. Returns the sidecar path.
pub fn save_record(
    dir: &Path,
    stem: &str,
    record: &RunRecord,
    spec: &TargetSpec,
    csv: bool,
) -> HarnessResult<PathBuf> {
    let d = record.dim;
    let row = |i: usize| {
        record.samples[i * d..(i + 1) * d]
            .iter()
            .copied()
            .chain([
                record.energies[i],
                record.regions[i] as f64,
                if record.accepted[i] { 1.0 } else { 0.0 },
            ])
    };
    let data_name = format!("{stem}.bin");
    write_atomic(&dir.join(&data_name), |w| {
        for i in 0..record.len() {
            for v in row(i) {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    })?;
    if csv {
        write_atomic(&dir.join(format!("{stem}.csv")), |w| {
            writeln!(w, "iter,{}", columns(d).join(","))?;
            for i in 0..record.len() {
                let cells: Vec<String> = row(i).map(|v| v.to_string()).collect();
                writeln!(w, "{},{}", i + 1, cells.join(","))?;
            }
            Ok(())
        })?;
    }
    let sidecar = Sidecar {
        format: FORMAT.into(),
        data: data_name,
        columns: columns(d),
        rows: record.len(),
        spec: spec.clone(),
        algorithm: record.algorithm,
        target: record.target.clone(),
        dim: d,
        config: record.config.clone(),
        momentum_trace: record.momentum_trace.clone(),
        theta_trace: record.theta_trace.clone(),
        visit_counts: record.visit_counts.clone(),
        final_theta: record.final_theta.clone(),
        divergences: record.divergences,
        wall_time: record.wall_time,
        warnings: record.warnings.clone(),
    };
    let path = dir.join(format!("{stem}.json"));
    write_json(&path, &sidecar)?;
    Ok(path)
}

/// Loads a record from its sidecar (or from the `.bin` next to one).
pub fn load_record(path: &Path) -> HarnessResult<(RunRecord, Sidecar)> {
    let sidecar_path = if path.extension().is_some_and(|e| e == "bin") {
        path.with_extension("json")
    } else {
        path.to_path_buf()
    };
    let text = fs::read_to_string(&sidecar_path)
        .map_err(|e| HarnessError::io(format!("reading {}", sidecar_path.display()), e))?;
    let sidecar: Sidecar = serde_json::from_str(&text)?;
    if sidecar.format != FORMAT {
        return Err(HarnessError::Validation(format!(
            "{}: unsupported format `{}`",
            sidecar_path.display(),
            sidecar.format
        )));
    }
    let data_path = sidecar_path.with_file_name(&sidecar.data);
    let mut bytes = Vec::new();
    File::open(&data_path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut bytes))
        .map_err(|e| HarnessError::io(format!("reading {}", data_path.display()), e))?;
    let width = sidecar.dim + 3;
    if bytes.len() != sidecar.rows * width * 8 {
        return Err(HarnessError::Validation(format!(
            "{}: expected {} rows of {width} values, file holds {} bytes",
            data_path.display(),
            sidecar.rows,
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let d = sidecar.dim;
    let mut record = RunRecord {
        algorithm: sidecar.algorithm,
        target: sidecar.target.clone(),
        dim: d,
        config: sidecar.config.clone(),
        samples: Vec::with_capacity(sidecar.rows * d),
        energies: Vec::with_capacity(sidecar.rows),
        regions: Vec::with_capacity(sidecar.rows),
        accepted: Vec::with_capacity(sidecar.rows),
        momentum_trace: sidecar.momentum_trace.clone(),
        theta_trace: sidecar.theta_trace.clone(),
        visit_counts: sidecar.visit_counts.clone(),
        final_theta: sidecar.final_theta.clone(),
        divergences: sidecar.divergences,
        wall_time: sidecar.wall_time,
        warnings: sidecar.warnings.clone(),
    };
    for row in values.chunks_exact(width) {
        record.samples.extend_from_slice(&row[..d]);
        record.energies.push(row[d]);
        record.regions.push(row[d + 1] as u32);
        record.accepted.push(row[d + 2] != 0.0);
    }
    Ok((record, sidecar))
}
