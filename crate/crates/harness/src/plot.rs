//! Plot-ready CSV extracts of a run record.

use std::io::Write;
use std::path::Path;

use sahmc::RunRecord;
use serde::{Deserialize, Serialize};

use crate::artifacts::write_atomic;
use crate::error::{HarnessError, HarnessResult};

/// Default number of leading iterations in trace files.
pub const TRACE_LEN: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    /// Every `stride`-th post-burn-in draw.
    Scatter,
    TracePosition,
    TraceMomentum,
    TraceEnergy,
    ThetaTrace,
}

impl PlotKind {
    pub const ALL: [PlotKind; 5] = [
        PlotKind::Scatter,
        PlotKind::TracePosition,
        PlotKind::TraceMomentum,
        PlotKind::TraceEnergy,
        PlotKind::ThetaTrace,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PlotKind::Scatter => "scatter",
            PlotKind::TracePosition => "trace_position",
            PlotKind::TraceMomentum => "trace_momentum",
            PlotKind::TraceEnergy => "trace_energy",
            PlotKind::ThetaTrace => "theta_trace",
        }
    }
}

impl std::str::FromStr for PlotKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> HarnessResult<Self> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = PlotKind::ALL.iter().map(PlotKind::as_str).collect();
                HarnessError::Validation(format!(
                    "unknown plot kind `{s}` (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotOutcome {
    pub rows: usize,
    pub warning: Option<String>,
}

/// Writes the `kind` extract of `record` as CSV with a header row.
/// `stride` applies to scatter files, `trace_len` to the trace kinds.
pub fn emit_plot_data<W: Write>(
    record: &RunRecord,
    kind: PlotKind,
    stride: usize,
    trace_len: usize,
    mut w: W,
) -> HarnessResult<PlotOutcome> {
    if record.is_empty() {
        return Err(HarnessError::Validation("record is empty".into()));
    }
    let d = record.dim;
    let numbered = |prefix: &str, n: usize| -> String {
        (1..=n).map(|i| format!(",{prefix}{i}")).collect()
    };
    let io = |e| HarnessError::io("writing plot data", e);
    let mut rows = 0;
    match kind {
        PlotKind::Scatter => {
            if stride == 0 {
                return Err(HarnessError::Validation("stride must be positive".into()));
            }
            writeln!(w, "iter{}", numbered("x", d)).map_err(io)?;
            let mut i = record.burn_in() + stride - 1;
            while i < record.len() {
                write_row(&mut w, i + 1, record.sample(i)).map_err(io)?;
                rows += 1;
                i += stride;
            }
        }
        PlotKind::TracePosition => {
            writeln!(w, "iter{}", numbered("x", d)).map_err(io)?;
            for i in 0..trace_len.min(record.len()) {
                write_row(&mut w, i + 1, record.sample(i)).map_err(io)?;
                rows += 1;
            }
        }
        PlotKind::TraceMomentum => {
            writeln!(w, "iter{}", numbered("y", d)).map_err(io)?;
            for (i, y) in record.momentum_trace.chunks_exact(d).take(trace_len).enumerate() {
                write_row(&mut w, i + 1, y).map_err(io)?;
                rows += 1;
            }
        }
        PlotKind::TraceEnergy => {
            writeln!(w, "iter,energy,region,accepted").map_err(io)?;
            for i in 0..trace_len.min(record.len()) {
                writeln!(
                    w,
                    "{},{},{},{}",
                    i + 1,
                    record.energies[i],
                    record.regions[i],
                    u8::from(record.accepted[i])
                )
                .map_err(io)?;
                rows += 1;
            }
        }
        PlotKind::ThetaTrace => {
            let m = record.visit_counts.len();
            if record.final_theta.is_none() {
                return Err(HarnessError::Validation(
                    "theta_trace needs a sahmc record".into(),
                ));
            }
            writeln!(w, "iter{}", numbered("theta_", m)).map_err(io)?;
            for snap in &record.theta_trace {
                write_row(&mut w, snap.iteration as usize, &snap.theta).map_err(io)?;
                rows += 1;
            }
        }
    }
    let warning = (rows == 0).then(|| format!("{} extract is empty", kind.as_str()));
    Ok(PlotOutcome { rows, warning })
}

fn write_row<W: Write>(w: &mut W, iter: usize, values: &[f64]) -> std::io::Result<()> {
    write!(w, "{iter}")?;
    for v in values {
        write!(w, ",{v}")?;
    }
    writeln!(w)
}

/// [`emit_plot_data`] into a file, written atomically.
pub fn emit_plot_file(
    record: &RunRecord,
    kind: PlotKind,
    stride: usize,
    trace_len: usize,
    path: &Path,
) -> HarnessResult<PlotOutcome> {
    let mut buf = Vec::new();
    let outcome = emit_plot_data(record, kind, stride, trace_len, &mut buf)?;
    write_atomic(path, |w| w.write_all(&buf))?;
    Ok(outcome)
}
