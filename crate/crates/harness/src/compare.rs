//! Cross-algorithm speed comparison from timing tables.

use std::fs;
use std::path::{Path, PathBuf};

use sahmc::Algorithm;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, HarnessResult};
use crate::experiment::TimingTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub algorithm: Algorithm,
    pub experiment: String,
    pub seconds_per_min_ess: f64,
    /// HMC seconds per minimum ESS divided by this algorithm's.
    pub relative_speed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub target: String,
    pub rows: Vec<CompareRow>,
    pub notes: Vec<String>,
}

impl CompareSummary {
    pub fn render(&self) -> String {
        let with_speed = self.rows.iter().any(|r| r.relative_speed.is_some());
        let mut out = format!("target: {}\n", self.target);
        out += &format!("{:<10} {:>14}", "algorithm", "s/minESS");
        if with_speed {
            out += &format!(" {:>10}", "relative");
        }
        out += "\n";
        for r in &self.rows {
            out += &format!("{:<10} {:>14.5}", r.algorithm.to_string(), r.seconds_per_min_ess);
            if let Some(s) = r.relative_speed {
                out += &format!(" {s:>10.2}");
            }
            out += "\n";
        }
        for n in &self.notes {
            out += &format!("note: {n}\n");
        }
        out
    }
}

/// Combines timing tables that share a target. Each algorithm may appear
/// in only one table.
pub fn compare_summary(tables: &[TimingTable]) -> HarnessResult<CompareSummary> {
    let first = tables
        .first()
        .ok_or_else(|| HarnessError::Validation("no tables to compare".into()))?;
    let mut rows: Vec<CompareRow> = Vec::new();
    let mut notes = Vec::new();
    for t in tables {
        if t.target != first.target {
            return Err(HarnessError::Validation(format!(
                "tables cover different targets: `{}` and `{}`",
                first.target, t.target
            )));
        }
        for r in &t.rows {
            if rows.iter().any(|x| x.algorithm == r.algorithm) {
                return Err(HarnessError::Validation(format!(
                    "{} appears in more than one table",
                    r.algorithm
                )));
            }
            match r.seconds_per_min_ess {
                Some(s) => rows.push(CompareRow {
                    algorithm: r.algorithm,
                    experiment: t.experiment.clone(),
                    seconds_per_min_ess: s,
                    relative_speed: None,
                }),
                None => notes.push(format!(
                    "{} in `{}` has no ESS timing; run it with the ess metric",
                    r.algorithm, t.experiment
                )),
            }
        }
    }
    match rows.iter().find(|r| r.algorithm == Algorithm::Hmc) {
        Some(hmc) => {
            let base = hmc.seconds_per_min_ess;
            for r in &mut rows {
                r.relative_speed = Some(base / r.seconds_per_min_ess);
            }
        }
        None => notes.push("no HMC baseline; relative speed omitted".into()),
    }
    Ok(CompareSummary {
        target: first.target.clone(),
        rows,
        notes,
    })
}

/// Reads the timing table for a results directory, a `results.json` or a
/// `timing.json` path.
pub fn load_timing(path: &Path) -> HarnessResult<TimingTable> {
    let file: PathBuf = if path.is_dir() {
        path.join("timing.json")
    } else if path.file_name().is_some_and(|n| n == "results.json") {
        path.with_file_name("timing.json")
    } else {
        path.to_path_buf()
    };
    let text = fs::read_to_string(&file)
        .map_err(|e| HarnessError::io(format!("reading {}", file.display()), e))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::TimingRow;

    fn table(target: &str, rows: &[(Algorithm, Option<f64>)]) -> TimingTable {
        TimingTable {
            experiment: "e".into(),
            target: target.into(),
            workers: 1,
            rows: rows
                .iter()
                .map(|&(algorithm, s)| TimingRow {
                    algorithm,
                    wall_time: vec![1.0],
                    seconds_per_min_ess: s,
                })
                .collect(),
        }
    }

    #[test]
    fn relative_speed_against_hmc() {
        let s = compare_summary(&[table(
            "t",
            &[(Algorithm::Sahmc, Some(0.01499)), (Algorithm::Hmc, Some(0.03888))],
        )])
        .unwrap();
        let sa = s.rows.iter().find(|r| r.algorithm == Algorithm::Sahmc).unwrap();
        assert_eq!(format!("{:.2}", sa.relative_speed.unwrap()), "2.59");
        assert!(s.render().contains("2.59"));
    }

    #[test]
    fn equal_timings_give_one() {
        let s = compare_summary(&[
            table("t", &[(Algorithm::Sahmc, Some(0.02))]),
            table("t", &[(Algorithm::Hmc, Some(0.02))]),
        ])
        .unwrap();
        assert!(s.rows.iter().all(|r| r.relative_speed == Some(1.0)));
        assert!(s.render().contains("1.00"));
    }

    #[test]
    fn missing_baseline_omits_column() {
        let s = compare_summary(&[table("t", &[(Algorithm::Sahmc, Some(0.02))])]).unwrap();
        assert!(s.rows[0].relative_speed.is_none());
        assert!(!s.render().lines().nth(1).unwrap().contains("relative"));
        assert_eq!(s.notes.len(), 1);
    }

    #[test]
    fn mixed_targets_rejected() {
        let err = compare_summary(&[
            table("a", &[(Algorithm::Sahmc, Some(0.02))]),
            table("b", &[(Algorithm::Hmc, Some(0.02))]),
        ])
        .unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}
