//! Loader for the Pima Indians diabetes table: eight numeric predictors and
//! a 0/1 label per row.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::targets::mlp::Dataset;

pub const PIMA_PREDICTORS: usize = 8;

/// Train and test folds, standardized with training-fold statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct PimaSplit {
    pub train: Dataset,
    pub test: Dataset,
    /// Rows read from the file.
    pub rows: usize,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

/// Reads the CSV at `path` and splits it 90/10 with a seeded shuffle. The
/// training fold gets `floor(0.9 n)` rows.
pub fn load_pima_csv(path: impl AsRef<Path>, seed: u64) -> Result<PimaSplit> {
    let text = std::fs::read_to_string(path)?;
    parse_pima(&text, seed)
}

pub fn parse_pima(text: &str, seed: u64) -> Result<PimaSplit> {
    let mut rows: Vec<([f64; PIMA_PREDICTORS], f64)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != PIMA_PREDICTORS + 1 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 9 columns, found {}", fields.len()),
            });
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|f| f.parse::<f64>()).collect();
        let values = match parsed {
            Ok(v) => v,
            // a non-numeric first line is a header
            Err(_) if rows.is_empty() && idx == first_content_line(text) => continue,
            Err(e) => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("malformed row: {e}"),
                })
            }
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse {
                line: lineno,
                message: "non-finite value".into(),
            });
        }
        let label = values[PIMA_PREDICTORS];
        if label != 0.0 && label != 1.0 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("label must be 0 or 1, found {label}"),
            });
        }
        let mut x = [0.0; PIMA_PREDICTORS];
        x.copy_from_slice(&values[..PIMA_PREDICTORS]);
        rows.push((x, label));
    }
    if rows.len() < 2 {
        return Err(Error::input("need at least two data rows"));
    }

    let n = rows.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (n * 9 / 10).max(1);
    let (train_idx, test_idx) = order.split_at(n_train);

    let mut means = vec![0.0; PIMA_PREDICTORS];
    let mut sds = vec![0.0; PIMA_PREDICTORS];
    for j in 0..PIMA_PREDICTORS {
        let col: Vec<f64> = train_idx.iter().map(|&i| rows[i].0[j]).collect();
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
        means[j] = mean;
        sds[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
    }
    let fold = |idx: &[usize]| {
        let mut inputs = Vec::with_capacity(idx.len() * PIMA_PREDICTORS);
        let mut targets = Vec::with_capacity(idx.len());
        for &i in idx {
            for j in 0..PIMA_PREDICTORS {
                inputs.push((rows[i].0[j] - means[j]) / sds[j]);
            }
            targets.push(rows[i].1);
        }
        Dataset {
            input_dim: PIMA_PREDICTORS,
            inputs,
            targets,
        }
    };
    Ok(PimaSplit {
        train: fold(train_idx),
        test: fold(test_idx),
        rows: n,
        means,
        sds,
    })
}

fn first_content_line(text: &str) -> usize {
    text.lines()
        .position(|l| !l.trim().is_empty())
        .unwrap_or(0)
}
