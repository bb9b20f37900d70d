//! Mode discovery and visit-frequency error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::RunRecord;

/// Index of the nearest mode for each sample, ties going to the lower index.
pub fn mode_assignment<'a, I>(samples: I, modes: &[Vec<f64>]) -> Result<Vec<usize>>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    if modes.is_empty() {
        return Err(Error::input("no modes given"));
    }
    samples
        .into_iter()
        .map(|x| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, mu) in modes.iter().enumerate() {
                if mu.len() != x.len() {
                    return Err(Error::DimensionMismatch {
                        expected: x.len(),
                        got: mu.len(),
                    });
                }
                let d: f64 = x.iter().zip(mu).map(|(a, b)| (a - b) * (a - b)).sum();
                if d < best_d {
                    best = j;
                    best_d = d;
                }
            }
            Ok(best)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub counts: Vec<u64>,
    /// Visit proportions; sums to 1.
    pub freq: Vec<f64>,
    /// Modes with at least one assigned sample.
    pub n_dis: usize,
}

impl ModeReport {
    pub fn from_assignments(assignments: &[usize], n_modes: usize) -> Result<Self> {
        let mut counts = vec![0u64; n_modes];
        for &a in assignments {
            *counts
                .get_mut(a)
                .ok_or_else(|| Error::input(format!("mode {a} out of range")))? += 1;
        }
        Self::from_counts(counts)
    }

    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::input("chain has no samples"));
        }
        Ok(Self {
            freq: counts.iter().map(|&c| c as f64 / total as f64).collect(),
            n_dis: counts.iter().filter(|&&c| c > 0).count(),
            counts,
        })
    }
}

/// Mode report of the post-burn-in draws of a chain.
pub fn mode_report(record: &RunRecord, modes: &[Vec<f64>]) -> Result<ModeReport> {
    let a = mode_assignment(record.kept(), modes)?;
    ModeReport::from_assignments(&a, modes.len())
}

/// `sum_i sum_j |F_ij - 1/K| / (C K)` over `C` chains and `K` modes, from
/// per-chain visit counts.
///
/// ```
/// use sahmc::diagnostics::frequency_error;
/// let mut one_mode = vec![0u64; 8];
/// one_mode[0] = 100;
/// let chains = vec![one_mode; 10];
/// assert!((frequency_error(&chains).unwrap() - 0.21875).abs() < 1e-15);
/// ```
pub fn frequency_error(counts: &[Vec<u64>]) -> Result<f64> {
    let c = counts.len();
    if c == 0 {
        return Err(Error::input("no chains"));
    }
    let k = counts[0].len();
    if k == 0 {
        return Err(Error::input("no modes"));
    }
    let mut total = 0.0;
    for chain in counts {
        if chain.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: chain.len(),
            });
        }
        let report = ModeReport::from_counts(chain.clone())?;
        total += report
            .freq
            .iter()
            .map(|f| (f - 1.0 / k as f64).abs())
            .sum::<f64>();
    }
    Ok(total / (c * k) as f64)
}

/// Connected components of the graph linking points closer than `radius`.
/// Labels are numbered by first appearance.
pub fn linkage_clusters(points: &[Vec<f64>], radius: f64) -> Vec<usize> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let r2 = radius * radius;
    for i in 0..n {
        for j in i + 1..n {
            let d: f64 = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d <= r2 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut labels = vec![usize::MAX; n];
    let mut root_label = std::collections::HashMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        let next = root_label.len();
        labels[i] = *root_label.entry(root).or_insert(next);
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;

    fn modes() -> Vec<Vec<f64>> {
        vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![5.0, 5.0]]
    }

    #[test]
    fn exact_and_tie() {
        let pts: Vec<&[f64]> = vec![&[5.0, 5.0], &[1.0, 0.0], &[1.9, 0.1]];
        assert_eq!(mode_assignment(pts, &modes()).unwrap(), vec![2, 0, 1]);
    }

    #[test]
    fn single_mode_discovered() {
        let pts: Vec<&[f64]> = vec![&[0.1, 0.0], &[-0.2, 0.3]];
        let a = mode_assignment(pts, &modes()).unwrap();
        let r = ModeReport::from_assignments(&a, 3).unwrap();
        assert_eq!(r.n_dis, 1);
        assert_eq!(r.freq, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn uniform_chains_have_zero_error() {
        let chains = vec![vec![7u64; 8]; 10];
        assert_eq!(frequency_error(&chains).unwrap(), 0.0);
    }

    #[test]
    fn all_on_one_mode() {
        let mut c = vec![0u64; 8];
        c[3] = 5;
        assert!((frequency_error(&vec![c; 10]).unwrap() - 0.21875).abs() < 1e-15);
    }

    #[test]
    fn empty_chain_is_error() {
        assert!(frequency_error(&[vec![1, 1], vec![0, 0]]).is_err());
        assert!(frequency_error(&[]).is_err());
    }

    #[test]
    fn clusters() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![5.0, 5.0],
            vec![0.05, 0.0],
            vec![0.1, 0.05],
            vec![5.05, 5.0],
        ];
        assert_eq!(linkage_clusters(&pts, 0.1), vec![0, 1, 0, 0, 1]);
        assert_eq!(linkage_clusters(&pts, 0.01), vec![0, 1, 2, 3, 4]);
    }
}
