//! Effective sample size by Geyer's initial monotone positive sequence.

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::RunRecord;

/// Fewest draws accepted by [`ess`].
pub const MIN_ESS_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ess {
    pub value: f64,
    /// The sequence was constant, so nothing could be estimated.
    pub degenerate: bool,
}

/// Biased sample autocovariances `gamma_0..gamma_{n-1}` via zero-padded FFT.
pub fn autocovariance(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    if n == 0 {
        return Vec::new();
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let len = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = xs
        .iter()
        .map(|x| Complex::new(x - mean, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(len)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    for c in &mut buf {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    let scale = 1.0 / (len as f64 * n as f64);
    buf[..n].iter().map(|c| c.re * scale).collect()
}

/// `n / tau` where `tau = 1 + 2 sum rho_k`, truncated at the first
/// non-positive pair sum `rho_{2m} + rho_{2m+1}` with the pair sums forced
/// non-increasing. Clamped to `[1, n]`.
///
/// ```
/// use sahmc::diagnostics::ess;
/// let constant = vec![2.0; 500];
/// let e = ess(&constant).unwrap();
/// assert_eq!(e.value, 1.0);
/// assert!(e.degenerate);
/// ```
pub fn ess(xs: &[f64]) -> Result<Ess> {
    let n = xs.len();
    if n < MIN_ESS_SAMPLES {
        return Err(Error::input(format!(
            "ess needs at least {MIN_ESS_SAMPLES} draws, got {n}"
        )));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::input("ess of a non-finite sequence"));
    }
    let acov = autocovariance(xs);
    if !(acov[0] > 0.0) {
        return Ok(Ess {
            value: 1.0,
            degenerate: true,
        });
    }
    let rho = |k: usize| if k < n { acov[k] / acov[0] } else { 0.0 };
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut m = 0;
    while 2 * m < n {
        let pair = rho(2 * m) + rho(2 * m + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        sum += pair;
        prev = pair;
        m += 1;
    }
    let tau = -1.0 + 2.0 * sum;
    let value = (n as f64 / tau).clamp(1.0, n as f64);
    Ok(Ess {
        value,
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssReport {
    pub per_coordinate: Vec<f64>,
    pub min: f64,
    pub median: f64,
    pub max: f64,
    /// Wall time of the whole run divided by the minimum ESS.
    pub seconds_per_min_ess: f64,
    pub degenerate: bool,
}

impl EssReport {
    pub fn from_values(per_coordinate: Vec<f64>, wall_time: f64, degenerate: bool) -> Self {
        let mut sorted = per_coordinate.clone();
        sorted.sort_by(f64::total_cmp);
        let k = sorted.len();
        let median = if k == 0 {
            f64::NAN
        } else if k % 2 == 1 {
            sorted[k / 2]
        } else {
            0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
        };
        let min = sorted.first().copied().unwrap_or(f64::NAN);
        Self {
            min,
            median,
            max: sorted.last().copied().unwrap_or(f64::NAN),
            seconds_per_min_ess: wall_time / min,
            per_coordinate,
            degenerate,
        }
    }
}

/// ESS of every coordinate over the post-burn-in draws.
pub fn ess_report(record: &RunRecord) -> Result<EssReport> {
    let mut values = Vec::with_capacity(record.dim);
    let mut degenerate = false;
    for c in 0..record.dim {
        let e = ess(&record.coordinate(c))?;
        degenerate |= e.degenerate;
        values.push(e.value);
    }
    Ok(EssReport::from_values(values, record.wall_time, degenerate))
}
