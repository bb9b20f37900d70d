//! Comparison of adapted weights against their limit
//! `theta_i = C + log(omega_i) - log(pi_i + nu)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaConvergence {
    /// `theta_i - log(omega_i) + log(pi_i + nu)` for regions that were
    /// visited and have positive mass; `None` elsewhere.
    pub offsets: Vec<Option<f64>>,
    /// Largest `|(theta_i - theta_j) - (limit_i - limit_j)|` over the
    /// regions with an offset.
    pub max_deviation: f64,
    /// Desired mass of the empty regions spread over the others.
    pub nu: f64,
    pub empty_regions: usize,
}

/// Compares `theta` with the limit implied by the region masses `omega`
/// and desired frequencies `pi`. A region counts as empty when it was never
/// visited or its mass is zero.
///
/// ```
/// use sahmc::diagnostics::theta_convergence_check;
/// let omega = [0.2, 0.8];
/// let theta = [0.2f64.ln() + 3.0, 0.8f64.ln() + 3.0];
/// let r = theta_convergence_check(&theta, &omega, &[0.5, 0.5], &[10, 10]).unwrap();
/// assert!(r.max_deviation < 1e-12);
/// ```
pub fn theta_convergence_check(
    theta: &[f64],
    omega: &[f64],
    pi: &[f64],
    visits: &[u64],
) -> Result<ThetaConvergence> {
    let m = theta.len();
    for len in [omega.len(), pi.len(), visits.len()] {
        if len != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: len,
            });
        }
    }
    let occupied: Vec<bool> = (0..m).map(|i| visits[i] > 0 && omega[i] > 0.0).collect();
    let empty_regions = occupied.iter().filter(|o| !**o).count();
    let nu = if empty_regions == m {
        0.0
    } else {
        (0..m).filter(|&i| !occupied[i]).map(|i| pi[i]).sum::<f64>() / (m - empty_regions) as f64
    };
    let offsets: Vec<Option<f64>> = (0..m)
        .map(|i| occupied[i].then(|| theta[i] - omega[i].ln() + (pi[i] + nu).ln()))
        .collect();
    let present = offsets.iter().flatten();
    let hi = present.clone().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = present.copied().fold(f64::INFINITY, f64::min);
    let max_deviation = if hi >= lo { hi - lo } else { 0.0 };
    Ok(ThetaConvergence {
        offsets,
        max_deviation,
        nu,
        empty_regions,
    })
}
