//! Energy barriers along straight paths, with and without the weight
//! adjustment `theta[J(U(x))]`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::EnergyPartition;
use crate::target::TargetDensity;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierProfile {
    /// Plain barrier `max_t U(gamma(t)) - U(x1)`.
    pub b_h: f64,
    /// Barrier of the reweighted potential `U + theta[J(U)]`.
    pub b_sa: f64,
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub u_adjusted: Vec<f64>,
}

impl BarrierProfile {
    /// Writes the curve as CSV with columns `t,U,U_adjusted`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,U,U_adjusted")?;
        for i in 0..self.t.len() {
            writeln!(w, "{},{},{}", self.t[i], self.u[i], self.u_adjusted[i])?;
        }
        Ok(())
    }
}

/// Evaluates the potential at `grid_n` evenly spaced points of the segment
/// from `x1` to `x2`. Without weights the adjusted curve equals the plain
/// one.
pub fn barrier_profile<T: TargetDensity + ?Sized>(
    target: &T,
    x1: &[f64],
    x2: &[f64],
    weights: Option<(&[f64], &EnergyPartition)>,
    grid_n: usize,
) -> Result<BarrierProfile> {
    if grid_n < 2 {
        return Err(Error::input("barrier profile needs at least 2 grid points"));
    }
    let d = target.dim();
    for len in [x1.len(), x2.len()] {
        if len != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: len,
            });
        }
    }
    if let Some((theta, partition)) = weights {
        if theta.len() != partition.len() {
            return Err(Error::DimensionMismatch {
                expected: partition.len(),
                got: theta.len(),
            });
        }
    }
    let mut t = Vec::with_capacity(grid_n);
    let mut u = Vec::with_capacity(grid_n);
    let mut u_adjusted = Vec::with_capacity(grid_n);
    let mut point = vec![0.0; d];
    for k in 0..grid_n {
        let s = k as f64 / (grid_n - 1) as f64;
        for i in 0..d {
            point[i] = (1.0 - s) * x1[i] + s * x2[i];
        }
        let e = target.potential(&point);
        let adj = match weights {
            Some((theta, partition)) => e + theta[partition.region_index(e)?],
            None => e,
        };
        t.push(s);
        u.push(e);
        u_adjusted.push(adj);
    }
    // differences of theta are taken before they meet the energies, so a
    // constant shift of theta cancels without rounding
    let mut b_h = f64::NEG_INFINITY;
    let mut b_sa = f64::NEG_INFINITY;
    for k in 0..grid_n {
        let rise = u[k] - u[0];
        let lift = match weights {
            Some((theta, partition)) => {
                theta[partition.region_index(u[k])?] - theta[partition.region_index(u[0])?]
            }
            None => 0.0,
        };
        b_h = b_h.max(rise);
        b_sa = b_sa.max(rise + lift);
    }
    Ok(BarrierProfile {
        b_h,
        b_sa,
        t,
        u,
        u_adjusted,
    })
}
