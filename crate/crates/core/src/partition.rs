use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A partition of the sample space by potential energy.
///
/// Thresholds `u_1 < ... < u_{m-1}` split the energy axis into `m`
/// subregions, each closed on the right: region `i` (zero-based) holds
/// energies in `(u_i, u_{i+1}]` with `u_0 = -inf` and `u_m = +inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EnergyPartition {
    thresholds: Vec<f64>,
}

impl EnergyPartition {
    pub fn new(thresholds: Vec<f64>) -> Result<Self> {
        if let Some(u) = thresholds.iter().find(|u| !u.is_finite()) {
            return Err(Error::InvalidPartition(format!("non-finite threshold {u}")));
        }
        if thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPartition("thresholds not increasing".into()));
        }
        Ok(Self { thresholds })
    }

    /// The trivial partition with a single region.
    pub fn single() -> Self {
        Self {
            thresholds: Vec::new(),
        }
    }

    /// `regions` subregions with equal bandwidth `width`, the lowest
    /// threshold at `start`.
    ///
    /// ```
    /// # use sahmc::EnergyPartition;
    /// let p = EnergyPartition::uniform(0.0, 2.0, 12).unwrap();
    /// assert_eq!(p.thresholds().first(), Some(&0.0));
    /// assert_eq!(p.thresholds().last(), Some(&20.0));
    /// ```
    pub fn uniform(start: f64, width: f64, regions: usize) -> Result<Self> {
        if regions == 0 {
            return Err(Error::InvalidPartition("at least one region required".into()));
        }
        if !(width > 0.0) {
            return Err(Error::InvalidPartition(format!(
                "bandwidth must be positive, got {width}"
            )));
        }
        Self::new((0..regions - 1).map(|i| start + width * i as f64).collect())
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// Number of subregions `m`.
    pub fn len(&self) -> usize {
        self.thresholds.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Zero-based index of the subregion containing `energy`.
    ///
    /// A non-finite energy is reported as an error since it means the
    /// trajectory that produced it diverged.
    pub fn region_index(&self, energy: f64) -> Result<usize> {
        if !energy.is_finite() {
            return Err(Error::NonFinitePotential(energy));
        }
        Ok(self.thresholds.partition_point(|&u| u < energy))
    }
}

impl TryFrom<Vec<f64>> for EnergyPartition {
    type Error = Error;

    fn try_from(thresholds: Vec<f64>) -> Result<Self> {
        Self::new(thresholds)
    }
}

impl From<EnergyPartition> for Vec<f64> {
    fn from(p: EnergyPartition) -> Self {
        p.thresholds
    }
}
