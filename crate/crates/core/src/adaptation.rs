//! Stochastic-approximation state: the gain sequence and the adaptive
//! log-weights over an energy partition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gain factor sequence `a_t = t0 / max(t0, t)`.
///
/// Constant at 1 up to `t0`, then decays like `1/t`, so `sum a_t` diverges
/// while `sum a_t^zeta` converges for every `zeta > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainSchedule {
    t0: f64,
}

impl GainSchedule {
    pub fn new(t0: f64) -> Result<Self> {
        if !(t0 > 1.0) || !t0.is_finite() {
            return Err(Error::config(format!("t0 must exceed 1, got {t0}")));
        }
        Ok(Self { t0 })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// `a_t` for `t >= 1`.
    pub fn factor(&self, t: u64) -> f64 {
        self.t0 / self.t0.max(t as f64)
    }
}

/// Default bound on `|theta_i|`. Only differences of weights enter the
/// acceptance ratio, so the bound just has to keep `exp` of those
/// differences representable.
pub const DEFAULT_THETA_BOUND: f64 = 1e8;

/// Working estimates `theta_i` of `log(omega_i / pi_i)` together with the
/// desired visit frequencies `pi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaWeights {
    theta: Vec<f64>,
    pi: Vec<f64>,
    bounds: (f64, f64),
}

impl ThetaWeights {
    /// Zero weights with uniform desired frequencies over `m` regions.
    pub fn uniform(m: usize) -> Self {
        assert!(m > 0, "at least one region required");
        Self {
            theta: vec![0.0; m],
            pi: vec![1.0 / m as f64; m],
            bounds: (-DEFAULT_THETA_BOUND, DEFAULT_THETA_BOUND),
        }
    }

    pub fn new(theta: Vec<f64>, pi: Vec<f64>, bounds: (f64, f64)) -> Result<Self> {
        if theta.is_empty() || theta.len() != pi.len() {
            return Err(Error::DimensionMismatch {
                expected: pi.len(),
                got: theta.len(),
            });
        }
        validate_pi(&pi)?;
        let (lo, hi) = bounds;
        if !(lo < hi) {
            return Err(Error::config(format!("theta bounds [{lo}, {hi}] are empty")));
        }
        if let Some(t) = theta.iter().find(|t| !(lo..=hi).contains(*t)) {
            return Err(Error::config(format!(
                "initial theta {t} outside [{lo}, {hi}]"
            )));
        }
        Ok(Self { theta, pi, bounds })
    }

    pub fn with_theta(mut self, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != self.theta.len() {
            return Err(Error::DimensionMismatch {
                expected: self.theta.len(),
                got: theta.len(),
            });
        }
        self.theta = theta;
        Self::new(self.theta, self.pi, self.bounds)
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// `theta <- theta + a (e - pi)` with `e` the indicator of `visited`,
    /// followed by a constant shift back into the bounds when needed.
    ///
    /// ```
    /// # use sahmc::ThetaWeights;
    /// let mut w = ThetaWeights::uniform(3);
    /// w.update(1, 0.1).unwrap();
    /// assert!((w.theta()[1] - 0.2 / 3.0).abs() < 1e-15);
    /// ```
    pub fn update(&mut self, visited: usize, gain: f64) -> Result<()> {
        if visited >= self.theta.len() {
            return Err(Error::input(format!(
                "region {visited} out of range for {} regions",
                self.theta.len()
            )));
        }
        for (i, (t, p)) in self.theta.iter_mut().zip(&self.pi).enumerate() {
            let e = if i == visited { 1.0 } else { 0.0 };
            *t += gain * (e - p);
        }
        self.project()
    }

    /// Shifts every coordinate by the smallest-magnitude constant that puts
    /// the vector back inside `[lo, hi]^m`. Differences are unchanged.
    fn project(&mut self) -> Result<()> {
        let (lo, hi) = self.bounds;
        let (min, max) = self
            .theta
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| {
                (a.min(t), b.max(t))
            });
        if min >= lo && max <= hi {
            return Ok(());
        }
        if max - min > hi - lo || !(max - min).is_finite() {
            return Err(Error::ThetaRangeOverflow {
                spread: max - min,
                width: hi - lo,
            });
        }
        let shift = if max > hi { hi - max } else { lo - min };
        for t in &mut self.theta {
            *t += shift;
        }
        Ok(())
    }
}

pub(crate) fn validate_pi(pi: &[f64]) -> Result<()> {
    if let Some(p) = pi.iter().find(|p| !(**p > 0.0 && **p < 1.0 || pi.len() == 1)) {
        return Err(Error::config(format!(
            "desired frequencies must lie in (0, 1), found {p}"
        )));
    }
    let total: f64 = pi.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::config(format!(
            "desired frequencies must sum to 1, sum is {total}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gain_examples() {
        let g = GainSchedule::new(5000.0).unwrap();
        assert_eq!(g.factor(1), 1.0);
        assert_eq!(g.factor(5000), 1.0);
        assert_eq!(g.factor(10000), 0.5);
    }

    #[test]
    fn gain_rejects_small_t0() {
        assert!(GainSchedule::new(1.0).is_err());
        assert!(GainSchedule::new(f64::NAN).is_err());
    }

    #[test]
    fn gain_sum_conditions() {
        // sum a_t grows like t0 log t; sum a_t^1.5 has shrinking tail
        // increments.
        let g = GainSchedule::new(10.0).unwrap();
        let partial = |n: u64, z: f64| (1..=n).map(|t| g.factor(t).powf(z)).sum::<f64>();
        let s1 = partial(10_000, 1.0);
        let s2 = partial(100_000, 1.0);
        assert!(s2 - s1 > 10.0 * (10f64).ln() * 0.99);
        let c1 = partial(100_000, 1.5) - partial(10_000, 1.5);
        let c2 = partial(1_000_000, 1.5) - partial(100_000, 1.5);
        assert!(c2 < c1 / 2.0);
    }

    #[test]
    fn update_example() {
        let mut w = ThetaWeights::uniform(3);
        w.update(1, 0.1).unwrap();
        let expected = [-0.1 / 3.0, 0.2 / 3.0, -0.1 / 3.0];
        for (a, b) in w.theta().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_gain_is_identity() {
        let mut w = ThetaWeights::uniform(4).with_theta(vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        let before = w.clone();
        w.update(2, 0.0).unwrap();
        assert_eq!(w, before);
    }

    #[test]
    fn projection_shifts_down_by_excess() {
        let hi = 10.0;
        let mut w = ThetaWeights::new(vec![hi, 0.0], vec![0.5, 0.5], (-hi, hi)).unwrap();
        // pushes theta_0 above hi by delta = 0.5 * 0.5
        w.update(0, 0.5).unwrap();
        let delta = 0.25;
        assert!((w.theta()[0] - hi).abs() < 1e-12);
        assert!((w.theta()[1] - (-0.25 - delta)).abs() < 1e-12);
    }

    #[test]
    fn projection_overflow_is_error() {
        let mut w = ThetaWeights::new(vec![1.0, -1.0], vec![0.5, 0.5], (-1.0, 1.0)).unwrap();
        let err = w.update(0, 1.0).unwrap_err();
        assert!(err.to_string().contains("theta range overflow"));
    }

    #[test]
    fn pi_must_sum_to_one() {
        assert!(ThetaWeights::new(vec![0.0; 2], vec![0.5, 0.6], (-1.0, 1.0)).is_err());
        assert!(ThetaWeights::new(vec![0.0; 2], vec![1.0, 1.0], (-1.0, 1.0)).is_err());
        assert!(ThetaWeights::new(vec![0.0; 2], vec![0.0, 1.0], (-1.0, 1.0)).is_err());
    }

    proptest! {
        #[test]
        fn gain_monotone(t0 in 1.5f64..1e4, t in 1u64..1_000_000) {
            let g = GainSchedule::new(t0).unwrap();
            let (a, b) = (g.factor(t), g.factor(t + 1));
            prop_assert!(b <= a && a <= 1.0 && a > 0.0);
            if (t as f64) <= t0 { prop_assert_eq!(a, 1.0); }
        }

        #[test]
        fn update_preserves_differences_under_projection(
            start in proptest::collection::vec(-4.0f64..4.0, 4),
            visits in proptest::collection::vec(0usize..4, 1..50),
            gain in 0.0f64..0.05,
        ) {
            let bounds = (-6.0, 6.0);
            let mut bounded = ThetaWeights::new(start.clone(), vec![0.25; 4], bounds).unwrap();
            let mut free = ThetaWeights::new(start, vec![0.25; 4], (-1e9, 1e9)).unwrap();
            for &v in &visits {
                bounded.update(v, gain).unwrap();
                free.update(v, gain).unwrap();
                for t in bounded.theta() {
                    prop_assert!(*t >= bounds.0 - 1e-9 && *t <= bounds.1 + 1e-9);
                }
            }
            for i in 0..4 {
                for j in 0..4 {
                    let a = (bounded.theta()[i] - bounded.theta()[j]).exp();
                    let b = (free.theta()[i] - free.theta()[j]).exp();
                    prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
                }
            }
        }
    }
}
