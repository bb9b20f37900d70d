//! The object being sampled: a potential energy `U(x) = -log psi(x)` and its
//! gradient.

use std::fmt;
use std::sync::Arc;

/// A differentiable target density expressed through its potential energy.
///
/// Implementations must be pure: the same `x` always yields the same
/// potential and gradient, so chains stay reproducible under a fixed seed.
pub trait TargetDensity: Send + Sync {
    fn dim(&self) -> usize;

    /// `U(x) = -log psi(x)` on the natural-log scale, up to an additive
    /// constant.
    fn potential(&self, x: &[f64]) -> f64;

    /// Writes `grad U(x)` into `grad`, which has length `dim()`.
    fn gradient(&self, x: &[f64], grad: &mut [f64]);

    /// Potential and gradient in one pass. Targets that share work between
    /// the two should override this.
    fn potential_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.gradient(x, grad);
        self.potential(x)
    }

    fn name(&self) -> &str;
}

impl<T: TargetDensity + ?Sized> TargetDensity for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn potential(&self, x: &[f64]) -> f64 {
        (**self).potential(x)
    }
    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        (**self).gradient(x, grad)
    }
    fn potential_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        (**self).potential_and_gradient(x, grad)
    }
    fn name(&self) -> &str {
        (**self).name()
    }
}

impl<T: TargetDensity + ?Sized> TargetDensity for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn potential(&self, x: &[f64]) -> f64 {
        (**self).potential(x)
    }
    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        (**self).gradient(x, grad)
    }
    fn potential_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        (**self).potential_and_gradient(x, grad)
    }
    fn name(&self) -> &str {
        (**self).name()
    }
}

type PotentialFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradientFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// A target assembled from a pair of closures.
///
/// ```
/// use sahmc::{FnTarget, TargetDensity};
///
/// let normal = FnTarget::new(
///     "std-normal",
///     1,
///     |x| 0.5 * x[0] * x[0],
///     |x, g| g[0] = x[0],
/// );
/// assert_eq!(normal.potential(&[2.0]), 2.0);
/// ```
pub struct FnTarget {
    name: String,
    dim: usize,
    potential: Box<PotentialFn>,
    gradient: Box<GradientFn>,
}

impl FnTarget {
    pub fn new<P, G>(name: impl Into<String>, dim: usize, potential: P, gradient: G) -> Self
    where
        P: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        assert!(dim > 0, "target dimension must be positive");
        Self {
            name: name.into(),
            dim,
            potential: Box::new(potential),
            gradient: Box::new(gradient),
        }
    }
}

impl fmt::Debug for FnTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnTarget")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl TargetDensity for FnTarget {
    fn dim(&self) -> usize {
        self.dim
    }
    fn potential(&self, x: &[f64]) -> f64 {
        (self.potential)(x)
    }
    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        (self.gradient)(x, grad)
    }
    fn name(&self) -> &str {
        &self.name
    }
}

/// Isotropic Gaussian `N(0, sd^2 I)` in `dim` dimensions. Mostly useful for
/// checking moments.
#[derive(Debug, Clone)]
pub struct StandardNormal {
    dim: usize,
    sd: f64,
}

impl StandardNormal {
    pub fn new(dim: usize) -> Self {
        Self::with_sd(dim, 1.0)
    }

    pub fn with_sd(dim: usize, sd: f64) -> Self {
        assert!(dim > 0 && sd > 0.0);
        Self { dim, sd }
    }
}

impl TargetDensity for StandardNormal {
    fn dim(&self) -> usize {
        self.dim
    }
    fn potential(&self, x: &[f64]) -> f64 {
        let s2 = self.sd * self.sd;
        0.5 * x.iter().map(|v| v * v).sum::<f64>() / s2
    }
    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        let s2 = self.sd * self.sd;
        for (g, v) in grad.iter_mut().zip(x) {
            *g = v / s2;
        }
    }
    fn name(&self) -> &str {
        "normal"
    }
}

/// Largest relative discrepancy between the analytic gradient and central
/// finite differences of the potential at `x`.
///
/// Each coordinate uses step `h = 1e-6 * (1 + |x_i|)`; the discrepancy of a
/// coordinate is `|analytic - numeric| / max(1, |analytic|, |numeric|)`.
pub fn gradient_error<T: TargetDensity + ?Sized>(target: &T, x: &[f64]) -> f64 {
    let mut analytic = vec![0.0; target.dim()];
    target.gradient(x, &mut analytic);
    let mut probe = x.to_vec();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let h = 1e-6 * (1.0 + x[i].abs());
        probe[i] = x[i] + h;
        let up = target.potential(&probe);
        probe[i] = x[i] - h;
        let down = target.potential(&probe);
        probe[i] = x[i];
        let numeric = (up - down) / (2.0 * h);
        let scale = 1.0f64.max(analytic[i].abs()).max(numeric.abs());
        worst = worst.max((analytic[i] - numeric).abs() / scale);
    }
    worst
}
