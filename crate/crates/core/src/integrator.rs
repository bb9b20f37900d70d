//! Leapfrog (Störmer–Verlet) integration of Hamiltonian dynamics
//! `dx/dt = M^{-1} y`, `dy/dt = -grad U(x)`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::mass::MassMatrix;
use crate::target::TargetDensity;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Coordinates beyond this magnitude abort the trajectory.
pub const DIVERGENCE_LIMIT: f64 = 1e100;

/// A point `(x, y)` in phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub position: Vec<f64>,
    pub momentum: Vec<f64>,
}

impl PhasePoint {
    pub fn new(position: Vec<f64>, momentum: Vec<f64>) -> Result<Self> {
        if position.len() != momentum.len() {
            return Err(Error::DimensionMismatch {
                expected: position.len(),
                got: momentum.len(),
            });
        }
        Ok(Self { position, momentum })
    }

    pub fn dim(&self) -> usize {
        self.position.len()
    }
}

/// `K(y) = d/2 log(2 pi) + 1/2 log|M| + 1/2 y^T M^{-1} y`, the negative log
/// density of `N(0, M)` at `y`.
pub fn kinetic_energy(momentum: &[f64], mass: &MassMatrix) -> Result<f64> {
    if momentum.len() != mass.dim() {
        return Err(Error::DimensionMismatch {
            expected: mass.dim(),
            got: momentum.len(),
        });
    }
    Ok(kinetic_unchecked(momentum, mass))
}

pub(crate) fn kinetic_unchecked(momentum: &[f64], mass: &MassMatrix) -> f64 {
    let d = momentum.len() as f64;
    0.5 * d * LN_2PI + 0.5 * mass.log_det() + 0.5 * mass.inv_quad(momentum)
}

/// Fresh momentum `y ~ N(0, M)`.
pub fn sample_momentum<R: Rng + ?Sized>(mass: &MassMatrix, rng: &mut R) -> Vec<f64> {
    let mut y = vec![0.0; mass.dim()];
    mass.sample(rng, &mut y);
    y
}

/// End point of a leapfrog trajectory with the potential and gradient
/// evaluated there.
#[derive(Debug, Clone)]
pub struct TrajectoryEnd {
    pub point: PhasePoint,
    pub potential: f64,
    pub gradient: Vec<f64>,
}

/// Runs `steps` leapfrog steps from `start` and returns `(x_L, -y_L)`.
///
/// Half momentum step, then `steps` full position steps interleaved with
/// `steps - 1` full momentum steps, then a closing half momentum step.
/// Costs `steps + 1` gradient evaluations.
///
/// ```
/// use sahmc::{integrator::{leapfrog, PhasePoint}, MassMatrix, StandardNormal};
///
/// let start = PhasePoint::new(vec![1.0], vec![0.0]).unwrap();
/// let end = leapfrog(&start, &StandardNormal::new(1), &MassMatrix::identity(1), 0.1, 1).unwrap();
/// assert!((end.position[0] - 0.995).abs() < 1e-15);
/// assert!((end.momentum[0] - 0.09975).abs() < 1e-15);
/// ```
pub fn leapfrog<T: TargetDensity + ?Sized>(
    start: &PhasePoint,
    target: &T,
    mass: &MassMatrix,
    epsilon: f64,
    steps: usize,
) -> Result<PhasePoint> {
    check_dims(start, target, mass)?;
    let mut grad = vec![0.0; start.dim()];
    target.gradient(&start.position, &mut grad);
    Ok(integrate(start, &grad, target, mass, epsilon, steps)?.point)
}

fn check_dims<T: TargetDensity + ?Sized>(
    start: &PhasePoint,
    target: &T,
    mass: &MassMatrix,
) -> Result<()> {
    for got in [start.position.len(), start.momentum.len(), mass.dim()] {
        if got != target.dim() {
            return Err(Error::DimensionMismatch {
                expected: target.dim(),
                got,
            });
        }
    }
    Ok(())
}

/// Leapfrog from `start` given the gradient already known there, so a chain
/// that caches its gradient pays `steps` evaluations per trajectory.
pub fn integrate<T: TargetDensity + ?Sized>(
    start: &PhasePoint,
    start_gradient: &[f64],
    target: &T,
    mass: &MassMatrix,
    epsilon: f64,
    steps: usize,
) -> Result<TrajectoryEnd> {
    if !(epsilon > 0.0) || steps == 0 {
        return Err(Error::config(format!(
            "leapfrog needs epsilon > 0 and at least one step, got {epsilon} and {steps}"
        )));
    }
    let d = start.dim();
    let mut x = start.position.clone();
    let mut y = start.momentum.clone();
    let mut grad = start_gradient.to_vec();
    let mut velocity = vec![0.0; d];

    for (yi, gi) in y.iter_mut().zip(&grad) {
        *yi -= 0.5 * epsilon * gi;
    }
    let mut potential = f64::NAN;
    for step in 1..=steps {
        mass.velocity(&y, &mut velocity);
        for (xi, vi) in x.iter_mut().zip(&velocity) {
            *xi += epsilon * vi;
        }
        if x.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT) {
            return Err(Error::DivergentTrajectory { step });
        }
        let scale = if step < steps { epsilon } else { 0.5 * epsilon };
        if step < steps {
            target.gradient(&x, &mut grad);
        } else {
            potential = target.potential_and_gradient(&x, &mut grad);
        }
        for (yi, gi) in y.iter_mut().zip(&grad) {
            *yi -= scale * gi;
        }
        if y.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT) {
            return Err(Error::DivergentTrajectory { step });
        }
    }
    for yi in &mut y {
        *yi = -*yi;
    }
    Ok(TrajectoryEnd {
        point: PhasePoint {
            position: x,
            momentum: y,
        },
        potential,
        gradient: grad,
    })
}
