//! The SAHMC sampler and its plain HMC baseline.
//!
//! Both share one transition: draw momentum, integrate with leapfrog, then
//! accept with probability `min(1, r)`. SAHMC multiplies the usual
//! Hamiltonian ratio by `exp(theta[J(U_t)] - theta[J(U_*)])` and afterwards
//! moves the weights toward the desired visit frequencies. With a single
//! region the extra factor is exactly 1 and the two samplers consume the
//! random stream identically.

use std::collections::HashMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptation::ThetaWeights;
use crate::config::{Algorithm, InitialPosition, SamplerConfig, ThetaFreeze};
use crate::error::{Error, Result};
use crate::integrator::{integrate, kinetic_unchecked, PhasePoint};
use crate::mass::MassMatrix;
use crate::partition::EnergyPartition;
use crate::target::TargetDensity;

pub type ChainRng = ChaCha8Rng;

/// Current position of a chain with its cached potential and gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub position: Vec<f64>,
    pub potential: f64,
    pub gradient: Vec<f64>,
    /// Zero-based subregion of `potential`; 0 when no partition is used.
    pub region: usize,
    pub iteration: u64,
}

impl ChainState {
    pub fn new<T: TargetDensity + ?Sized>(
        target: &T,
        position: Vec<f64>,
        partition: Option<&EnergyPartition>,
    ) -> Result<Self> {
        if position.len() != target.dim() {
            return Err(Error::DimensionMismatch {
                expected: target.dim(),
                got: position.len(),
            });
        }
        let mut gradient = vec![0.0; position.len()];
        let potential = target.potential_and_gradient(&position, &mut gradient);
        if !potential.is_finite() {
            return Err(Error::NonFinitePotential(potential));
        }
        let region = match partition {
            Some(p) => p.region_index(potential)?,
            None => 0,
        };
        Ok(Self {
            position,
            potential,
            gradient,
            region,
            iteration: 0,
        })
    }
}

/// What happened during one transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub accepted: bool,
    /// The trajectory left the representable range and was rejected.
    pub diverged: bool,
    /// The fresh momentum drawn at the start of the iteration.
    pub momentum: Vec<f64>,
}

/// Log of the SAHMC acceptance ratio. A non-finite proposal potential yields
/// `-inf`, i.e. certain rejection.
#[allow(clippy::too_many_arguments)]
pub fn sahmc_log_ratio(
    current_potential: f64,
    current_region: usize,
    current_kinetic: f64,
    proposal_potential: f64,
    proposal_kinetic: f64,
    weights: &ThetaWeights,
    partition: &EnergyPartition,
) -> f64 {
    let Ok(proposal_region) = partition.region_index(proposal_potential) else {
        return f64::NEG_INFINITY;
    };
    let theta = weights.theta();
    (theta[current_region] - theta[proposal_region])
        + (current_potential + current_kinetic - proposal_potential - proposal_kinetic)
}

/// `r = exp(theta[J(U_t)] - theta[J(U_*)]) exp(U_t + K_t - U_* - K_*)`,
/// saturating at `+inf`.
#[allow(clippy::too_many_arguments)]
pub fn sahmc_accept_ratio<T: TargetDensity + ?Sized>(
    state: &ChainState,
    proposal: &PhasePoint,
    current_kinetic: f64,
    proposal_kinetic: f64,
    weights: &ThetaWeights,
    partition: &EnergyPartition,
    target: &T,
) -> f64 {
    let proposal_potential = target.potential(&proposal.position);
    if !proposal_potential.is_finite() {
        return 0.0;
    }
    sahmc_log_ratio(
        state.potential,
        state.region,
        current_kinetic,
        proposal_potential,
        proposal_kinetic,
        weights,
        partition,
    )
    .exp()
}

/// Leapfrog settings shared by every iteration of a chain.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub mass: MassMatrix,
    pub epsilon: f64,
    pub steps: usize,
}

struct Weighting<'a> {
    weights: &'a ThetaWeights,
    partition: &'a EnergyPartition,
}

fn transition<T, R>(
    state: &mut ChainState,
    target: &T,
    kernel: &Kernel,
    weighting: Option<Weighting<'_>>,
    label: Option<&EnergyPartition>,
    rng: &mut R,
) -> Result<Transition>
where
    T: TargetDensity + ?Sized,
    R: Rng + ?Sized,
{
    let mut momentum = vec![0.0; state.position.len()];
    kernel.mass.sample(rng, &mut momentum);
    let current_kinetic = kinetic_unchecked(&momentum, &kernel.mass);
    let start = PhasePoint {
        position: state.position.clone(),
        momentum,
    };
    let end = match integrate(
        &start,
        &state.gradient,
        target,
        &kernel.mass,
        kernel.epsilon,
        kernel.steps,
    ) {
        Ok(end) if end.potential.is_finite() => Some(end),
        Ok(_) | Err(Error::DivergentTrajectory { .. }) => None,
        Err(e) => return Err(e),
    };
    let log_ratio = match &end {
        Some(end) => {
            let proposal_kinetic = kinetic_unchecked(&end.point.momentum, &kernel.mass);
            match &weighting {
                Some(w) => sahmc_log_ratio(
                    state.potential,
                    state.region,
                    current_kinetic,
                    end.potential,
                    proposal_kinetic,
                    w.weights,
                    w.partition,
                ),
                None => state.potential + current_kinetic - end.potential - proposal_kinetic,
            }
        }
        None => f64::NEG_INFINITY,
    };
    let diverged = end.is_none();
    let u: f64 = rng.random();
    let accepted = u < log_ratio.exp();
    if let (true, Some(end)) = (accepted, end) {
        state.position = end.point.position;
        state.potential = end.potential;
        state.gradient = end.gradient;
        state.region = match label {
            Some(p) => p.region_index(state.potential)?,
            None => 0,
        };
    }
    state.iteration += 1;
    Ok(Transition {
        accepted,
        diverged,
        momentum: start.momentum,
    })
}

/// One SAHMC iteration: momentum refresh, leapfrog proposal, weighted
/// Metropolis decision, then `theta += gain (e - pi)` using the region of
/// the state the chain ends up in.
#[allow(clippy::too_many_arguments)]
pub fn sahmc_step<T, R>(
    state: &mut ChainState,
    weights: &mut ThetaWeights,
    target: &T,
    partition: &EnergyPartition,
    kernel: &Kernel,
    gain: f64,
    rng: &mut R,
) -> Result<Transition>
where
    T: TargetDensity + ?Sized,
    R: Rng + ?Sized,
{
    if weights.len() != partition.len() {
        return Err(Error::DimensionMismatch {
            expected: partition.len(),
            got: weights.len(),
        });
    }
    let out = transition(
        state,
        target,
        kernel,
        Some(Weighting {
            weights,
            partition,
        }),
        Some(partition),
        rng,
    )?;
    weights.update(state.region, gain)?;
    Ok(out)
}

/// One plain HMC iteration. `label` only sets `state.region` for
/// bookkeeping; it never affects the decision.
pub fn hmc_step<T, R>(
    state: &mut ChainState,
    target: &T,
    kernel: &Kernel,
    label: Option<&EnergyPartition>,
    rng: &mut R,
) -> Result<Transition>
where
    T: TargetDensity + ?Sized,
    R: Rng + ?Sized,
{
    transition(state, target, kernel, None, label, rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaSnapshot {
    pub iteration: u64,
    pub theta: Vec<f64>,
}

/// Everything recorded by one chain. Burn-in iterations are kept; use
/// [`RunRecord::burn_in`] to skip them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub target: String,
    pub dim: usize,
    pub config: SamplerConfig,
    /// Row-major positions after each iteration, `iterations x dim`.
    pub samples: Vec<f64>,
    pub energies: Vec<f64>,
    pub regions: Vec<u32>,
    pub accepted: Vec<bool>,
    /// Fresh momenta of the first `config.momentum_trace_len` iterations.
    pub momentum_trace: Vec<f64>,
    pub theta_trace: Vec<ThetaSnapshot>,
    pub visit_counts: Vec<u64>,
    pub final_theta: Option<Vec<f64>>,
    pub divergences: u64,
    pub wall_time: f64,
    pub warnings: Vec<String>,
}

impl RunRecord {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn burn_in(&self) -> usize {
        self.config.burn_in as usize
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.samples[i * self.dim..(i + 1) * self.dim]
    }

    /// Post-burn-in positions.
    pub fn kept(&self) -> impl Iterator<Item = &[f64]> {
        self.samples[self.burn_in() * self.dim..].chunks_exact(self.dim)
    }

    pub fn kept_energies(&self) -> &[f64] {
        &self.energies[self.burn_in()..]
    }

    /// Post-burn-in trace of one coordinate.
    pub fn coordinate(&self, coord: usize) -> Vec<f64> {
        self.kept().map(|x| x[coord]).collect()
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.accepted.iter().filter(|a| **a).count() as f64 / self.len().max(1) as f64
    }

    /// Equality of everything the chain produced, ignoring wall time.
    pub fn same_chain(&self, other: &RunRecord) -> bool {
        self.algorithm == other.algorithm
            && self.dim == other.dim
            && self.config == other.config
            && self.samples == other.samples
            && self.energies == other.energies
            && self.regions == other.regions
            && self.accepted == other.accepted
            && self.momentum_trace == other.momentum_trace
            && self.theta_trace == other.theta_trace
            && self.visit_counts == other.visit_counts
            && self.final_theta == other.final_theta
            && self.divergences == other.divergences
    }
}

/// Runs one chain for `config.iterations` iterations.
pub fn run_chain<T: TargetDensity + ?Sized>(
    config: &SamplerConfig,
    target: &T,
    algorithm: Algorithm,
) -> Result<RunRecord> {
    let dim = target.dim();
    config.validate(algorithm, dim)?;
    let started = Instant::now();
    let mut rng = ChainRng::seed_from_u64(config.seed);
    let kernel = Kernel {
        mass: MassMatrix::from_spec(&config.mass, dim)?,
        epsilon: config.epsilon,
        steps: config.leapfrog_steps,
    };

    let position = match &config.initial_position {
        InitialPosition::Fixed { position } => position.clone(),
        InitialPosition::Uniform { low, high } => {
            (0..dim).map(|_| rng.random_range(*low..*high)).collect()
        }
    };
    let partition = config.partition.as_ref();
    let mut state = ChainState::new(target, position, partition)?;
    let m = partition.map_or(1, EnergyPartition::len);

    let mut weights = match algorithm {
        Algorithm::Sahmc => {
            let theta = config.initial_theta.clone().unwrap_or_else(|| vec![0.0; m]);
            let pi = config
                .desired
                .clone()
                .unwrap_or_else(|| vec![1.0 / m as f64; m]);
            Some(ThetaWeights::new(
                theta,
                pi,
                (-config.theta_bound, config.theta_bound),
            )?)
        }
        Algorithm::Hmc => None,
    };

    let n = config.iterations as usize;
    let trace_len = config.momentum_trace_len.min(n);
    let mut record = RunRecord {
        algorithm,
        target: target.name().to_string(),
        dim,
        config: config.clone(),
        samples: Vec::with_capacity(n * dim),
        energies: Vec::with_capacity(n),
        regions: Vec::with_capacity(n),
        accepted: Vec::with_capacity(n),
        momentum_trace: Vec::with_capacity(trace_len * dim),
        theta_trace: Vec::new(),
        visit_counts: vec![0; m],
        final_theta: None,
        divergences: 0,
        wall_time: 0.0,
        warnings: Vec::new(),
    };

    for t in 0..config.iterations {
        let step = match (&mut weights, partition) {
            (Some(w), Some(p)) => {
                let frozen = match config.theta_freeze {
                    ThetaFreeze::Never => false,
                    ThetaFreeze::AfterBurnIn => t >= config.burn_in,
                    ThetaFreeze::Always => true,
                };
                let gain = match (frozen, config.gain) {
                    (false, Some(g)) => g.factor(t + 1),
                    _ => 0.0,
                };
                sahmc_step(&mut state, w, target, p, &kernel, gain, &mut rng)?
            }
            _ => hmc_step(&mut state, target, &kernel, partition, &mut rng)?,
        };
        record.samples.extend_from_slice(&state.position);
        record.energies.push(state.potential);
        record.regions.push(state.region as u32);
        record.accepted.push(step.accepted);
        record.visit_counts[state.region] += 1;
        if step.diverged {
            record.divergences += 1;
        }
        if (t as usize) < trace_len {
            record.momentum_trace.extend_from_slice(&step.momentum);
        }
        if let Some(w) = &weights {
            let every = config.theta_snapshot_every;
            if every > 0 && (t + 1) % every == 0 {
                record.theta_trace.push(ThetaSnapshot {
                    iteration: t + 1,
                    theta: w.theta().to_vec(),
                });
            }
        }
    }
    record.final_theta = weights.map(|w| w.theta().to_vec());
    record.wall_time = started.elapsed().as_secs_f64();
    Ok(record)
}

/// Runs independent chains in parallel on the current rayon pool. Output
/// order follows `configs`; each record equals its standalone
/// [`run_chain`] result.
pub fn run_parallel<T: TargetDensity + ?Sized>(
    configs: &[SamplerConfig],
    target: &T,
    algorithm: Algorithm,
) -> Result<Vec<RunRecord>> {
    let mut seen: HashMap<u64, usize> = HashMap::new();
    for c in configs {
        *seen.entry(c.seed).or_default() += 1;
    }
    let mut records = configs
        .par_iter()
        .map(|c| run_chain(c, target, algorithm))
        .collect::<Result<Vec<_>>>()?;
    for r in &mut records {
        if seen[&r.config.seed] > 1 {
            r.warnings.push(format!(
                "seed {} shared with another chain; chains are not independent",
                r.config.seed
            ));
        }
    }
    Ok(records)
}
