use serde::{Deserialize, Serialize};

use crate::adaptation::{validate_pi, GainSchedule, DEFAULT_THETA_BOUND};
use crate::error::{Error, Result};
use crate::mass::MassSpec;
use crate::partition::EnergyPartition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Sahmc,
    Hmc,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Sahmc => "sahmc",
            Algorithm::Hmc => "hmc",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sahmc" => Ok(Algorithm::Sahmc),
            "hmc" => Ok(Algorithm::Hmc),
            other => Err(Error::config(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// When the weight adaptation stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaFreeze {
    /// Keep adapting for the whole run.
    #[default]
    Never,
    /// Adapt during burn-in only.
    AfterBurnIn,
    /// Never adapt: the chain targets the fixed weighted density.
    Always,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitialPosition {
    /// Independent uniform draws on `[low, high]` per coordinate.
    Uniform { low: f64, high: f64 },
    Fixed { position: Vec<f64> },
}

impl Default for InitialPosition {
    fn default() -> Self {
        InitialPosition::Uniform {
            low: -1.0,
            high: 1.0,
        }
    }
}

/// Everything a single chain needs besides the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub epsilon: f64,
    pub leapfrog_steps: usize,
    pub mass: MassSpec,
    /// Required by SAHMC; for HMC it only labels the recorded energies.
    pub partition: Option<EnergyPartition>,
    /// Required by SAHMC.
    pub gain: Option<GainSchedule>,
    /// Desired visit frequencies `pi`; uniform when absent.
    pub desired: Option<Vec<f64>>,
    pub initial_theta: Option<Vec<f64>>,
    pub theta_bound: f64,
    pub theta_freeze: ThetaFreeze,
    pub iterations: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub initial_position: InitialPosition,
    /// Record theta every this many iterations; 0 disables the trace.
    pub theta_snapshot_every: u64,
    /// Number of leading iterations whose fresh momentum is kept.
    pub momentum_trace_len: usize,
}

impl SamplerConfig {
    pub fn new(epsilon: f64, leapfrog_steps: usize, iterations: u64) -> Self {
        Self {
            epsilon,
            leapfrog_steps,
            mass: MassSpec::Identity,
            partition: None,
            gain: None,
            desired: None,
            initial_theta: None,
            theta_bound: DEFAULT_THETA_BOUND,
            theta_freeze: ThetaFreeze::Never,
            iterations,
            burn_in: 0,
            seed: 0,
            initial_position: InitialPosition::default(),
            theta_snapshot_every: 0,
            momentum_trace_len: 1000,
        }
    }

    pub fn with_partition(mut self, partition: EnergyPartition) -> Self {
        self.partition = Some(partition);
        self
    }

    pub fn with_gain(mut self, gain: GainSchedule) -> Self {
        self.gain = Some(gain);
        self
    }

    pub fn with_burn_in(mut self, burn_in: u64) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_initial_position(mut self, init: InitialPosition) -> Self {
        self.initial_position = init;
        self
    }

    pub fn with_theta_freeze(mut self, freeze: ThetaFreeze) -> Self {
        self.theta_freeze = freeze;
        self
    }

    pub fn with_initial_theta(mut self, theta: Vec<f64>) -> Self {
        self.initial_theta = Some(theta);
        self
    }

    pub fn with_theta_snapshots(mut self, every: u64) -> Self {
        self.theta_snapshot_every = every;
        self
    }

    pub fn validate(&self, algorithm: Algorithm, dim: usize) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::config("iterations must be positive"));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::config(format!(
                "burn-in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.leapfrog_steps == 0 {
            return Err(Error::config("leapfrog steps must be at least 1"));
        }
        if !(self.theta_bound > 0.0) {
            return Err(Error::config("theta bound must be positive"));
        }
        match &self.initial_position {
            InitialPosition::Uniform { low, high } if !(low < high) => {
                return Err(Error::config(format!(
                    "empty initial box [{low}, {high}]"
                )));
            }
            InitialPosition::Fixed { position } if position.len() != dim => {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: position.len(),
                });
            }
            _ => {}
        }
        if algorithm == Algorithm::Sahmc {
            let partition = self
                .partition
                .as_ref()
                .ok_or_else(|| Error::config("sahmc requires an energy partition"))?;
            if self.gain.is_none() && self.theta_freeze != ThetaFreeze::Always {
                return Err(Error::config("sahmc requires a gain schedule"));
            }
            let m = partition.len();
            if let Some(pi) = &self.desired {
                if pi.len() != m {
                    return Err(Error::DimensionMismatch {
                        expected: m,
                        got: pi.len(),
                    });
                }
                validate_pi(pi)?;
            }
            if let Some(theta) = &self.initial_theta {
                if theta.len() != m {
                    return Err(Error::DimensionMismatch {
                        expected: m,
                        got: theta.len(),
                    });
                }
            }
        }
        Ok(())
    }
}
