//! Experiment configuration files (TOML).
//!
//! ```toml
//! id = "trimodal_set2"
//! chains = 10
//! algorithms = ["sahmc", "hmc"]
//! metrics = ["ess", "modes", "acceptance"]
//!
//! [target]
//! kind = "trimodal"
//! a = -8.0
//! b = 6.0
//!
//! [sampler]
//! epsilon = 0.3
//! leapfrog_steps = 20
//! iterations = 1_000_000
//! burn_in = 200_000
//! t0 = 5000.0
//!
//! [partition]
//! start = 0.0
//! width = 2.0
//! regions = 12
//!
//! [profiles.desk]
//! iterations = 200_000
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sahmc::targets::{
    generate_sensor_data, load_pima_csv, simulate_regression, trimodal_2d, Activation, MlpSpec,
    SensorNetworkSpec, DEFAULT_ANCHORS, DEFAULT_SENSORS,
};
use sahmc::{
    Algorithm, EnergyPartition, GainSchedule, InitialPosition, MassSpec, SamplerConfig,
    ThetaFreeze,
};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, HarnessResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    #[serde(default)]
    pub description: Option<String>,
    pub chains: usize,
    /// One seed per chain; derived from `base_seed` when absent.
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub base_seed: u64,
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    /// Output directory; defaults to `<output root>/<id>`.
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub target: TargetSpec,
    pub sampler: SamplerSection,
    #[serde(default)]
    pub partition: Option<PartitionSpec>,
    /// Per-algorithm overrides of the shared sampler settings.
    #[serde(default)]
    pub overrides: BTreeMap<Algorithm, SamplerOverride>,
    #[serde(default)]
    pub profiles: BTreeMap<String, ProfileOverride>,
    #[serde(default)]
    pub plots: PlotSection,
    /// Integration box for the `theta` metric.
    #[serde(default)]
    pub theta_check: Option<ThetaCheck>,
}

/// Region masses for the `theta` metric are integrated over `[low, high]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaCheck {
    pub low: f64,
    pub high: f64,
    #[serde(default = "default_quadrature_tol")]
    pub tol: f64,
}

fn default_quadrature_tol() -> f64 {
    1e-10
}

fn default_metrics() -> Vec<Metric> {
    vec![Metric::Ess, Metric::Acceptance, Metric::MinEnergy]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Per-coordinate effective sample size (min, median, max).
    Ess,
    /// Modes discovered and visit-frequency error; mixture targets only.
    Modes,
    Acceptance,
    MinEnergy,
    /// Spread of the post-burn-in energies.
    EnergyRange,
    /// Posterior risk against the true regression function.
    PosteriorRisk,
    /// Misclassification rate of the posterior predictive on the test fold.
    TestError,
    /// Linkage clusters of one sensor's draws.
    Clusters,
    /// Deviation of the adapted weights from their quadrature limit.
    Theta,
}

impl Metric {
    pub const ALL: [Metric; 9] = [
        Metric::Ess,
        Metric::Modes,
        Metric::Acceptance,
        Metric::MinEnergy,
        Metric::EnergyRange,
        Metric::PosteriorRisk,
        Metric::TestError,
        Metric::Clusters,
        Metric::Theta,
    ];

    /// Whether the metric can be computed for draws from `target`.
    pub fn applies_to(&self, target: &TargetSpec, theta: Option<&ThetaCheck>) -> HarnessResult<bool> {
        Ok(match self {
            Metric::Modes => target.modes().is_some(),
            Metric::PosteriorRisk => matches!(target, TargetSpec::MlpRegression { .. }),
            Metric::TestError => matches!(target, TargetSpec::Pima { .. }),
            Metric::Clusters => matches!(
                target,
                TargetSpec::Sensor {
                    watch_sensor: Some(_),
                    ..
                }
            ),
            Metric::Theta => theta.is_some() && target.dim() <= 2,
            _ => true,
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Ess => "ess",
            Metric::Modes => "modes",
            Metric::Acceptance => "acceptance",
            Metric::MinEnergy => "min_energy",
            Metric::EnergyRange => "energy_range",
            Metric::PosteriorRisk => "posterior_risk",
            Metric::TestError => "test_error",
            Metric::Clusters => "clusters",
            Metric::Theta => "theta",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    StandardNormal {
        dim: usize,
    },
    Bimodal {
        mu: f64,
        sd: f64,
    },
    Trimodal {
        a: f64,
        b: f64,
    },
    Mixture8 {
        dim: usize,
    },
    Sensor {
        data_seed: u64,
        #[serde(default = "default_range")]
        range: f64,
        #[serde(default = "default_sigma")]
        sigma: f64,
        #[serde(default = "default_sensor_prior")]
        prior_sd: f64,
        #[serde(default)]
        truth: Option<Vec<[f64; 2]>>,
        #[serde(default)]
        anchors: Option<Vec<[f64; 2]>>,
        /// Sensor whose draws the `clusters` metric inspects.
        #[serde(default)]
        watch_sensor: Option<usize>,
        #[serde(default = "default_cluster_radius")]
        cluster_radius: f64,
    },
    MlpRegression {
        n: usize,
        data_seed: u64,
        #[serde(default = "one")]
        noise_sd: f64,
        #[serde(default = "default_hidden")]
        hidden_units: usize,
        #[serde(default = "default_mlp_prior")]
        prior_sd: f64,
        #[serde(default)]
        activation: Activation,
    },
    Pima {
        /// Relative paths resolve against the config file's directory.
        path: PathBuf,
        split_seed: u64,
        #[serde(default = "default_pima_hidden")]
        hidden_units: usize,
        #[serde(default = "default_mlp_prior")]
        prior_sd: f64,
    },
}

fn default_range() -> f64 {
    0.3
}
fn default_sigma() -> f64 {
    0.02
}
fn default_sensor_prior() -> f64 {
    10.0
}
fn default_cluster_radius() -> f64 {
    0.1
}
fn one() -> f64 {
    1.0
}
fn default_hidden() -> usize {
    4
}
fn default_pima_hidden() -> usize {
    25
}
fn default_mlp_prior() -> f64 {
    5.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    pub epsilon: f64,
    pub leapfrog_steps: usize,
    pub iterations: u64,
    pub burn_in: u64,
    /// Gain schedule constant; required when SAHMC is run.
    #[serde(default)]
    pub t0: Option<f64>,
    #[serde(default)]
    pub desired: Option<Vec<f64>>,
    #[serde(default)]
    pub initial_theta: Option<Vec<f64>>,
    #[serde(default)]
    pub theta_freeze: ThetaFreeze,
    #[serde(default)]
    pub init: Option<InitialPosition>,
    #[serde(default)]
    pub mass: Option<MassSpec>,
    #[serde(default)]
    pub theta_snapshot_every: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum PartitionSpec {
    Explicit { thresholds: Vec<f64> },
    Uniform { start: f64, width: f64, regions: usize },
}

impl PartitionSpec {
    pub fn build(&self) -> HarnessResult<EnergyPartition> {
        let p = match self {
            PartitionSpec::Explicit { thresholds } => EnergyPartition::new(thresholds.clone()),
            PartitionSpec::Uniform {
                start,
                width,
                regions,
            } => EnergyPartition::uniform(*start, *width, *regions),
        };
        p.map_err(|e| HarnessError::Validation(format!("partition: {e}")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerOverride {
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub leapfrog_steps: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileOverride {
    #[serde(default)]
    pub iterations: Option<u64>,
    #[serde(default)]
    pub burn_in: Option<u64>,
    #[serde(default)]
    pub chains: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotSection {
    /// Scatter files keep at most this many post-burn-in draws.
    #[serde(default = "default_scatter_points")]
    pub scatter_points: usize,
    #[serde(default = "default_trace_len")]
    pub trace_len: usize,
    /// Write plot CSVs for this many chains per algorithm.
    #[serde(default = "default_plot_chains")]
    pub chains: usize,
}

impl Default for PlotSection {
    fn default() -> Self {
        Self {
            scatter_points: default_scatter_points(),
            trace_len: default_trace_len(),
            chains: default_plot_chains(),
        }
    }
}

fn default_scatter_points() -> usize {
    5000
}
fn default_trace_len() -> usize {
    1000
}
fn default_plot_chains() -> usize {
    1
}

/// Upper bound on smoke-profile run length.
pub const SMOKE_MAX_ITERATIONS: u64 = 10_000;

/// Run length presets. `paper` keeps the file's numbers, `smoke` runs one
/// chain with a hundredth of the iterations (at most 10^4), `desk` uses the file's `[profiles.desk]`
/// table with burn-in defaulting to a fifth of the iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    #[default]
    Paper,
    Smoke,
    Desk,
}

impl std::str::FromStr for Metric {
    type Err = HarnessError;

    fn from_str(s: &str) -> HarnessResult<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Metric::ALL.iter().map(Metric::as_str).collect();
                HarnessError::Validation(format!(
                    "unknown metric `{s}` (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

impl std::str::FromStr for Profile {
    type Err = HarnessError;

    fn from_str(s: &str) -> HarnessResult<Self> {
        match s {
            "paper" => Ok(Profile::Paper),
            "smoke" => Ok(Profile::Smoke),
            "desk" => Ok(Profile::Desk),
            other => Err(HarnessError::Validation(format!(
                "unknown profile `{other}` (expected paper, smoke or desk)"
            ))),
        }
    }
}

impl std::fmt::Display for Profile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Profile::Paper => "paper",
            Profile::Smoke => "smoke",
            Profile::Desk => "desk",
        })
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> HarnessResult<Self> {
        let config: Self =
            toml::from_str(text).map_err(|e| HarnessError::Validation(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Applies a run-length profile in place.
    pub fn apply_profile(&mut self, profile: Profile) -> HarnessResult<()> {
        match profile {
            Profile::Paper => {}
            Profile::Smoke => {
                let n = (self.sampler.iterations / 100).clamp(1, SMOKE_MAX_ITERATIONS);
                self.sampler.burn_in = self.sampler.burn_in * n / self.sampler.iterations;
                self.sampler.iterations = n;
                self.chains = 1;
                self.seeds = self.seeds.as_ref().map(|s| s[..1].to_vec());
            }
            Profile::Desk => {
                let desk = self.profiles.get("desk").cloned().ok_or_else(|| {
                    HarnessError::Validation(format!("config `{}` has no desk profile", self.id))
                })?;
                if let Some(n) = desk.iterations {
                    self.sampler.iterations = n;
                }
                self.sampler.burn_in = desk.burn_in.unwrap_or(self.sampler.iterations / 5);
                if let Some(c) = desk.chains {
                    self.chains = c;
                    self.seeds = None;
                }
            }
        }
        self.validate()
    }

    pub fn validate(&self) -> HarnessResult<()> {
        let bad = |msg: String| Err(HarnessError::Validation(format!("{}: {msg}", self.id)));
        if self.id.trim().is_empty() {
            return Err(HarnessError::Validation("experiment id is empty".into()));
        }
        if self.chains == 0 {
            return bad("chains must be positive".into());
        }
        if let Some(seeds) = &self.seeds {
            if seeds.len() != self.chains {
                return bad(format!(
                    "{} seeds given for {} chains",
                    seeds.len(),
                    self.chains
                ));
            }
        }
        if self.algorithms.is_empty() {
            return bad("no algorithms listed".into());
        }
        if self.algorithms.contains(&Algorithm::Sahmc) {
            if self.partition.is_none() {
                return bad("sahmc needs a [partition] table".into());
            }
            if self.sampler.t0.is_none() {
                return bad("sahmc needs sampler.t0".into());
            }
        }
        if let Some(p) = &self.partition {
            p.build()?;
        }
        for &metric in &self.metrics {
            if !metric.applies_to(&self.target, self.theta_check.as_ref())? {
                return bad(format!(
                    "metric `{}` does not apply to this target",
                    metric.as_str()
                ));
            }
        }
        if let TargetSpec::Sensor {
            watch_sensor: Some(k),
            ..
        } = self.target
        {
            if 2 * k >= self.target_dim()? {
                return bad(format!("watch_sensor {k} out of range"));
            }
        }
        for &alg in &self.algorithms {
            let dim = self.target_dim()?;
            self.sampler_config(alg, 0)?
                .validate(alg, dim)
                .map_err(|e| HarnessError::Validation(format!("{}: {alg}: {e}", self.id)))?;
        }
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.seeds.clone().unwrap_or_else(|| {
            (0..self.chains as u64)
                .map(|i| self.base_seed + i)
                .collect()
        })
    }

    /// Sampler settings for one algorithm and seed.
    pub fn sampler_config(&self, algorithm: Algorithm, seed: u64) -> HarnessResult<SamplerConfig> {
        let s = &self.sampler;
        let ov = self.overrides.get(&algorithm).cloned().unwrap_or_default();
        let mut c = SamplerConfig::new(
            ov.epsilon.unwrap_or(s.epsilon),
            ov.leapfrog_steps.unwrap_or(s.leapfrog_steps),
            s.iterations,
        )
        .with_burn_in(s.burn_in)
        .with_seed(seed)
        .with_theta_freeze(s.theta_freeze);
        if let Some(p) = &self.partition {
            c = c.with_partition(p.build()?);
        }
        if let Some(t0) = s.t0 {
            let gain = GainSchedule::new(t0)
                .map_err(|e| HarnessError::Validation(format!("{}: {e}", self.id)))?;
            c = c.with_gain(gain);
        }
        if let Some(init) = &s.init {
            c = c.with_initial_position(init.clone());
        }
        if let Some(theta) = &s.initial_theta {
            c = c.with_initial_theta(theta.clone());
        }
        if let Some(mass) = &s.mass {
            c.mass = mass.clone();
        }
        c.desired = s.desired.clone();
        // default: about a thousand snapshots per chain
        let every = s
            .theta_snapshot_every
            .unwrap_or((s.iterations / 1000).max(1));
        c = c.with_theta_snapshots(every);
        Ok(c)
    }

    pub fn target_dim(&self) -> HarnessResult<usize> {
        Ok(self.target.dim())
    }
}

/// Reads and validates a config file. A relative `pima` data path is
/// resolved against the file's directory.
pub fn parse_config(path: impl AsRef<Path>) -> HarnessResult<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Validation(format!("{}: {e}", path.display())))?;
    let mut config = ExperimentConfig::from_toml_str(&text)
        .map_err(|e| HarnessError::Validation(format!("{}: {e}", path.display())))?;
    if let TargetSpec::Pima { path: data, .. } = &mut config.target {
        if data.is_relative() {
            if let Some(dir) = path.parent() {
                *data = dir.join(&*data);
            }
        }
    }
    Ok(config)
}

impl TargetSpec {
    pub fn dim(&self) -> usize {
        match self {
            TargetSpec::StandardNormal { dim } | TargetSpec::Mixture8 { dim } => *dim,
            TargetSpec::Bimodal { .. } => 1,
            TargetSpec::Trimodal { .. } => 2,
            TargetSpec::Sensor { truth, .. } => 2 * truth.as_ref().map_or(DEFAULT_SENSORS.len(), Vec::len),
            TargetSpec::MlpRegression { hidden_units, .. } => 3 * hidden_units + 1,
            TargetSpec::Pima { hidden_units, .. } => 10 * hidden_units + 1,
        }
    }

    pub fn sensor_spec(&self) -> HarnessResult<Option<SensorNetworkSpec>> {
        match self {
            TargetSpec::Sensor {
                data_seed,
                range,
                sigma,
                prior_sd,
                truth,
                anchors,
                ..
            } => {
                let truth = truth.clone().unwrap_or_else(|| DEFAULT_SENSORS.to_vec());
                let anchors = anchors.clone().unwrap_or_else(|| DEFAULT_ANCHORS.to_vec());
                let mut spec = generate_sensor_data(&truth, &anchors, *range, *sigma, *data_seed)?;
                spec.prior_sd = *prior_sd;
                Ok(Some(spec))
            }
            _ => Ok(None),
        }
    }

    pub fn mlp_spec(&self) -> HarnessResult<Option<MlpSpec>> {
        match self {
            TargetSpec::MlpRegression {
                n,
                data_seed,
                noise_sd,
                hidden_units,
                prior_sd,
                activation,
            } => {
                let data = simulate_regression(*n, *noise_sd, *data_seed)?;
                let mut spec = MlpSpec::regression(data);
                spec.hidden_units = *hidden_units;
                spec.prior_sd = *prior_sd;
                spec.noise_sd = *noise_sd;
                spec.activation = *activation;
                Ok(Some(spec))
            }
            TargetSpec::Pima {
                path,
                split_seed,
                hidden_units,
                prior_sd,
            } => {
                let split = load_pima_csv(path, *split_seed)?;
                let mut spec = MlpSpec::classification(split.train);
                spec.hidden_units = *hidden_units;
                spec.prior_sd = *prior_sd;
                Ok(Some(spec))
            }
            _ => Ok(None),
        }
    }

    /// Known mode locations, for the `modes` metric.
    pub fn modes(&self) -> Option<Vec<Vec<f64>>> {
        match self {
            TargetSpec::Trimodal { a, b } => Some(trimodal_2d(*a, *b).means()),
            TargetSpec::Bimodal { mu, .. } => Some(vec![vec![-mu], vec![*mu]]),
            TargetSpec::Mixture8 { dim } => Some(sahmc::targets::mixture_8_modes(*dim)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
id = "t"
chains = 2
algorithms = ["sahmc", "hmc"]
[target]
kind = "trimodal"
a = -6.0
b = 4.0
[sampler]
epsilon = 0.3
leapfrog_steps = 20
iterations = 1000
burn_in = 100
t0 = 50.0
[partition]
start = 0.0
width = 2.0
regions = 12
"#;

    #[test]
    fn minimal_parses() {
        let c = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(c.seeds(), vec![0, 1]);
        let p = c.sampler_config(Algorithm::Sahmc, 0).unwrap().partition.unwrap();
        assert_eq!(p.len(), 12);
    }

    #[test]
    fn unknown_key_is_named() {
        let text = MINIMAL.replace("chains = 2", "chains = 2\nchian = 3");
        let err = ExperimentConfig::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("chian"), "{err}");
    }

    #[test]
    fn decreasing_thresholds_rejected() {
        let text = MINIMAL.replace(
            "start = 0.0\nwidth = 2.0\nregions = 12",
            "thresholds = [2.0, 0.0]",
        );
        let err = ExperimentConfig::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("not increasing"), "{err}");
    }

    #[test]
    fn missing_key_rejected() {
        let text = MINIMAL.replace("epsilon = 0.3\n", "");
        let err = ExperimentConfig::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("epsilon"), "{err}");
    }

    #[test]
    fn type_mismatch_rejected() {
        let text = MINIMAL.replace("chains = 2", "chains = \"two\"");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn seed_count_must_match() {
        let text = MINIMAL.replace("chains = 2", "chains = 2\nseeds = [1, 2, 3]");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn sahmc_needs_partition() {
        let text = MINIMAL.replace("[partition]\nstart = 0.0\nwidth = 2.0\nregions = 12\n", "");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
        let hmc_only = text.replace("[\"sahmc\", \"hmc\"]", "[\"hmc\"]");
        assert!(ExperimentConfig::from_toml_str(&hmc_only).is_ok());
    }

    #[test]
    fn profiles() {
        let text = format!("{MINIMAL}[profiles.desk]\niterations = 500\n");
        let mut c = ExperimentConfig::from_toml_str(&text).unwrap();
        let mut smoke = c.clone();
        smoke.apply_profile(Profile::Smoke).unwrap();
        assert_eq!((smoke.sampler.iterations, smoke.sampler.burn_in), (10, 1));
        c.apply_profile(Profile::Desk).unwrap();
        assert_eq!((c.sampler.iterations, c.sampler.burn_in), (500, 100));
    }

    #[test]
    fn inapplicable_metric_rejected() {
        let text = MINIMAL.replace("chains = 2", "chains = 2\nmetrics = [\"posterior_risk\"]");
        let err = ExperimentConfig::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("posterior_risk"), "{err}");
    }

    #[test]
    fn overrides_apply_per_algorithm() {
        let text = format!("{MINIMAL}[overrides.hmc]\nepsilon = 0.1\n");
        let c = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(c.sampler_config(Algorithm::Hmc, 0).unwrap().epsilon, 0.1);
        assert_eq!(c.sampler_config(Algorithm::Sahmc, 0).unwrap().epsilon, 0.3);
    }
}
