//! Sensor network localization.
//!
//! Unknown sensors sit at `x_1..x_N` in the plane, a few anchors at known
//! locations. A pair at distance `d` is observed with probability
//! `exp(-d^2 / (2 R^2))`; an observed pair reports `y ~ N(d, sigma^2)`.
//! Each unknown location has an independent `N(0, prior_sd^2 I_2)` prior.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::target::TargetDensity;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Floor on pair distance when differentiating `|x_t - x_u|`.
const MIN_DISTANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Unknown(usize),
    Anchor(usize),
}

/// One pair of nodes and, when the pair was observed, its noisy distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairObservation {
    pub a: Node,
    pub b: Node,
    pub distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorNetworkSpec {
    pub n_unknown: usize,
    pub anchors: Vec<[f64; 2]>,
    pub range: f64,
    pub sigma: f64,
    pub prior_sd: f64,
    /// Every pair involving at least one unknown sensor, observed or not.
    pub pairs: Vec<PairObservation>,
    /// Locations the data were generated from, when known.
    #[serde(default)]
    pub truth: Option<Vec<[f64; 2]>>,
}

/// Default locations of the four unknown sensors used for the synthetic
/// dataset.
pub const DEFAULT_SENSORS: [[f64; 2]; 4] = [[0.57, 0.91], [0.10, 0.37], [0.26, 0.14], [0.85, 0.04]];

pub const DEFAULT_ANCHORS: [[f64; 2]; 2] = [[0.5, 0.3], [0.3, 0.7]];

impl SensorNetworkSpec {
    /// Posterior dimension, two coordinates per unknown sensor.
    pub fn dim(&self) -> usize {
        2 * self.n_unknown
    }

    pub fn observed_count(&self) -> usize {
        self.pairs.iter().filter(|p| p.distance.is_some()).count()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_unknown == 0 {
            return Err(Error::input("at least one unknown sensor required"));
        }
        for (name, v) in [
            ("range", self.range),
            ("sigma", self.sigma),
            ("prior_sd", self.prior_sd),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::input(format!("{name} must be positive, got {v}")));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for p in &self.pairs {
            for node in [p.a, p.b] {
                match node {
                    Node::Unknown(i) if i >= self.n_unknown => {
                        return Err(Error::input(format!("unknown sensor {i} out of range")))
                    }
                    Node::Anchor(i) if i >= self.anchors.len() => {
                        return Err(Error::input(format!("anchor {i} out of range")))
                    }
                    _ => {}
                }
            }
            if p.a == p.b || matches!((p.a, p.b), (Node::Anchor(_), Node::Anchor(_))) {
                return Err(Error::input(format!("pair {:?}-{:?} is not informative", p.a, p.b)));
            }
            if !seen.insert((p.a.min(p.b), p.a.max(p.b))) {
                return Err(Error::input(format!("pair {:?}-{:?} listed twice", p.a, p.b)));
            }
            if let Some(y) = p.distance {
                if !(y >= 0.0) || !y.is_finite() {
                    return Err(Error::input(format!("negative or non-finite distance {y}")));
                }
            }
        }
        Ok(())
    }
}

/// All pairs with at least one unknown endpoint, in a fixed order: unknown
/// pairs `(t, u)` with `t < u` first, then each unknown against each anchor.
pub fn all_pairs(n_unknown: usize, n_anchors: usize) -> Vec<(Node, Node)> {
    let mut out = Vec::new();
    for t in 0..n_unknown {
        for u in t + 1..n_unknown {
            out.push((Node::Unknown(t), Node::Unknown(u)));
        }
    }
    for t in 0..n_unknown {
        for a in 0..n_anchors {
            out.push((Node::Unknown(t), Node::Anchor(a)));
        }
    }
    out
}

/// Simulates observations from known sensor locations. Each pair is
/// observed with probability `exp(-d^2 / (2 R^2))`; observed distances are
/// drawn from `N(d, sigma^2)` truncated to nonnegative values.
pub fn generate_sensor_data(
    truth: &[[f64; 2]],
    anchors: &[[f64; 2]],
    range: f64,
    sigma: f64,
    seed: u64,
) -> Result<SensorNetworkSpec> {
    if !(range > 0.0) || !(sigma > 0.0) {
        return Err(Error::input("range and sigma must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::input(e.to_string()))?;
    let loc = |n: Node| match n {
        Node::Unknown(i) => truth[i],
        Node::Anchor(i) => anchors[i],
    };
    let pairs = all_pairs(truth.len(), anchors.len())
        .into_iter()
        .map(|(a, b)| {
            let d = dist(loc(a), loc(b));
            let p_obs = (-0.5 * d * d / (range * range)).exp();
            let u: f64 = rng.random();
            let distance = (u < p_obs).then(|| loop {
                let y = d + noise.sample(&mut rng);
                if y >= 0.0 {
                    break y;
                }
            });
            PairObservation { a, b, distance }
        })
        .collect();
    let spec = SensorNetworkSpec {
        n_unknown: truth.len(),
        anchors: anchors.to_vec(),
        range,
        sigma,
        prior_sd: 10.0,
        pairs,
        truth: Some(truth.to_vec()),
    };
    spec.validate()?;
    Ok(spec)
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Posterior over the stacked unknown locations `(x_1, y_1, ..., x_N, y_N)`.
#[derive(Debug, Clone)]
pub struct SensorPosterior {
    spec: SensorNetworkSpec,
    name: String,
}

impl SensorPosterior {
    pub fn new(spec: SensorNetworkSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            name: format!("sensor(n={})", spec.n_unknown),
            spec,
        })
    }

    pub fn spec(&self) -> &SensorNetworkSpec {
        &self.spec
    }

    fn location(&self, x: &[f64], n: Node) -> [f64; 2] {
        match n {
            Node::Unknown(i) => [x[2 * i], x[2 * i + 1]],
            Node::Anchor(i) => self.spec.anchors[i],
        }
    }

    fn eval(&self, x: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        let s = &self.spec;
        let r2 = s.range * s.range;
        let s2 = s.sigma * s.sigma;
        let p2 = s.prior_sd * s.prior_sd;
        if let Some(g) = grad.as_deref_mut() {
            g.fill(0.0);
        }
        let mut log_post = 0.0;
        for pair in &s.pairs {
            let (pa, pb) = (self.location(x, pair.a), self.location(x, pair.b));
            let delta = [pa[0] - pb[0], pa[1] - pb[1]];
            let sq = delta[0] * delta[0] + delta[1] * delta[1];
            let d = sq.sqrt();
            // d(log-lik)/d(delta), accumulated below
            let coef;
            match pair.distance {
                Some(y) => {
                    let resid = y - d;
                    log_post += -0.5 * resid * resid / s2 - s.sigma.ln() - 0.5 * LN_2PI;
                    log_post += -0.5 * sq / r2;
                    coef = resid / (s2 * d.max(MIN_DISTANCE)) - 1.0 / r2;
                }
                None => {
                    let half = 0.5 * sq / r2;
                    // log(1 - exp(-half))
                    log_post += (-(-half).exp_m1()).ln();
                    coef = 1.0 / (r2 * half.exp_m1());
                }
            }
            if let Some(g) = grad.as_deref_mut() {
                // grad of U = -log_post
                for (node, sign) in [(pair.a, 1.0), (pair.b, -1.0)] {
                    if let Node::Unknown(i) = node {
                        g[2 * i] -= sign * coef * delta[0];
                        g[2 * i + 1] -= sign * coef * delta[1];
                    }
                }
            }
        }
        for i in 0..s.n_unknown {
            let (a, b) = (x[2 * i], x[2 * i + 1]);
            log_post += -0.5 * (a * a + b * b) / p2 - (2.0 * std::f64::consts::PI * p2).ln();
            if let Some(g) = grad.as_deref_mut() {
                g[2 * i] += a / p2;
                g[2 * i + 1] += b / p2;
            }
        }
        -log_post
    }
}

impl TargetDensity for SensorPosterior {
    fn dim(&self) -> usize {
        self.spec.dim()
    }
    fn potential(&self, x: &[f64]) -> f64 {
        self.eval(x, None)
    }
    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        self.eval(x, Some(grad));
    }
    fn potential_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.eval(x, Some(grad))
    }
    fn name(&self) -> &str {
        &self.name
    }
}
