use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::target::TargetDensity;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Weights, means and covariances of a Gaussian mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixtureSpec {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    /// One covariance per component; `None` means every component has
    /// identity covariance.
    pub covariances: Option<Vec<Vec<Vec<f64>>>>,
}

#[derive(Debug, Clone)]
struct Component {
    mean: Vec<f64>,
    /// Row-major precision matrix; `None` for identity.
    precision: Option<Vec<f64>>,
    /// Log of the component's coefficient in front of
    /// `exp(-1/2 (x - mu)^T P (x - mu))`.
    log_coef: f64,
}

/// `U(x) = -log sum_k c_k exp(-1/2 (x - mu_k)^T P_k (x - mu_k))`, evaluated
/// with log-sum-exp so it stays finite far from every mean.
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    name: String,
    dim: usize,
    components: Vec<Component>,
}

impl GaussianMixture {
    /// The normalized mixture density `sum_k w_k N(x; mu_k, Sigma_k)`.
    pub fn new(name: impl Into<String>, spec: &GaussianMixtureSpec) -> Result<Self> {
        let k = spec.weights.len();
        if k == 0 || spec.means.len() != k {
            return Err(Error::input(format!(
                "{k} weights but {} means",
                spec.means.len()
            )));
        }
        let total: f64 = spec.weights.iter().sum();
        if spec.weights.iter().any(|w| !(*w > 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::input("mixture weights must be positive and sum to 1"));
        }
        let dim = spec.means[0].len();
        if dim == 0 || spec.means.iter().any(|m| m.len() != dim) {
            return Err(Error::input("means must share one positive dimension"));
        }
        if let Some(covs) = &spec.covariances {
            if covs.len() != k {
                return Err(Error::input(format!(
                    "{k} components but {} covariances",
                    covs.len()
                )));
            }
        }
        let mut components = Vec::with_capacity(k);
        for (j, (w, mean)) in spec.weights.iter().zip(&spec.means).enumerate() {
            let (precision, log_det) = match &spec.covariances {
                None => (None, 0.0),
                Some(covs) => {
                    let (p, ld) = invert_spd(&covs[j], dim)
                        .map_err(|e| Error::input(format!("component {j}: {e}")))?;
                    (Some(p), ld)
                }
            };
            components.push(Component {
                mean: mean.clone(),
                precision,
                log_coef: w.ln() - 0.5 * (dim as f64 * LN_2PI + log_det),
            });
        }
        Ok(Self {
            name: name.into(),
            dim,
            components,
        })
    }

    /// Unnormalized sum of unit-covariance kernels,
    /// `U(x) = -log sum_k exp(-1/2 |x - mu_k|^2)`.
    pub fn kernel_sum(name: impl Into<String>, means: Vec<Vec<f64>>) -> Result<Self> {
        let dim = means.first().map_or(0, Vec::len);
        if dim == 0 || means.iter().any(|m| m.len() != dim) {
            return Err(Error::input("means must share one positive dimension"));
        }
        Ok(Self {
            name: name.into(),
            dim,
            components: means
                .into_iter()
                .map(|mean| Component {
                    mean,
                    precision: None,
                    log_coef: 0.0,
                })
                .collect(),
        })
    }

    pub fn means(&self) -> Vec<Vec<f64>> {
        self.components.iter().map(|c| c.mean.clone()).collect()
    }

    /// Log-terms `log c_k - q_k / 2` and the precision-weighted residuals
    /// `P_k (x - mu_k)` (only filled when `resid` is given).
    fn terms(&self, x: &[f64], logs: &mut [f64], mut resid: Option<&mut [f64]>) {
        let d = self.dim;
        let mut diff = vec![0.0; d];
        for (k, c) in self.components.iter().enumerate() {
            for ((o, xi), mi) in diff.iter_mut().zip(x).zip(&c.mean) {
                *o = xi - mi;
            }
            let q = match &c.precision {
                None => {
                    if let Some(r) = resid.as_deref_mut() {
                        r[k * d..(k + 1) * d].copy_from_slice(&diff);
                    }
                    diff.iter().map(|v| v * v).sum::<f64>()
                }
                Some(p) => {
                    let mut q = 0.0;
                    for i in 0..d {
                        let row = &p[i * d..(i + 1) * d];
                        let pi: f64 = row.iter().zip(&diff).map(|(a, b)| a * b).sum();
                        q += diff[i] * pi;
                        if let Some(r) = resid.as_deref_mut() {
                            r[k * d + i] = pi;
                        }
                    }
                    q
                }
            };
            logs[k] = c.log_coef - 0.5 * q;
        }
    }
}

fn invert_spd(rows: &[Vec<f64>], dim: usize) -> std::result::Result<(Vec<f64>, f64), String> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(format!("covariance must be {dim}x{dim}"));
    }
    let m = DMatrix::from_fn(dim, dim, |i, j| rows[i][j]);
    if (0..dim).any(|i| (0..i).any(|j| (m[(i, j)] - m[(j, i)]).abs() > 1e-12)) {
        return Err("covariance is not symmetric".into());
    }
    let chol = Cholesky::new(m).ok_or("covariance is not positive definite")?;
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let inv = chol.inverse();
    let flat = (0..dim * dim).map(|i| inv[(i / dim, i % dim)]).collect();
    Ok((flat, log_det))
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

impl TargetDensity for GaussianMixture {
    fn dim(&self) -> usize {
        self.dim
    }

    fn potential(&self, x: &[f64]) -> f64 {
        let mut logs = vec![0.0; self.components.len()];
        self.terms(x, &mut logs, None);
        -log_sum_exp(&logs)
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        self.potential_and_gradient(x, grad);
    }

    /// `grad U = sum_k r_k P_k (x - mu_k)` with responsibilities `r_k`.
    fn potential_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let k = self.components.len();
        let d = self.dim;
        let mut logs = vec![0.0; k];
        let mut resid = vec![0.0; k * d];
        self.terms(x, &mut logs, Some(&mut resid));
        let lse = log_sum_exp(&logs);
        grad.fill(0.0);
        for (j, l) in logs.iter().enumerate() {
            let r = (l - lse).exp();
            for (g, v) in grad.iter_mut().zip(&resid[j * d..(j + 1) * d]) {
                *g += r * v;
            }
        }
        -lse
    }

    fn name(&self) -> &str {
        &self.name
    }
}

/// Equal mixture of `N2((a, a), [[1, .9], [.9, 1]])`, `N2((b, b), [[1, -.9],
/// [-.9, 1]])` and `N2(0, I)`.
pub fn trimodal_2d(a: f64, b: f64) -> GaussianMixture {
    let spec = trimodal_spec(a, b);
    GaussianMixture::new(format!("trimodal(a={a},b={b})"), &spec)
        .expect("trimodal parameters are always valid")
}

pub fn trimodal_spec(a: f64, b: f64) -> GaussianMixtureSpec {
    let third = 1.0 / 3.0;
    GaussianMixtureSpec {
        weights: vec![third, third, 1.0 - 2.0 * third],
        means: vec![vec![a, a], vec![b, b], vec![0.0, 0.0]],
        covariances: Some(vec![
            vec![vec![1.0, 0.9], vec![0.9, 1.0]],
            vec![vec![1.0, -0.9], vec![-0.9, 1.0]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        ]),
    }
}

/// Means of the eight-mode mixture in `d >= 3` dimensions: the first three
/// coordinates run over the vertices of a cube with edge 10; the rest
/// alternate 0 and 10 in one of two phases.
pub fn mixture_8_modes(d: usize) -> Vec<Vec<f64>> {
    assert!(d >= 3, "the eight-mode mixture needs d >= 3");
    // (first three coordinates, value of coordinate 4)
    let heads: [([f64; 3], f64); 8] = [
        ([10.0, 10.0, 10.0], 0.0),
        ([0.0, 0.0, 0.0], 10.0),
        ([10.0, 0.0, 10.0], 0.0),
        ([0.0, 10.0, 10.0], 0.0),
        ([0.0, 0.0, 10.0], 0.0),
        ([0.0, 10.0, 0.0], 10.0),
        ([10.0, 0.0, 0.0], 10.0),
        ([10.0, 10.0, 0.0], 10.0),
    ];
    heads
        .iter()
        .map(|(head, fourth)| {
            let mut mu = head.to_vec();
            for i in 3..d {
                let even = (i - 3) % 2 == 0;
                mu.push(if even { *fourth } else { 10.0 - fourth });
            }
            mu
        })
        .collect()
}

/// `U(x) = -log sum_j exp(-1/2 |x - mu_j|^2)` over the eight modes.
pub fn mixture_8(d: usize) -> Result<GaussianMixture> {
    if d < 3 {
        return Err(Error::input(format!("mixture_8 needs d >= 3, got {d}")));
    }
    GaussianMixture::kernel_sum(format!("mixture8(d={d})"), mixture_8_modes(d))
}

/// Equal-weight mixture of `N(-mu, sd^2)` and `N(mu, sd^2)` in one
/// dimension.
pub fn bimodal_1d(mu: f64, sd: f64) -> GaussianMixture {
    let spec = GaussianMixtureSpec {
        weights: vec![0.5, 0.5],
        means: vec![vec![-mu], vec![mu]],
        covariances: Some(vec![vec![vec![sd * sd]], vec![vec![sd * sd]]]),
    };
    GaussianMixture::new(format!("bimodal(mu={mu},sd={sd})"), &spec)
        .expect("bimodal parameters are always valid")
}
