use crate::error::{Error, Result};
use crate::sampler::RunRecord;
use crate::targets::mlp::MlpPosterior;

/// Lowest potential energy among the post-burn-in draws.
pub fn min_energy(record: &RunRecord) -> Result<f64> {
    record
        .kept_energies()
        .iter()
        .copied()
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::input("no post-burn-in draws"))
}

/// Posterior mean over post-burn-in draws of `sum_i (f0(x_i) - f(x_i | z))^2`
/// on the network's training inputs.
pub fn posterior_risk<F: Fn(&[f64]) -> f64>(
    record: &RunRecord,
    network: &MlpPosterior,
    truth: F,
) -> Result<f64> {
    let data = &network.spec().data;
    let truth_values: Vec<f64> = (0..data.len()).map(|i| truth(data.row(i))).collect();
    let mut total = 0.0;
    let mut count = 0usize;
    for z in record.kept() {
        total += (0..data.len())
            .map(|i| (truth_values[i] - network.predict(z, data.row(i))).powi(2))
            .sum::<f64>();
        count += 1;
    }
    if count == 0 {
        return Err(Error::input("no post-burn-in draws"));
    }
    Ok(total / count as f64)
}
