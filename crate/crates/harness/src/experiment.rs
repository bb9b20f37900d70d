//! Runs an experiment config end to end: chains, record dumps, plot
//! extracts and the metric table.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sahmc::diagnostics::{
    ess_report, frequency_error, linkage_clusters, min_energy, mode_report, posterior_risk,
    region_masses, theta_convergence_check,
};
use sahmc::targets::{
    bimodal_1d, f0, load_pima_csv, mixture_8, trimodal_2d, Dataset, MlpPosterior, MlpSpec,
    SensorPosterior,
};
use sahmc::{run_parallel, Algorithm, RunRecord, StandardNormal, TargetDensity};
use serde::{Deserialize, Serialize};

use crate::artifacts::{save_record, write_json};
use crate::config::{ExperimentConfig, Metric, Profile, TargetSpec, ThetaCheck};
use crate::error::{Context, HarnessError, HarnessResult};
use crate::plot::{emit_plot_file, PlotKind};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_VAR: &str = "SAHMC_OUTPUT_ROOT";

/// Draws kept from each chain for the predictive and cluster metrics.
const METRIC_SUBSAMPLE: usize = 1000;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub profile: Profile,
    /// Overrides the config's output directory.
    pub out: Option<PathBuf>,
    /// Added to every chain seed.
    pub seed_offset: u64,
    /// Also dump each chain as CSV.
    pub csv: bool,
    /// Worker threads; defaults to the available parallelism.
    pub workers: Option<usize>,
}

/// One metric for one algorithm: the mean over chains, its standard
/// deviation, and the per-chain values. Pooled metrics have no per-chain
/// values and no standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub algorithm: Algorithm,
    pub metric: String,
    pub value: f64,
    pub sd: Option<f64>,
    pub per_chain: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub experiment: String,
    pub target: String,
    pub profile: Profile,
    pub chains: usize,
    pub seeds: Vec<u64>,
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn get(&self, algorithm: Algorithm, metric: &str) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.algorithm == algorithm && r.metric == metric)
    }

    /// Aligned text rendering, one line per row.
    pub fn render(&self) -> String {
        let mut out = format!(
            "{} ({}, {} chains, {} profile)\n",
            self.experiment, self.target, self.chains, self.profile
        );
        let width = self.rows.iter().map(|r| r.metric.len()).max().unwrap_or(6);
        for r in &self.rows {
            let sd = r.sd.map(|s| format!(" ± {}", fmt_num(s))).unwrap_or_default();
            out += &format!(
                "  {:<6} {:<width$}  {}{sd}\n",
                r.algorithm.to_string(),
                r.metric,
                fmt_num(r.value)
            );
        }
        out
    }
}

fn fmt_num(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-3) {
        format!("{v:.4e}")
    } else {
        format!("{v:.4}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub algorithm: Algorithm,
    pub wall_time: Vec<f64>,
    /// Mean chain wall time divided by the smallest ESS over chains and
    /// coordinates.
    pub seconds_per_min_ess: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingTable {
    pub experiment: String,
    pub target: String,
    pub workers: usize,
    pub rows: Vec<TimingRow>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub dir: PathBuf,
    pub table: ResultTable,
    pub timing: TimingTable,
    pub records: Vec<(Algorithm, Vec<RunRecord>)>,
    pub warnings: Vec<String>,
}

/// The output directory a run would use.
pub fn output_dir(config: &ExperimentConfig, out: Option<&Path>) -> PathBuf {
    if let Some(o) = out {
        return o.to_path_buf();
    }
    if let Some(o) = &config.output {
        return o.clone();
    }
    let root = std::env::var_os(OUTPUT_ROOT_VAR)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("results"));
    root.join(&config.id)
}

fn ensure_writable(dir: &Path) -> HarnessResult<()> {
    let fail = |e| HarnessError::Validation(format!("output directory {} is not writable: {e}", dir.display()));
    fs::create_dir_all(dir.join("plots")).map_err(fail)?;
    let probe = dir.join(format!(".probe{}", std::process::id()));
    fs::write(&probe, b"").map_err(fail)?;
    fs::remove_file(&probe).map_err(fail)
}

/// A constructed target plus what the metrics need from it.
struct Built {
    density: Box<dyn TargetDensity>,
    network: Option<MlpPosterior>,
    test: Option<Dataset>,
}

fn build_target(spec: &TargetSpec) -> HarnessResult<Built> {
    let plain = |density: Box<dyn TargetDensity>| Built {
        density,
        network: None,
        test: None,
    };
    Ok(match spec {
        TargetSpec::StandardNormal { dim } => plain(Box::new(StandardNormal::new(*dim))),
        TargetSpec::Bimodal { mu, sd } => plain(Box::new(bimodal_1d(*mu, *sd))),
        TargetSpec::Trimodal { a, b } => plain(Box::new(trimodal_2d(*a, *b))),
        TargetSpec::Mixture8 { dim } => plain(Box::new(mixture_8(*dim)?)),
        TargetSpec::Sensor { .. } => {
            let s = spec.sensor_spec()?.expect("sensor target");
            plain(Box::new(SensorPosterior::new(s)?))
        }
        TargetSpec::MlpRegression { .. } => {
            let net = MlpPosterior::new(spec.mlp_spec()?.expect("mlp target"))?;
            Built {
                density: Box::new(net.clone()),
                network: Some(net),
                test: None,
            }
        }
        TargetSpec::Pima {
            path,
            split_seed,
            hidden_units,
            prior_sd,
        } => {
            let split = load_pima_csv(path, *split_seed)
                .context(|| format!("loading {}", path.display()))?;
            let mut s = MlpSpec::classification(split.train);
            s.hidden_units = *hidden_units;
            s.prior_sd = *prior_sd;
            let net = MlpPosterior::new(s)?;
            Built {
                density: Box::new(net.clone()),
                network: Some(net),
                test: Some(split.test),
            }
        }
    })
}

/// Runs every algorithm of `config` and writes records, plot extracts,
/// `results.json` and `timing.json` into the output directory.
pub fn run_experiment(config: &ExperimentConfig, options: &RunOptions) -> HarnessResult<ExperimentOutput> {
    let mut config = config.clone();
    config.apply_profile(options.profile)?;
    let dir = output_dir(&config, options.out.as_deref());
    ensure_writable(&dir)?;
    let built = build_target(&config.target)?;
    let seeds: Vec<u64> = config
        .seeds()
        .iter()
        .map(|s| s.wrapping_add(options.seed_offset))
        .collect();
    let workers = options
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Validation(format!("thread pool: {e}")))?;

    let mut all = Vec::new();
    let mut warnings = Vec::new();
    for &alg in &config.algorithms {
        let configs = seeds
            .iter()
            .map(|&s| config.sampler_config(alg, s))
            .collect::<HarnessResult<Vec<_>>>()?;
        let started = Instant::now();
        let records = pool
            .install(|| run_parallel(&configs, built.density.as_ref(), alg))
            .context(|| format!("{}: {alg}", config.id))?;
        let elapsed = started.elapsed().as_secs_f64();
        eprintln!("{}: {alg} {} chains in {elapsed:.1}s", config.id, records.len());
        for (c, r) in records.iter().enumerate() {
            warnings.extend(r.warnings.iter().map(|w| format!("{alg} chain {c}: {w}")));
            save_record(&dir, &format!("{alg}_chain{c}"), r, &config.target, options.csv)?;
        }
        for (c, r) in records.iter().take(config.plots.chains).enumerate() {
            for kind in PlotKind::ALL {
                if kind == PlotKind::ThetaTrace && r.final_theta.is_none() {
                    continue;
                }
                let kept = r.len() - r.burn_in();
                let stride = kept.div_ceil(config.plots.scatter_points.max(1)).max(1);
                let path = dir.join("plots").join(format!("{alg}_chain{c}_{}.csv", kind.as_str()));
                let out = emit_plot_file(r, kind, stride, config.plots.trace_len, &path)?;
                warnings.extend(out.warning);
            }
        }
        all.push((alg, records));
    }

    let mut rows = Vec::new();
    let mut timing_rows = Vec::new();
    let ctx = MetricContext {
        label: &config.id,
        target: &config.target,
        metrics: &config.metrics,
        theta_check: config.theta_check.as_ref(),
    };
    for (alg, records) in &all {
        let (mut r, t) = compute_metrics(&ctx, &built, *alg, records)?;
        rows.append(&mut r);
        timing_rows.push(t);
    }
    let table = ResultTable {
        experiment: config.id.clone(),
        target: built.density.name().to_string(),
        profile: options.profile,
        chains: seeds.len(),
        seeds,
        rows,
    };
    let timing = TimingTable {
        experiment: config.id.clone(),
        target: table.target.clone(),
        workers,
        rows: timing_rows,
    };
    write_json(&dir.join("results.json"), &table)?;
    write_json(&dir.join("timing.json"), &timing)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    Ok(ExperimentOutput {
        dir,
        table,
        timing,
        records: all,
        warnings,
    })
}

fn per_chain_row(algorithm: Algorithm, metric: &str, values: Vec<f64>) -> ResultRow {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.len() > 1).then(|| {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    });
    ResultRow {
        algorithm,
        metric: metric.into(),
        value: mean,
        sd,
        per_chain: values,
    }
}

fn pooled_row(algorithm: Algorithm, metric: &str, value: f64) -> ResultRow {
    ResultRow {
        algorithm,
        metric: metric.into(),
        value,
        sd: None,
        per_chain: Vec::new(),
    }
}

/// Evenly strided subsample of at most `n` post-burn-in draws.
fn subsample(record: &RunRecord, n: usize) -> Vec<&[f64]> {
    let kept = record.len() - record.burn_in();
    let stride = kept.div_ceil(n).max(1);
    (record.burn_in()..record.len())
        .step_by(stride)
        .map(|i| record.sample(i))
        .collect()
}

struct MetricContext<'a> {
    label: &'a str,
    target: &'a TargetSpec,
    metrics: &'a [Metric],
    theta_check: Option<&'a ThetaCheck>,
}

/// Metric table for saved records. Records are grouped by algorithm in
/// order of first appearance; all must come from the same target.
pub fn diagnose(
    records: &[(RunRecord, TargetSpec)],
    metrics: &[Metric],
    theta_check: Option<&ThetaCheck>,
) -> HarnessResult<ResultTable> {
    let (first, spec) = records
        .first()
        .ok_or_else(|| HarnessError::Validation("no records given".into()))?;
    if let Some((r, _)) = records.iter().find(|(_, s)| s != spec) {
        return Err(HarnessError::Validation(format!(
            "records come from different targets: {} and {}",
            first.target, r.target
        )));
    }
    for m in metrics {
        if !m.applies_to(spec, theta_check)? {
            return Err(HarnessError::Validation(format!(
                "metric `{}` does not apply to {}",
                m.as_str(),
                first.target
            )));
        }
    }
    let built = build_target(spec)?;
    let ctx = MetricContext {
        label: "diag",
        target: spec,
        metrics,
        theta_check,
    };
    let mut groups: Vec<(Algorithm, Vec<RunRecord>)> = Vec::new();
    for (r, _) in records {
        match groups.iter_mut().find(|(a, _)| *a == r.algorithm) {
            Some((_, g)) => g.push(r.clone()),
            None => groups.push((r.algorithm, vec![r.clone()])),
        }
    }
    let mut rows = Vec::new();
    for (alg, group) in &groups {
        rows.append(&mut compute_metrics(&ctx, &built, *alg, group)?.0);
    }
    Ok(ResultTable {
        experiment: "diag".into(),
        target: built.density.name().to_string(),
        profile: Profile::Paper,
        chains: records.len(),
        seeds: records.iter().map(|(r, _)| r.config.seed).collect(),
        rows,
    })
}

fn compute_metrics(
    mc: &MetricContext,
    built: &Built,
    alg: Algorithm,
    records: &[RunRecord],
) -> HarnessResult<(Vec<ResultRow>, TimingRow)> {
    let ctx = |what: &str| format!("{}: {alg}: {what}", mc.label);
    let mut rows = Vec::new();
    let mut s_per_ess = None;
    for &metric in mc.metrics {
        match metric {
            Metric::Ess => {
                let reports = records
                    .iter()
                    .map(ess_report)
                    .collect::<sahmc::Result<Vec<_>>>()
                    .context(|| ctx("ess"))?;
                rows.push(per_chain_row(alg, "ess_min", reports.iter().map(|r| r.min).collect()));
                rows.push(per_chain_row(alg, "ess_median", reports.iter().map(|r| r.median).collect()));
                rows.push(per_chain_row(alg, "ess_max", reports.iter().map(|r| r.max).collect()));
                // mean chain time over the smallest ESS of any chain and coordinate
                let worst = reports.iter().map(|r| r.min).fold(f64::INFINITY, f64::min);
                let wall = records.iter().map(|r| r.wall_time).sum::<f64>() / records.len() as f64;
                s_per_ess = Some(wall / worst);
            }
            Metric::Modes => {
                let modes = mc.target.modes().expect("validated");
                let reports = records
                    .iter()
                    .map(|r| mode_report(r, &modes))
                    .collect::<sahmc::Result<Vec<_>>>()
                    .context(|| ctx("modes"))?;
                rows.push(per_chain_row(alg, "n_dis", reports.iter().map(|r| r.n_dis as f64).collect()));
                let counts: Vec<Vec<u64>> = reports.iter().map(|r| r.counts.clone()).collect();
                let f_err = frequency_error(&counts).context(|| ctx("modes"))?;
                rows.push(pooled_row(alg, "f_err", f_err));
            }
            Metric::Acceptance => {
                rows.push(per_chain_row(alg, "acceptance", records.iter().map(RunRecord::acceptance_rate).collect()));
            }
            Metric::MinEnergy => {
                let v = records
                    .iter()
                    .map(min_energy)
                    .collect::<sahmc::Result<Vec<_>>>()
                    .context(|| ctx("min_energy"))?;
                rows.push(per_chain_row(alg, "min_energy", v));
            }
            Metric::EnergyRange => {
                let v = records
                    .iter()
                    .map(|r| {
                        let e = r.kept_energies();
                        let hi = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        let lo = e.iter().copied().fold(f64::INFINITY, f64::min);
                        hi - lo
                    })
                    .collect();
                rows.push(per_chain_row(alg, "energy_range", v));
            }
            Metric::PosteriorRisk => {
                let net = built.network.as_ref().expect("validated");
                let v = records
                    .iter()
                    .map(|r| posterior_risk(r, net, |x| f0(x[0])))
                    .collect::<sahmc::Result<Vec<_>>>()
                    .context(|| ctx("posterior_risk"))?;
                rows.push(per_chain_row(alg, "posterior_risk", v));
            }
            Metric::TestError => {
                let net = built.network.as_ref().expect("validated");
                let test = built.test.as_ref().expect("validated");
                let v = records
                    .iter()
                    .map(|r| test_error(r, net, test))
                    .collect();
                rows.push(per_chain_row(alg, "test_error", v));
            }
            Metric::Clusters => {
                let TargetSpec::Sensor {
                    watch_sensor: Some(k),
                    cluster_radius,
                    ..
                } = *mc.target
                else {
                    unreachable!("validated")
                };
                let v = records
                    .iter()
                    .map(|r| {
                        let pts: Vec<Vec<f64>> = subsample(r, METRIC_SUBSAMPLE)
                            .iter()
                            .map(|x| x[2 * k..2 * k + 2].to_vec())
                            .collect();
                        let labels = linkage_clusters(&pts, cluster_radius);
                        labels.iter().max().map_or(0, |m| m + 1) as f64
                    })
                    .collect();
                rows.push(per_chain_row(alg, "clusters", v));
            }
            Metric::Theta => {
                if alg != Algorithm::Sahmc {
                    continue;
                }
                let check = mc.theta_check.expect("validated");
                let sampler = &records[0].config;
                let partition = sampler
                    .partition
                    .clone()
                    .ok_or_else(|| HarnessError::Validation("theta metric needs a partition".into()))?;
                let omega = region_masses(built.density.as_ref(), &partition, check.low, check.high, check.tol)
                    .context(|| ctx("theta"))?;
                let m = partition.len();
                let pi = sampler
                    .desired
                    .clone()
                    .unwrap_or_else(|| vec![1.0 / m as f64; m]);
                let v = records
                    .iter()
                    .map(|r| {
                        let theta = r.final_theta.as_ref().expect("sahmc record");
                        theta_convergence_check(theta, &omega, &pi, &r.visit_counts)
                            .map(|c| c.max_deviation)
                    })
                    .collect::<sahmc::Result<Vec<_>>>()
                    .context(|| ctx("theta"))?;
                rows.push(per_chain_row(alg, "theta_deviation", v));
            }
        }
    }
    let timing = TimingRow {
        algorithm: alg,
        wall_time: records.iter().map(|r| r.wall_time).collect(),
        seconds_per_min_ess: s_per_ess,
    };
    Ok((rows, timing))
}

/// Misclassification rate on `test` of the posterior predictive
/// probability, averaged over a subsample of post-burn-in draws.
fn test_error(record: &RunRecord, net: &MlpPosterior, test: &Dataset) -> f64 {
    let draws = subsample(record, METRIC_SUBSAMPLE);
    let wrong = (0..test.len())
        .filter(|&i| {
            let x = test.row(i);
            let p = draws.iter().map(|z| net.predict(z, x)).sum::<f64>() / draws.len() as f64;
            (p >= 0.5) != (test.targets[i] >= 0.5)
        })
        .count();
    wrong as f64 / test.len() as f64
}
