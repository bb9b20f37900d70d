use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use sahmc::Algorithm;
use sahmc_harness::{parse_config, run_experiment, HarnessError, Profile, RunOptions};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn shipped() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(configs_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    v.sort();
    v
}

fn smoke(name: &str, out: &Path) -> sahmc_harness::ExperimentOutput {
    let config = parse_config(configs_dir().join(format!("{name}.toml"))).unwrap();
    let options = RunOptions {
        profile: Profile::Smoke,
        out: Some(out.to_path_buf()),
        ..Default::default()
    };
    run_experiment(&config, &options).unwrap()
}

fn sahmc_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sahmc"))
}

#[test]
fn every_shipped_config_parses() {
    let paths = shipped();
    assert!(paths.len() >= 10);
    for p in paths {
        let mut c = parse_config(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        c.clone().apply_profile(Profile::Smoke).unwrap();
        c.apply_profile(Profile::Desk).unwrap();
    }
}

#[test]
fn trimodal_set2_encodes_reference_setup() {
    let c = parse_config(configs_dir().join("trimodal_set2.toml")).unwrap();
    let s = c.sampler_config(Algorithm::Sahmc, 0).unwrap();
    assert_eq!((s.epsilon, s.leapfrog_steps), (0.3, 20));
    assert_eq!((s.iterations, s.burn_in, c.chains), (1_000_000, 200_000, 10));
    assert_eq!(s.gain.unwrap().t0(), 5000.0);
    let p = s.partition.unwrap();
    assert_eq!(p.len(), 12);
    assert_eq!(p.thresholds()[0], 0.0);
    assert_eq!(p.thresholds()[1] - p.thresholds()[0], 2.0);
}

#[test]
fn mix8_d7_encodes_reference_setup() {
    let c = parse_config(configs_dir().join("mix8_d7.toml")).unwrap();
    let s = c.sampler_config(Algorithm::Sahmc, 0).unwrap();
    assert_eq!((s.epsilon, s.leapfrog_steps), (0.25, 3));
    let p = s.partition.unwrap();
    assert_eq!((p.thresholds()[0], p.len()), (8.0, 14));
}

#[test]
fn smoke_run_emits_declared_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = smoke("trimodal_set2", dir.path());
    assert_eq!(out.table.chains, 1);
    let mut expected = vec!["results.json".to_string(), "timing.json".to_string()];
    for alg in ["sahmc", "hmc"] {
        expected.push(format!("{alg}_chain0.bin"));
        expected.push(format!("{alg}_chain0.json"));
        for kind in ["scatter", "trace_position", "trace_momentum", "trace_energy"] {
            expected.push(format!("plots/{alg}_chain0_{kind}.csv"));
        }
    }
    expected.push("plots/sahmc_chain0_theta_trace.csv".into());
    for f in &expected {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    let theta = fs::read_to_string(dir.path().join("plots/sahmc_chain0_theta_trace.csv")).unwrap();
    assert!(theta.lines().count() > 1);
}

#[test]
fn mix8_table_has_mode_metrics_for_both_algorithms() {
    let dir = tempfile::tempdir().unwrap();
    let out = smoke("mix8_d7", dir.path());
    for alg in [Algorithm::Sahmc, Algorithm::Hmc] {
        assert!(out.table.get(alg, "n_dis").is_some());
        assert!(out.table.get(alg, "f_err").is_some());
    }
}

#[test]
fn results_json_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    smoke("trimodal_set1", a.path());
    smoke("trimodal_set1", b.path());
    let read = |d: &Path| fs::read(d.join("results.json")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    let text = String::from_utf8(read(a.path())).unwrap();
    assert!(!text.contains("wall_time"));
}

#[test]
fn unwritable_output_fails_before_sampling() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let config = parse_config(configs_dir().join("trimodal_set2.toml")).unwrap();
    let started = Instant::now();
    let err = run_experiment(
        &config,
        &RunOptions {
            out: Some(blocker.join("out")),
            ..Default::default()
        },
    )
    .unwrap_err();
    // the paper profile would take minutes if any chain had started
    assert!(started.elapsed().as_secs_f64() < 1.0);
    assert!(matches!(err, HarnessError::Validation(_)), "{err}");
}

#[test]
fn all_smoke_profiles_finish_within_a_minute() {
    let root = tempfile::tempdir().unwrap();
    let started = Instant::now();
    for p in shipped() {
        let name = p.file_stem().unwrap().to_string_lossy().into_owned();
        smoke(&name, &root.path().join(&name));
    }
    let elapsed = started.elapsed().as_secs_f64();
    println!("smoke total {elapsed:.1}s");
    assert!(elapsed < 60.0, "{elapsed}");
}

#[test]
fn cli_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let status = sahmc_bin()
        .args(["run", "--profile", "smoke", "--workers", "2", "--out"])
        .arg(&out)
        .arg(configs_dir().join("trimodal_set1.toml"))
        .status()
        .unwrap();
    assert!(status.success());

    let plot = sahmc_bin()
        .args(["plot", "--kind", "trace_position"])
        .arg(out.join("hmc_chain0.json"))
        .output()
        .unwrap();
    assert!(plot.status.success());
    let text = String::from_utf8(plot.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("iter,x1,x2"));
    assert_eq!(text.lines().count(), 1001);

    let diag = sahmc_bin()
        .args(["diag", "--metric", "modes,acceptance"])
        .arg(out.join("sahmc_chain0.json"))
        .arg(out.join("hmc_chain0.bin"))
        .output()
        .unwrap();
    assert!(diag.status.success(), "{}", String::from_utf8_lossy(&diag.stderr));
    assert!(String::from_utf8(diag.stdout).unwrap().contains("n_dis"));

    let cmp = sahmc_bin().arg("compare").arg(&out).output().unwrap();
    assert!(cmp.status.success());
    assert!(String::from_utf8(cmp.stdout).unwrap().contains("relative"));
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let text = fs::read_to_string(configs_dir().join("trimodal_set1.toml"))
        .unwrap()
        .replace("start = 0.0\nwidth = 2.0\nregions = 12", "thresholds = [2.0, 0.0]");
    fs::write(&bad, text).unwrap();
    let run = sahmc_bin().arg("run").arg(&bad).output().unwrap();
    assert_eq!(run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&run.stderr).contains("not increasing"));

    let kind = sahmc_bin()
        .args(["plot", "--kind", "histogram", "x.json"])
        .output()
        .unwrap();
    assert_eq!(kind.status.code(), Some(1));

    let missing = sahmc_bin()
        .args(["plot", "--kind", "scatter"])
        .arg(dir.path().join("absent.json"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}
