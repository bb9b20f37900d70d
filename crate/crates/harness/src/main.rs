use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sahmc_harness::artifacts::{load_record, write_json};
use sahmc_harness::compare::load_timing;
use sahmc_harness::config::ThetaCheck;
use sahmc_harness::experiment::diagnose;
use sahmc_harness::plot::{emit_plot_data, emit_plot_file, TRACE_LEN};
use sahmc_harness::{
    compare_summary, parse_config, run_experiment, HarnessError, HarnessResult, Metric, PlotKind,
    Profile, RunOptions,
};

#[derive(Parser)]
#[command(name = "sahmc", version, about = "Run and summarize SAHMC / HMC experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every chain of an experiment config.
    Run {
        config: PathBuf,
        /// paper, smoke or desk.
        #[arg(long, default_value = "paper")]
        profile: Profile,
        /// Output directory [default: $SAHMC_OUTPUT_ROOT/<id>, root `results`].
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed_offset: u64,
        /// Also write each chain as CSV.
        #[arg(long)]
        csv: bool,
        #[arg(long, env = "SAHMC_WORKERS")]
        workers: Option<usize>,
    },
    /// Compute metrics from saved chain records.
    Diag {
        #[arg(required = true)]
        records: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        metric: Vec<Metric>,
        /// Integration box `LOW,HIGH` for the theta metric.
        #[arg(long, value_delimiter = ',', num_args = 2, allow_negative_numbers = true)]
        theta_box: Option<Vec<f64>>,
        /// Also write the table as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Write a plot-ready CSV extract of one record.
    Plot {
        record: PathBuf,
        #[arg(long)]
        kind: PlotKind,
        /// Keep every n-th post-burn-in draw (scatter).
        #[arg(long, default_value_t = 1)]
        stride: usize,
        /// Leading iterations in trace extracts.
        #[arg(long, default_value_t = TRACE_LEN)]
        trace_len: usize,
        /// Destination file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Relative speed across algorithms from timing tables.
    Compare {
        /// Results directories, results.json or timing.json files.
        #[arg(required = true)]
        tables: Vec<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> HarnessResult<()> {
    match command {
        Command::Run {
            config,
            profile,
            out,
            seed_offset,
            csv,
            workers,
        } => {
            let config = parse_config(&config)?;
            let options = RunOptions {
                profile,
                out,
                seed_offset,
                csv,
                workers,
            };
            let output = run_experiment(&config, &options)?;
            print!("{}", output.table.render());
            println!("output: {}", output.dir.display());
        }
        Command::Diag {
            records,
            metric,
            theta_box,
            json,
        } => {
            let loaded = records
                .iter()
                .map(|p| load_record(p).map(|(r, s)| (r, s.spec)))
                .collect::<HarnessResult<Vec<_>>>()?;
            let check = theta_box.map(|b| ThetaCheck {
                low: b[0],
                high: b[1],
                tol: 1e-10,
            });
            let table = diagnose(&loaded, &metric, check.as_ref())?;
            print!("{}", table.render());
            if let Some(path) = json {
                write_json(&path, &table)?;
            }
        }
        Command::Plot {
            record,
            kind,
            stride,
            trace_len,
            out,
        } => {
            let (record, _) = load_record(&record)?;
            let outcome = match out {
                Some(path) => emit_plot_file(&record, kind, stride, trace_len, &path)?,
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    let o = emit_plot_data(&record, kind, stride, trace_len, &mut lock)?;
                    lock.flush().map_err(|e| HarnessError::io("stdout", e))?;
                    o
                }
            };
            if let Some(w) = outcome.warning {
                eprintln!("warning: {w}");
            }
        }
        Command::Compare { tables, json } => {
            let loaded = tables
                .iter()
                .map(|p| load_timing(p))
                .collect::<HarnessResult<Vec<_>>>()?;
            let summary = compare_summary(&loaded)?;
            print!("{}", summary.render());
            if let Some(path) = json {
                write_json(&path, &summary)?;
            }
        }
    }
    Ok(())
}
