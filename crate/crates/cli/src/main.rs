//! `secna` command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 parameter error, 3 invariant violation.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use secna::coarray::{diff_coarray, max_contiguous_segment, sdca, sum_coarray, vaa};
use secna::estimation::estimate_doa;
use secna::harness::{dof_table, sweep_snapshots, sweep_snr, ExperimentConfig, Sweep};
use secna::signal::gen_snapshots;
use secna::{ArraySpec, Error, Result, Scenario, SensorArray};

#[derive(Parser)]
#[command(name = "secna", version, about = "Sparse co-array design and non-circular DOA estimation")]
struct Cli {
    /// Master seed for sweeps; overrides the scenario seed for estimate/simulate.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo trials per sweep point.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Angle grid step in degrees.
    #[arg(long, global = true)]
    grid_step: Option<f64>,
    /// Output file (defaults to stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit an array layout as JSON.
    Design { array: String },
    /// Co-array weight function as CSV plus a summary line.
    Coarray {
        array: String,
        #[arg(long, value_enum, default_value_t = CoarrayKind::Sdca)]
        kind: CoarrayKind,
    },
    /// DOF comparison table as JSON.
    DofTable {
        #[arg(long, value_delimiter = ',', default_value = "9,13,19,23,27")]
        budgets: Vec<u32>,
    },
    /// Simulate snapshots for a scenario and write them as CSV.
    Simulate {
        array: String,
        #[arg(long)]
        scenario: PathBuf,
        /// Also stack the conjugate rows.
        #[arg(long)]
        extended: bool,
    },
    /// Run the estimator on a simulated scenario; peaks JSON on stdout,
    /// spectrum CSV to --out.
    Estimate {
        array: String,
        #[arg(long)]
        scenario: PathBuf,
        /// Number of sources to look for (defaults to the scenario's count).
        #[arg(long)]
        q: Option<usize>,
    },
    /// RMSE versus SNR.
    SweepSnr(SweepArgs),
    /// RMSE versus snapshot count.
    SweepSnapshots(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CoarrayKind {
    Sdca,
    Dca,
    Sca,
}

#[derive(Args)]
struct SweepArgs {
    /// Full experiment config (JSON); flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Array to compare; repeat for several (default: secna:3,4 and nested:6,7).
    #[arg(long = "array")]
    arrays: Vec<String>,
    /// Sweep values: SNRs in dB or snapshot counts.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    values: Option<Vec<f64>>,
    /// Fixed snapshot count (SNR sweep) or SNR in dB (snapshot sweep).
    #[arg(long, allow_hyphen_values = true)]
    fixed: Option<f64>,
    #[arg(long)]
    q: Option<usize>,
    /// Write the full JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn read_input(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parameter(format!("cannot read {}: {e}", path.display())))
}

/// `secna:3,4`-style spec, or `@layout.json` for a saved design document.
fn load_array(arg: &str) -> Result<SensorArray> {
    match arg.strip_prefix('@') {
        Some(path) => Ok(serde_json::from_str(&read_input(Path::new(path))?)?),
        None => arg.parse::<ArraySpec>()?.build(),
    }
}

fn load_scenario(path: &Path, seed: Option<u64>) -> Result<Scenario> {
    let mut scn: Scenario = serde_json::from_str(&read_input(path)?)?;
    if let Some(seed) = seed {
        scn.seed = seed;
    }
    scn.validate()?;
    Ok(scn)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => match io::stdout().write_all(text.as_bytes()) {
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => {}
            r => r?,
        },
    }
    Ok(())
}

fn coarray_csv(arr: &SensorArray, kind: CoarrayKind) -> Result<String> {
    let lags = match kind {
        CoarrayKind::Sdca => sdca(arr),
        CoarrayKind::Dca => diff_coarray(arr),
        CoarrayKind::Sca => sum_coarray(arr),
    };
    let mut text = String::from("lag,weight\n");
    for (lag, w) in lags.iter() {
        text.push_str(&format!("{lag},{w}\n"));
    }
    let segment = match max_contiguous_segment(&lags) {
        Ok(s) => format!("dof={} lo={} hi={}", s.dof, s.lo, s.hi),
        Err(_) => "dof=none".to_string(),
    };
    text.push_str(&format!("# sensors={} {segment} vaa={}\n", arr.len(), vaa(&lags)?));
    Ok(text)
}

fn sweep_config(cli: &Cli, args: &SweepArgs, snr_sweep: bool) -> Result<ExperimentConfig> {
    let seed = cli.seed.unwrap_or(0);
    let trials = cli.trials.unwrap_or(50);
    let mut cfg = match &args.config {
        Some(path) => serde_json::from_str(&read_input(path)?)?,
        None if snr_sweep => ExperimentConfig::snr_benchmark(trials, seed),
        None => ExperimentConfig::snapshot_benchmark(trials, seed),
    };
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    if let Some(g) = cli.grid_step {
        cfg.grid_step = g;
    }
    if !args.arrays.is_empty() {
        cfg.arrays = args.arrays.iter().map(|a| a.parse()).collect::<Result<_>>()?;
    }
    if let Some(q) = args.q {
        cfg.q = q;
    }
    let as_count = |v: f64| -> Result<usize> {
        if v >= 1.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(Error::Parameter(format!("snapshot count {v} is not a positive integer")))
        }
    };
    match &mut cfg.sweep {
        Sweep::Snr { snr_db, snapshots } => {
            if let Some(v) = &args.values {
                *snr_db = v.clone();
            }
            if let Some(f) = args.fixed {
                *snapshots = as_count(f)?;
            }
        }
        Sweep::Snapshots { snapshots, snr_db } => {
            if let Some(v) = &args.values {
                *snapshots = v.iter().map(|&x| as_count(x)).collect::<Result<_>>()?;
            }
            if let Some(f) = args.fixed {
                *snr_db = f;
            }
        }
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Design { array } => {
            let arr = load_array(array)?;
            emit(&cli.out, &(serde_json::to_string_pretty(&arr)? + "\n"))
        }
        Command::Coarray { array, kind } => emit(&cli.out, &coarray_csv(&load_array(array)?, *kind)?),
        Command::DofTable { budgets } => {
            let table = dof_table(budgets)?;
            emit(&cli.out, &(serde_json::to_string_pretty(&table)? + "\n"))
        }
        Command::Simulate { array, scenario, extended } => {
            let arr = load_array(array)?;
            let mut x = gen_snapshots(&arr, &load_scenario(scenario, cli.seed)?)?;
            if *extended {
                x = secna::signal::extend_snapshots(&x)?;
            }
            let mut buf = Vec::new();
            x.write_csv(&mut buf)?;
            emit(&cli.out, &String::from_utf8(buf).expect("csv output is utf-8"))
        }
        Command::Estimate { array, scenario, q } => {
            let arr = load_array(array)?;
            let scn = load_scenario(scenario, cli.seed)?;
            let q = q.unwrap_or(scn.source_count());
            let x = gen_snapshots(&arr, &scn)?;
            let spectrum = estimate_doa(&arr, &x, q, cli.grid_step.unwrap_or(0.1))?;
            if let Some(path) = &cli.out {
                let mut text = String::from("angle,power\n");
                for (a, p) in spectrum.grid.iter().zip(&spectrum.values) {
                    text.push_str(&format!("{a},{p}\n"));
                }
                fs::write(path, text)?;
            }
            let peaks = serde_json::json!({
                "array": arr.label(),
                "q": q,
                "peaks": spectrum.peaks,
                "shortfall": spectrum.shortfall,
            });
            println!("{}", serde_json::to_string_pretty(&peaks)?);
            Ok(())
        }
        Command::SweepSnr(args) | Command::SweepSnapshots(args) => {
            let snr_sweep = matches!(cli.command, Command::SweepSnr(_));
            let cfg = sweep_config(cli, args, snr_sweep)?;
            let report = if snr_sweep { sweep_snr(&cfg)? } else { sweep_snapshots(&cfg)? };
            for p in report.points.iter().filter(|p| p.flagged) {
                eprintln!(
                    "warning: {} at {}={} excluded {}/{} trials",
                    p.array, report.variable, p.sweep_value, p.failures, p.trials
                );
            }
            if let Some(path) = &args.report {
                fs::write(path, serde_json::to_string_pretty(&report)? + "\n")?;
            }
            emit(&cli.out, &report.to_csv()?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = if e.is_invariant() {
                3
            } else if e.is_parameter() || matches!(e, Error::Json(_)) {
                2
            } else {
                1
            };
            ExitCode::from(code)
        }
    }
}
