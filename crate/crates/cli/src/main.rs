//! `exo-flr`: run exogeneity tests, simulate datasets and sweep experiment grids.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use exo_flr_core::harness::{read_dataset, read_sweep, run_sweep_with, write_dataset, write_result, Outcome};
use exo_flr_core::{asymptotic_test, bootstrap_test, BootstrapScheme, DgpConfig, SpectralConfig, TestKind};

const EXIT_REJECT: u8 = 3;

#[derive(Parser)]
#[command(name = "exo-flr", version, about = "Exogeneity tests for functional linear regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test a dataset for exogeneity; exits 3 on rejection, 0 otherwise.
    Test(TestArgs),
    /// Draw a dataset from the simulation design.
    Simulate(SimulateArgs),
    /// Run a sweep configuration and write one CSV row per cell.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct TestArgs {
    /// Dataset CSV file.
    #[arg(long)]
    data: PathBuf,
    /// Spectral cut-off threshold.
    #[arg(long)]
    alpha: f64,
    /// Sobolev exponent of the cut-off rule.
    #[arg(long, default_value_t = 0.0)]
    nu: f64,
    /// Nominal level.
    #[arg(long)]
    gamma: f64,
    /// Use the normal approximation.
    #[arg(long, conflicts_with = "bootstrap", required_unless_present = "bootstrap")]
    asymptotic: bool,
    /// Bootstrap scheme: efron, mammen, rademacher or normal.
    #[arg(long, value_name = "SCHEME", requires = "replicates")]
    bootstrap: Option<BootstrapScheme>,
    /// Number of bootstrap replicates.
    #[arg(long = "B", value_name = "N", requires = "bootstrap")]
    replicates: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Subtract the sample mean curves and mean response first.
    #[arg(long)]
    center: bool,
    /// Also write the key=value lines to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    /// Grid order; curves have p + 1 points.
    #[arg(long, default_value_t = exo_flr_core::dgp::DEFAULT_GRID)]
    p: usize,
    /// Correlation of the regressor driver with the error.
    #[arg(long)]
    rho: f64,
    /// Correlation of the regressor and instrument drivers.
    #[arg(long = "nu-instr")]
    nu_instr: f64,
    /// Slope function (1, 2 or 3).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    beta: u8,
    #[arg(long, default_value_t = exo_flr_core::dgp::DEFAULT_SIGMA)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Mollifier bandwidth of the third slope.
    #[arg(long, default_value_t = exo_flr_core::dgp::DEFAULT_BANDWIDTH)]
    h: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Override every cell with 1000 repetitions and B = 500.
    #[arg(long)]
    full_scale: bool,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn run_test(args: TestArgs) -> exo_flr_core::Result<bool> {
    let mut data = read_dataset(&args.data)?;
    if args.center {
        data = data.centered()?;
    }
    let config = SpectralConfig::new(args.alpha).with_nu(args.nu);
    let outcome = match (args.bootstrap, args.replicates) {
        (Some(scheme), Some(b)) => Outcome::Bootstrap(bootstrap_test(&data, &config, scheme, b, args.gamma, args.seed)?),
        _ => Outcome::Asymptotic(asymptotic_test(&data, &config, args.gamma)?),
    };
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    outcome.write_to(&mut lock)?;
    lock.flush()?;
    if let Some(path) = &args.out {
        write_result(&outcome, path)?;
    }
    Ok(outcome.reject())
}

fn run_simulate(args: SimulateArgs) -> exo_flr_core::Result<()> {
    let cfg = DgpConfig {
        n: args.n,
        p: args.p,
        rho: args.rho,
        nu_instr: args.nu_instr,
        sigma: args.sigma,
        beta_id: args.beta,
        h: args.h,
        seed: args.seed,
    };
    let data = cfg.generate()?;
    write_dataset(&data, &args.out)?;
    eprintln!("wrote {} samples on {} grid points to {}", data.n(), data.p() + 1, args.out.display());
    Ok(())
}

fn run_sweep_command(args: SweepArgs) -> exo_flr_core::Result<()> {
    let mut cells = read_sweep(&args.config)?;
    if args.full_scale {
        for cell in &mut cells {
            cell.reps = 1000;
            if let TestKind::Bootstrap { b, .. } = &mut cell.test {
                *b = 500;
            }
        }
    }
    let total = cells.len();
    let out = BufWriter::new(File::create(&args.out)?);
    let sweep = || {
        run_sweep_with(&cells, out, |i, cell, result| {
            eprintln!(
                "[{}/{total}] beta {} n {} {}: rate {:.3} (se {:.3}, failures {}) in {:.1}s",
                i + 1,
                cell.dgp.beta_id,
                cell.dgp.n,
                cell.test,
                result.rejection_rate,
                result.se,
                result.failures,
                result.wall_time.as_secs_f64()
            )
        })
    };
    match args.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| exo_flr_core::Error::InvalidConfig(e.to_string()))?
            .install(sweep)?,
        None => sweep()?,
    };
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Test(args) => run_test(args).map(|reject| if reject { EXIT_REJECT } else { 0 }),
        Command::Simulate(args) => run_simulate(args).map(|_| 0),
        Command::Sweep(args) => run_sweep_command(args).map(|_| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
