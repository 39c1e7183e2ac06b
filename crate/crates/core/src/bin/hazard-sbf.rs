use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hazard_sbf::cli::{self, EXIT_NOT_CONVERGED, EXIT_OK};
use hazard_sbf::repro::{self, ReproScale};
use hazard_sbf::{Error, Estimator};

#[derive(Parser)]
#[command(name = "hazard-sbf", version, about = "Smooth backfitting for additive hazard models")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a dataset from a scenario config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit an estimator to a CSV dataset.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte-Carlo study over a scenario matrix.
    McStudy {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// MISE profile over candidate bandwidths.
    BandwidthSearch {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Table-1 reproduction with acceptance verdicts.
    ReproTable1 {
        #[arg(long, default_value = "smoke")]
        scale: ReproScale,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Time marginal construction and sweeps.
    BenchFit {
        #[arg(long, default_value = "LL-SBF")]
        estimator: Estimator,
        #[arg(long, default_value_t = 5000)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value_t = 101)]
        grid_points: usize,
        #[arg(long, default_value_t = 0.2)]
        bandwidth: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(command: Command) -> Result<i32, Error> {
    match command {
        Command::Simulate { config, out } => {
            let s = cli::cmd_simulate(&config, &out)?;
            println!("{} records, censoring proportion {:.3}", s.records, s.censoring_proportion);
        }
        Command::Fit { data, config, out } => {
            let fit = cli::cmd_fit(&data, &config, &out)?;
            println!(
                "{}: {} iterations, converged = {}, criterion = {:.3e}",
                fit.estimator, fit.iterations_used, fit.converged, fit.final_criterion
            );
            if !fit.converged {
                return Ok(EXIT_NOT_CONVERGED);
            }
        }
        Command::McStudy { config, out } => {
            let rows = cli::cmd_mc_study(&config, &out)?;
            println!("{} rows written to {}", rows.len(), out.display());
        }
        Command::BandwidthSearch { config, out } => {
            let p = cli::cmd_bandwidth_search(&config, &out)?;
            match p.best {
                Some(h) => println!("selected bandwidth {h}"),
                None => println!("no candidate converged"),
            }
        }
        Command::ReproTable1 { scale, out_dir, seed } => {
            let out = repro::repro_table1(scale, &out_dir, seed)?;
            for c in &out.checks {
                println!("{} {} (expected {}): {}", c.check, c.measured, c.expected, if c.pass { "PASS" } else { "FAIL" });
            }
        }
        Command::BenchFit {
            estimator,
            n,
            d,
            grid_points,
            bandwidth,
            out,
        } => {
            let t = repro::bench_fit(estimator, n, d, grid_points, bandwidth, 1)?;
            repro::write_timings(&out, std::slice::from_ref(&t))?;
            println!("{}", t.row());
        }
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
