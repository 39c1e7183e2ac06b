//! Timing sweeps over n, d and grid size for both smooth backfitting
//! estimators, with log-log growth rates.
//!
//! Run with `cargo run --release --example bench_fit [out.csv]`.

use hazard_sbf::repro::{bench_fit, log_log_slope, write_timings, FitTiming};
use hazard_sbf::{Estimator, Result};

fn sweep(label: &str, xs: &[usize], timings: &[FitTiming]) {
    let xs: Vec<f64> = xs.iter().map(|&v| v as f64).collect();
    let marginal: Vec<f64> = timings.iter().map(|t| t.marginal_secs).collect();
    let per_sweep: Vec<f64> = timings.iter().map(|t| t.per_sweep_secs()).collect();
    println!(
        "  growth in {label}: marginals {:.2}, per sweep {:.2}",
        log_log_slope(&xs, &marginal),
        log_log_slope(&xs, &per_sweep)
    );
}

fn main() -> Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "bench_fit.csv".into());
    let mut all = Vec::new();
    for estimator in [Estimator::LocalConstantSbf, Estimator::LocalLinearSbf] {
        println!("{estimator}");
        let ns = [2000, 4000, 8000];
        let t: Vec<FitTiming> = ns.iter().map(|&n| bench_fit(estimator, n, 3, 41, 0.3, 1)).collect::<Result<_>>()?;
        sweep("n", &ns, &t);
        all.extend(t);

        let ds = [4, 8, 16];
        let t: Vec<FitTiming> = ds.iter().map(|&d| bench_fit(estimator, 1000, d, 101, 0.3, 1)).collect::<Result<_>>()?;
        sweep("d", &ds, &t);
        all.extend(t);

        let gs = [51, 101, 201];
        let t: Vec<FitTiming> = gs.iter().map(|&g| bench_fit(estimator, 1000, 3, g, 0.3, 1)).collect::<Result<_>>()?;
        sweep("grid points", &gs, &t);
        all.extend(t);
    }
    write_timings(out.as_ref(), &all)?;
    println!("timings written to {out}");
    Ok(())
}
