//! MISE profile over a bandwidth grid for local linear smooth backfitting.
//!
//! Run with `cargo run --release --example bandwidth_search`.

use hazard_sbf::{bandwidth_search, Estimator, Result, SimConfig};

fn main() -> Result<()> {
    let scenario = SimConfig::new(500, 3, 0.5, 31)?;
    let candidates = [0.2, 0.3, 0.4, 0.5, 0.7];
    let profile = bandwidth_search(&scenario, Estimator::LocalLinearSbf, &candidates, 10, &scenario.grid(51)?)?;
    for r in &profile.reports {
        println!("h = {:<4} summed MISE {:.5}", r.bandwidth, r.total_sample_mise());
    }
    match profile.best {
        Some(h) => println!("selected h = {h}"),
        None => println!("every candidate failed"),
    }
    Ok(())
}
