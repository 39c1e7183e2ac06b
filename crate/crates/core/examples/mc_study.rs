//! Small Monte-Carlo study of the four estimators at a common bandwidth.
//!
//! Run with `cargo run --release --example mc_study`.

use hazard_sbf::{mc_study, Estimator, Result, SimConfig};

fn main() -> Result<()> {
    let scenario = SimConfig::new(500, 3, 0.5, 21)?;
    let reports = mc_study(&scenario, &Estimator::ALL, 0.4, 20, &scenario.grid(51)?)?;
    println!("{:<8} {:>9} {:>10} {:>10} {:>10} {:>10}", "method", "converged", "MISE", "bias^2", "variance", "sample");
    for r in &reports {
        match &r.per_component {
            Some(m) => {
                let sum = |f: fn(&hazard_sbf::ComponentMetrics) -> f64| m.iter().map(f).sum::<f64>();
                println!(
                    "{:<8} {:>9} {:>10.5} {:>10.5} {:>10.5} {:>10.5}",
                    r.estimator.label(),
                    r.n_converged,
                    sum(|c| c.mise),
                    sum(|c| c.bias_sq),
                    sum(|c| c.variance),
                    sum(|c| c.sample_mise)
                );
            }
            None => println!("{:<8} {:>9} NA", r.estimator.label(), 0),
        }
    }
    Ok(())
}
