//! Fits all four estimators to one simulated dataset and compares the
//! covariate components with the truth.
//!
//! Run with `cargo run --release --example fit_estimators`.

use hazard_sbf::evaluation::{centered_truth, component_mise, mc_fit_config};
use hazard_sbf::model::validate_dataset;
use hazard_sbf::{fit, simulate_dataset, Estimator, Result, SimConfig};

fn main() -> Result<()> {
    let scenario = SimConfig::new(2000, 3, 0.5, 11)?;
    let (records, truth) = simulate_dataset(&scenario)?;
    let dataset = validate_dataset(records, &scenario.grid(101)?)?;
    println!("{:<8} {:>6} {:>10} {:>10}  {}", "method", "iters", "intercept", "MISE", "alpha_1 at -0.5, 0, 0.5 (truth)");
    for estimator in Estimator::ALL {
        let f = fit(&dataset, &mc_fit_config(estimator, 0.4))?;
        let mise: f64 = (1..=3).map(|k| component_mise(&f, &truth, &dataset, k)).sum();
        let target = centered_truth(&f, &truth, 1);
        let values: Vec<String> = [-0.5, 0.0, 0.5]
            .iter()
            .map(|&x| format!("{:+.3} ({:+.3})", f.component_value(1, x), target(x)))
            .collect();
        println!("{:<8} {:>6} {:>10.4} {:>10.5}  {}", estimator.label(), f.iterations_used, f.intercept, mise, values.join("  "));
    }
    Ok(())
}
