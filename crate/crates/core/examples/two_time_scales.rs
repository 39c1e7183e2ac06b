//! Additive hazard in calendar time and age, where age enters as a time
//! offset covariate (age at entry plus elapsed time).
//!
//! Run with `cargo run --release --example two_time_scales`.

use hazard_sbf::model::{validate_dataset, DimensionGrid, EvaluationGrid};
use hazard_sbf::{fit, CovariateChannel, Estimator, FitConfig, Norming, Result, SurvivalRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Hazard `1 + 0.5 sin(pi t) + 0.4 age`.
fn hazard(t: f64, age: f64) -> f64 {
    1.0 + 0.5 * (std::f64::consts::PI * t).sin() + 0.4 * age
}

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let horizon = 1.0;
    let records: Vec<SurvivalRecord> = (0..4000)
        .map(|_| {
            let age0: f64 = rng.random_range(0.0..1.0);
            // thinning with a dominating constant rate
            let bound = hazard(0.5, age0 + horizon);
            let mut t = 0.0;
            loop {
                t += -rng.random::<f64>().ln() / bound;
                if t >= horizon {
                    return SurvivalRecord::new(0.0, horizon, false, vec![CovariateChannel::TimeOffset(age0)]);
                }
                if rng.random::<f64>() * bound < hazard(t, age0 + t) {
                    return SurvivalRecord::new(0.0, t, true, vec![CovariateChannel::TimeOffset(age0)]);
                }
            }
        })
        .collect();
    let grid = EvaluationGrid::new(vec![DimensionGrid::new(0.0, horizon, 51)?, DimensionGrid::new(0.0, 2.0, 51)?])?;
    let dataset = validate_dataset(records, &grid)?;
    let f = fit(&dataset, &FitConfig::new(Estimator::LocalLinearSbf, 0.25).with_norming(Norming::Uniform))?;
    println!("converged after {} sweeps", f.iterations_used);
    println!("{:>5} {:>5} {:>8} {:>8}", "t", "age", "fitted", "truth");
    for (t, age) in [(0.25, 0.5), (0.5, 1.0), (0.5, 1.2), (0.75, 1.5)] {
        println!("{t:>5} {age:>5} {:>8.3} {:>8.3}", f.evaluate(&[t, age])?, hazard(t, age));
    }
    Ok(())
}
