//! Checks the local constant backfitting fixed point against the dense
//! least-squares projection of a full-grid pilot.
//!
//! Run with `cargo run --release --example projection_oracle`.

use hazard_sbf::model::{validate_dataset, EvaluationGrid};
use hazard_sbf::{build_full_pilot, lc_backfit, oracle_solve, Estimator, FitConfig, Norming, Result, SurvivalRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let records: Vec<SurvivalRecord> = (0..60)
        .map(|_| {
            let z = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            SurvivalRecord::with_constants(0.0, rng.random_range(0.2..2.0), rng.random_bool(0.6), &z)
        })
        .collect();
    let dataset = validate_dataset(records, &EvaluationGrid::uniform(2.0, -1.0, 1.0, 2, 13)?)?;
    for norming in [Norming::Uniform, Norming::ExposureWeighted] {
        let config = FitConfig::new(Estimator::LocalConstantSbf, 0.5).with_norming(norming).with_tolerance(1e-15);
        let pilot = build_full_pilot(&dataset, &config)?;
        let projected = oracle_solve(&pilot, norming)?;
        let backfit = lc_backfit(&pilot.marginals(), &config);
        let mut dist = (projected.intercept - backfit.intercept).abs();
        for (a, b) in projected.components.iter().zip(&backfit.components) {
            for (x, y) in a.iter().zip(b) {
                dist = dist.max((x - y).abs());
            }
        }
        println!("{:<18} {} cells, sup distance {dist:.2e}", norming.label(), pilot.n_cells());
    }
    Ok(())
}
