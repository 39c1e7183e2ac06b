//! Reads a survival CSV, fits, writes the fit file and evaluates the hazard
//! from the reloaded fit.
//!
//! Run with `cargo run --release --example fit_file_round_trip`.

use hazard_sbf::io::{format_csv, parse_csv, read_fit, write_fit};
use hazard_sbf::model::{validate_dataset, EvaluationGrid};
use hazard_sbf::{fit, Estimator, FitConfig, Result, SurvivalRecord};

fn main() -> Result<()> {
    let records: Vec<SurvivalRecord> = (0..200)
        .map(|i| {
            let z = (i % 21) as f64 / 10.0 - 1.0;
            let exit = 0.2 + (i * 37 % 100) as f64 / 60.0;
            SurvivalRecord::with_constants(0.0, exit, i % 3 != 0, &[z])
        })
        .collect();
    let records = parse_csv(&format_csv(&records))?;
    let dataset = validate_dataset(records, &EvaluationGrid::uniform(2.0, -1.0, 1.0, 1, 41)?)?;
    let fitted = fit(&dataset, &FitConfig::new(Estimator::LocalLinearSbf, 0.4))?;
    let path = std::env::temp_dir().join("hazard_sbf_example.fit");
    write_fit(&path, &fitted)?;
    let reloaded = read_fit(&path)?;
    for x in [[0.5, -0.5], [1.0, 0.0], [1.5, 0.5]] {
        println!("hazard at {x:?}: {:.4} (reloaded {:.4})", fitted.evaluate(&x)?, reloaded.evaluate(&x)?);
    }
    println!("identical after reload: {}", fitted == reloaded);
    Ok(())
}
