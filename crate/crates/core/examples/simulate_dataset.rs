//! Draws one simulated dataset and writes it as CSV.
//!
//! Run with `cargo run --release --example simulate_dataset [out.csv]`.

use hazard_sbf::io::write_csv;
use hazard_sbf::{simulate_dataset, Result, SimConfig};

fn main() -> Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "simulated.csv".into());
    let scenario = SimConfig::new(500, 3, 0.5, 7)?;
    let (records, truth) = simulate_dataset(&scenario)?;
    let events = records.iter().filter(|r| r.event).count();
    println!("scenario {}", scenario.digest());
    println!("{} subjects, {} events, {} censored", records.len(), events, records.len() - events);
    println!("true hazard at t = 1, z = 0: {:.4}", truth.hazard(1.0, &[0.0; 3]));
    write_csv(&out, &records)?;
    println!("wrote {out}");
    Ok(())
}
