//! Table-1 style reproduction with pass/fail verdicts.
//!
//! Run with `cargo run --release --example repro_table1 [smoke|desk|full] [out_dir]`.
//! The smoke scale takes a few minutes, desk and full take hours.

use hazard_sbf::repro::{repro_table1, ReproScale};
use hazard_sbf::Result;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let scale: ReproScale = args.next().unwrap_or_else(|| "smoke".into()).parse()?;
    let out = args.next().unwrap_or_else(|| "repro_out".into());
    let output = repro_table1(scale, out.as_ref(), 1)?;
    for c in &output.checks {
        println!("{:<4} {}: measured {}, expected {}", if c.pass { "PASS" } else { "FAIL" }, c.check, c.measured, c.expected);
    }
    println!("table in {}", output.table.display());
    Ok(())
}
