//! Synthesize a 3-input majority gate from its truth table and check it by
//! switch-level simulation.
//!
//! ```text
//! cargo run --example synthesize -- 3:E8
//! ```

use cellopt::logic::{equiv_check, synthesize, TruthTable};
use cellopt::netlist::serialize_spice;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = std::env::args().nth(1).unwrap_or_else(|| "3:E8".into());
    let table: TruthTable = spec.parse()?;
    let syn = synthesize("CELL", &table)?;
    println!("sop:       {}", syn.sop);
    println!("pull-down: {}", syn.pulldown);
    println!("devices:   {}", syn.cell.devices.len());
    let report = equiv_check(&syn.cell, &table)?;
    println!("verified:  {}\n", report.passed());
    print!("{}", serialize_spice(&syn.cell));
    Ok(())
}
