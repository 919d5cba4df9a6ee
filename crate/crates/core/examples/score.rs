//! Score a SPICE cell with the diffusion-break proxy in both search modes.
//!
//! ```text
//! cargo run --example score -- path/to/cell.sp
//! ```

use cellopt::netlist::{parse_spice, validate_cell};
use cellopt::reward::{proxy_score_with, SearchMode};

const NAND2: &str = "\
.SUBCKT NAND2 A B Y VDD GND
MP1 Y A VDD VDD PMOS
MP2 Y B VDD VDD PMOS
MN1 Y A N1 GND NMOS
MN2 N1 B GND GND NMOS
.ENDS
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => NAND2.to_string(),
    };
    let cell = parse_spice(&text)?;
    let report = validate_cell(&cell);
    if !report.is_ok() {
        for v in &report.violations {
            eprintln!("warning: {v}");
        }
    }
    for mode in [SearchMode::Auto, SearchMode::Exhaustive] {
        match proxy_score_with(&cell, mode) {
            Ok(s) => println!("{mode:?}: {} breaks, reward {}", s.breaks, s.score),
            Err(e) => println!("{mode:?}: {e}"),
        }
    }
    Ok(())
}
