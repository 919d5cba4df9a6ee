//! Enumerate the distinct topologies reachable by swaps for one function and
//! tabulate their break counts.
//!
//! ```text
//! cargo run --example enumerate -- 3:96
//! ```

use std::collections::BTreeMap;

use cellopt::logic::{synthesize, TruthTable};
use cellopt::permute::enumerate_topologies;
use cellopt::reward::proxy_score;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = std::env::args().nth(1).unwrap_or_else(|| "3:96".into());
    let table: TruthTable = spec.parse()?;
    let seed = synthesize("CELL", &table)?.cell;
    let e = enumerate_topologies(&seed, 100);
    println!(
        "{} pivots, {} emitted, {} unique",
        e.pivots.len(),
        e.emitted,
        e.variants.len()
    );
    let mut histogram = BTreeMap::new();
    for v in &e.variants {
        *histogram.entry(proxy_score(&v.cell)?.breaks).or_insert(0) += 1;
    }
    for (breaks, count) in histogram {
        println!("{breaks} breaks: {count} variants");
    }
    Ok(())
}
