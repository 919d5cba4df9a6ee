//! Apply a single series swap to every valid pivot of an AOI221 cell and show
//! how the diffusion-break estimate moves.

use cellopt::logic::{equiv_check, synthesize_with_pins, TruthTable};
use cellopt::permute::{canonical_hash, list_valid_pivots, swap_net, swap_region_of};
use cellopt::reward::proxy_score;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let table = TruthTable::from_fn(5, |m| {
        let b = |i: u32| m >> i & 1 == 1;
        !((b(0) && b(1)) || (b(2) && b(3)) || b(4))
    })?;
    let pins = ["A1", "A2", "B1", "B2", "C"].map(String::from);
    let cell = synthesize_with_pins("AOI221", &table, &pins)?.cell;
    println!(
        "seed: {:016x}, {} breaks",
        canonical_hash(&cell),
        proxy_score(&cell)?.breaks
    );

    for pivot in list_valid_pivots(&cell) {
        let (_, region) = swap_region_of(&cell, &pivot.net)?;
        let swapped = swap_net(&cell, &pivot.net)?;
        assert!(equiv_check(&swapped, &table)?.passed());
        println!(
            "{:>4} ({:?}): region {}..{}, {} devices move -> {:016x}, {} breaks",
            pivot.net,
            pivot.network,
            region.nca,
            region.ncd,
            region.delta.len(),
            canonical_hash(&swapped),
            proxy_score(&swapped)?.breaks
        );
    }
    Ok(())
}
