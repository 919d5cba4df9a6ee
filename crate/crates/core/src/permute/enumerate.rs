// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use super::{canonical_hash, list_valid_pivots, swap_net, PivotCandidate};
use crate::netlist::{normalize_orientation, CellNetlist};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variant {
    /// Emission index; bit `i` set means pivot `i` was applied.
    pub index: u64,
    pub cell: CellNetlist,
    pub digest: u64,
    /// Pivots of the subset that were invalid or degenerate by the time they
    /// were applied and were therefore skipped.
    pub skipped: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enumeration {
    pub pivots: Vec<PivotCandidate>,
    /// Variants produced before deduplication.
    pub emitted: usize,
    /// Unique variants in emission order, seed first.
    pub variants: Vec<Variant>,
}

impl Enumeration {
    pub fn duplicates(&self) -> usize {
        self.emitted - self.variants.len()
    }
}

/// Apply pivot subsets in binary-counter order over the sorted pivot list,
/// emitting `min(cap, 2^n)` variants and dropping structural duplicates.
pub fn enumerate_topologies(cell: &CellNetlist, cap: usize) -> Enumeration {
    let seed = normalize_orientation(cell).unwrap_or_else(|_| cell.clone());
    let pivots = list_valid_pivots(&seed);
    let n = pivots.len();
    let total = if n >= usize::BITS as usize - 1 {
        cap
    } else {
        cap.min(1usize << n)
    };
    let total = total.max(1);

    let mut seen = BTreeSet::new();
    let mut variants = Vec::new();
    for index in 0..total as u64 {
        let mut current = seed.clone();
        let mut skipped = Vec::new();
        for (i, p) in pivots.iter().enumerate() {
            if index >> i & 1 == 0 {
                continue;
            }
            match swap_net(&current, &p.net) {
                Ok(next) => current = next,
                Err(e) => {
                    log::warn!("variant {index}: pivot {} skipped: {e}", p.net);
                    skipped.push(p.net.clone());
                }
            }
        }
        let digest = canonical_hash(&current);
        if seen.insert(digest) {
            variants.push(Variant {
                index,
                cell: current,
                digest,
                skipped,
            });
        }
    }
    Enumeration {
        pivots,
        emitted: total,
        variants,
    }
}

/// File name of variant `k` of `cell_name`.
pub fn variant_file_name(cell_name: &str, k: usize) -> String {
    format!("{cell_name}__v{k}.sp")
}
