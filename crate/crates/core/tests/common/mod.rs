//! Helpers shared by several integration test targets.
#![allow(dead_code)]

use cellopt::grpo::{Prompt, FEATURE_DIM};
use cellopt::logic::{synthesize_with_pins, TruthTable};
use cellopt::netlist::{parse_spice, CellNetlist, MosType};
use cellopt::permute::{Network, PivotCandidate};
use cellopt::reward::{CellGraph, GraphEdge, EDGE_CATEGORIES, NODE_KINDS};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const INV: &str = ".SUBCKT INV A Y VDD GND
MP1 VDD A Y VDD PMOS
MN1 Y A GND GND NMOS
.ENDS
";

pub const NAND2: &str = ".SUBCKT NAND2 A B Y VDD GND
MP1 VDD A Y VDD PMOS
MP2 VDD B Y VDD PMOS
MN1 Y A N1 GND NMOS
MN2 N1 B GND GND NMOS
.ENDS
";

/// `Y = !((A1 A2) + (B1 B2) + C)` over pins A1, A2, B1, B2, C.
pub fn aoi221_table() -> TruthTable {
    TruthTable::from_fn(5, |m| {
        let b = |i: u64| m >> i & 1 == 1;
        !((b(0) && b(1)) || (b(2) && b(3)) || b(4))
    })
    .unwrap()
}

pub fn aoi221() -> CellNetlist {
    let pins: Vec<String> = ["A1", "A2", "B1", "B2", "C"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    synthesize_with_pins("AOI221", &aoi221_table(), &pins)
        .unwrap()
        .cell
}

/// Brute-force break count: every gate-respecting P/N pairing, every column
/// order, every per-device flip.
pub fn oracle_breaks(cell: &CellNetlist) -> Option<usize> {
    let p: Vec<_> = cell
        .devices
        .iter()
        .filter(|d| d.dtype == MosType::Pmos)
        .collect();
    let n: Vec<_> = cell
        .devices
        .iter()
        .filter(|d| d.dtype == MosType::Nmos)
        .collect();
    if p.len() != n.len() {
        return None;
    }
    let m = p.len();
    let mut best: Option<usize> = None;
    let mut perm: Vec<usize> = (0..m).collect();
    let mut matchings = Vec::new();
    permute_all(&mut perm, 0, &mut |nm: &[usize]| {
        if (0..m).all(|i| p[i].gate == n[nm[i]].gate) {
            matchings.push(nm.to_vec());
        }
    });
    for nm in matchings {
        let cols: Vec<[(&str, &str); 2]> = (0..m)
            .map(|i| {
                [
                    (p[i].drain.as_str(), p[i].source.as_str()),
                    (n[nm[i]].drain.as_str(), n[nm[i]].source.as_str()),
                ]
            })
            .collect();
        let mut order: Vec<usize> = (0..m).collect();
        permute_all(&mut order, 0, &mut |ord: &[usize]| {
            for flips in 0..(1u64 << (2 * m)) {
                let mut breaks = 0;
                for row in 0..2 {
                    let end = |k: usize| {
                        let (a, b) = cols[ord[k]][row];
                        if flips >> (2 * k + row) & 1 == 1 {
                            (b, a)
                        } else {
                            (a, b)
                        }
                    };
                    for k in 1..m {
                        if end(k - 1).1 != end(k).0 {
                            breaks += 1;
                        }
                    }
                }
                best = Some(best.map_or(breaks, |b: usize| b.min(breaks)));
            }
        });
    }
    best
}

fn permute_all(v: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute_all(v, k + 1, f);
        v.swap(k, i);
    }
}

pub fn random_graph(rng: &mut ChaCha8Rng) -> CellGraph {
    let n = rng.random_range(2..6);
    let kinds = (0..n).map(|_| rng.random_range(0..NODE_KINDS)).collect();
    let edges = (0..rng.random_range(1..8))
        .map(|_| GraphEdge {
            src: rng.random_range(0..n),
            dst: rng.random_range(0..n),
            category: rng.random_range(0..EDGE_CATEGORIES),
        })
        .collect();
    CellGraph {
        names: (0..n).map(|i| format!("n{i}")).collect(),
        kinds,
        edges,
    }
}

/// Relative error with a floor so that near-zero gradients compare absolutely.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

/// Prompt over hand-made actions with the given features.
pub fn toy_prompt(features: Vec<[f64; FEATURE_DIM]>) -> Prompt {
    let actions = (0..features.len())
        .map(|i| PivotCandidate {
            net: format!("N{}", i + 1),
            network: Network::PullDown,
        })
        .collect();
    Prompt {
        cell: parse_spice(INV).unwrap(),
        breaks: 1,
        actions,
        features,
    }
}

pub fn one_hot(n: usize) -> Vec<[f64; FEATURE_DIM]> {
    (0..n)
        .map(|i| {
            let mut f = [0.0; FEATURE_DIM];
            f[i] = 1.0;
            f
        })
        .collect()
}

pub fn seq(net: &str) -> Vec<String> {
    vec![net.to_string()]
}
