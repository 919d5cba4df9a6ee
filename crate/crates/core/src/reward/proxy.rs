// SPDX-License-Identifier: Apache-2.0

//! Diffusion-break count of a single-row placement.
//!
//! Each column is one PMOS stacked over one NMOS. Columns are formed by
//! pairing devices that share a gate net. Within a row two neighbors share
//! a diffusion when the right terminal of the left device equals the left
//! terminal of the right device; every other neighbor pair costs one break.
//! The count is minimized over column pairings, column orders and per-device
//! flips.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::RewardError;
use crate::netlist::{CellNetlist, Device, MosType};

/// Largest column count searched exactly by default.
pub const EXACT_LIMIT: usize = 8;
/// Largest column count the exact search accepts at all.
pub const MAX_COLUMNS: usize = 12;
/// Cap on the number of distinct column pairings tried.
const MAX_PAIRINGS: usize = 64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchMode {
    /// Exact up to [`EXACT_LIMIT`] columns, greedy above.
    #[default]
    Auto,
    /// Exact up to [`MAX_COLUMNS`] columns, error above.
    Exhaustive,
    Greedy,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProxyScore {
    pub breaks: usize,
    pub score: f64,
}

impl ProxyScore {
    pub fn routable(&self) -> bool {
        self.breaks == 0
    }
}

pub fn proxy_score(cell: &CellNetlist) -> Result<ProxyScore, RewardError> {
    proxy_score_with(cell, SearchMode::Auto)
}

pub fn proxy_score_with(cell: &CellNetlist, mode: SearchMode) -> Result<ProxyScore, RewardError> {
    // Canonical device order keeps pairing caps and greedy tie-breaks
    // independent of the netlist's device order.
    let of_type = |t: MosType| {
        let mut v: Vec<&Device> = cell.devices.iter().filter(|d| d.dtype == t).collect();
        v.sort_by_key(|d| {
            let (lo, hi) = if d.drain <= d.source {
                (&d.drain, &d.source)
            } else {
                (&d.source, &d.drain)
            };
            (&d.gate, lo, hi, &d.name)
        });
        v
    };
    let p = of_type(MosType::Pmos);
    let n = of_type(MosType::Nmos);
    if p.len() != n.len() {
        return Err(RewardError::Unbalanced {
            pmos: p.len(),
            nmos: n.len(),
        });
    }
    let cols = p.len();
    if cols > MAX_COLUMNS && mode == SearchMode::Exhaustive {
        return Err(RewardError::TooLarge(cols));
    }
    let exact = match mode {
        SearchMode::Auto => cols <= EXACT_LIMIT,
        SearchMode::Exhaustive => true,
        SearchMode::Greedy => false,
    };
    let mut ids: BTreeMap<&str, u16> = BTreeMap::new();
    for d in p.iter().chain(&n) {
        for t in [&d.drain, &d.source] {
            let next = ids.len() as u16;
            ids.entry(t).or_insert(next);
        }
    }
    let term = |d: &Device| (ids[d.drain.as_str()], ids[d.source.as_str()]);
    let floor = row_floor(p.iter().map(|d| term(d))) + row_floor(n.iter().map(|d| term(d)));
    let mut best = usize::MAX;
    for pairing in pairings(&p, &n) {
        let columns: Vec<Column> = pairing
            .iter()
            .map(|&(i, j)| [term(p[i]), term(n[j])])
            .collect();
        let costs = CostTable::new(&columns);
        let b = if exact {
            exact_breaks(&costs)
        } else {
            greedy_breaks(&costs)
        };
        best = best.min(b);
        if best <= floor {
            break;
        }
    }
    let breaks = if cols == 0 { 0 } else { best };
    Ok(ProxyScore {
        breaks,
        score: 0.0 - breaks as f64,
    })
}

/// Fewest breaks any ordering of one row can have: a row without breaks is
/// an Euler trail of its net multigraph, so every connected component needs
/// `max(1, odd/2)` trails and consecutive trails are separated by a break.
fn row_floor(edges: impl Iterator<Item = (u16, u16)>) -> usize {
    let edges: Vec<(u16, u16)> = edges.collect();
    if edges.is_empty() {
        return 0;
    }
    let n = edges
        .iter()
        .map(|&(a, b)| a.max(b) as usize + 1)
        .max()
        .unwrap_or(0);
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    let mut degree = vec![0usize; n];
    for &(a, b) in &edges {
        degree[a as usize] += 1;
        degree[b as usize] += 1;
        let (ra, rb) = (find(&mut parent, a as usize), find(&mut parent, b as usize));
        parent[ra] = rb;
    }
    let mut odd: BTreeMap<usize, usize> = BTreeMap::new();
    for v in 0..n {
        if degree[v] > 0 {
            let r = find(&mut parent, v);
            *odd.entry(r).or_default() += degree[v] % 2;
        }
    }
    let trails: usize = odd.values().map(|&o| (o / 2).max(1)).sum();
    trails - 1
}

/// Column pairings `(pmos index, nmos index)`. Devices sharing a gate are
/// matched, every matching within a gate group is tried (bounded), and
/// unmatched leftovers are paired in device order.
fn pairings(p: &[&Device], n: &[&Device]) -> Vec<Vec<(usize, usize)>> {
    let mut groups: BTreeMap<&str, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, d) in p.iter().enumerate() {
        groups.entry(&d.gate).or_default().0.push(i);
    }
    for (j, d) in n.iter().enumerate() {
        groups.entry(&d.gate).or_default().1.push(j);
    }
    let mut partial: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
    let mut left_p = Vec::new();
    let mut left_n = Vec::new();
    for (ps, ns) in groups.values() {
        let k = ps.len().min(ns.len());
        left_p.extend(&ps[k..]);
        left_n.extend(&ns[k..]);
        if k == 0 {
            continue;
        }
        let mut perms = Vec::new();
        permutations(&ns[..k], &mut Vec::new(), &mut vec![false; k], &mut perms);
        let mut next = Vec::new();
        'outer: for base in &partial {
            for perm in &perms {
                let mut v = base.clone();
                v.extend(ps[..k].iter().copied().zip(perm.iter().copied()));
                next.push(v);
                if next.len() >= MAX_PAIRINGS {
                    break 'outer;
                }
            }
        }
        partial = next;
    }
    left_p.sort_unstable();
    left_n.sort_unstable();
    for v in &mut partial {
        v.extend(left_p.iter().copied().zip(left_n.iter().copied()));
    }
    partial
}

fn permutations(
    items: &[usize],
    cur: &mut Vec<usize>,
    used: &mut [bool],
    out: &mut Vec<Vec<usize>>,
) {
    if out.len() >= MAX_PAIRINGS {
        return;
    }
    if cur.len() == items.len() {
        out.push(cur.clone());
        return;
    }
    for i in 0..items.len() {
        if !used[i] {
            used[i] = true;
            cur.push(items[i]);
            permutations(items, cur, used, out);
            cur.pop();
            used[i] = false;
        }
    }
}

type Column = [(u16, u16); 2];

/// `(left, right)` terminals of row `r` of a column under orientation `o`
/// (bit `r` set flips that row's device).
fn ends(col: &Column, r: usize, o: usize) -> (u16, u16) {
    let (a, b) = col[r];
    if o >> r & 1 == 1 {
        (b, a)
    } else {
        (a, b)
    }
}

/// Breaks between every ordered pair of oriented columns.
struct CostTable {
    m: usize,
    cost: Vec<u8>,
}

impl CostTable {
    fn new(cols: &[Column]) -> Self {
        let m = cols.len();
        let mut cost = vec![0u8; m * 4 * m * 4];
        for c1 in 0..m {
            for o1 in 0..4 {
                for c2 in 0..m {
                    for o2 in 0..4 {
                        cost[((c1 * 4 + o1) * m + c2) * 4 + o2] = (0..2)
                            .filter(|&r| ends(&cols[c1], r, o1).1 != ends(&cols[c2], r, o2).0)
                            .count()
                            as u8;
                    }
                }
            }
        }
        Self { m, cost }
    }

    fn get(&self, c1: usize, o1: usize, c2: usize, o2: usize) -> usize {
        self.cost[((c1 * 4 + o1) * self.m + c2) * 4 + o2] as usize
    }
}

/// Held-Karp style search over (placed set, last column, last orientation).
fn exact_breaks(t: &CostTable) -> usize {
    let m = t.m;
    if m <= 1 {
        return 0;
    }
    let full = (1usize << m) - 1;
    let idx = |mask: usize, c: usize, o: usize| (mask * m + c) * 4 + o;
    let mut dp = vec![u8::MAX; (full + 1) * m * 4];
    for c in 0..m {
        for o in 0..4 {
            dp[idx(1 << c, c, o)] = 0;
        }
    }
    for mask in 1..=full {
        for c in 0..m {
            if mask >> c & 1 == 0 {
                continue;
            }
            for o in 0..4 {
                let cur = dp[idx(mask, c, o)];
                if cur == u8::MAX {
                    continue;
                }
                for c2 in 0..m {
                    if mask >> c2 & 1 == 1 {
                        continue;
                    }
                    for o2 in 0..4 {
                        let v = cur + t.get(c, o, c2, o2) as u8;
                        let slot = &mut dp[idx(mask | 1 << c2, c2, o2)];
                        if v < *slot {
                            *slot = v;
                        }
                    }
                }
            }
        }
    }
    (0..m)
        .flat_map(|c| (0..4).map(move |o| (c, o)))
        .map(|(c, o)| dp[idx(full, c, o)] as usize)
        .min()
        .unwrap_or(0)
}

/// Nearest-neighbor chaining from every start; ties go to the lowest column
/// then orientation.
fn greedy_breaks(t: &CostTable) -> usize {
    let m = t.m;
    if m == 0 {
        return 0;
    }
    let mut best = usize::MAX;
    for start in 0..m {
        for so in 0..4 {
            let mut used = vec![false; m];
            used[start] = true;
            let (mut c, mut o, mut total) = (start, so, 0);
            for _ in 1..m {
                let (cost, c2, o2) = (0..m)
                    .filter(|&c2| !used[c2])
                    .flat_map(|c2| (0..4).map(move |o2| (c2, o2)))
                    .map(|(c2, o2)| (t.get(c, o, c2, o2), c2, o2))
                    .min()
                    .expect("unplaced column remains");
                used[c2] = true;
                total += cost;
                c = c2;
                o = o2;
            }
            best = best.min(total);
        }
    }
    best
}
