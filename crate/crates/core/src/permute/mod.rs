// SPDX-License-Identifier: Apache-2.0

//! Functionally equivalent rewiring of series-parallel transistor networks.
//!
//! A pivot is an internal net on the channel of one device type. The
//! sub-network directly above the pivot (bounded by the nearest common
//! ancestor of its up-neighbors) and the one directly below (bounded by the
//! nearest common descendant of its down-neighbors) trade places. Series
//! composition commutes, so the cell function is unchanged.

mod canon;
mod enumerate;

pub use canon::{canonical_form, canonical_hash};
pub use enumerate::{enumerate_topologies, variant_file_name, Enumeration, Variant};

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::netlist::{normalize_orientation, CellNetlist, MosType, NetKind, NetlistError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PivotRejection {
    /// The net does not occur in the cell.
    NotFound,
    /// The net only drives gates.
    GateOnly,
    /// The net touches the channels of both PMOS and NMOS devices.
    MixedNetworks,
    /// The net is a supply rail or a pin.
    RailOrPin,
}

impl fmt::Display for PivotRejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PivotRejection::NotFound => "NotFound",
            PivotRejection::GateOnly => "GateOnly",
            PivotRejection::MixedNetworks => "MixedNetworks",
            PivotRejection::RailOrPin => "RailOrPin",
        })
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum PermuteError {
    #[error("invalid pivot {net} ({reason}), select a different net")]
    InvalidPivot { net: String, reason: PivotRejection },
    #[error("pivot {0} has no swappable region")]
    DegenerateRegion(String),
    #[error("{0} network contains a directed cycle")]
    CyclicNetwork(MosType),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Network {
    PullUp,
    PullDown,
}

impl Network {
    pub fn dtype(self) -> MosType {
        match self {
            Network::PullUp => MosType::Pmos,
            Network::PullDown => MosType::Nmos,
        }
    }

    pub fn of(dtype: MosType) -> Self {
        match dtype {
            MosType::Pmos => Network::PullUp,
            MosType::Nmos => Network::PullDown,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PivotCandidate {
    pub net: String,
    pub network: Network,
}

/// Directed graph of one device type: one edge per device, drain to source.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PullGraph {
    pub nodes: BTreeSet<String>,
    /// `(device index in the cell, drain, source)`.
    pub edges: Vec<(usize, String, String)>,
    up: BTreeMap<String, BTreeSet<String>>,
    down: BTreeMap<String, BTreeSet<String>>,
}

impl PullGraph {
    fn build(cell: &CellNetlist, dtype: MosType) -> Result<Self, PermuteError> {
        let mut g = PullGraph::default();
        for (i, d) in cell
            .devices
            .iter()
            .enumerate()
            .filter(|(_, d)| d.dtype == dtype)
        {
            g.nodes.insert(d.drain.clone());
            g.nodes.insert(d.source.clone());
            g.edges.push((i, d.drain.clone(), d.source.clone()));
            g.down
                .entry(d.drain.clone())
                .or_default()
                .insert(d.source.clone());
            g.up.entry(d.source.clone())
                .or_default()
                .insert(d.drain.clone());
        }
        // Kahn's algorithm over distinct node pairs.
        let mut indeg: BTreeMap<&str, usize> = g.nodes.iter().map(|n| (n.as_str(), 0)).collect();
        for (n, ups) in &g.up {
            indeg.insert(n, ups.len());
        }
        let mut queue: VecDeque<&str> = indeg
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(n, _)| *n)
            .collect();
        let mut seen = 0;
        while let Some(n) = queue.pop_front() {
            seen += 1;
            for m in g.down_neighbors(n) {
                let e = indeg.get_mut(m.as_str()).expect("node present");
                *e -= 1;
                if *e == 0 {
                    queue.push_back(m);
                }
            }
        }
        if seen != g.nodes.len() {
            return Err(PermuteError::CyclicNetwork(dtype));
        }
        Ok(g)
    }

    pub fn up_neighbors(&self, net: &str) -> impl Iterator<Item = &String> {
        self.up.get(net).into_iter().flatten()
    }

    pub fn down_neighbors(&self, net: &str) -> impl Iterator<Item = &String> {
        self.down.get(net).into_iter().flatten()
    }

    fn distances(&self, start: &str, upward: bool) -> BTreeMap<String, usize> {
        let mut dist = BTreeMap::from([(start.to_string(), 0)]);
        let mut queue = VecDeque::from([start.to_string()]);
        while let Some(n) = queue.pop_front() {
            let d = dist[&n];
            let next: Vec<&String> = if upward {
                self.up_neighbors(&n).collect()
            } else {
                self.down_neighbors(&n).collect()
            };
            for m in next {
                if !dist.contains_key(m) {
                    dist.insert(m.clone(), d + 1);
                    queue.push_back(m.clone());
                }
            }
        }
        dist
    }

    /// Nearest node reachable from every start within the same number of
    /// BFS layers; ties go to the smallest name.
    fn nearest_common(&self, starts: &BTreeSet<String>, upward: bool) -> Option<String> {
        let dists: Vec<BTreeMap<String, usize>> =
            starts.iter().map(|s| self.distances(s, upward)).collect();
        let first = dists.first()?;
        first
            .keys()
            .filter_map(|n| {
                let depth = dists
                    .iter()
                    .map(|d| d.get(n).copied())
                    .collect::<Option<Vec<_>>>()?;
                Some((depth.into_iter().max().unwrap_or(0), n))
            })
            .min()
            .map(|(_, n)| n.clone())
    }

    /// Nodes on some directed path from `top` to `bottom`, both included.
    fn between(&self, top: &str, bottom: &str) -> BTreeSet<String> {
        let below = self.distances(top, false);
        let above = self.distances(bottom, true);
        below
            .into_keys()
            .filter(|n| above.contains_key(n))
            .collect()
    }
}

/// Pull-up and pull-down graphs of a cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetGraph {
    pub pullup: PullGraph,
    pub pulldown: PullGraph,
}

impl NetGraph {
    pub fn network(&self, network: Network) -> &PullGraph {
        match network {
            Network::PullUp => &self.pullup,
            Network::PullDown => &self.pulldown,
        }
    }
}

/// Graph of an orientation-normalized cell.
pub fn build_graph(cell: &CellNetlist) -> Result<NetGraph, PermuteError> {
    Ok(NetGraph {
        pullup: PullGraph::build(cell, MosType::Pmos)?,
        pulldown: PullGraph::build(cell, MosType::Nmos)?,
    })
}

pub fn validate_pivot(cell: &CellNetlist, pivot: &str) -> Result<PivotCandidate, PermuteError> {
    let net = pivot.trim().to_uppercase();
    let reject = |reason| PermuteError::InvalidPivot {
        net: net.clone(),
        reason,
    };
    if !cell.nets().contains(&net) {
        return Err(reject(PivotRejection::NotFound));
    }
    let mut pmos = false;
    let mut nmos = false;
    for d in cell.devices.iter().filter(|d| d.touches_channel(&net)) {
        match d.dtype {
            MosType::Pmos => pmos = true,
            MosType::Nmos => nmos = true,
        }
    }
    match (pmos, nmos) {
        (false, false) => return Err(reject(PivotRejection::GateOnly)),
        (true, true) => return Err(reject(PivotRejection::MixedNetworks)),
        _ => {}
    }
    if cell.kind_of(&net) != NetKind::Internal {
        return Err(reject(PivotRejection::RailOrPin));
    }
    let network = if pmos {
        Network::PullUp
    } else {
        Network::PullDown
    };
    Ok(PivotCandidate { net, network })
}

/// The bounded sub-network around a pivot and the terminal rewrites that
/// exchange its upper and lower halves.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapRegion {
    pub pivot: PivotCandidate,
    pub nca: String,
    pub ncd: String,
    pub up_neighbors: BTreeSet<String>,
    pub down_neighbors: BTreeSet<String>,
    pub up_boundary: BTreeSet<String>,
    pub down_boundary: BTreeSet<String>,
    /// Nets on some path from `nca` to `ncd`, both included.
    pub nets: BTreeSet<String>,
    /// Device name → new (drain, source).
    pub delta: BTreeMap<String, (String, String)>,
}

pub fn find_swap_region(
    cell: &CellNetlist,
    graph: &NetGraph,
    pivot: &PivotCandidate,
) -> Result<SwapRegion, PermuteError> {
    let g = graph.network(pivot.network);
    let p = pivot.net.as_str();
    let degenerate = || PermuteError::DegenerateRegion(p.to_string());
    let up_neighbors: BTreeSet<String> = g.up_neighbors(p).cloned().collect();
    let down_neighbors: BTreeSet<String> = g.down_neighbors(p).cloned().collect();
    if up_neighbors.is_empty() || down_neighbors.is_empty() {
        return Err(degenerate());
    }
    let nca = g
        .nearest_common(&up_neighbors, true)
        .ok_or_else(degenerate)?;
    let ncd = g
        .nearest_common(&down_neighbors, false)
        .ok_or_else(degenerate)?;
    if nca == p || ncd == p {
        return Err(degenerate());
    }

    let upper = g.between(&nca, p);
    let lower = g.between(p, &ncd);
    let adjacent = |n: &str| -> BTreeSet<String> {
        g.up_neighbors(n)
            .chain(g.down_neighbors(n))
            .cloned()
            .collect()
    };
    let up_boundary: BTreeSet<String> = adjacent(&nca).intersection(&upper).cloned().collect();
    let down_boundary: BTreeSet<String> = adjacent(&ncd).intersection(&lower).cloned().collect();

    let mut delta = BTreeMap::new();
    for &(i, ref d, ref s) in &g.edges {
        let (mut dn, mut sn) = (d.clone(), s.clone());
        if *d == nca && up_boundary.contains(s) {
            dn = p.to_string();
        }
        if d == p && down_neighbors.contains(s) {
            dn = nca.clone();
        }
        if *s == ncd && down_boundary.contains(d) {
            sn = p.to_string();
        }
        if s == p && up_neighbors.contains(d) {
            sn = ncd.clone();
        }
        if (&dn, &sn) != (d, s) {
            delta.insert(cell.devices[i].name.clone(), (dn, sn));
        }
    }
    if delta.is_empty() {
        return Err(degenerate());
    }
    let nets = upper.union(&lower).cloned().collect();
    Ok(SwapRegion {
        pivot: pivot.clone(),
        nca,
        ncd,
        up_neighbors,
        down_neighbors,
        up_boundary,
        down_boundary,
        nets,
        delta,
    })
}

/// Normalized copy of `cell` plus the swap region of `pivot` within it.
pub fn swap_region_of(
    cell: &CellNetlist,
    pivot: &str,
) -> Result<(CellNetlist, SwapRegion), PermuteError> {
    let candidate = validate_pivot(cell, pivot)?;
    let normalized = normalize_orientation(cell)?;
    let graph = build_graph(&normalized)?;
    let region = find_swap_region(&normalized, &graph, &candidate)?;
    Ok((normalized, region))
}

pub fn apply_region(cell: &CellNetlist, region: &SwapRegion) -> CellNetlist {
    let mut out = cell.clone();
    for d in &mut out.devices {
        if let Some((dn, sn)) = region.delta.get(&d.name) {
            d.drain = dn.clone();
            d.source = sn.clone();
        }
    }
    out
}

/// Swap the sub-networks above and below `pivot`. The input is orientation
/// normalized first; on an already normalized cell only the region's devices
/// change.
pub fn swap_net(cell: &CellNetlist, pivot: &str) -> Result<CellNetlist, PermuteError> {
    let (normalized, region) = swap_region_of(cell, pivot)?;
    Ok(apply_region(&normalized, &region))
}

/// Every accepted, non-degenerate pivot, sorted by net name.
pub fn list_valid_pivots(cell: &CellNetlist) -> Vec<PivotCandidate> {
    let Ok(normalized) = normalize_orientation(cell) else {
        return Vec::new();
    };
    let Ok(graph) = build_graph(&normalized) else {
        return Vec::new();
    };
    normalized
        .nets()
        .into_iter()
        .filter_map(|net| validate_pivot(&normalized, &net).ok())
        .filter(|c| find_swap_region(&normalized, &graph, c).is_ok())
        .collect()
}
