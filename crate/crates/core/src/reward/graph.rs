// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::netlist::{CellNetlist, MosType, NetKind};

pub const NODE_KINDS: usize = 5;
pub const EDGE_CATEGORIES: usize = 12;

/// Which channel terminal an edge points at, and whether that terminal is a
/// supply rail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Connection {
    GateToDrain,
    GateToSource,
    GateToVddDrain,
    GateToVddSource,
    GateToGndDrain,
    GateToGndSource,
}

impl Connection {
    pub const ALL: [Connection; 6] = [
        Connection::GateToDrain,
        Connection::GateToSource,
        Connection::GateToVddDrain,
        Connection::GateToVddSource,
        Connection::GateToGndDrain,
        Connection::GateToGndSource,
    ];

    fn classify(to_drain: bool, terminal: NetKind) -> Self {
        match (terminal, to_drain) {
            (NetKind::Power, true) => Connection::GateToVddDrain,
            (NetKind::Power, false) => Connection::GateToVddSource,
            (NetKind::Ground, true) => Connection::GateToGndDrain,
            (NetKind::Ground, false) => Connection::GateToGndSource,
            (_, true) => Connection::GateToDrain,
            (_, false) => Connection::GateToSource,
        }
    }

    fn index(self) -> usize {
        Connection::ALL
            .iter()
            .position(|c| *c == self)
            .expect("listed")
    }
}

/// Edge category id in `[0, 12)`: device type major, connection minor.
pub fn edge_category(dtype: MosType, conn: Connection) -> usize {
    dtype.id() * Connection::ALL.len() + conn.index()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub src: usize,
    pub dst: usize,
    pub category: usize,
}

/// Nets as nodes, two directed edges per transistor (gate to drain, gate to
/// source).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellGraph {
    pub names: Vec<String>,
    /// Node feature: [`NetKind::id`].
    pub kinds: Vec<usize>,
    pub edges: Vec<GraphEdge>,
}

impl CellGraph {
    pub fn node_count(&self) -> usize {
        self.kinds.len()
    }

    /// Per node, `(neighbor, category)` over every incident edge in either
    /// direction.
    pub fn neighborhoods(&self) -> Vec<Vec<(usize, usize)>> {
        let mut nb = vec![Vec::new(); self.node_count()];
        for e in &self.edges {
            nb[e.dst].push((e.src, e.category));
            if e.src != e.dst {
                nb[e.src].push((e.dst, e.category));
            }
        }
        nb
    }
}

pub fn encode_cell_graph(cell: &CellNetlist) -> CellGraph {
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for d in &cell.devices {
        for net in [&d.drain, &d.gate, &d.source] {
            index.insert(net, 0);
        }
    }
    for p in &cell.pins {
        index.insert(&p.name, 0);
    }
    let names: Vec<String> = index.keys().map(|s| s.to_string()).collect();
    for (i, v) in index.values_mut().enumerate() {
        *v = i;
    }
    let kinds = names.iter().map(|n| cell.kind_of(n).id()).collect();
    let mut edges = Vec::with_capacity(cell.devices.len() * 2);
    for d in &cell.devices {
        for (terminal, to_drain) in [(&d.drain, true), (&d.source, false)] {
            let conn = Connection::classify(to_drain, cell.kind_of(terminal));
            edges.push(GraphEdge {
                src: index[d.gate.as_str()],
                dst: index[terminal.as_str()],
                category: edge_category(d.dtype, conn),
            });
        }
    }
    CellGraph {
        names,
        kinds,
        edges,
    }
}
