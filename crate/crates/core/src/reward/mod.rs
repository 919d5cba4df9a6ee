// SPDX-License-Identifier: Apache-2.0

//! Routability signals: a learned graph model over net/transistor graphs and
//! a deterministic diffusion-break proxy.

mod gnn;
mod graph;
mod proxy;

pub use gnn::{
    accuracy, gnn_forward, gnn_gradients, margin_loss, train_reward_model, GnnParams, TrainConfig,
    TrainLog, MODEL_FORMAT_VERSION,
};
pub use graph::{
    edge_category, encode_cell_graph, CellGraph, Connection, GraphEdge, EDGE_CATEGORIES, NODE_KINDS,
};
pub use proxy::{proxy_score, proxy_score_with, ProxyScore, SearchMode, EXACT_LIMIT, MAX_COLUMNS};

use std::collections::BTreeMap;

use crate::netlist::CellNetlist;
use crate::permute::canonical_hash;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum RewardError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("training data contains a single label")]
    DegenerateData,
    #[error("{0} columns exceed the exhaustive search limit")]
    TooLarge(usize),
    #[error("{pmos} PMOS vs {nmos} NMOS devices cannot form columns")]
    Unbalanced { pmos: usize, nmos: usize },
    #[error("no table entry for digest {0:016x}")]
    MissingTableEntry(u64),
    #[error("model file: {0}")]
    Model(String),
}

/// Where rewards come from during training and inference.
#[derive(Clone, Debug, PartialEq)]
pub enum RewardSource {
    Gnn(GnnParams),
    Proxy,
    /// Precomputed scores keyed by [`canonical_hash`].
    Table(BTreeMap<u64, f64>),
}

pub fn reward_of(source: &RewardSource, cell: &CellNetlist) -> Result<f64, RewardError> {
    match source {
        RewardSource::Gnn(params) => gnn_forward(&encode_cell_graph(cell), params),
        RewardSource::Proxy => Ok(proxy_score(cell)?.score),
        RewardSource::Table(table) => {
            let key = canonical_hash(cell);
            table
                .get(&key)
                .copied()
                .ok_or(RewardError::MissingTableEntry(key))
        }
    }
}
