// SPDX-License-Identifier: Apache-2.0

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::graph::{CellGraph, EDGE_CATEGORIES, NODE_KINDS};
use super::RewardError;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Learnable tensors of the edge-conditioned message-passing model, stored
/// flat in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct GnnParams {
    pub d: usize,
    pub k_layers: usize,
    /// `[NODE_KINDS][d]`
    pub node_embed: Vec<f64>,
    /// `[k_layers][EDGE_CATEGORIES][d][d]`
    pub edge_weight: Vec<f64>,
    /// `[d]`
    pub readout: Vec<f64>,
    pub bias: f64,
}

impl GnnParams {
    pub fn zeros(d: usize, k_layers: usize) -> Self {
        Self {
            d,
            k_layers,
            node_embed: vec![0.0; NODE_KINDS * d],
            edge_weight: vec![0.0; k_layers * EDGE_CATEGORIES * d * d],
            readout: vec![0.0; d],
            bias: 0.0,
        }
    }

    /// Gaussian init scaled by `1/sqrt(d)`; embeddings unit variance.
    pub fn init(d: usize, k_layers: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let unit = Normal::new(0.0, 1.0).expect("valid std");
        let scaled = Normal::new(0.0, 1.0 / (d as f64).sqrt()).expect("valid std");
        let mut p = Self::zeros(d, k_layers);
        p.node_embed
            .iter_mut()
            .for_each(|x| *x = unit.sample(&mut rng));
        p.edge_weight
            .iter_mut()
            .for_each(|x| *x = scaled.sample(&mut rng));
        p.readout
            .iter_mut()
            .for_each(|x| *x = scaled.sample(&mut rng));
        p
    }

    pub fn len(&self) -> usize {
        self.node_embed.len() + self.edge_weight.len() + self.readout.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend(&self.node_embed);
        v.extend(&self.edge_weight);
        v.extend(&self.readout);
        v.push(self.bias);
        v
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<(), RewardError> {
        if flat.len() != self.len() {
            return Err(RewardError::ShapeMismatch(format!(
                "{} values for {} parameters",
                flat.len(),
                self.len()
            )));
        }
        let (a, rest) = flat.split_at(self.node_embed.len());
        let (b, rest) = rest.split_at(self.edge_weight.len());
        let (c, rest) = rest.split_at(self.readout.len());
        self.node_embed.copy_from_slice(a);
        self.edge_weight.copy_from_slice(b);
        self.readout.copy_from_slice(c);
        self.bias = rest[0];
        Ok(())
    }

    fn check(&self) -> Result<(), RewardError> {
        let d = self.d;
        let ok = self.node_embed.len() == NODE_KINDS * d
            && self.edge_weight.len() == self.k_layers * EDGE_CATEGORIES * d * d
            && self.readout.len() == d;
        if !ok {
            return Err(RewardError::ShapeMismatch(format!(
                "tensors inconsistent with d={d}, k_layers={}",
                self.k_layers
            )));
        }
        if !self.to_flat().iter().all(|x| x.is_finite()) {
            return Err(RewardError::ShapeMismatch("non-finite parameter".into()));
        }
        Ok(())
    }

    fn weight(&self, layer: usize, cat: usize) -> &[f64] {
        let dd = self.d * self.d;
        let off = (layer * EDGE_CATEGORIES + cat) * dd;
        &self.edge_weight[off..off + dd]
    }

    pub fn to_json(&self) -> String {
        let d = self.d;
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            d,
            k_layers: self.k_layers,
            node_embed: self
                .node_embed
                .chunks(d.max(1))
                .map(<[f64]>::to_vec)
                .collect(),
            edge_weight: self
                .edge_weight
                .chunks((EDGE_CATEGORIES * d * d).max(1))
                .map(|layer| {
                    layer
                        .chunks((d * d).max(1))
                        .map(|m| m.chunks(d.max(1)).map(<[f64]>::to_vec).collect())
                        .collect()
                })
                .collect(),
            readout: self.readout.clone(),
            bias: self.bias,
        };
        serde_json::to_string_pretty(&file).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, RewardError> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| RewardError::Model(e.to_string()))?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(RewardError::Model(format!(
                "unsupported format_version {}",
                file.format_version
            )));
        }
        let p = Self {
            d: file.d,
            k_layers: file.k_layers,
            node_embed: file.node_embed.concat(),
            edge_weight: file
                .edge_weight
                .into_iter()
                .flatten()
                .flatten()
                .flatten()
                .collect(),
            readout: file.readout,
            bias: file.bias,
        };
        p.check()?;
        Ok(p)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    d: usize,
    k_layers: usize,
    node_embed: Vec<Vec<f64>>,
    edge_weight: Vec<Vec<Vec<Vec<f64>>>>,
    readout: Vec<f64>,
    bias: f64,
}

struct Trace {
    /// `h[k][v]`, k = 0..=K.
    h: Vec<Vec<Vec<f64>>>,
    /// Pre-activations of layers 1..=K.
    pre: Vec<Vec<Vec<f64>>>,
    logit: f64,
}

fn run(graph: &CellGraph, params: &GnnParams) -> Result<Trace, RewardError> {
    params.check()?;
    if let Some(k) = graph.kinds.iter().find(|&&k| k >= NODE_KINDS) {
        return Err(RewardError::ShapeMismatch(format!("node kind {k}")));
    }
    if let Some(e) = graph.edges.iter().find(|e| {
        e.category >= EDGE_CATEGORIES || e.src >= graph.node_count() || e.dst >= graph.node_count()
    }) {
        return Err(RewardError::ShapeMismatch(format!("bad edge {e:?}")));
    }
    let d = params.d;
    let nb = graph.neighborhoods();
    let h0: Vec<Vec<f64>> = graph
        .kinds
        .iter()
        .map(|&k| params.node_embed[k * d..(k + 1) * d].to_vec())
        .collect();
    let mut h = vec![h0];
    let mut pre = Vec::new();
    for layer in 0..params.k_layers {
        let prev = &h[layer];
        let mut z = vec![vec![0.0; d]; graph.node_count()];
        for (v, zv) in z.iter_mut().enumerate() {
            if nb[v].is_empty() {
                continue;
            }
            let scale = 1.0 / nb[v].len() as f64;
            for &(u, cat) in &nb[v] {
                let w = params.weight(layer, cat);
                for (i, zi) in zv.iter_mut().enumerate() {
                    let row = &w[i * d..(i + 1) * d];
                    *zi += scale * row.iter().zip(&prev[u]).map(|(a, b)| a * b).sum::<f64>();
                }
            }
        }
        let next = z
            .iter()
            .map(|zv| zv.iter().map(|x| x.max(0.0)).collect())
            .collect();
        pre.push(z);
        h.push(next);
    }
    let last = h.last().expect("h0 present");
    let n = graph.node_count().max(1) as f64;
    let mut pooled = vec![0.0; d];
    for hv in last {
        for (p, x) in pooled.iter_mut().zip(hv) {
            *p += x / n;
        }
    }
    let logit = pooled
        .iter()
        .zip(&params.readout)
        .map(|(a, b)| a * b)
        .sum::<f64>()
        + params.bias;
    Ok(Trace { h, pre, logit })
}

/// Graph-level logit: mean-aggregated, edge-conditioned message passing
/// followed by mean pooling and a linear head.
pub fn gnn_forward(graph: &CellGraph, params: &GnnParams) -> Result<f64, RewardError> {
    Ok(run(graph, params)?.logit)
}

pub fn margin_loss(logit: f64, label: f64) -> f64 {
    (1.0 - label * logit).max(0.0)
}

/// Gradient of `margin_loss(gnn_forward(graph, params), label)` with respect
/// to every parameter, in the same layout as `params`.
pub fn gnn_gradients(
    graph: &CellGraph,
    params: &GnnParams,
    label: f64,
) -> Result<GnnParams, RewardError> {
    let t = run(graph, params)?;
    let mut g = GnnParams::zeros(params.d, params.k_layers);
    if 1.0 - label * t.logit <= 0.0 {
        return Ok(g);
    }
    let dlogit = -label;
    let d = params.d;
    let n_nodes = graph.node_count();
    let n = n_nodes.max(1) as f64;

    g.bias = dlogit;
    let last = &t.h[params.k_layers];
    for hv in last {
        for (gr, x) in g.readout.iter_mut().zip(hv) {
            *gr += dlogit * x / n;
        }
    }
    let mut gh: Vec<Vec<f64>> = (0..n_nodes)
        .map(|_| params.readout.iter().map(|r| dlogit * r / n).collect())
        .collect();

    let nb = graph.neighborhoods();
    for layer in (0..params.k_layers).rev() {
        let z = &t.pre[layer];
        let prev = &t.h[layer];
        let mut gprev = vec![vec![0.0; d]; n_nodes];
        for v in 0..n_nodes {
            if nb[v].is_empty() {
                continue;
            }
            let gz: Vec<f64> = gh[v]
                .iter()
                .zip(&z[v])
                .map(|(g, &zz)| if zz > 0.0 { *g } else { 0.0 })
                .collect();
            if gz.iter().all(|x| *x == 0.0) {
                continue;
            }
            let scale = 1.0 / nb[v].len() as f64;
            for &(u, cat) in &nb[v] {
                let off = (layer * EDGE_CATEGORIES + cat) * d * d;
                let w = params.weight(layer, cat);
                for i in 0..d {
                    if gz[i] == 0.0 {
                        continue;
                    }
                    let s = scale * gz[i];
                    for j in 0..d {
                        g.edge_weight[off + i * d + j] += s * prev[u][j];
                        gprev[u][j] += s * w[i * d + j];
                    }
                }
            }
        }
        gh = gprev;
    }
    for (v, &k) in graph.kinds.iter().enumerate() {
        for j in 0..d {
            g.node_embed[k * d + j] += gh[v][j];
        }
    }
    Ok(g)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub d: usize,
    pub k_layers: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            d: 16,
            k_layers: 3,
            lr: 1e-2,
            epochs: 200,
            batch_size: 16,
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epoch_loss: Vec<f64>,
    pub train_accuracy: f64,
}

/// Fraction of graphs whose logit sign matches the label (0 counts as -1).
pub fn accuracy(data: &[(CellGraph, f64)], params: &GnnParams) -> Result<f64, RewardError> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut hit = 0usize;
    for (g, y) in data {
        let s = if gnn_forward(g, params)? > 0.0 {
            1.0
        } else {
            -1.0
        };
        if s == *y {
            hit += 1;
        }
    }
    Ok(hit as f64 / data.len() as f64)
}

/// Mini-batch gradient descent on the mean margin loss. Labels are ±1.
pub fn train_reward_model(
    data: &[(CellGraph, f64)],
    config: &TrainConfig,
) -> Result<(GnnParams, TrainLog), RewardError> {
    let pos = data.iter().filter(|(_, y)| *y > 0.0).count();
    if pos == 0 || pos == data.len() {
        return Err(RewardError::DegenerateData);
    }
    let mut params = GnnParams::init(config.d, config.k_layers, config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_loss = Vec::with_capacity(config.epochs);
    let batch = config.batch_size.max(1);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(batch) {
            let mut acc = vec![0.0; params.len()];
            for &i in chunk {
                let (g, y) = &data[i];
                total += margin_loss(gnn_forward(g, &params)?, *y);
                let grad = gnn_gradients(g, &params, *y)?.to_flat();
                acc.iter_mut().zip(grad).for_each(|(a, b)| *a += b);
            }
            let step = config.lr / chunk.len() as f64;
            let mut flat = params.to_flat();
            flat.iter_mut().zip(&acc).for_each(|(p, g)| *p -= step * g);
            params.set_flat(&flat)?;
        }
        epoch_loss.push(total / data.len() as f64);
    }
    let train_accuracy = accuracy(data, &params)?;
    log::info!(
        "reward model: final loss {:.4}, train accuracy {:.3}",
        epoch_loss.last().copied().unwrap_or(0.0),
        train_accuracy
    );
    Ok((
        params,
        TrainLog {
            epoch_loss,
            train_accuracy,
        },
    ))
}
