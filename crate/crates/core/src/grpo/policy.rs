// SPDX-License-Identifier: Apache-2.0

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GrpoError;
use crate::netlist::{normalize_orientation, CellNetlist};
use crate::permute::{apply_region, list_valid_pivots, swap_region_of, Network, PivotCandidate};
use crate::reward::proxy_score;

/// Sequence of output tokens. The toy policy emits one token: a net name.
pub type TokenSeq = Vec<String>;

pub const FEATURE_DIM: usize = 8;
pub const FEATURE_MAP_VERSION: u32 = 1;
pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

/// A cell prepared for pivot selection: its valid pivots and their features.
#[derive(Clone, Debug, PartialEq)]
pub struct Prompt {
    pub cell: CellNetlist,
    pub breaks: usize,
    pub actions: Vec<PivotCandidate>,
    pub features: Vec<[f64; FEATURE_DIM]>,
}

impl Prompt {
    /// Feature map per pivot:
    /// 0 pull-up, 1 pull-down, 2 up-degree / 4, 3 down-degree / 4,
    /// 4 |Δ| / 8, 5 region nets / 8, 6 breaks removed by the swap,
    /// 7 channel devices on the pivot / 4.
    pub fn new(cell: &CellNetlist) -> Result<Self, GrpoError> {
        let cell = normalize_orientation(cell).map_err(crate::permute::PermuteError::from)?;
        let breaks = proxy_score(&cell)?.breaks;
        let actions = list_valid_pivots(&cell);
        let mut features = Vec::with_capacity(actions.len());
        for a in &actions {
            let (norm, region) = swap_region_of(&cell, &a.net)?;
            let after = proxy_score(&apply_region(&norm, &region))?.breaks;
            let touching = cell
                .devices
                .iter()
                .filter(|d| d.touches_channel(&a.net))
                .count();
            features.push([
                f64::from(a.network == Network::PullUp),
                f64::from(a.network == Network::PullDown),
                region.up_neighbors.len() as f64 / 4.0,
                region.down_neighbors.len() as f64 / 4.0,
                region.delta.len() as f64 / 8.0,
                region.nets.len() as f64 / 8.0,
                breaks as f64 - after as f64,
                touching as f64 / 4.0,
            ]);
        }
        Ok(Self {
            cell,
            breaks,
            actions,
            features,
        })
    }

    pub fn action_index(&self, seq: &TokenSeq) -> Option<usize> {
        let net = decode_pivot(seq);
        self.actions.iter().position(|a| a.net == net)
    }
}

/// Net name spelled by a token sequence.
pub fn decode_pivot(seq: &TokenSeq) -> String {
    seq.concat().trim().to_uppercase()
}

/// What the trainer needs from a pivot-selection policy.
pub trait Policy: Clone {
    fn sample(&self, prompt: &Prompt, rng: &mut ChaCha8Rng) -> TokenSeq;
    /// Per-token log-probabilities; `-inf` outside the support.
    fn token_log_probs(&self, prompt: &Prompt, seq: &TokenSeq) -> Vec<f64>;
    /// Per-token gradients of the log-probabilities with respect to θ.
    fn token_log_prob_grads(&self, prompt: &Prompt, seq: &TokenSeq) -> Vec<Vec<f64>>;
    /// Exact `KL(self || reference)` over the prompt's action space and its
    /// gradient with respect to `self`'s parameters.
    fn kl(&self, reference: &Self, prompt: &Prompt) -> Result<(f64, Vec<f64>), GrpoError>;
    /// Candidate sequences, most probable first.
    fn ranked(&self, prompt: &Prompt) -> Vec<TokenSeq>;
    fn params(&self) -> &[f64];
    fn set_params(&mut self, theta: &[f64]);

    fn snapshot(&self) -> Self {
        self.clone()
    }
}

/// Softmax over valid pivots with logits `θ · features`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToySoftmaxPolicy {
    pub theta: Vec<f64>,
}

impl Default for ToySoftmaxPolicy {
    fn default() -> Self {
        Self {
            theta: vec![0.0; FEATURE_DIM],
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format_version: u32,
    theta: Vec<f64>,
    feature_map_version: u32,
}

impl ToySoftmaxPolicy {
    pub fn probs(&self, prompt: &Prompt) -> Vec<f64> {
        let logits: Vec<f64> = prompt
            .features
            .iter()
            .map(|f| f.iter().zip(&self.theta).map(|(a, b)| a * b).sum())
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = exp.iter().sum();
        exp.into_iter().map(|e| e / z).collect()
    }

    fn expected_features(&self, probs: &[f64], prompt: &Prompt) -> [f64; FEATURE_DIM] {
        let mut mean = [0.0; FEATURE_DIM];
        for (p, f) in probs.iter().zip(&prompt.features) {
            for (m, x) in mean.iter_mut().zip(f) {
                *m += p * x;
            }
        }
        mean
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&Checkpoint {
            format_version: CHECKPOINT_FORMAT_VERSION,
            theta: self.theta.clone(),
            feature_map_version: FEATURE_MAP_VERSION,
        })
        .expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, GrpoError> {
        let c: Checkpoint =
            serde_json::from_str(text).map_err(|e| GrpoError::Checkpoint(e.to_string()))?;
        if c.format_version != CHECKPOINT_FORMAT_VERSION
            || c.feature_map_version != FEATURE_MAP_VERSION
            || c.theta.len() != FEATURE_DIM
        {
            return Err(GrpoError::Checkpoint(format!(
                "unsupported checkpoint (format {}, feature map {}, {} weights)",
                c.format_version,
                c.feature_map_version,
                c.theta.len()
            )));
        }
        Ok(Self { theta: c.theta })
    }
}

impl Policy for ToySoftmaxPolicy {
    fn sample(&self, prompt: &Prompt, rng: &mut ChaCha8Rng) -> TokenSeq {
        let probs = self.probs(prompt);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = probs.len().saturating_sub(1);
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                pick = i;
                break;
            }
        }
        prompt
            .actions
            .get(pick)
            .map(|a| vec![a.net.clone()])
            .unwrap_or_default()
    }

    fn token_log_probs(&self, prompt: &Prompt, seq: &TokenSeq) -> Vec<f64> {
        let lp = match prompt.action_index(seq) {
            Some(i) => self.probs(prompt)[i].ln(),
            None => f64::NEG_INFINITY,
        };
        vec![lp]
    }

    fn token_log_prob_grads(&self, prompt: &Prompt, seq: &TokenSeq) -> Vec<Vec<f64>> {
        let Some(i) = prompt.action_index(seq) else {
            return vec![vec![0.0; FEATURE_DIM]];
        };
        let mean = self.expected_features(&self.probs(prompt), prompt);
        vec![prompt.features[i]
            .iter()
            .zip(mean)
            .map(|(f, m)| f - m)
            .collect()]
    }

    fn kl(&self, reference: &Self, prompt: &Prompt) -> Result<(f64, Vec<f64>), GrpoError> {
        let p = self.probs(prompt);
        let q = reference.probs(prompt);
        let mut value = 0.0;
        let mut terms = Vec::with_capacity(p.len());
        for (&pa, &qa) in p.iter().zip(&q) {
            if pa > 0.0 && qa <= 0.0 {
                return Err(GrpoError::SupportMismatch);
            }
            let t = if pa > 0.0 { (pa / qa).ln() } else { 0.0 };
            value += pa * t;
            terms.push(t);
        }
        // d/dθ Σ p log(p/q) = Σ p (log(p/q) - KL) φ, with φ centered or not.
        let mut grad = vec![0.0; FEATURE_DIM];
        for ((pa, t), f) in p.iter().zip(&terms).zip(&prompt.features) {
            for (g, x) in grad.iter_mut().zip(f) {
                *g += pa * (t - value) * x;
            }
        }
        Ok((value, grad))
    }

    fn ranked(&self, prompt: &Prompt) -> Vec<TokenSeq> {
        let probs = self.probs(prompt);
        let mut order: Vec<usize> = (0..probs.len()).collect();
        order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
        order
            .into_iter()
            .map(|i| vec![prompt.actions[i].net.clone()])
            .collect()
    }

    fn params(&self) -> &[f64] {
        &self.theta
    }

    fn set_params(&mut self, theta: &[f64]) {
        self.theta = theta.to_vec();
    }
}
