// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use log::{debug, info};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::policy::{decode_pivot, Policy, Prompt};
use super::train::MAX_RETRIES;
use super::GrpoError;
use crate::netlist::CellNetlist;
use crate::permute::swap_net;
use crate::reward::{proxy_score, reward_of, RewardSource};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecodeMode {
    /// Most probable untried pivot first.
    Greedy,
    Sample {
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Routable,
    NoImprovement,
    BudgetExhausted,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub pivot: String,
    /// Rejection message when the pivot was refused; the policy is asked again.
    pub error: Option<String>,
    pub accepted: bool,
    pub reward_before: f64,
    pub reward_after: Option<f64>,
    pub breaks_after: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizationTrace {
    pub steps: Vec<TraceStep>,
    pub initial_breaks: Option<usize>,
    pub final_breaks: Option<usize>,
    pub stop: StopReason,
    pub cell: CellNetlist,
}

impl OptimizationTrace {
    pub fn swaps(&self) -> usize {
        self.steps.iter().filter(|s| s.accepted).count()
    }

    pub fn routable(&self) -> bool {
        self.final_breaks == Some(0)
    }
}

/// Propose, validate, swap and score until the cell is routable, no pivot
/// improves the reward, or `budget` proposals have been made. A swap is kept
/// only when the reward strictly improves.
pub fn optimize_cell<P: Policy>(
    cell: &CellNetlist,
    policy: &P,
    reward: &RewardSource,
    budget: usize,
    mode: DecodeMode,
) -> OptimizationTrace {
    let initial_breaks = proxy_score(cell).ok().map(|s| s.breaks);
    let mut trace = OptimizationTrace {
        steps: Vec::new(),
        initial_breaks,
        final_breaks: initial_breaks,
        stop: StopReason::BudgetExhausted,
        cell: cell.clone(),
    };
    if initial_breaks == Some(0) {
        trace.stop = StopReason::Routable;
        return trace;
    }
    if budget == 0 {
        return trace;
    }
    let mut current_reward = match reward_of(reward, cell) {
        Ok(r) => r,
        Err(e) => {
            info!("{}: cannot score seed: {e}", cell.cell_name);
            trace.stop = StopReason::Failed;
            return trace;
        }
    };
    let mut rng = match mode {
        DecodeMode::Sample { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        DecodeMode::Greedy => None,
    };
    let mut prompt = match Prompt::new(cell) {
        Ok(p) => p,
        Err(e) => {
            info!("{}: cannot prepare prompt: {e}", cell.cell_name);
            trace.stop = StopReason::Failed;
            return trace;
        }
    };
    let mut tried: BTreeSet<String> = BTreeSet::new();
    while trace.steps.len() < budget {
        let Some(pivot) = propose(policy, &prompt, &tried, rng.as_mut()) else {
            trace.stop = StopReason::NoImprovement;
            return trace;
        };
        tried.insert(pivot.clone());
        let mut step = TraceStep {
            pivot: pivot.clone(),
            error: None,
            accepted: false,
            reward_before: current_reward,
            reward_after: None,
            breaks_after: None,
        };
        let swapped = match swap_net(&prompt.cell, &pivot) {
            Ok(c) => c,
            Err(e) => {
                debug!("{}: {e}", cell.cell_name);
                step.error = Some(e.to_string());
                trace.steps.push(step);
                continue;
            }
        };
        let scored = reward_of(reward, &swapped).map_err(GrpoError::from);
        let breaks = proxy_score(&swapped).ok().map(|s| s.breaks);
        step.breaks_after = breaks;
        match scored {
            Ok(r) => {
                step.reward_after = Some(r);
                if r > current_reward {
                    step.accepted = true;
                    current_reward = r;
                }
            }
            Err(e) => step.error = Some(e.to_string()),
        }
        let accepted = step.accepted;
        trace.steps.push(step);
        if !accepted {
            continue;
        }
        trace.cell = swapped;
        trace.final_breaks = breaks;
        if breaks == Some(0) {
            trace.stop = StopReason::Routable;
            return trace;
        }
        tried.clear();
        prompt = match Prompt::new(&trace.cell) {
            Ok(p) => p,
            Err(e) => {
                info!("{}: cannot prepare prompt: {e}", cell.cell_name);
                trace.stop = StopReason::Failed;
                return trace;
            }
        };
    }
    trace.stop = StopReason::BudgetExhausted;
    trace
}

/// Next pivot not yet tried in the current state.
fn propose<P: Policy>(
    policy: &P,
    prompt: &Prompt,
    tried: &BTreeSet<String>,
    rng: Option<&mut ChaCha8Rng>,
) -> Option<String> {
    let untried = || {
        policy
            .ranked(prompt)
            .iter()
            .map(decode_pivot)
            .find(|p| !tried.contains(p))
    };
    match rng {
        None => untried(),
        Some(rng) => {
            for _ in 0..=MAX_RETRIES {
                let p = decode_pivot(&policy.sample(prompt, rng));
                if !p.is_empty() && !tried.contains(&p) {
                    return Some(p);
                }
            }
            untried()
        }
    }
}
