// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::io::Write;

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::policy::{decode_pivot, Policy, Prompt, TokenSeq};
use super::{compute_advantages, grpo_objective, GrpoError};
use crate::netlist::CellNetlist;
use crate::permute::{list_valid_pivots, swap_net};
use crate::reward::{reward_of, RewardSource};

/// Resamples allowed per group slot when a token names an invalid pivot.
pub const MAX_RETRIES: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrpoConfig {
    pub group_size: usize,
    pub iterations: usize,
    pub inner_steps: usize,
    pub clip: f64,
    pub kl_coef: f64,
    pub eps: f64,
    pub lr: f64,
    pub seed: u64,
}

impl Default for GrpoConfig {
    fn default() -> Self {
        Self {
            group_size: 8,
            iterations: 200,
            inner_steps: 4,
            clip: 0.2,
            kl_coef: 0.01,
            eps: 1e-8,
            lr: 0.1,
            seed: 42,
        }
    }
}

impl GrpoConfig {
    pub fn check(&self) -> Result<(), GrpoError> {
        if self.group_size < 2 {
            return Err(GrpoError::InvalidConfig(
                "group size must be at least 2".into(),
            ));
        }
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return Err(GrpoError::InvalidConfig(
                "clip range must lie in (0, 1)".into(),
            ));
        }
        if self.eps <= 0.0 {
            return Err(GrpoError::InvalidConfig("eps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RolloutGroup {
    pub prompt: Prompt,
    pub candidates: Vec<TokenSeq>,
    pub netlists: Vec<CellNetlist>,
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
    /// Invalid samples that were drawn again.
    pub resamples: usize,
}

/// Draw `m` candidates from `old`, each with its own RNG stream seeded from
/// `seed`, and score the rewritten cells.
pub fn sample_group<P: Policy>(
    old: &P,
    prompt: &Prompt,
    m: usize,
    reward: &RewardSource,
    seed: u64,
    eps: f64,
) -> Result<RolloutGroup, GrpoError> {
    if prompt.actions.is_empty() {
        return Err(GrpoError::NoValidPivots(prompt.cell.cell_name.clone()));
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut group = RolloutGroup {
        prompt: prompt.clone(),
        candidates: Vec::with_capacity(m),
        netlists: Vec::with_capacity(m),
        rewards: Vec::with_capacity(m),
        advantages: Vec::new(),
        resamples: 0,
    };
    for slot in 0..m {
        let mut rng = ChaCha8Rng::seed_from_u64(master.random());
        let mut drawn = None;
        for attempt in 0..=MAX_RETRIES {
            let seq = old.sample(prompt, &mut rng);
            match swap_net(&prompt.cell, &decode_pivot(&seq)) {
                Ok(cell) => {
                    drawn = Some((seq, cell));
                    break;
                }
                Err(e) => {
                    debug!("slot {slot} attempt {attempt}: {e}");
                    if attempt < MAX_RETRIES {
                        group.resamples += 1;
                    }
                }
            }
        }
        let Some((seq, cell)) = drawn else {
            warn!("slot {slot} skipped after {MAX_RETRIES} invalid resamples");
            continue;
        };
        group.rewards.push(reward_of(reward, &cell)?);
        group.candidates.push(seq);
        group.netlists.push(cell);
    }
    group.advantages = compute_advantages(&group.rewards, eps);
    Ok(group)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub iter: usize,
    pub mean_reward: f64,
    pub objective: f64,
    pub kl: f64,
    /// Greedy pivot on the iteration's prompt after the update.
    pub accepted_pivot: String,
}

/// Outer loop: snapshot, pick a prompt, roll out a group, standardize, then
/// `inner_steps` gradient ascent steps.
pub fn train_policy<P: Policy>(
    dataset: &[CellNetlist],
    mut policy: P,
    reference: &P,
    reward: &RewardSource,
    config: &GrpoConfig,
) -> Result<(P, Vec<HistoryRow>), GrpoError> {
    config.check()?;
    // Prompts are built on first use; only the pivot list is needed up front.
    let usable: Vec<&CellNetlist> = dataset
        .iter()
        .filter(|cell| {
            let ok = !list_valid_pivots(cell).is_empty();
            if !ok {
                warn!("skipping {}: no valid pivot", cell.cell_name);
            }
            ok
        })
        .collect();
    if usable.is_empty() {
        return Err(GrpoError::EmptyDataset);
    }
    let mut prompts: BTreeMap<usize, Prompt> = BTreeMap::new();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut history = Vec::with_capacity(config.iterations);
    for iter in 0..config.iterations {
        let old = policy.snapshot();
        let pick = rng.random_range(0..usable.len());
        if !prompts.contains_key(&pick) {
            prompts.insert(pick, Prompt::new(usable[pick])?);
        }
        let prompt = &prompts[&pick];
        let group = sample_group(
            &old,
            prompt,
            config.group_size,
            reward,
            rng.random(),
            config.eps,
        )?;
        let mut objective = 0.0;
        for _ in 0..config.inner_steps {
            let (value, grad) = grpo_objective(
                &group,
                &policy,
                &old,
                reference,
                config.clip,
                config.kl_coef,
            )?;
            objective = value;
            let theta: Vec<f64> = policy
                .params()
                .iter()
                .zip(&grad)
                .map(|(t, g)| t + config.lr * g)
                .collect();
            policy.set_params(&theta);
        }
        let kl = policy.kl(reference, prompt)?.0;
        let mean_reward = if group.rewards.is_empty() {
            0.0
        } else {
            group.rewards.iter().sum::<f64>() / group.rewards.len() as f64
        };
        let accepted_pivot = policy
            .ranked(prompt)
            .first()
            .map(decode_pivot)
            .unwrap_or_default();
        history.push(HistoryRow {
            iter,
            mean_reward,
            objective,
            kl,
            accepted_pivot,
        });
    }
    Ok((policy, history))
}

pub fn write_history_csv<W: Write>(rows: &[HistoryRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
