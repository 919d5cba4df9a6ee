// SPDX-License-Identifier: Apache-2.0

//! Group-relative policy optimization over pivot choices, and the inference
//! loop that applies a trained policy to one cell.

mod infer;
mod policy;
mod train;

pub use infer::{optimize_cell, DecodeMode, OptimizationTrace, StopReason, TraceStep};
pub use policy::{
    decode_pivot, Policy, Prompt, TokenSeq, ToySoftmaxPolicy, CHECKPOINT_FORMAT_VERSION,
    FEATURE_DIM, FEATURE_MAP_VERSION,
};
pub use train::{
    sample_group, train_policy, write_history_csv, GrpoConfig, HistoryRow, RolloutGroup,
    MAX_RETRIES,
};

use crate::permute::PermuteError;
use crate::reward::RewardError;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum GrpoError {
    #[error("cell {0} has no valid pivot")]
    NoValidPivots(String),
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("token sequence {0:?} has zero probability under the old policy")]
    ZeroOldProb(TokenSeq),
    #[error("policy puts mass where the reference policy has none")]
    SupportMismatch,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error(transparent)]
    Permute(#[from] PermuteError),
}

/// `(R_j - mean) / (popstd + eps)` over the group.
pub fn compute_advantages(rewards: &[f64], eps: f64) -> Vec<f64> {
    if rewards.is_empty() {
        return Vec::new();
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let denom = var.sqrt() + eps;
    rewards.iter().map(|r| (r - mean) / denom).collect()
}

pub fn clipped_term(ratio: f64, advantage: f64, clip: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip);
    (ratio * advantage).min(clipped * advantage)
}

/// Importance ratio of token `t` of `seq`, taken in log space.
pub fn is_ratio<P: Policy>(
    policy: &P,
    old: &P,
    prompt: &Prompt,
    seq: &TokenSeq,
    t: usize,
) -> Result<f64, GrpoError> {
    let lp_old = old.token_log_probs(prompt, seq)[t];
    if lp_old == f64::NEG_INFINITY {
        return Err(GrpoError::ZeroOldProb(seq.clone()));
    }
    let lp = policy.token_log_probs(prompt, seq)[t];
    Ok((lp - lp_old).exp())
}

pub fn kl_penalty<P: Policy>(policy: &P, reference: &P, prompt: &Prompt) -> Result<f64, GrpoError> {
    Ok(policy.kl(reference, prompt)?.0)
}

/// Objective value and its ascent gradient with respect to `policy`'s
/// parameters. The KL penalty sits inside the per-token sum.
pub fn grpo_objective<P: Policy>(
    group: &RolloutGroup,
    policy: &P,
    old: &P,
    reference: &P,
    clip: f64,
    kl_coef: f64,
) -> Result<(f64, Vec<f64>), GrpoError> {
    let dim = policy.params().len();
    let mut value = 0.0;
    let mut grad = vec![0.0; dim];
    let m = group.candidates.len();
    if m == 0 {
        return Ok((value, grad));
    }
    let (kl, kl_grad) = policy.kl(reference, &group.prompt)?;
    for (seq, &adv) in group.candidates.iter().zip(&group.advantages) {
        let lp = policy.token_log_probs(&group.prompt, seq);
        let lp_old = old.token_log_probs(&group.prompt, seq);
        let grads = policy.token_log_prob_grads(&group.prompt, seq);
        let len = lp.len().max(1) as f64;
        for t in 0..lp.len() {
            if lp_old[t] == f64::NEG_INFINITY {
                return Err(GrpoError::ZeroOldProb(seq.clone()));
            }
            let ratio = (lp[t] - lp_old[t]).exp();
            let term = clipped_term(ratio, adv, clip);
            value += (term - kl_coef * kl) / (len * m as f64);
            // The unclipped branch carries the gradient; a clipped ratio is
            // constant in θ.
            let unclipped_active = ratio * adv <= ratio.clamp(1.0 - clip, 1.0 + clip) * adv;
            for k in 0..dim {
                let mut g = -kl_coef * kl_grad[k];
                if unclipped_active {
                    g += adv * ratio * grads[t][k];
                }
                grad[k] += g / (len * m as f64);
            }
        }
    }
    Ok((value, grad))
}
