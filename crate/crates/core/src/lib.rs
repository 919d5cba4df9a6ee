// SPDX-License-Identifier: Apache-2.0

pub mod cli;
pub mod dataset;
pub mod grpo;
pub mod logic;
pub mod netlist;
pub mod permute;
pub mod reward;
