// SPDX-License-Identifier: Apache-2.0

//! Boolean functions and their static CMOS realization.
//!
//! The flow for one function is truth table → minterm SOP → two-level
//! minimization → literal-division factoring → complementary CMOS cell, and
//! [`equiv_check`] closes the loop with switch-level simulation.

mod expr;
mod minimize;
mod sim;
mod synth;

pub use expr::{BoolExpr, Implicant};
pub use minimize::{factor_expr, minimize_sop, prime_implicants, table_to_sop};
pub use sim::{equiv_check, simulate_nets, switch_sim, EquivReport, LogicValue};
pub use synth::{
    default_pin_names, inverted_net, synth_cell, synth_cell_with_pins, synthesize,
    synthesize_with_pins, Synthesis, GROUND, OUTPUT_PIN, POWER,
};

use std::fmt;
use std::str::FromStr;

pub const MAX_INPUTS: u8 = 6;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum LogicError {
    #[error("trivial function: {0} is constant")]
    TrivialFunction(TruthTable),
    #[error("invalid truth table: {0}")]
    InvalidTable(String),
    #[error("expression is not a sum of products")]
    NotSop,
    #[error("unsupported expression: {0}")]
    UnsupportedExpr(String),
    #[error("pull-down expression is not the complement of the target function")]
    NotComplement,
    #[error("gate net {0} is neither a pin nor a resolvable stage output")]
    UnresolvedGate(String),
    #[error("cell has {pins} input pins but the function has {inputs} inputs")]
    PinCountMismatch { pins: usize, inputs: usize },
    #[error("cell has no single output pin")]
    NoOutput,
}

/// Truth table over `n_inputs ≤ 6` variables. Bit `i` of `bits` is the output
/// for the assignment whose binary encoding is `i`, input 0 least significant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TruthTable {
    n_inputs: u8,
    bits: u64,
}

impl TruthTable {
    pub fn new(n_inputs: u8, bits: u64) -> Result<Self, LogicError> {
        if !(1..=MAX_INPUTS).contains(&n_inputs) {
            return Err(LogicError::InvalidTable(format!(
                "{n_inputs} inputs, expected 1..={MAX_INPUTS}"
            )));
        }
        let tt = Self { n_inputs, bits };
        if bits & !tt.full_mask() != 0 {
            return Err(LogicError::InvalidTable(format!(
                "bits {bits:#x} exceed 2^{n_inputs} entries"
            )));
        }
        Ok(tt)
    }

    /// Table of an arbitrary predicate over `n_inputs` variables.
    pub fn from_fn(n_inputs: u8, f: impl Fn(u64) -> bool) -> Result<Self, LogicError> {
        let size = 1u64 << n_inputs.min(MAX_INPUTS);
        let bits = (0..size)
            .filter(|&m| f(m))
            .fold(0u64, |acc, m| acc | (1 << m));
        Self::new(n_inputs, bits)
    }

    pub fn n_inputs(&self) -> u8 {
        self.n_inputs
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn size(&self) -> u64 {
        1u64 << self.n_inputs
    }

    fn full_mask(&self) -> u64 {
        if self.n_inputs == 6 {
            u64::MAX
        } else {
            (1u64 << self.size()) - 1
        }
    }

    pub fn eval(&self, assignment: u64) -> bool {
        (self.bits >> assignment) & 1 == 1
    }

    pub fn is_trivial(&self) -> bool {
        self.bits == 0 || self.bits == self.full_mask()
    }

    pub fn complement(&self) -> Self {
        Self {
            n_inputs: self.n_inputs,
            bits: !self.bits & self.full_mask(),
        }
    }

    pub fn minterms(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.size()).filter(|&m| self.eval(m))
    }
}

impl fmt::Display for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = (self.size() as usize / 4).max(1);
        write!(
            f,
            "{}:{:0width$X}",
            self.n_inputs,
            self.bits,
            width = digits
        )
    }
}

impl FromStr for TruthTable {
    type Err = LogicError;

    /// `<n_inputs>:<hex>`, e.g. `3:E8` for 3-input majority.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || LogicError::InvalidTable(format!("{s:?}, expected <n_inputs>:<hex>"));
        let (n, hex) = s.trim().split_once(':').ok_or_else(bad)?;
        let n: u8 = n.parse().map_err(|_| bad())?;
        let hex = hex.trim_start_matches("0x").trim_start_matches("0X");
        if hex.is_empty() {
            return Err(bad());
        }
        let bits = u64::from_str_radix(hex, 16).map_err(|_| bad())?;
        Self::new(n, bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_form() {
        let maj: TruthTable = "3:E8".parse().unwrap();
        assert_eq!(maj.bits(), 0xE8);
        assert_eq!(maj.minterms().collect::<Vec<_>>(), vec![3, 5, 6, 7]);
        assert_eq!(maj.to_string(), "3:E8");
        assert_eq!("1:1".parse::<TruthTable>().unwrap().to_string(), "1:1");
        assert_eq!(
            "4:00F0".parse::<TruthTable>().unwrap().to_string(),
            "4:00F0"
        );
        assert!("3:1FF".parse::<TruthTable>().is_err());
        assert!("7:1".parse::<TruthTable>().is_err());
        assert!("3:".parse::<TruthTable>().is_err());
        assert!("E8".parse::<TruthTable>().is_err());
    }

    #[test]
    fn trivial_and_complement() {
        assert!(TruthTable::new(3, 0).unwrap().is_trivial());
        assert!(TruthTable::new(3, 0xFF).unwrap().is_trivial());
        assert!(TruthTable::new(6, u64::MAX).unwrap().is_trivial());
        let t = TruthTable::new(3, 0x96).unwrap();
        assert!(!t.is_trivial());
        assert_eq!(t.complement().bits(), 0x69);
    }
}
