// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use super::{LogicError, TruthTable};
use crate::netlist::{CellNetlist, Device, MosType, NetKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum LogicValue {
    Zero,
    One,
    X,
}

impl LogicValue {
    pub fn from_bool(b: bool) -> Self {
        if b {
            LogicValue::One
        } else {
            LogicValue::Zero
        }
    }
}

impl fmt::Display for LogicValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LogicValue::Zero => "0",
            LogicValue::One => "1",
            LogicValue::X => "X",
        })
    }
}

/// Whether a device conducts: `Some(true/false)` when known, `None` when its
/// gate is X.
fn conducts(d: &Device, gate: LogicValue) -> Option<bool> {
    match (d.dtype, gate) {
        (_, LogicValue::X) => None,
        (MosType::Nmos, v) => Some(v == LogicValue::One),
        (MosType::Pmos, v) => Some(v == LogicValue::Zero),
    }
}

/// Switch-level value of the output pin under `assignment`, where bit `i`
/// drives the `i`-th input pin in declaration order.
///
/// Gate nets that are not pins must be outputs of other static stages; they
/// are resolved first, in dependency order. A net is 1 when a conducting path
/// reaches power and none can reach ground, 0 for the converse, X otherwise.
/// Devices gated by an X net count as possibly conducting.
pub fn switch_sim(cell: &CellNetlist, assignment: u64) -> Result<LogicValue, LogicError> {
    let outputs = cell.output_pins();
    let [out] = outputs.as_slice() else {
        return Err(LogicError::NoOutput);
    };
    let values = resolve_all(cell, assignment)?;
    Ok(stage_value(cell, out, &values))
}

/// Values of every pin and resolved stage output under `assignment`.
pub fn simulate_nets(
    cell: &CellNetlist,
    assignment: u64,
) -> Result<BTreeMap<String, LogicValue>, LogicError> {
    let mut values = resolve_all(cell, assignment)?;
    for out in cell.output_pins() {
        let v = stage_value(cell, out, &values);
        values.insert(out.to_string(), v);
    }
    Ok(values)
}

fn resolve_all(
    cell: &CellNetlist,
    assignment: u64,
) -> Result<BTreeMap<String, LogicValue>, LogicError> {
    let mut values = BTreeMap::new();
    for (i, pin) in cell.input_pins().into_iter().enumerate() {
        values.insert(
            pin.to_string(),
            LogicValue::from_bool(assignment >> i & 1 == 1),
        );
    }
    for d in &cell.devices {
        for net in [&d.gate, &d.drain, &d.source] {
            match cell.kind_of(net) {
                NetKind::Power => {
                    values.insert(net.clone(), LogicValue::One);
                }
                NetKind::Ground => {
                    values.insert(net.clone(), LogicValue::Zero);
                }
                _ => {}
            }
        }
    }

    let mut pending: Vec<&str> = cell
        .devices
        .iter()
        .map(|d| d.gate.as_str())
        .filter(|g| !values.contains_key(*g))
        .collect();
    pending.sort_unstable();
    pending.dedup();

    while !pending.is_empty() {
        let before = pending.len();
        let mut still = Vec::new();
        for net in pending {
            if component_gates(cell, net)
                .iter()
                .all(|g| values.contains_key(*g))
            {
                let v = stage_value(cell, net, &values);
                values.insert(net.to_string(), v);
            } else {
                still.push(net);
            }
        }
        if still.len() == before {
            return Err(LogicError::UnresolvedGate(still[0].to_string()));
        }
        pending = still;
    }
    Ok(values)
}

/// Gate nets of all devices channel-connected to `net` without crossing a rail.
fn component_gates<'a>(cell: &'a CellNetlist, net: &'a str) -> Vec<&'a str> {
    let mut seen: HashSet<&str> = HashSet::from([net]);
    let mut stack = vec![net];
    let mut gates = Vec::new();
    while let Some(n) = stack.pop() {
        for d in &cell.devices {
            let Some(other) = d.other_channel(n) else {
                continue;
            };
            gates.push(d.gate.as_str());
            if !cell.kind_of(other).is_rail() && seen.insert(other) {
                stack.push(other);
            }
        }
    }
    gates
}

fn stage_value(cell: &CellNetlist, net: &str, values: &BTreeMap<String, LogicValue>) -> LogicValue {
    let gate = |d: &Device| values.get(&d.gate).copied().unwrap_or(LogicValue::X);
    let reach = |rail: NetKind, optimistic: bool| -> bool {
        let mut seen: HashSet<&str> = HashSet::from([net]);
        let mut stack = vec![net];
        while let Some(n) = stack.pop() {
            for d in &cell.devices {
                let Some(other) = d.other_channel(n) else {
                    continue;
                };
                let on = match conducts(d, gate(d)) {
                    Some(b) => b,
                    None => optimistic,
                };
                if !on {
                    continue;
                }
                let kind = cell.kind_of(other);
                if kind == rail {
                    return true;
                }
                if !kind.is_rail() && seen.insert(other) {
                    stack.push(other);
                }
            }
        }
        false
    };
    let up_sure = reach(NetKind::Power, false);
    let down_sure = reach(NetKind::Ground, false);
    let up_maybe = reach(NetKind::Power, true);
    let down_maybe = reach(NetKind::Ground, true);
    match (up_sure, down_sure, up_maybe, down_maybe) {
        (true, _, _, false) => LogicValue::One,
        (_, true, false, _) => LogicValue::Zero,
        _ => LogicValue::X,
    }
}

/// Outcome of simulating a cell against a truth table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivReport {
    /// Assignments whose simulated output disagrees with the table, with the
    /// simulated value. X always counts as a failure.
    pub failing: Vec<(u64, LogicValue)>,
    pub checked: u64,
}

impl EquivReport {
    pub fn passed(&self) -> bool {
        self.failing.is_empty()
    }
}

pub fn equiv_check(cell: &CellNetlist, tt: &TruthTable) -> Result<EquivReport, LogicError> {
    let pins = cell.input_pins().len();
    if pins != tt.n_inputs() as usize {
        return Err(LogicError::PinCountMismatch {
            pins,
            inputs: tt.n_inputs() as usize,
        });
    }
    let mut failing = Vec::new();
    for m in 0..tt.size() {
        let v = switch_sim(cell, m)?;
        if v != LogicValue::from_bool(tt.eval(m)) {
            failing.push((m, v));
        }
    }
    Ok(EquivReport {
        failing,
        checked: tt.size(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_spice;

    const INV: &str =
        ".SUBCKT INV A Y VDD GND\nMP1 VDD A Y VDD PMOS\nMN1 Y A GND GND NMOS\n.ENDS\n";

    #[test]
    fn inverter_values() {
        let inv = parse_spice(INV).unwrap();
        assert_eq!(switch_sim(&inv, 0).unwrap(), LogicValue::One);
        assert_eq!(switch_sim(&inv, 1).unwrap(), LogicValue::Zero);
        assert!(equiv_check(&inv, &TruthTable::new(1, 0b01).unwrap())
            .unwrap()
            .passed());
    }

    #[test]
    fn missing_pullup_floats() {
        let text = ".SUBCKT PD A Y VDD GND\nMN1 Y A GND GND NMOS\n.ENDS\n";
        let cell = parse_spice(text).unwrap();
        assert_eq!(switch_sim(&cell, 0).unwrap(), LogicValue::X);
        assert_eq!(switch_sim(&cell, 1).unwrap(), LogicValue::Zero);
    }

    #[test]
    fn buffer_resolves_internal_stage() {
        let text = ".SUBCKT BUF A Y VDD GND
MP1 VDD A X VDD PMOS
MN1 X A GND GND NMOS
MP2 VDD X Y VDD PMOS
MN2 Y X GND GND NMOS
.ENDS
";
        let cell = parse_spice(text).unwrap();
        assert!(equiv_check(&cell, &TruthTable::new(1, 0b10).unwrap())
            .unwrap()
            .passed());
        let nets = simulate_nets(&cell, 1).unwrap();
        assert_eq!(nets["X"], LogicValue::Zero);
    }

    #[test]
    fn cyclic_gate_is_unresolved() {
        let text = ".SUBCKT LOOP A Y VDD GND
MP1 VDD Q Y VDD PMOS
MN1 Y A N1 GND NMOS
MN2 N1 Q GND GND NMOS
MP2 VDD Y Q VDD PMOS
MN3 Q Y GND GND NMOS
.ENDS
";
        let cell = parse_spice(text).unwrap();
        assert!(matches!(
            switch_sim(&cell, 0),
            Err(LogicError::UnresolvedGate(_))
        ));
    }

    #[test]
    fn pin_count_mismatch() {
        let inv = parse_spice(INV).unwrap();
        assert_eq!(
            equiv_check(&inv, &TruthTable::new(2, 1).unwrap()),
            Err(LogicError::PinCountMismatch { pins: 1, inputs: 2 })
        );
    }
}
