// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use super::{factor_expr, minimize_sop, table_to_sop, BoolExpr, LogicError, TruthTable};
use crate::netlist::{CellNetlist, Device, MosType, NetKind, NetRef};

pub const OUTPUT_PIN: &str = "Y";
pub const POWER: &str = "VDD";
pub const GROUND: &str = "GND";

/// `A`, `B`, `C`, ... for variable 0, 1, 2, ...
pub fn default_pin_names(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| ((b'A' + i as u8) as char).to_string())
        .collect()
}

/// Net driven by the input inverter of `pin`.
pub fn inverted_net(pin: &str) -> String {
    format!("{pin}_N")
}

/// Intermediate results of [`synthesize`].
#[derive(Clone, Debug)]
pub struct Synthesis {
    pub table: TruthTable,
    /// Minimized SOP of the function itself.
    pub sop: BoolExpr,
    /// Factored form of the complement; realized by the pull-down network.
    pub pulldown: BoolExpr,
    pub cell: CellNetlist,
}

/// Full flow for one function: the complement is expanded into minterms,
/// minimized, factored, and realized as a single inverting stage.
pub fn synthesize(name: &str, tt: &TruthTable) -> Result<Synthesis, LogicError> {
    let pins = default_pin_names(tt.n_inputs() as usize);
    synthesize_with_pins(name, tt, &pins)
}

pub fn synthesize_with_pins(
    name: &str,
    tt: &TruthTable,
    pins: &[String],
) -> Result<Synthesis, LogicError> {
    let sop = minimize_sop(&table_to_sop(tt)?)?;
    let pulldown = factor_expr(&minimize_sop(&table_to_sop(&tt.complement())?)?)?;
    let cell = synth_cell_with_pins(name, &pulldown, tt, pins)?;
    Ok(Synthesis {
        table: *tt,
        sop,
        pulldown,
        cell,
    })
}

/// Static CMOS cell computing `tt` as `Y = !pulldown`, with pins `A`, `B`, ...
pub fn synth_cell(
    name: &str,
    pulldown: &BoolExpr,
    tt: &TruthTable,
) -> Result<CellNetlist, LogicError> {
    let pins = default_pin_names(tt.n_inputs() as usize);
    synth_cell_with_pins(name, pulldown, tt, &pins)
}

/// Build the cell for `Y = !pulldown`.
///
/// The NMOS network realizes `pulldown` between Y and GND (And in series, Or
/// in parallel); the PMOS network is its dual between VDD and Y. Negative
/// literals gate through one shared input inverter per variable. Device and
/// net naming follow construction order: inverters, then pull-up, then
/// pull-down; internal nets are `N1`, `N2`, ...
pub fn synth_cell_with_pins(
    name: &str,
    pulldown: &BoolExpr,
    tt: &TruthTable,
    pins: &[String],
) -> Result<CellNetlist, LogicError> {
    if pulldown.has_const() {
        return Err(LogicError::UnsupportedExpr(pulldown.to_string()));
    }
    let n = tt.n_inputs() as usize;
    if pins.len() != n || pulldown.support_width() > n {
        return Err(LogicError::UnsupportedExpr(format!(
            "{} references more variables than the {n}-input table",
            pulldown
        )));
    }
    if (0..tt.size()).any(|m| pulldown.eval(m) == tt.eval(m)) {
        return Err(LogicError::NotComplement);
    }

    let mut inverted = BTreeSet::new();
    collect_negative(pulldown, &mut inverted);

    let mut b = Builder {
        pins,
        devices: Vec::new(),
        n_pmos: 0,
        n_nmos: 0,
        n_nets: 0,
    };
    for &var in &inverted {
        let pin = &pins[var];
        let out = inverted_net(pin);
        b.device(MosType::Pmos, POWER, pin, &out);
        b.device(MosType::Nmos, &out, pin, GROUND);
    }
    b.network(&pulldown.negated(), MosType::Pmos, POWER, OUTPUT_PIN);
    b.network(pulldown, MosType::Nmos, OUTPUT_PIN, GROUND);

    let mut cell_pins: Vec<NetRef> = pins
        .iter()
        .map(|p| NetRef::new(p.clone(), NetKind::InputPin))
        .collect();
    cell_pins.push(NetRef::new(OUTPUT_PIN, NetKind::OutputPin));
    cell_pins.push(NetRef::new(POWER, NetKind::Power));
    cell_pins.push(NetRef::new(GROUND, NetKind::Ground));
    Ok(CellNetlist {
        cell_name: name.to_uppercase(),
        pins: cell_pins,
        devices: b.devices,
    })
}

fn collect_negative(e: &BoolExpr, out: &mut BTreeSet<usize>) {
    match e {
        BoolExpr::Lit { var, positive } if !positive => {
            out.insert(*var);
        }
        BoolExpr::And(c) | BoolExpr::Or(c) => c.iter().for_each(|x| collect_negative(x, out)),
        _ => {}
    }
}

struct Builder<'a> {
    pins: &'a [String],
    devices: Vec<Device>,
    n_pmos: usize,
    n_nmos: usize,
    n_nets: usize,
}

impl Builder<'_> {
    fn device(&mut self, dtype: MosType, drain: &str, gate: &str, source: &str) {
        let name = match dtype {
            MosType::Pmos => {
                self.n_pmos += 1;
                format!("MP{}", self.n_pmos)
            }
            MosType::Nmos => {
                self.n_nmos += 1;
                format!("MN{}", self.n_nmos)
            }
        };
        self.devices
            .push(Device::new(name, dtype, drain, gate, source));
    }

    fn fresh_net(&mut self) -> String {
        self.n_nets += 1;
        format!("N{}", self.n_nets)
    }

    /// Conduction network for `expr` between `top` and `bottom`. For PMOS the
    /// caller passes the De Morgan dual so gate phases line up: a PMOS with
    /// gate `x` conducts when `x` is 0, i.e. realizes literal `!x`.
    fn network(&mut self, expr: &BoolExpr, dtype: MosType, top: &str, bottom: &str) {
        match expr {
            BoolExpr::Lit { var, positive } => {
                // NMOS: literal drives the gate directly. PMOS: the dual
                // literal `!x` is realized by gate `x`.
                let direct = match dtype {
                    MosType::Nmos => *positive,
                    MosType::Pmos => !*positive,
                };
                let pin = &self.pins[*var];
                let gate = if direct {
                    pin.clone()
                } else {
                    inverted_net(pin)
                };
                self.device(dtype, top, &gate, bottom);
            }
            BoolExpr::And(children) => {
                let mut upper = top.to_string();
                for (i, child) in children.iter().enumerate() {
                    let lower = if i + 1 == children.len() {
                        bottom.to_string()
                    } else {
                        self.fresh_net()
                    };
                    self.network(child, dtype, &upper, &lower);
                    upper = lower;
                }
            }
            BoolExpr::Or(children) => {
                for child in children {
                    self.network(child, dtype, top, bottom);
                }
            }
            BoolExpr::Const(_) => unreachable!("rejected before construction"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::equiv_check;
    use crate::netlist::{normalize_orientation, serialize_spice, validate_cell};

    #[test]
    fn inverter_from_single_literal() {
        let tt = TruthTable::new(1, 0b01).unwrap();
        let cell = synth_cell("inv", &BoolExpr::lit(0, true), &tt).unwrap();
        assert_eq!(
            serialize_spice(&cell),
            ".SUBCKT INV A Y VDD GND\nMP1 VDD A Y VDD PMOS\nMN1 Y A GND GND NMOS\n.ENDS\n"
        );
        assert!(equiv_check(&cell, &tt).unwrap().passed());
    }

    #[test]
    fn aoi221_has_ten_transistors_and_no_inverters() {
        let pins: Vec<String> = ["A1", "A2", "B1", "B2", "C"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let tt = TruthTable::from_fn(5, |m| {
            let v = |i: u32| m >> i & 1 == 1;
            !((v(0) && v(1)) || (v(2) && v(3)) || v(4))
        })
        .unwrap();
        let syn = synthesize_with_pins("AOI221_X1", &tt, &pins).unwrap();
        assert_eq!(syn.cell.devices.len(), 10);
        assert_eq!(syn.cell.count_of(MosType::Pmos), 5);
        assert!(syn.cell.devices.iter().all(|d| !d.gate.ends_with("_N")));
        assert!(validate_cell(&syn.cell).is_ok());
        assert_eq!(normalize_orientation(&syn.cell).unwrap(), syn.cell);
        assert!(equiv_check(&syn.cell, &tt).unwrap().passed());
    }

    #[test]
    fn xor2_needs_input_inverters() {
        let tt = TruthTable::new(2, 0b0110).unwrap();
        let syn = synthesize("xor2", &tt).unwrap();
        assert!(syn.cell.devices.len() > 4);
        assert!(syn.cell.devices.iter().any(|d| d.gate.ends_with("_N")));
        assert!(equiv_check(&syn.cell, &tt).unwrap().passed());
    }

    #[test]
    fn rejects_constants_and_wrong_polarity() {
        let tt = TruthTable::new(1, 0b01).unwrap();
        assert!(matches!(
            synth_cell("x", &BoolExpr::Const(true), &tt),
            Err(LogicError::UnsupportedExpr(_))
        ));
        assert_eq!(
            synth_cell("x", &BoolExpr::lit(0, false), &tt),
            Err(LogicError::NotComplement)
        );
    }

    #[test]
    fn transistor_count_formula_holds_for_all_3_input_functions() {
        for bits in 1..255u64 {
            let tt = TruthTable::new(3, bits).unwrap();
            let syn = synthesize("f", &tt).unwrap();
            let mut inv = BTreeSet::new();
            collect_negative(&syn.pulldown, &mut inv);
            assert_eq!(
                syn.cell.devices.len(),
                2 * syn.pulldown.literal_count() + 2 * inv.len()
            );
            assert_eq!(
                syn.cell.count_of(MosType::Pmos),
                syn.cell.count_of(MosType::Nmos)
            );
        }
    }
}
