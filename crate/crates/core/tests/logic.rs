use std::collections::BTreeSet;

use cellopt::logic::{
    equiv_check, factor_expr, minimize_sop, prime_implicants, switch_sim, synth_cell, synthesize,
    synthesize_with_pins, table_to_sop, BoolExpr, Implicant, LogicError, LogicValue, TruthTable,
};
use cellopt::netlist::MosType;
use proptest::prelude::*;

/// Every cube over `n` variables, as (mask, value) with value ⊆ mask.
fn all_cubes(n: u8) -> Vec<Implicant> {
    let mut out = Vec::new();
    for mask in 0..(1u64 << n) {
        let mut value = mask;
        loop {
            out.push(Implicant { mask, value });
            if value == 0 {
                break;
            }
            value = (value - 1) & mask;
        }
    }
    out
}

/// Primes by brute force: cubes inside the on-set not strictly contained in
/// another cube inside the on-set.
fn oracle_primes(tt: &TruthTable) -> BTreeSet<Implicant> {
    let inside = |c: &Implicant| (0..tt.size()).all(|m| !c.covers(m) || tt.eval(m));
    let implicants: Vec<Implicant> = all_cubes(tt.n_inputs())
        .into_iter()
        .filter(inside)
        .collect();
    implicants
        .iter()
        .filter(|c| {
            !implicants
                .iter()
                .any(|d| d != *c && d.mask & c.mask == d.mask && c.value & d.mask == d.value)
        })
        .copied()
        .collect()
}

fn same_function(e: &BoolExpr, tt: &TruthTable) -> bool {
    (0..tt.size()).all(|m| e.eval(m) == tt.eval(m))
}

fn aoi221_table() -> TruthTable {
    TruthTable::from_fn(5, |m| {
        let b = |i: u32| m >> i & 1 == 1;
        !((b(0) && b(1)) || (b(2) && b(3)) || b(4))
    })
    .unwrap()
}

fn aoi221_pins() -> Vec<String> {
    ["A1", "A2", "B1", "B2", "C"].map(String::from).to_vec()
}

#[test]
fn and3_has_one_minterm() {
    let tt = TruthTable::new(3, 0x80).unwrap();
    let sop = table_to_sop(&tt).unwrap();
    assert_eq!(
        sop,
        BoolExpr::and(vec![
            BoolExpr::lit(0, true),
            BoolExpr::lit(1, true),
            BoolExpr::lit(2, true)
        ])
    );
}

#[test]
fn xor3_sop_has_four_terms_and_stays_four() {
    let tt = TruthTable::new(3, 0x96).unwrap();
    let sop = table_to_sop(&tt).unwrap();
    let BoolExpr::Or(terms) = &sop else {
        panic!("expected Or, got {sop}")
    };
    assert_eq!(terms.len(), 4);
    assert!(same_function(&sop, &tt));
    let min = minimize_sop(&sop).unwrap();
    assert_eq!(min.literal_count(), 12);
    assert!(same_function(&min, &tt));
}

#[test]
fn constant_tables_are_trivial() {
    for bits in [0x00, 0xFF] {
        assert!(matches!(
            table_to_sop(&TruthTable::new(3, bits).unwrap()),
            Err(LogicError::TrivialFunction(_))
        ));
    }
}

#[test]
fn or3_minimizes_to_three_literals() {
    let tt = TruthTable::new(3, 0xFE).unwrap();
    let min = minimize_sop(&table_to_sop(&tt).unwrap()).unwrap();
    assert_eq!(min.literal_count(), 3);
    assert!(same_function(&min, &tt));
}

#[test]
fn factoring_pulls_common_literal() {
    let (a, b, c, d) = (
        BoolExpr::lit(0, true),
        BoolExpr::lit(1, true),
        BoolExpr::lit(2, true),
        BoolExpr::lit(3, true),
    );
    let sop = BoolExpr::or(vec![
        BoolExpr::and(vec![a.clone(), b.clone()]),
        BoolExpr::and(vec![a.clone(), c.clone()]),
        d.clone(),
    ]);
    let f = factor_expr(&sop).unwrap();
    assert_eq!(f.literal_count(), 4);
    for m in 0..16 {
        assert_eq!(f.eval(m), sop.eval(m));
    }
    assert_eq!(factor_expr(&a).unwrap(), a);
}

#[test]
fn aoi221_is_ten_transistors_without_inverters() {
    let syn = synthesize_with_pins("AOI221_X1", &aoi221_table(), &aoi221_pins()).unwrap();
    assert_eq!(syn.cell.devices.len(), 10);
    assert_eq!(syn.cell.count_of(MosType::Pmos), 5);
    assert!(equiv_check(&syn.cell, &aoi221_table()).unwrap().passed());
    // A1 = A2 = 1, others 0.
    assert_eq!(switch_sim(&syn.cell, 0b00011).unwrap(), LogicValue::Zero);
}

#[test]
fn miswired_gate_fails_equivalence() {
    let mut cell = synthesize_with_pins("AOI221_X1", &aoi221_table(), &aoi221_pins())
        .unwrap()
        .cell;
    let d = cell
        .devices
        .iter_mut()
        .find(|d| d.dtype == MosType::Nmos && d.gate == "A1")
        .unwrap();
    d.gate = "B1".into();
    let report = equiv_check(&cell, &aoi221_table()).unwrap();
    assert!(!report.passed());
    assert!(!report.failing.is_empty());
}

#[test]
fn missing_pull_up_floats() {
    let tt = TruthTable::new(1, 0b01).unwrap();
    let mut cell = synthesize("INV", &tt).unwrap().cell;
    cell.devices.retain(|d| d.dtype == MosType::Nmos);
    assert_eq!(switch_sim(&cell, 0).unwrap(), LogicValue::X);
    assert_eq!(switch_sim(&cell, 1).unwrap(), LogicValue::Zero);
}

#[test]
fn xor2_needs_inverters() {
    let tt = TruthTable::new(2, 0b0110).unwrap();
    let cell = synthesize("XOR2", &tt).unwrap().cell;
    assert!(cell.devices.len() > 4);
    assert!(equiv_check(&cell, &tt).unwrap().passed());
}

#[test]
fn synth_rejects_non_complement() {
    let tt = TruthTable::new(1, 0b01).unwrap();
    assert!(matches!(
        synth_cell("BAD", &BoolExpr::lit(0, false), &tt),
        Err(LogicError::NotComplement)
    ));
    assert!(matches!(
        synth_cell("BAD", &BoolExpr::Const(true), &tt),
        Err(LogicError::UnsupportedExpr(_))
    ));
}

#[test]
fn table_text_form() {
    let tt: TruthTable = "3:E8".parse().unwrap();
    assert_eq!(tt.bits(), 0xE8);
    assert_eq!(tt.to_string(), "3:E8");
    assert!("3:1FF".parse::<TruthTable>().is_err());
    assert!("7:00".parse::<TruthTable>().is_err());
    assert!("E8".parse::<TruthTable>().is_err());
}

/// Transistor count follows from the factored pull-down and the inverted
/// inputs it uses.
fn expected_devices(pulldown: &BoolExpr) -> usize {
    fn negs(e: &BoolExpr, out: &mut BTreeSet<usize>) {
        match e {
            BoolExpr::Lit { var, positive } if !positive => {
                out.insert(*var);
            }
            BoolExpr::And(c) | BoolExpr::Or(c) => c.iter().for_each(|x| negs(x, out)),
            _ => {}
        }
    }
    let mut inv = BTreeSet::new();
    negs(pulldown, &mut inv);
    2 * pulldown.literal_count() + 2 * inv.len()
}

#[test]
fn all_three_input_functions_synthesize_and_verify() {
    let mut done = 0;
    for bits in 1u64..255 {
        let tt = TruthTable::new(3, bits).unwrap();
        let syn = synthesize(&format!("F{bits:02X}"), &tt).unwrap();
        assert!(equiv_check(&syn.cell, &tt).unwrap().passed(), "{tt}");
        assert_eq!(syn.cell.devices.len(), expected_devices(&syn.pulldown));
        assert_eq!(
            syn.cell.count_of(MosType::Pmos),
            syn.cell.count_of(MosType::Nmos)
        );
        done += 1;
    }
    assert_eq!(done, 254);
}

fn table(max_n: u8) -> impl Strategy<Value = TruthTable> {
    (1..=max_n).prop_flat_map(|n| {
        let size = 1u32 << n;
        let top = if size == 64 {
            u64::MAX
        } else {
            (1u64 << size) - 1
        };
        (1..top).prop_map(move |bits| TruthTable::new(n, bits).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn primes_match_brute_force(tt in table(4)) {
        let got: BTreeSet<Implicant> = prime_implicants(&tt).into_iter().collect();
        prop_assert_eq!(got, oracle_primes(&tt));
    }

    #[test]
    fn minimize_and_factor_preserve_and_shrink(tt in table(6)) {
        let sop = table_to_sop(&tt).unwrap();
        prop_assert!(same_function(&sop, &tt));
        let min = minimize_sop(&sop).unwrap();
        prop_assert!(same_function(&min, &tt));
        prop_assert!(min.literal_count() <= sop.literal_count());
        let fac = factor_expr(&min).unwrap();
        prop_assert!(same_function(&fac, &tt));
        prop_assert!(fac.literal_count() <= min.literal_count());
    }

    #[test]
    fn synthesized_cells_never_float_or_fight(tt in table(5)) {
        let syn = synthesize("RND", &tt).unwrap();
        for m in 0..tt.size() {
            let v = switch_sim(&syn.cell, m).unwrap();
            prop_assert_eq!(v, LogicValue::from_bool(tt.eval(m)));
        }
    }

    #[test]
    fn minimized_cover_uses_only_primes(tt in table(5)) {
        let primes: BTreeSet<Implicant> = prime_implicants(&tt).into_iter().collect();
        let min = minimize_sop(&table_to_sop(&tt).unwrap()).unwrap();
        for cube in min.to_cubes().unwrap() {
            prop_assert!(primes.contains(&cube), "{:?} is not prime", cube);
        }
    }
}
