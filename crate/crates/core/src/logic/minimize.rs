// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use super::{BoolExpr, Implicant, LogicError, TruthTable, MAX_INPUTS};

/// Canonical SOP: one product per on-set minterm, ascending.
pub fn table_to_sop(tt: &TruthTable) -> Result<BoolExpr, LogicError> {
    if tt.is_trivial() {
        return Err(LogicError::TrivialFunction(*tt));
    }
    let cubes: Vec<Implicant> = tt
        .minterms()
        .map(|m| Implicant::minterm(tt.n_inputs(), m))
        .collect();
    Ok(BoolExpr::from_cubes(&cubes))
}

/// Quine–McCluskey prime implicant generation over the on-set of `tt`.
pub fn prime_implicants(tt: &TruthTable) -> Vec<Implicant> {
    let mut current: BTreeSet<Implicant> = tt
        .minterms()
        .map(|m| Implicant::minterm(tt.n_inputs(), m))
        .collect();
    let mut primes = BTreeSet::new();
    while !current.is_empty() {
        let items: Vec<Implicant> = current.iter().copied().collect();
        let mut merged = vec![false; items.len()];
        let mut next = BTreeSet::new();
        for i in 0..items.len() {
            for j in i + 1..items.len() {
                let (a, b) = (items[i], items[j]);
                if a.mask != b.mask {
                    continue;
                }
                let diff = a.value ^ b.value;
                if diff.count_ones() == 1 {
                    next.insert(Implicant {
                        mask: a.mask & !diff,
                        value: a.value & !diff,
                    });
                    merged[i] = true;
                    merged[j] = true;
                }
            }
        }
        for (imp, used) in items.into_iter().zip(merged) {
            if !used {
                primes.insert(imp);
            }
        }
        current = next;
    }
    primes.into_iter().collect()
}

/// Two-level minimization: prime implicants, essential primes, then a greedy
/// cover (most uncovered minterms, then fewest literals, then lowest
/// `(mask, value)`). Output terms are ordered by their lowest covered minterm.
pub fn minimize_sop(expr: &BoolExpr) -> Result<BoolExpr, LogicError> {
    let cubes = expr.to_cubes()?;
    let width = expr.support_width().max(1);
    if width > MAX_INPUTS as usize {
        return Err(LogicError::InvalidTable(format!(
            "{width} variables, expected at most {MAX_INPUTS}"
        )));
    }
    let n = width as u8;
    let tt = TruthTable::from_fn(n, |m| cubes.iter().any(|c| c.covers(m)))?;
    if tt.bits() == 0 {
        return Ok(BoolExpr::Const(false));
    }
    if tt.is_trivial() {
        return Ok(BoolExpr::Const(true));
    }

    let primes = prime_implicants(&tt);
    let mut uncovered: BTreeSet<u64> = tt.minterms().collect();
    let mut chosen: Vec<Implicant> = Vec::new();

    for &m in &tt.minterms().collect::<Vec<_>>() {
        let covering: Vec<&Implicant> = primes.iter().filter(|p| p.covers(m)).collect();
        if let [only] = covering.as_slice() {
            if !chosen.contains(only) {
                chosen.push(**only);
            }
        }
    }
    for c in &chosen {
        uncovered.retain(|&m| !c.covers(m));
    }
    while !uncovered.is_empty() {
        let best = primes
            .iter()
            .filter(|p| !chosen.contains(p))
            .max_by(|a, b| {
                let ca = uncovered.iter().filter(|&&m| a.covers(m)).count();
                let cb = uncovered.iter().filter(|&&m| b.covers(m)).count();
                ca.cmp(&cb)
                    .then(b.literal_count().cmp(&a.literal_count()))
                    .then(b.cmp(a))
            })
            .copied()
            .expect("primes cover the on-set");
        uncovered.retain(|&m| !best.covers(m));
        chosen.push(best);
    }

    let lowest = |c: &Implicant| tt.minterms().find(|&m| c.covers(m)).unwrap_or(u64::MAX);
    chosen.sort_by_key(|c| (lowest(c), *c));
    let result = BoolExpr::from_cubes(&chosen);
    if result.literal_count() > expr.literal_count() {
        return Ok(BoolExpr::from_cubes(&cubes));
    }
    Ok(result)
}

type Lit = (usize, bool);

/// Multi-level factoring by repeated division by the most frequent literal.
/// Ties go to the lowest variable index, positive phase first.
pub fn factor_expr(expr: &BoolExpr) -> Result<BoolExpr, LogicError> {
    let cubes: Vec<Vec<Lit>> = expr
        .to_cubes()?
        .into_iter()
        .map(|c| {
            (0..64)
                .filter(|v| c.mask >> v & 1 == 1)
                .map(|v| (v, c.value >> v & 1 == 1))
                .collect()
        })
        .collect();
    Ok(factor_cubes(&cubes))
}

fn factor_cubes(cubes: &[Vec<Lit>]) -> BoolExpr {
    if cubes.is_empty() {
        return BoolExpr::Const(false);
    }
    if cubes.iter().any(Vec::is_empty) {
        return BoolExpr::Const(true);
    }
    let as_and =
        |c: &Vec<Lit>| BoolExpr::and(c.iter().map(|&(v, p)| BoolExpr::lit(v, p)).collect());
    if cubes.len() == 1 {
        return as_and(&cubes[0]);
    }

    let mut counts: Vec<(Lit, usize)> = Vec::new();
    for cube in cubes {
        for &lit in cube {
            match counts.iter_mut().find(|(l, _)| *l == lit) {
                Some((_, n)) => *n += 1,
                None => counts.push((lit, 1)),
            }
        }
    }
    // Highest count; ties: lower variable, then positive phase.
    let (best, freq) = counts
        .iter()
        .copied()
        .max_by(|(la, ca), (lb, cb)| ca.cmp(cb).then(lb.0.cmp(&la.0)).then(la.1.cmp(&lb.1)))
        .expect("non-empty cubes");
    if freq <= 1 {
        return BoolExpr::or(cubes.iter().map(as_and).collect());
    }

    let mut quotient = Vec::new();
    let mut remainder = Vec::new();
    for cube in cubes {
        if cube.contains(&best) {
            quotient.push(cube.iter().copied().filter(|&l| l != best).collect());
        } else {
            remainder.push(cube.clone());
        }
    }
    let lit = BoolExpr::lit(best.0, best.1);
    let term = match factor_cubes(&quotient) {
        BoolExpr::Const(true) => lit,
        q => BoolExpr::and(vec![lit, q]),
    };
    if remainder.is_empty() {
        term
    } else {
        BoolExpr::or(vec![term, factor_cubes(&remainder)])
    }
}
