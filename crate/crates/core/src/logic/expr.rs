// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use super::LogicError;

/// Boolean expression in negation-normal form.
///
/// Negation appears only on literals, and `And`/`Or` children are kept
/// flattened by the [`BoolExpr::and`] / [`BoolExpr::or`] constructors.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BoolExpr {
    Lit { var: usize, positive: bool },
    And(Vec<BoolExpr>),
    Or(Vec<BoolExpr>),
    Const(bool),
}

impl BoolExpr {
    pub fn lit(var: usize, positive: bool) -> Self {
        BoolExpr::Lit { var, positive }
    }

    pub fn and(children: Vec<BoolExpr>) -> Self {
        Self::nary(children, true)
    }

    pub fn or(children: Vec<BoolExpr>) -> Self {
        Self::nary(children, false)
    }

    fn nary(children: Vec<BoolExpr>, is_and: bool) -> Self {
        let mut flat = Vec::with_capacity(children.len());
        for child in children {
            match child {
                BoolExpr::And(inner) if is_and => flat.extend(inner),
                BoolExpr::Or(inner) if !is_and => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => BoolExpr::Const(is_and),
            1 => flat.pop().unwrap(),
            _ if is_and => BoolExpr::And(flat),
            _ => BoolExpr::Or(flat),
        }
    }

    pub fn eval(&self, assignment: u64) -> bool {
        match self {
            BoolExpr::Lit { var, positive } => ((assignment >> var) & 1 == 1) == *positive,
            BoolExpr::And(c) => c.iter().all(|e| e.eval(assignment)),
            BoolExpr::Or(c) => c.iter().any(|e| e.eval(assignment)),
            BoolExpr::Const(v) => *v,
        }
    }

    pub fn literal_count(&self) -> usize {
        match self {
            BoolExpr::Lit { .. } => 1,
            BoolExpr::And(c) | BoolExpr::Or(c) => c.iter().map(BoolExpr::literal_count).sum(),
            BoolExpr::Const(_) => 0,
        }
    }

    /// Number of variables referenced, i.e. the highest index plus one.
    pub fn support_width(&self) -> usize {
        match self {
            BoolExpr::Lit { var, .. } => var + 1,
            BoolExpr::And(c) | BoolExpr::Or(c) => {
                c.iter().map(BoolExpr::support_width).max().unwrap_or(0)
            }
            BoolExpr::Const(_) => 0,
        }
    }

    /// Negation pushed down to the literals (De Morgan).
    pub fn negated(&self) -> BoolExpr {
        match self {
            BoolExpr::Lit { var, positive } => BoolExpr::lit(*var, !positive),
            BoolExpr::And(c) => BoolExpr::or(c.iter().map(BoolExpr::negated).collect()),
            BoolExpr::Or(c) => BoolExpr::and(c.iter().map(BoolExpr::negated).collect()),
            BoolExpr::Const(v) => BoolExpr::Const(!v),
        }
    }

    pub fn has_const(&self) -> bool {
        match self {
            BoolExpr::Const(_) => true,
            BoolExpr::Lit { .. } => false,
            BoolExpr::And(c) | BoolExpr::Or(c) => c.iter().any(BoolExpr::has_const),
        }
    }

    /// Interpret as a sum of products. Contradictory terms (`x & !x`) are dropped.
    pub fn to_cubes(&self) -> Result<Vec<Implicant>, LogicError> {
        fn cube(term: &BoolExpr) -> Result<Option<Implicant>, LogicError> {
            let lits: &[BoolExpr] = match term {
                BoolExpr::And(c) => c,
                single @ BoolExpr::Lit { .. } => std::slice::from_ref(single),
                _ => return Err(LogicError::NotSop),
            };
            let mut imp = Implicant::default();
            for l in lits {
                let BoolExpr::Lit { var, positive } = l else {
                    return Err(LogicError::NotSop);
                };
                let bit = 1u64 << var;
                if imp.mask & bit != 0 {
                    if (imp.value & bit != 0) != *positive {
                        return Ok(None);
                    }
                    continue;
                }
                imp.mask |= bit;
                if *positive {
                    imp.value |= bit;
                }
            }
            Ok(Some(imp))
        }
        let terms: &[BoolExpr] = match self {
            BoolExpr::Or(terms) => terms,
            BoolExpr::Const(false) => &[],
            term => std::slice::from_ref(term),
        };
        let mut cubes = Vec::with_capacity(terms.len());
        for t in terms {
            if let Some(c) = cube(t)? {
                cubes.push(c);
            }
        }
        Ok(cubes)
    }

    pub fn from_cubes(cubes: &[Implicant]) -> BoolExpr {
        BoolExpr::or(cubes.iter().map(Implicant::to_expr).collect())
    }
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoolExpr::Lit { var, positive } => {
                let name = (b'a' + *var as u8) as char;
                if *positive {
                    write!(f, "{name}")
                } else {
                    write!(f, "!{name}")
                }
            }
            BoolExpr::Const(v) => write!(f, "{}", u8::from(*v)),
            BoolExpr::And(c) | BoolExpr::Or(c) => {
                let sep = if matches!(self, BoolExpr::And(_)) {
                    "&"
                } else {
                    "|"
                };
                for (i, child) in c.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    let wrap = matches!(child, BoolExpr::And(_) | BoolExpr::Or(_));
                    if wrap {
                        write!(f, "({child})")?;
                    } else {
                        write!(f, "{child}")?;
                    }
                }
                Ok(())
            }
        }
    }
}

/// A product term: `mask` selects the fixed variables, `value` their values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Implicant {
    pub mask: u64,
    pub value: u64,
}

impl Implicant {
    pub fn minterm(n_inputs: u8, m: u64) -> Self {
        let mask = if n_inputs >= 64 {
            u64::MAX
        } else {
            (1u64 << n_inputs) - 1
        };
        Self {
            mask,
            value: m & mask,
        }
    }

    pub fn covers(&self, assignment: u64) -> bool {
        assignment & self.mask == self.value
    }

    pub fn literal_count(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn to_expr(&self) -> BoolExpr {
        let lits = (0..64)
            .filter(|v| self.mask >> v & 1 == 1)
            .map(|v| BoolExpr::lit(v, self.value >> v & 1 == 1))
            .collect();
        BoolExpr::and(lits)
    }
}
