// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::netlist::{CellNetlist, Device, NetKind};

/// Upper bound on labelings tried when refinement leaves tied internal nets.
/// Past it, remaining ties fall back to net-name order.
const MAX_LABELINGS: usize = 40_320;

/// 64-bit structural digest, invariant under device order, internal-net
/// names and drain/source orientation. Pins, device types, gate
/// connectivity and sizes all contribute.
pub fn canonical_hash(cell: &CellNetlist) -> u64 {
    let form = canonical_form(cell);
    let digest = Sha256::digest(form.as_bytes());
    u64::from_be_bytes(digest[..8].try_into().expect("32-byte digest"))
}

/// Text whose equality defines structural equality.
pub fn canonical_form(cell: &CellNetlist) -> String {
    let internal: Vec<String> = cell
        .nets()
        .into_iter()
        .filter(|n| cell.kind_of(n) == NetKind::Internal)
        .collect();
    let fixed = |net: &str| -> Option<String> {
        match cell.kind_of(net) {
            NetKind::Power => Some("^VDD".into()),
            NetKind::Ground => Some("^GND".into()),
            NetKind::Internal => None,
            _ => Some(format!("={net}")),
        }
    };

    // Color refinement over internal nets.
    let mut color: BTreeMap<&str, usize> = internal.iter().map(|n| (n.as_str(), 0)).collect();
    let label = |net: &str, color: &BTreeMap<&str, usize>| {
        fixed(net).unwrap_or_else(|| format!("#{}", color[net]))
    };
    loop {
        let mut sigs: BTreeMap<&str, String> = BTreeMap::new();
        for n in &internal {
            let mut parts: Vec<String> = Vec::new();
            for d in &cell.devices {
                if d.gate == *n {
                    let mut ch = [label(&d.drain, &color), label(&d.source, &color)];
                    ch.sort();
                    parts.push(format!("g{}:{}:{}", d.dtype, ch[0], ch[1]));
                }
                if let Some(other) = d.other_channel(n) {
                    parts.push(format!(
                        "c{}:{}:{}",
                        d.dtype,
                        label(&d.gate, &color),
                        label(other, &color)
                    ));
                }
            }
            parts.sort();
            sigs.insert(n, format!("{}|{}", color[n.as_str()], parts.join(",")));
        }
        let mut distinct: Vec<&String> = sigs.values().collect();
        distinct.sort();
        distinct.dedup();
        let next: BTreeMap<&str, usize> = sigs
            .iter()
            .map(|(n, s)| (*n, distinct.binary_search(&s).expect("present")))
            .collect();
        let classes = |c: &BTreeMap<&str, usize>| {
            let mut v: Vec<usize> = c.values().copied().collect();
            v.sort();
            v.dedup();
            v.len()
        };
        let stable = classes(&next) == classes(&color);
        color = next;
        if stable {
            break;
        }
    }

    // Tie classes in color order; members in name order.
    let mut classes: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    for (n, c) in &color {
        classes.entry(*c).or_default().push(n);
    }
    let class_list: Vec<Vec<&str>> = classes.into_values().collect();
    let mut budget = 1usize;
    let mut permute = Vec::new();
    for class in &class_list {
        let f: usize = (1..=class.len()).product();
        let exhaustive = budget.saturating_mul(f) <= MAX_LABELINGS;
        if exhaustive {
            budget *= f;
        }
        permute.push(exhaustive);
    }

    let mut best: Option<String> = None;
    let mut orders: Vec<Vec<&str>> = class_list.clone();
    loop {
        let mut names: BTreeMap<&str, String> = BTreeMap::new();
        for n in orders.iter().flatten() {
            let id = names.len();
            names.insert(n, format!("#{id}"));
        }
        let form = render(cell, &|net: &str| {
            fixed(net).unwrap_or_else(|| names[net].clone())
        });
        if best.as_ref().is_none_or(|b| form < *b) {
            best = Some(form);
        }
        if !advance(&mut orders, &permute) {
            break;
        }
    }
    best.unwrap_or_default()
}

fn render(cell: &CellNetlist, name: &dyn Fn(&str) -> String) -> String {
    let mut pins: Vec<String> = cell
        .pins
        .iter()
        .map(|p| format!("{:?}:{}", p.kind, name(&p.name)))
        .collect();
    pins.sort();
    let mut devices: Vec<String> = cell.devices.iter().map(|d| device_tuple(d, name)).collect();
    devices.sort();
    format!("{}\n{}", pins.join(" "), devices.join("\n"))
}

fn device_tuple(d: &Device, name: &dyn Fn(&str) -> String) -> String {
    let mut ch = [name(&d.drain), name(&d.source)];
    ch.sort();
    format!(
        "{} {} {} {} {} {:?} {:?}",
        d.dtype,
        name(&d.gate),
        ch[0],
        ch[1],
        name(&d.bulk),
        d.width_nm,
        d.length_nm
    )
}

/// Next labeling: lexicographic permutation step over the permutable
/// classes, odometer style. Returns false after the last one.
fn advance(orders: &mut [Vec<&str>], permute: &[bool]) -> bool {
    for (order, &on) in orders.iter_mut().zip(permute).rev() {
        if !on || order.len() < 2 {
            continue;
        }
        if next_permutation(order) {
            return true;
        }
        // Wrapped around to sorted order; carry into the previous class.
    }
    false
}

fn next_permutation<T: Ord>(v: &mut [T]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        v.reverse();
        return false;
    };
    let j = (i..v.len())
        .rev()
        .find(|&j| v[j] > v[i - 1])
        .expect("pivot exists");
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_spice;

    const NAND3: &str = ".SUBCKT NAND3 A B C Y VDD GND
MP1 VDD A Y VDD PMOS
MP2 VDD B Y VDD PMOS
MP3 VDD C Y VDD PMOS
MN1 Y A N1 GND NMOS
MN2 N1 B N2 GND NMOS
MN3 N2 C GND GND NMOS
.ENDS
";

    #[test]
    fn invariant_under_reorder_rename_and_flip() {
        let cell = parse_spice(NAND3).unwrap();
        let h = canonical_hash(&cell);

        let mut shuffled = cell.clone();
        shuffled.devices.reverse();
        assert_eq!(canonical_hash(&shuffled), h);

        let renamed = parse_spice(
            &NAND3
                .replace("N1", "QQ")
                .replace("N2", "N1")
                .replace("QQ", "N2"),
        )
        .unwrap();
        assert_eq!(canonical_hash(&renamed), h);

        let mut flipped = cell.clone();
        let d = &mut flipped.devices[4];
        std::mem::swap(&mut d.drain, &mut d.source);
        assert_eq!(canonical_hash(&flipped), h);
    }

    #[test]
    fn distinguishes_structure() {
        let cell = parse_spice(NAND3).unwrap();
        let reordered = parse_spice(
            &NAND3
                .replace("MN1 Y A N1", "MN1 Y B N1")
                .replace("MN2 N1 B N2", "MN2 N1 A N2"),
        )
        .unwrap();
        assert_ne!(canonical_hash(&cell), canonical_hash(&reordered));
    }

    #[test]
    fn permutation_stepper_visits_all_orders() {
        let mut v = vec![1, 2, 3];
        let mut n = 1;
        while next_permutation(&mut v) {
            n += 1;
        }
        assert_eq!(n, 6);
        assert_eq!(v, vec![1, 2, 3]);
    }
}
