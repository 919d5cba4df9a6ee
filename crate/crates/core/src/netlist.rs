// SPDX-License-Identifier: Apache-2.0

//! Transistor-level cell netlists in a small SPICE subset.
//!
//! Grammar accepted by [`parse_spice`]:
//!
//! ```text
//! .SUBCKT <cell_name> <pin>+
//! M<name> <drain> <gate> <source> <bulk> <PMOS|NMOS> [W=<int>n] [L=<int>n]
//! .ENDS
//! ```
//!
//! Lines starting with `*` are comments, blank lines are ignored and a line
//! starting with `+` continues the previous one. Identifiers are upper-cased.
//!
//! Orientation convention used throughout the crate: a device's drain is its
//! "up" terminal (closer to VDD in the pull-up network, closer to the stage
//! output in the pull-down network) and its source is the "down" terminal.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum NetlistError {
    #[error("syntax error on line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("duplicate device name {0}")]
    DuplicateDevice(String),
    #[error("cell has no {0} net")]
    MissingRail(&'static str),
    #[error("device {0} is unreachable from both its rail and the stage output")]
    DisconnectedNetwork(String),
}

fn syntax(line: usize, message: impl Into<String>) -> NetlistError {
    NetlistError::Syntax {
        line,
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NetKind {
    Power,
    Ground,
    InputPin,
    OutputPin,
    Internal,
}

impl NetKind {
    pub const ALL: [NetKind; 5] = [
        NetKind::Power,
        NetKind::Ground,
        NetKind::InputPin,
        NetKind::OutputPin,
        NetKind::Internal,
    ];

    /// Stable small-integer id, used as the node feature of the reward model.
    pub fn id(self) -> usize {
        match self {
            NetKind::Power => 0,
            NetKind::Ground => 1,
            NetKind::InputPin => 2,
            NetKind::OutputPin => 3,
            NetKind::Internal => 4,
        }
    }

    pub fn is_rail(self) -> bool {
        matches!(self, NetKind::Power | NetKind::Ground)
    }
}

/// Kind implied by a reserved net name, if any.
pub fn rail_kind(name: &str) -> Option<NetKind> {
    match name {
        "VDD" | "VCC" => Some(NetKind::Power),
        "VSS" | "GND" | "0" => Some(NetKind::Ground),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NetRef {
    pub name: String,
    pub kind: NetKind,
}

impl NetRef {
    pub fn new(name: impl Into<String>, kind: NetKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MosType {
    Pmos,
    Nmos,
}

impl MosType {
    pub fn id(self) -> usize {
        match self {
            MosType::Pmos => 0,
            MosType::Nmos => 1,
        }
    }
}

impl fmt::Display for MosType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MosType::Pmos => "PMOS",
            MosType::Nmos => "NMOS",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Device {
    pub name: String,
    pub dtype: MosType,
    pub drain: String,
    pub gate: String,
    pub source: String,
    pub bulk: String,
    pub width_nm: Option<u32>,
    pub length_nm: Option<u32>,
}

impl Device {
    /// A device with the bulk tied to the conventional rail for its type.
    pub fn new(
        name: impl Into<String>,
        dtype: MosType,
        drain: impl Into<String>,
        gate: impl Into<String>,
        source: impl Into<String>,
    ) -> Self {
        let bulk = match dtype {
            MosType::Pmos => "VDD",
            MosType::Nmos => "GND",
        };
        Self {
            name: name.into(),
            dtype,
            drain: drain.into(),
            gate: gate.into(),
            source: source.into(),
            bulk: bulk.to_string(),
            width_nm: None,
            length_nm: None,
        }
    }

    pub fn touches_channel(&self, net: &str) -> bool {
        self.drain == net || self.source == net
    }

    /// The channel terminal opposite `net`, if `net` is one of them.
    pub fn other_channel(&self, net: &str) -> Option<&str> {
        if self.drain == net {
            Some(&self.source)
        } else if self.source == net {
            Some(&self.drain)
        } else {
            None
        }
    }

    fn flipped(&self) -> Device {
        let mut d = self.clone();
        std::mem::swap(&mut d.drain, &mut d.source);
        d
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CellNetlist {
    pub cell_name: String,
    pub pins: Vec<NetRef>,
    pub devices: Vec<Device>,
}

impl CellNetlist {
    pub fn kind_of(&self, net: &str) -> NetKind {
        if let Some(pin) = self.pins.iter().find(|p| p.name == net) {
            return pin.kind;
        }
        rail_kind(net).unwrap_or(NetKind::Internal)
    }

    /// All nets on device terminals and the pin line, sorted by name.
    pub fn nets(&self) -> BTreeSet<String> {
        let mut nets: BTreeSet<String> = self.pins.iter().map(|p| p.name.clone()).collect();
        for d in &self.devices {
            nets.insert(d.drain.clone());
            nets.insert(d.gate.clone());
            nets.insert(d.source.clone());
            nets.insert(d.bulk.clone());
        }
        nets
    }

    pub fn power_net(&self) -> Option<String> {
        self.nets()
            .into_iter()
            .find(|n| self.kind_of(n) == NetKind::Power)
    }

    pub fn ground_net(&self) -> Option<String> {
        self.nets()
            .into_iter()
            .find(|n| self.kind_of(n) == NetKind::Ground)
    }

    pub fn input_pins(&self) -> Vec<&str> {
        self.pins
            .iter()
            .filter(|p| p.kind == NetKind::InputPin)
            .map(|p| p.name.as_str())
            .collect()
    }

    pub fn output_pins(&self) -> Vec<&str> {
        self.pins
            .iter()
            .filter(|p| p.kind == NetKind::OutputPin)
            .map(|p| p.name.as_str())
            .collect()
    }

    pub fn count_of(&self, dtype: MosType) -> usize {
        self.devices.iter().filter(|d| d.dtype == dtype).count()
    }

    /// Non-rail nets driven by both device types, plus every output pin.
    /// These are the outputs of the cell's static CMOS stages.
    pub fn stage_outputs(&self) -> BTreeSet<String> {
        let mut p = HashSet::new();
        let mut n = HashSet::new();
        for d in &self.devices {
            let set = match d.dtype {
                MosType::Pmos => &mut p,
                MosType::Nmos => &mut n,
            };
            set.insert(d.drain.as_str());
            set.insert(d.source.as_str());
        }
        let mut out: BTreeSet<String> = p
            .intersection(&n)
            .filter(|net| !self.kind_of(net).is_rail())
            .map(|s| s.to_string())
            .collect();
        out.extend(self.output_pins().into_iter().map(str::to_string));
        out
    }
}

impl fmt::Display for CellNetlist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_spice(self))
    }
}

/// Parse a single `.SUBCKT` block.
pub fn parse_spice(text: &str) -> Result<CellNetlist, NetlistError> {
    // Join `+` continuations into logical lines, remembering where each began.
    let mut logical: Vec<(usize, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('*') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('+') {
            match logical.last_mut() {
                Some((_, prev)) => {
                    prev.push(' ');
                    prev.push_str(rest);
                }
                None => return Err(syntax(lineno, "continuation line with nothing to continue")),
            }
            continue;
        }
        logical.push((lineno, line.to_string()));
    }

    let mut header: Option<(String, Vec<String>)> = None;
    let mut devices: Vec<Device> = Vec::new();
    let mut seen = HashSet::new();
    let mut ended = false;
    let mut last_line = 0;

    for (lineno, line) in &logical {
        let lineno = *lineno;
        last_line = lineno;
        let upper = line.to_uppercase();
        let tokens: Vec<&str> = upper.split_whitespace().collect();
        let first = tokens[0];
        if ended {
            if first == ".END" && tokens.len() == 1 {
                continue;
            }
            return Err(syntax(lineno, "content after .ENDS"));
        }
        match first {
            ".SUBCKT" => {
                if header.is_some() {
                    return Err(syntax(lineno, "nested or repeated .SUBCKT"));
                }
                if tokens.len() < 3 {
                    return Err(syntax(lineno, ".SUBCKT needs a name and at least one pin"));
                }
                let pins: Vec<String> = tokens[2..].iter().map(|s| s.to_string()).collect();
                let mut uniq = HashSet::new();
                for p in &pins {
                    if !uniq.insert(p) {
                        return Err(syntax(lineno, format!("pin {p} listed twice")));
                    }
                }
                header = Some((tokens[1].to_string(), pins));
            }
            ".ENDS" => {
                if header.is_none() {
                    return Err(syntax(lineno, ".ENDS without .SUBCKT"));
                }
                if tokens.len() > 2 {
                    return Err(syntax(lineno, "unexpected tokens after .ENDS"));
                }
                if devices.is_empty() {
                    return Err(syntax(lineno, "subcircuit has no devices"));
                }
                ended = true;
            }
            _ if first.starts_with('M') => {
                if header.is_none() {
                    return Err(syntax(lineno, "device outside .SUBCKT"));
                }
                let device = parse_device(lineno, &tokens)?;
                if !seen.insert(device.name.clone()) {
                    return Err(NetlistError::DuplicateDevice(device.name));
                }
                devices.push(device);
            }
            _ => return Err(syntax(lineno, format!("unsupported statement {first}"))),
        }
    }

    let Some((cell_name, pin_names)) = header else {
        return Err(syntax(last_line.max(1), "missing .SUBCKT"));
    };
    if !ended {
        return Err(syntax(last_line, "missing .ENDS"));
    }

    let mut channel_nets = HashSet::new();
    for d in &devices {
        channel_nets.insert(d.drain.as_str());
        channel_nets.insert(d.source.as_str());
    }
    let pins = pin_names
        .into_iter()
        .map(|name| {
            let kind = rail_kind(&name).unwrap_or(if channel_nets.contains(name.as_str()) {
                NetKind::OutputPin
            } else {
                NetKind::InputPin
            });
            NetRef { name, kind }
        })
        .collect();
    let cell = CellNetlist {
        cell_name,
        pins,
        devices,
    };

    let mut power = BTreeSet::new();
    let mut ground = BTreeSet::new();
    for net in cell.nets() {
        match rail_kind(&net) {
            Some(NetKind::Power) => {
                power.insert(net);
            }
            Some(NetKind::Ground) => {
                ground.insert(net);
            }
            _ => {}
        }
    }
    if power.len() > 1 || ground.len() > 1 {
        return Err(syntax(last_line, "more than one net of the same rail kind"));
    }
    if power.is_empty() {
        return Err(NetlistError::MissingRail("power"));
    }
    if ground.is_empty() {
        return Err(NetlistError::MissingRail("ground"));
    }
    Ok(cell)
}

fn parse_device(lineno: usize, tokens: &[&str]) -> Result<Device, NetlistError> {
    if tokens.len() < 6 {
        return Err(syntax(
            lineno,
            "device line needs drain, gate, source, bulk and model",
        ));
    }
    let dtype = match tokens[5] {
        "PMOS" => MosType::Pmos,
        "NMOS" => MosType::Nmos,
        other => return Err(syntax(lineno, format!("unknown model {other}"))),
    };
    let mut device = Device {
        name: tokens[0].to_string(),
        dtype,
        drain: tokens[1].to_string(),
        gate: tokens[2].to_string(),
        source: tokens[3].to_string(),
        bulk: tokens[4].to_string(),
        width_nm: None,
        length_nm: None,
    };
    if device.drain == device.source {
        return Err(syntax(lineno, "drain and source are the same net"));
    }
    for param in &tokens[6..] {
        let (key, value) = param
            .split_once('=')
            .ok_or_else(|| syntax(lineno, format!("expected W=/L= parameter, got {param}")))?;
        let nm = value
            .strip_suffix('N')
            .and_then(|v| v.parse::<u32>().ok())
            .filter(|v| *v > 0)
            .ok_or_else(|| syntax(lineno, format!("bad size {value}, expected <int>n")))?;
        let slot = match key {
            "W" => &mut device.width_nm,
            "L" => &mut device.length_nm,
            _ => return Err(syntax(lineno, format!("unknown parameter {key}"))),
        };
        if slot.replace(nm).is_some() {
            return Err(syntax(lineno, format!("{key} given twice")));
        }
    }
    Ok(device)
}

pub fn serialize_spice(cell: &CellNetlist) -> String {
    let mut out = String::new();
    out.push_str(".SUBCKT ");
    out.push_str(&cell.cell_name);
    for pin in &cell.pins {
        out.push(' ');
        out.push_str(&pin.name);
    }
    out.push('\n');
    for d in &cell.devices {
        out.push_str(&format!(
            "{} {} {} {} {} {}",
            d.name, d.drain, d.gate, d.source, d.bulk, d.dtype
        ));
        if let Some(w) = d.width_nm {
            out.push_str(&format!(" W={w}n"));
        }
        if let Some(l) = d.length_nm {
            out.push_str(&format!(" L={l}n"));
        }
        out.push('\n');
    }
    out.push_str(".ENDS\n");
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// Gate tied to a supply rail: the device is constantly on or off.
    RailGated {
        device: String,
    },
    /// Internal net with exactly one terminal attached.
    FloatingNet {
        net: String,
    },
    /// Output pin not attached to any drain or source.
    UndrivenOutput {
        pin: String,
    },
    TypeCountMismatch {
        pmos: usize,
        nmos: usize,
    },
    /// Zero or several output pins.
    OutputCount {
        count: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RailGated { device } => write!(f, "device {device} has a rail-tied gate"),
            Violation::FloatingNet { net } => write!(f, "internal net {net} is floating"),
            Violation::UndrivenOutput { pin } => write!(f, "output {pin} is not driven"),
            Violation::TypeCountMismatch { pmos, nmos } => {
                write!(f, "{pmos} PMOS vs {nmos} NMOS devices")
            }
            Violation::OutputCount { count } => write!(f, "{count} output pins, expected 1"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_cell(cell: &CellNetlist) -> ValidationReport {
    let mut violations = Vec::new();
    for d in &cell.devices {
        if cell.kind_of(&d.gate).is_rail() {
            violations.push(Violation::RailGated {
                device: d.name.clone(),
            });
        }
    }

    let mut attachments: BTreeMap<&str, usize> = BTreeMap::new();
    let mut channel: HashSet<&str> = HashSet::new();
    for d in &cell.devices {
        for net in [&d.drain, &d.gate, &d.source] {
            *attachments.entry(net.as_str()).or_default() += 1;
        }
        channel.insert(&d.drain);
        channel.insert(&d.source);
    }
    for (net, count) in &attachments {
        if cell.kind_of(net) == NetKind::Internal && *count == 1 {
            violations.push(Violation::FloatingNet {
                net: net.to_string(),
            });
        }
    }

    let outputs = cell.output_pins();
    for pin in &outputs {
        if !channel.contains(pin) {
            violations.push(Violation::UndrivenOutput {
                pin: pin.to_string(),
            });
        }
    }
    if outputs.len() != 1 {
        violations.push(Violation::OutputCount {
            count: outputs.len(),
        });
    }

    let pmos = cell.count_of(MosType::Pmos);
    let nmos = cell.count_of(MosType::Nmos);
    if pmos != nmos {
        violations.push(Violation::TypeCountMismatch { pmos, nmos });
    }
    ValidationReport { violations }
}

/// Upper bound on DFS steps while enumerating rail-to-output paths. Beyond it
/// the remaining devices fall back to the hop-distance rule.
const PATH_SEARCH_BUDGET: usize = 200_000;

/// Rewrite drain/source so every device's drain is its "up" terminal.
///
/// A device is oriented along a simple rail-to-stage-output path that
/// traverses it (pull-up: VDD down to the stage output; pull-down: stage
/// output down to GND). Devices traversed in both directions, or when the
/// path search exceeds its budget, use hop distance to the upper terminal;
/// remaining ties keep the current orientation.
pub fn normalize_orientation(cell: &CellNetlist) -> Result<CellNetlist, NetlistError> {
    let power = cell.power_net().ok_or(NetlistError::MissingRail("power"))?;
    let ground = cell
        .ground_net()
        .ok_or(NetlistError::MissingRail("ground"))?;
    let outputs = cell.stage_outputs();

    let mut result = cell.clone();
    for dtype in [MosType::Pmos, MosType::Nmos] {
        let members: Vec<usize> = (0..cell.devices.len())
            .filter(|&i| cell.devices[i].dtype == dtype)
            .collect();
        if members.is_empty() {
            continue;
        }
        let (tops, blocked): (Vec<&str>, &str) = match dtype {
            MosType::Pmos => (vec![power.as_str()], ground.as_str()),
            MosType::Nmos => (outputs.iter().map(String::as_str).collect(), power.as_str()),
        };
        let is_bottom = |net: &str| match dtype {
            MosType::Pmos => outputs.contains(net),
            MosType::Nmos => net == ground,
        };

        let mut adjacency: HashMap<&str, Vec<usize>> = HashMap::new();
        for &i in &members {
            let d = &cell.devices[i];
            adjacency.entry(&d.drain).or_default().push(i);
            adjacency.entry(&d.source).or_default().push(i);
        }

        // dirs[i] bit 0: seen drain->source, bit 1: seen source->drain.
        let mut dirs: HashMap<usize, u8> = HashMap::new();
        let mut budget = PATH_SEARCH_BUDGET;
        for top in &tops {
            let mut on_path: HashSet<&str> = HashSet::new();
            let mut path: Vec<(usize, bool)> = Vec::new();
            on_path.insert(top);
            walk_paths(
                cell,
                top,
                top,
                &adjacency,
                &is_bottom,
                blocked,
                &tops,
                &mut on_path,
                &mut path,
                &mut dirs,
                &mut budget,
            );
        }

        let dist = hop_distances(cell, &adjacency, &tops, blocked);
        for &i in &members {
            let d = &cell.devices[i];
            let flip = match dirs.get(&i).copied().unwrap_or(0) {
                0b01 => false,
                0b10 => true,
                seen => {
                    let dd = dist.get(d.drain.as_str()).copied();
                    let ds = dist.get(d.source.as_str()).copied();
                    if seen == 0 && dd.is_none() && ds.is_none() {
                        return Err(NetlistError::DisconnectedNetwork(d.name.clone()));
                    }
                    match (dd, ds) {
                        (Some(a), Some(b)) => b < a,
                        (None, Some(_)) => true,
                        _ => false,
                    }
                }
            };
            if flip {
                result.devices[i] = d.flipped();
            }
        }
    }
    Ok(result)
}

#[allow(clippy::too_many_arguments)]
fn walk_paths<'a>(
    cell: &'a CellNetlist,
    top: &str,
    at: &'a str,
    adjacency: &HashMap<&'a str, Vec<usize>>,
    is_bottom: &dyn Fn(&str) -> bool,
    blocked: &str,
    tops: &[&str],
    on_path: &mut HashSet<&'a str>,
    path: &mut Vec<(usize, bool)>,
    dirs: &mut HashMap<usize, u8>,
    budget: &mut usize,
) {
    if *budget == 0 {
        return;
    }
    *budget -= 1;
    if at != top && is_bottom(at) {
        for &(dev, forward) in path.iter() {
            *dirs.entry(dev).or_default() |= if forward { 0b01 } else { 0b10 };
        }
        return;
    }
    let Some(devs) = adjacency.get(at) else {
        return;
    };
    for &i in devs {
        let d = &cell.devices[i];
        let (next, forward) = if d.drain == at {
            (d.source.as_str(), true)
        } else {
            (d.drain.as_str(), false)
        };
        if on_path.contains(next) || next == blocked {
            continue;
        }
        // Other stage tops are only valid as endpoints.
        if tops.contains(&next) && !is_bottom(next) {
            continue;
        }
        on_path.insert(next);
        path.push((i, forward));
        walk_paths(
            cell, top, next, adjacency, is_bottom, blocked, tops, on_path, path, dirs, budget,
        );
        path.pop();
        on_path.remove(next);
    }
}

fn hop_distances<'a>(
    cell: &'a CellNetlist,
    adjacency: &HashMap<&'a str, Vec<usize>>,
    tops: &[&'a str],
    blocked: &str,
) -> HashMap<&'a str, usize> {
    let mut dist = HashMap::new();
    let mut queue = VecDeque::new();
    for &t in tops {
        dist.insert(t, 0usize);
        queue.push_back(t);
    }
    while let Some(at) = queue.pop_front() {
        let here = dist[at];
        for &i in adjacency.get(at).map(Vec::as_slice).unwrap_or(&[]) {
            let next = cell.devices[i].other_channel(at).unwrap_or(at);
            if next == blocked || dist.contains_key(next) {
                continue;
            }
            dist.insert(next, here + 1);
            queue.push_back(next);
        }
    }
    dist
}
