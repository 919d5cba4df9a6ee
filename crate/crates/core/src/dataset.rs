// SPDX-License-Identifier: Apache-2.0

//! Exhaustive 3-input corpus: synthesis, enumeration, verification, proxy
//! labels, persistence and a function-level train/eval split.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::logic::{equiv_check, synthesize, LogicError, TruthTable};
use crate::netlist::{parse_spice, serialize_spice, CellNetlist, NetlistError};
use crate::permute::enumerate_topologies;
use crate::reward::{proxy_score, RewardError};

pub const DEFAULT_CAP: usize = 100;
pub const DEFAULT_SPLIT_FRACTION: f64 = 0.8;
pub const DEFAULT_SEED: u64 = 42;
pub const RECORDS_FILE: &str = "records.jsonl";
pub const STATS_FILE: &str = "stats.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error(
        "{function} variant {variant}: switch-level simulation disagrees on {failures} assignments"
    )]
    EquivFailure {
        function: String,
        variant: u64,
        failures: usize,
    },
    #[error("split needs at least 2 functions, got {0}")]
    TooFewFunctions(usize),
    #[error("split fraction {0} outside [0, 1]")]
    BadFraction(f64),
    #[error("{function}: {source}")]
    Logic {
        function: String,
        source: LogicError,
    },
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FunctionId {
    pub n_inputs: u8,
    pub table_bits: u64,
}

impl FunctionId {
    pub fn table(&self) -> TruthTable {
        TruthTable::new(self.n_inputs, self.table_bits).expect("ids are built from valid tables")
    }

    /// Cell name used for the function's netlists, e.g. `F3_E8`.
    pub fn cell_name(&self) -> String {
        let digits = ((1usize << self.n_inputs) / 4).max(1);
        format!("F{}_{:0w$X}", self.n_inputs, self.table_bits, w = digits)
    }
}

impl From<TruthTable> for FunctionId {
    fn from(tt: TruthTable) -> Self {
        Self {
            n_inputs: tt.n_inputs(),
            table_bits: tt.bits(),
        }
    }
}

impl std::fmt::Display for FunctionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.table().fmt(f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub function: FunctionId,
    pub variant_index: u64,
    pub netlist_text: String,
    pub canonical_digest: u64,
    pub proxy_breaks: usize,
    /// `+1` routable by the proxy, `-1` otherwise.
    pub label: i8,
    pub equiv_verified: bool,
}

impl CorpusRecord {
    /// Stable key, e.g. `3:E8#v5`.
    pub fn key(&self) -> String {
        format!("{}#v{}", self.function, self.variant_index)
    }

    pub fn netlist(&self) -> Result<CellNetlist, NetlistError> {
        parse_spice(&self.netlist_text)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionStats {
    pub function: FunctionId,
    pub seed_devices: usize,
    pub pivots: usize,
    pub emitted: usize,
    pub unique: usize,
    pub routable: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub functions: usize,
    pub cap: usize,
    pub emitted: usize,
    pub unique: usize,
    pub duplicates: usize,
    pub routable: usize,
    pub unroutable: usize,
    pub per_function: Vec<FunctionStats>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub records: Vec<CorpusRecord>,
    pub stats: CorpusStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusConfig {
    pub cap: usize,
    /// Functions to build; `None` means every non-constant 3-input function.
    pub functions: Option<Vec<TruthTable>>,
    pub jobs: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            cap: DEFAULT_CAP,
            functions: None,
            jobs: 1,
        }
    }
}

/// The 254 non-constant 3-input functions, ascending.
pub fn enumerate_functions() -> Vec<FunctionId> {
    (1u64..0xFF)
        .map(|bits| FunctionId {
            n_inputs: 3,
            table_bits: bits,
        })
        .collect()
}

fn build_function(
    id: FunctionId,
    cap: usize,
) -> Result<(Vec<CorpusRecord>, FunctionStats), DatasetError> {
    let tt = id.table();
    let logic = |source| DatasetError::Logic {
        function: id.to_string(),
        source,
    };
    let seed = synthesize(&id.cell_name(), &tt).map_err(logic)?.cell;
    let enumeration = enumerate_topologies(&seed, cap);
    let mut records = Vec::with_capacity(enumeration.variants.len());
    for v in &enumeration.variants {
        let report = equiv_check(&v.cell, &tt).map_err(logic)?;
        if !report.passed() {
            return Err(DatasetError::EquivFailure {
                function: id.to_string(),
                variant: v.index,
                failures: report.failing.len(),
            });
        }
        let breaks = proxy_score(&v.cell)?.breaks;
        records.push(CorpusRecord {
            function: id,
            variant_index: v.index,
            netlist_text: serialize_spice(&v.cell),
            canonical_digest: v.digest,
            proxy_breaks: breaks,
            label: if breaks == 0 { 1 } else { -1 },
            equiv_verified: true,
        });
    }
    let stats = FunctionStats {
        function: id,
        seed_devices: seed.devices.len(),
        pivots: enumeration.pivots.len(),
        emitted: enumeration.emitted,
        unique: records.len(),
        routable: records.iter().filter(|r| r.label == 1).count(),
    };
    Ok((records, stats))
}

/// Build every function's records. Functions run on `config.jobs` threads
/// and are merged in function order, so the output does not depend on the
/// schedule.
pub fn build_corpus(config: &CorpusConfig) -> Result<Corpus, DatasetError> {
    let ids: Vec<FunctionId> = match &config.functions {
        Some(list) => {
            let mut ids = Vec::with_capacity(list.len());
            for tt in list {
                if tt.is_trivial() {
                    return Err(DatasetError::Logic {
                        function: tt.to_string(),
                        source: LogicError::TrivialFunction(*tt),
                    });
                }
                ids.push(FunctionId::from(*tt));
            }
            ids
        }
        None => enumerate_functions(),
    };
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<_, DatasetError>>>> =
        Mutex::new((0..ids.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..config.jobs.max(1) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= ids.len() {
                    break;
                }
                let out = build_function(ids[i], config.cap);
                if out.is_ok() {
                    log::debug!("built {}", ids[i]);
                }
                results.lock().expect("worker panicked")[i] = Some(out);
            });
        }
    });
    let mut records = Vec::new();
    let mut per_function = Vec::with_capacity(ids.len());
    for r in results.into_inner().expect("worker panicked") {
        let (recs, stats) = r.expect("every function visited")?;
        records.extend(recs);
        per_function.push(stats);
    }
    let routable = records.iter().filter(|r| r.label == 1).count();
    let emitted = per_function.iter().map(|s| s.emitted).sum();
    let stats = CorpusStats {
        functions: per_function.len(),
        cap: config.cap,
        emitted,
        unique: records.len(),
        duplicates: emitted - records.len(),
        routable,
        unroutable: records.len() - routable,
        per_function,
    };
    Ok(Corpus { records, stats })
}

/// Write `records.jsonl` and `stats.json` under `out_dir`.
pub fn write_corpus(corpus: &Corpus, out_dir: &Path) -> Result<(), DatasetError> {
    fs::create_dir_all(out_dir)?;
    let mut w = BufWriter::new(fs::File::create(out_dir.join(RECORDS_FILE))?);
    for r in &corpus.records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    let mut stats = serde_json::to_string_pretty(&corpus.stats)?;
    stats.push('\n');
    fs::write(out_dir.join(STATS_FILE), stats)?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<CorpusRecord>, DatasetError> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

pub fn select_unroutable(records: &[CorpusRecord]) -> Vec<CorpusRecord> {
    records.iter().filter(|r| r.label == -1).cloned().collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub train: Vec<String>,
    pub eval: Vec<String>,
    pub seed: u64,
    pub split_fraction: f64,
    pub train_functions: Vec<FunctionId>,
    pub eval_functions: Vec<FunctionId>,
}

impl SplitManifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }

    /// Records of `records` listed on the eval side, in input order.
    pub fn eval_records<'a>(&self, records: &'a [CorpusRecord]) -> Vec<&'a CorpusRecord> {
        let keys: BTreeSet<&str> = self.eval.iter().map(String::as_str).collect();
        records
            .iter()
            .filter(|r| keys.contains(r.key().as_str()))
            .collect()
    }

    pub fn train_records<'a>(&self, records: &'a [CorpusRecord]) -> Vec<&'a CorpusRecord> {
        let keys: BTreeSet<&str> = self.train.iter().map(String::as_str).collect();
        records
            .iter()
            .filter(|r| keys.contains(r.key().as_str()))
            .collect()
    }
}

/// Shuffle functions under `seed` and put the first `ceil(fraction * F)` on
/// the train side; every variant follows its function.
pub fn split(
    records: &[CorpusRecord],
    fraction: f64,
    seed: u64,
) -> Result<SplitManifest, DatasetError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(DatasetError::BadFraction(fraction));
    }
    let mut by_function: BTreeMap<FunctionId, Vec<String>> = BTreeMap::new();
    for r in records {
        by_function.entry(r.function).or_default().push(r.key());
    }
    if by_function.len() < 2 {
        return Err(DatasetError::TooFewFunctions(by_function.len()));
    }
    let mut functions: Vec<FunctionId> = by_function.keys().copied().collect();
    functions.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (fraction * functions.len() as f64).ceil() as usize;
    let (train_f, eval_f) = functions.split_at(n_train.min(functions.len()));
    let mut train_functions = train_f.to_vec();
    let mut eval_functions = eval_f.to_vec();
    train_functions.sort();
    eval_functions.sort();
    let keys = |fs: &[FunctionId]| fs.iter().flat_map(|f| by_function[f].clone()).collect();
    Ok(SplitManifest {
        train: keys(&train_functions),
        eval: keys(&eval_functions),
        seed,
        split_fraction: fraction,
        train_functions,
        eval_functions,
    })
}
