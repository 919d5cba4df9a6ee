// SPDX-License-Identifier: Apache-2.0

//! Command-line front end. Exit codes: 0 success, 2 usage or input error,
//! 3 domain error, 4 internal invariant violation.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::dataset::{
    build_corpus, read_records, select_unroutable, split, write_corpus, CorpusConfig, CorpusRecord,
    DatasetError, SplitManifest, DEFAULT_CAP, DEFAULT_SPLIT_FRACTION, MANIFEST_FILE,
};
use crate::grpo::{
    optimize_cell, train_policy, write_history_csv, DecodeMode, GrpoConfig, GrpoError,
    OptimizationTrace, ToySoftmaxPolicy,
};
use crate::logic::{equiv_check, synthesize, LogicError, TruthTable};
use crate::netlist::{parse_spice, serialize_spice, CellNetlist, NetlistError};
use crate::permute::{
    apply_region, enumerate_topologies, swap_region_of, variant_file_name, PermuteError,
};
use crate::reward::{
    accuracy, encode_cell_graph, proxy_score, reward_of, train_reward_model, GnnParams,
    RewardError, RewardSource, TrainConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

/// Shown whenever a pivot is refused.
pub const REPROMPT: &str = "Invalid pivot! Please select a new valid net.";

pub const RUN_MANIFEST_FILE: &str = "run_manifest.json";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Domain(_) => EXIT_DOMAIN,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<NetlistError> for CliError {
    fn from(e: NetlistError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<LogicError> for CliError {
    fn from(e: LogicError) -> Self {
        match e {
            LogicError::TrivialFunction(_)
            | LogicError::InvalidTable(_)
            | LogicError::PinCountMismatch { .. }
            | LogicError::NoOutput => CliError::Usage(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<PermuteError> for CliError {
    fn from(e: PermuteError) -> Self {
        match e {
            PermuteError::Netlist(n) => n.into(),
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<RewardError> for CliError {
    fn from(e: RewardError) -> Self {
        match e {
            RewardError::Model(_) => CliError::Usage(e.to_string()),
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<GrpoError> for CliError {
    fn from(e: GrpoError) -> Self {
        match e {
            GrpoError::InvalidConfig(_) | GrpoError::Checkpoint(_) | GrpoError::EmptyDataset => {
                CliError::Usage(e.to_string())
            }
            GrpoError::Permute(p) => p.into(),
            GrpoError::Reward(r) => r.into(),
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::EquivFailure { .. } => CliError::Internal(e.to_string()),
            DatasetError::Logic { source, .. } => source.into(),
            DatasetError::Reward(r) => r.into(),
            DatasetError::TooFewFunctions(_) | DatasetError::BadFraction(_) => {
                CliError::Domain(e.to_string())
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "cellopt",
    version,
    about = "Standard-cell topology permutation toolkit"
)]
pub struct Cli {
    /// Global seed; falls back to TOPCELL_SEED, then 42.
    #[arg(long, global = true, env = "TOPCELL_SEED", default_value_t = 42)]
    pub seed: u64,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Synthesize the seed netlist of a function given as `<n>:<hex>`.
    Synth {
        #[arg(long)]
        function: String,
        /// Cell name; defaults to `F<n>_<hex>`.
        #[arg(long)]
        name: Option<String>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Swap the sub-networks around a pivot net.
    Swap {
        file: PathBuf,
        #[arg(long)]
        pivot: String,
        /// Output directory; defaults to the input's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the topology variants of a cell.
    Enumerate {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
        /// Also verify every variant against this function.
        #[arg(long)]
        function: Option<String>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Check a netlist against a truth table by switch-level simulation.
    Verify {
        file: PathBuf,
        #[arg(long)]
        function: String,
    },
    /// Score a netlist with the proxy (`proxy`) or a model (`gnn:<path>`).
    Score {
        file: PathBuf,
        #[arg(long, default_value = "proxy")]
        reward: String,
    },
    /// Corpus construction.
    Dataset {
        #[command(subcommand)]
        action: DatasetCmd,
    },
    /// Train the graph reward model on corpus labels.
    TrainReward(TrainRewardArgs),
    /// Train the toy pivot policy with group-relative policy optimization.
    TrainPolicy(TrainPolicyArgs),
    /// Run the propose-validate-swap loop on one cell or an eval split.
    Optimize(OptimizeArgs),
}

#[derive(Debug, Subcommand)]
pub enum DatasetCmd {
    Build {
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
        #[arg(long, default_value_t = DEFAULT_SPLIT_FRACTION)]
        split_fraction: f64,
        /// Comma-separated function list; defaults to all 3-input functions.
        #[arg(long, value_delimiter = ',')]
        functions: Vec<String>,
        #[arg(long, default_value = "corpus")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

#[derive(Debug, Args)]
pub struct TrainRewardArgs {
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SPLIT_FRACTION)]
    pub split_fraction: f64,
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    #[arg(long, default_value_t = 3)]
    pub layers: usize,
    #[arg(long, default_value_t = 1e-2)]
    pub lr: f64,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    #[arg(long, default_value = "reward_model")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainPolicyArgs {
    #[arg(long)]
    pub records: PathBuf,
    /// Split manifest; the train side is used. Defaults to all unroutable records.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, default_value = "proxy")]
    pub reward: String,
    #[arg(long, default_value_t = 8)]
    pub group_size: usize,
    #[arg(long, default_value_t = 200)]
    pub iterations: usize,
    #[arg(long, default_value_t = 4)]
    pub inner_steps: usize,
    #[arg(long, default_value_t = 0.2)]
    pub clip: f64,
    #[arg(long, default_value_t = 0.01)]
    pub kl_coef: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value = "policy")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["file", "records"]))]
pub struct OptimizeArgs {
    pub file: Option<PathBuf>,
    /// Optimize every unroutable eval record of this corpus instead of one file.
    #[arg(long, requires = "manifest")]
    pub records: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Policy checkpoint; the uniform policy when absent.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    #[arg(long, default_value = "proxy")]
    pub reward: String,
    #[arg(long, default_value_t = 5)]
    pub budget: usize,
    /// Sample pivots under the global seed instead of taking the most probable.
    #[arg(long)]
    pub sample: bool,
    #[arg(long, default_value = "optimized")]
    pub out: PathBuf,
}

/// Parse `args`, run, report, and return the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Cmd::Synth {
            function,
            name,
            out,
        } => cmd_synth(function, name.as_deref(), out),
        Cmd::Swap { file, pivot, out } => cmd_swap(file, pivot, out.as_deref()),
        Cmd::Enumerate {
            file,
            cap,
            function,
            out,
            jobs,
        } => cmd_enumerate(file, *cap, function.as_deref(), out, *jobs),
        Cmd::Verify { file, function } => cmd_verify(file, function),
        Cmd::Score { file, reward } => cmd_score(file, reward),
        Cmd::Dataset {
            action:
                DatasetCmd::Build {
                    cap,
                    split_fraction,
                    functions,
                    out,
                    jobs,
                },
        } => cmd_dataset_build(*cap, *split_fraction, functions, out, *jobs, cli.seed),
        Cmd::TrainReward(args) => cmd_train_reward(args, cli.seed),
        Cmd::TrainPolicy(args) => cmd_train_policy(args, cli.seed),
        Cmd::Optimize(args) => cmd_optimize(args, cli.seed),
    }
}

fn parse_function(spec: &str) -> Result<TruthTable, CliError> {
    let tt: TruthTable = spec.parse()?;
    if tt.is_trivial() {
        return Err(LogicError::TrivialFunction(tt).into());
    }
    Ok(tt)
}

fn read_cell(path: &Path) -> Result<CellNetlist, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(parse_spice(&text)?)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, contents).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn to_json_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

/// Parse `proxy` or `gnn:<model path>`.
pub fn parse_reward(spec: &str) -> Result<RewardSource, CliError> {
    if spec == "proxy" {
        return Ok(RewardSource::Proxy);
    }
    if let Some(path) = spec.strip_prefix("gnn:") {
        let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{path}: {e}")))?;
        return Ok(RewardSource::Gnn(GnnParams::from_json(&text)?));
    }
    Err(CliError::Usage(format!(
        "unknown reward {spec:?}, expected proxy or gnn:<model>"
    )))
}

fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".to_string())
}

fn write_run_manifest(
    out: &Path,
    command: &str,
    seed: u64,
    config: serde_json::Value,
) -> Result<(), CliError> {
    let manifest = json!({
        "command": command,
        "seed": seed,
        "config": config,
        "version": env!("CARGO_PKG_VERSION"),
        "git_describe": git_describe(),
    });
    write_file(&out.join(RUN_MANIFEST_FILE), &to_json_line(&manifest))
}

fn cmd_synth(function: &str, name: Option<&str>, out: &Path) -> Result<(), CliError> {
    let tt = parse_function(function)?;
    let name = name
        .map(str::to_string)
        .unwrap_or_else(|| crate::dataset::FunctionId::from(tt).cell_name());
    let synthesis = synthesize(&name, &tt)?;
    let report = equiv_check(&synthesis.cell, &tt)?;
    if !report.passed() {
        return Err(CliError::Internal(format!(
            "synthesized {name} fails simulation on {} assignments",
            report.failing.len()
        )));
    }
    let path = out.join(format!("{}.sp", synthesis.cell.cell_name));
    write_file(&path, &serialize_spice(&synthesis.cell))?;
    println!(
        "cell={} devices={} file={}",
        synthesis.cell.cell_name,
        synthesis.cell.devices.len(),
        path.display()
    );
    Ok(())
}

fn cmd_swap(file: &Path, pivot: &str, out: Option<&Path>) -> Result<(), CliError> {
    let cell = read_cell(file)?;
    let (normalized, region) = match swap_region_of(&cell, pivot) {
        Ok(r) => r,
        Err(e @ PermuteError::InvalidPivot { .. }) => {
            println!("{REPROMPT}");
            return Err(e.into());
        }
        Err(e) => return Err(e.into()),
    };
    let swapped = apply_region(&normalized, &region);
    let name = format!(
        "{}.swapped.sp",
        file.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default()
    );
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| file.parent().map(Path::to_path_buf))
        .unwrap_or_default();
    let path = dir.join(name);
    write_file(&path, &serialize_spice(&swapped))?;
    println!(
        "pivot={} nca={} ncd={} delta={} file={}",
        region.pivot.net,
        region.nca,
        region.ncd,
        region.delta.len(),
        path.display()
    );
    Ok(())
}

fn cmd_enumerate(
    file: &Path,
    cap: usize,
    function: Option<&str>,
    out: &Path,
    jobs: usize,
) -> Result<(), CliError> {
    let cell = read_cell(file)?;
    let tt = function.map(parse_function).transpose()?;
    let enumeration = enumerate_topologies(&cell, cap);
    if let Some(tt) = tt {
        let chunk = enumeration.variants.len().div_ceil(jobs.max(1)).max(1);
        let failures: Vec<Result<Option<u64>, LogicError>> = std::thread::scope(|s| {
            let handles: Vec<_> = enumeration
                .variants
                .chunks(chunk)
                .map(|part| {
                    s.spawn(move || {
                        part.iter()
                            .map(|v| {
                                equiv_check(&v.cell, &tt).map(|r| (!r.passed()).then_some(v.index))
                            })
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("verification thread panicked"))
                .collect()
        });
        for f in failures {
            if let Some(index) = f? {
                return Err(CliError::Internal(format!(
                    "variant {index} fails simulation"
                )));
            }
        }
    }
    fs::create_dir_all(out)?;
    for (k, v) in enumeration.variants.iter().enumerate() {
        write_file(
            &out.join(variant_file_name(&cell.cell_name, k)),
            &serialize_spice(&v.cell),
        )?;
    }
    println!(
        "n_pivots={} emitted={} unique={}",
        enumeration.pivots.len(),
        enumeration.emitted,
        enumeration.variants.len()
    );
    Ok(())
}

fn cmd_verify(file: &Path, function: &str) -> Result<(), CliError> {
    let cell = read_cell(file)?;
    let tt = parse_function(function)?;
    let report = equiv_check(&cell, &tt)?;
    if report.passed() {
        println!("pass checked={}", report.checked);
        return Ok(());
    }
    let width = tt.n_inputs() as usize;
    for (assignment, got) in &report.failing {
        println!(
            "fail assignment={:0width$b} expected={} got={}",
            assignment,
            u8::from(tt.eval(*assignment)),
            got
        );
    }
    Err(CliError::Domain(format!(
        "{} of {} assignments disagree",
        report.failing.len(),
        report.checked
    )))
}

fn cmd_score(file: &Path, reward: &str) -> Result<(), CliError> {
    let cell = read_cell(file)?;
    match parse_reward(reward)? {
        RewardSource::Proxy => {
            let s = proxy_score(&cell)?;
            println!("breaks={} score={}", s.breaks, s.score);
        }
        source => println!("logit={}", reward_of(&source, &cell)?),
    }
    Ok(())
}

fn cmd_dataset_build(
    cap: usize,
    fraction: f64,
    functions: &[String],
    out: &Path,
    jobs: usize,
    seed: u64,
) -> Result<(), CliError> {
    let functions = if functions.is_empty() {
        None
    } else {
        Some(
            functions
                .iter()
                .map(|f| parse_function(f))
                .collect::<Result<Vec<_>, _>>()?,
        )
    };
    let config = CorpusConfig {
        cap,
        functions,
        jobs,
    };
    let corpus = build_corpus(&config)?;
    write_corpus(&corpus, out)?;
    let unroutable = select_unroutable(&corpus.records);
    let manifest = match split(&unroutable, fraction, seed) {
        Ok(m) => Some(m),
        Err(DatasetError::TooFewFunctions(n)) => {
            log::warn!("no split written: unroutable records span {n} functions");
            None
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(m) = &manifest {
        write_file(&out.join(MANIFEST_FILE), &m.to_json())?;
    }
    write_run_manifest(
        out,
        "dataset build",
        seed,
        json!({
            "cap": cap,
            "split_fraction": fraction,
            "functions": config.functions.as_ref().map(|f| f.iter().map(|t| t.to_string()).collect::<Vec<_>>()),
        }),
    )?;
    let s = &corpus.stats;
    println!(
        "functions={} emitted={} unique={} routable={} unroutable={}",
        s.functions, s.emitted, s.unique, s.routable, s.unroutable
    );
    Ok(())
}

fn load_records(path: &Path) -> Result<Vec<CorpusRecord>, CliError> {
    read_records(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn load_manifest(path: &Path) -> Result<SplitManifest, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn labeled_graphs(
    records: &[&CorpusRecord],
) -> Result<Vec<(crate::reward::CellGraph, f64)>, CliError> {
    records
        .iter()
        .map(|r| Ok((encode_cell_graph(&r.netlist()?), f64::from(r.label))))
        .collect()
}

fn cmd_train_reward(args: &TrainRewardArgs, seed: u64) -> Result<(), CliError> {
    let records = load_records(&args.records)?;
    let manifest = split(&records, args.split_fraction, seed)?;
    let train = labeled_graphs(&manifest.train_records(&records))?;
    let eval = labeled_graphs(&manifest.eval_records(&records))?;
    let config = TrainConfig {
        d: args.dim,
        k_layers: args.layers,
        lr: args.lr,
        epochs: args.epochs,
        batch_size: args.batch_size,
        seed,
    };
    let (params, log) = train_reward_model(&train, &config)?;
    let eval_accuracy = accuracy(&eval, &params)?;
    write_file(&args.out.join("model.json"), &params.to_json())?;
    write_file(
        &args.out.join("train_log.json"),
        &to_json_line(&json!({
            "epoch_loss": log.epoch_loss,
            "train_accuracy": log.train_accuracy,
            "eval_accuracy": eval_accuracy,
        })),
    )?;
    write_run_manifest(
        &args.out,
        "train-reward",
        seed,
        json!({ "records": args.records, "split_fraction": args.split_fraction, "train": config }),
    )?;
    println!(
        "train={} eval={} train_accuracy={:.4} eval_accuracy={:.4}",
        train.len(),
        eval.len(),
        log.train_accuracy,
        eval_accuracy
    );
    Ok(())
}

fn cmd_train_policy(args: &TrainPolicyArgs, seed: u64) -> Result<(), CliError> {
    let records = load_records(&args.records)?;
    let unroutable = select_unroutable(&records);
    let chosen: Vec<&CorpusRecord> = match &args.manifest {
        Some(path) => load_manifest(path)?.train_records(&unroutable),
        None => unroutable.iter().collect(),
    };
    let cells = chosen
        .iter()
        .map(|r| r.netlist())
        .collect::<Result<Vec<_>, _>>()?;
    let config = GrpoConfig {
        group_size: args.group_size,
        iterations: args.iterations,
        inner_steps: args.inner_steps,
        clip: args.clip,
        kl_coef: args.kl_coef,
        eps: args.eps,
        lr: args.lr,
        seed,
    };
    let reward = parse_reward(&args.reward)?;
    let reference = ToySoftmaxPolicy::default();
    let (policy, history) = train_policy(&cells, reference.clone(), &reference, &reward, &config)?;
    write_file(
        &args.out.join("policy.json"),
        &format!("{}\n", policy.to_json()),
    )?;
    let mut csv = Vec::new();
    write_history_csv(&history, &mut csv).map_err(|e| CliError::Internal(e.to_string()))?;
    write_file(
        &args.out.join("history.csv"),
        &String::from_utf8(csv).expect("csv output is UTF-8"),
    )?;
    write_run_manifest(
        &args.out,
        "train-policy",
        seed,
        json!({ "records": args.records, "manifest": args.manifest, "reward": args.reward, "grpo": config }),
    )?;
    let last = history.last();
    println!(
        "cells={} iterations={} final_mean_reward={} theta={:?}",
        cells.len(),
        history.len(),
        last.map(|h| h.mean_reward).unwrap_or(0.0),
        policy.theta
    );
    Ok(())
}

#[derive(Serialize)]
struct TraceFile<'a> {
    cell: &'a str,
    initial_breaks: Option<usize>,
    final_breaks: Option<usize>,
    stop: crate::grpo::StopReason,
    steps: &'a [crate::grpo::TraceStep],
}

fn trace_json(name: &str, trace: &OptimizationTrace) -> serde_json::Value {
    serde_json::to_value(TraceFile {
        cell: name,
        initial_breaks: trace.initial_breaks,
        final_breaks: trace.final_breaks,
        stop: trace.stop,
        steps: &trace.steps,
    })
    .expect("plain data serializes")
}

fn cmd_optimize(args: &OptimizeArgs, seed: u64) -> Result<(), CliError> {
    let policy = match &args.policy {
        Some(path) => ToySoftmaxPolicy::from_json(
            &fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?,
        )?,
        None => ToySoftmaxPolicy::default(),
    };
    let reward = parse_reward(&args.reward)?;
    let mode = |k: u64| {
        if args.sample {
            DecodeMode::Sample {
                seed: seed.wrapping_add(k),
            }
        } else {
            DecodeMode::Greedy
        }
    };
    let config = json!({
        "policy": args.policy, "reward": args.reward, "budget": args.budget, "sample": args.sample,
        "file": args.file, "records": args.records, "manifest": args.manifest,
    });
    if let Some(file) = &args.file {
        let cell = read_cell(file)?;
        let trace = optimize_cell(&cell, &policy, &reward, args.budget, mode(0));
        write_file(
            &args.out.join(format!("{}.sp", cell.cell_name)),
            &serialize_spice(&trace.cell),
        )?;
        write_file(
            &args.out.join("trace.json"),
            &to_json_line(&trace_json(&cell.cell_name, &trace)),
        )?;
        write_run_manifest(&args.out, "optimize", seed, config)?;
        println!(
            "initial_breaks={} final_breaks={} swaps={} proposals={}",
            opt(trace.initial_breaks),
            opt(trace.final_breaks),
            trace.swaps(),
            trace.steps.len()
        );
        return Ok(());
    }
    let records_path = args.records.as_ref().expect("clap enforces one input");
    let manifest_path = args.manifest.as_ref().expect("clap requires a manifest");
    let records = load_records(records_path)?;
    let unroutable = select_unroutable(&records);
    let eval = load_manifest(manifest_path)?.eval_records(&unroutable);
    let mut traces = Vec::with_capacity(eval.len());
    let mut converted = 0usize;
    for (k, r) in eval.iter().enumerate() {
        let trace = optimize_cell(&r.netlist()?, &policy, &reward, args.budget, mode(k as u64));
        converted += usize::from(trace.routable());
        traces.push(trace_json(&r.key(), &trace));
    }
    write_file(&args.out.join("traces.json"), &to_json_line(&traces))?;
    write_run_manifest(&args.out, "optimize", seed, config)?;
    println!(
        "cells={} converted={} rate={:.4}",
        eval.len(),
        converted,
        if eval.is_empty() {
            0.0
        } else {
            converted as f64 / eval.len() as f64
        }
    );
    Ok(())
}

fn opt(v: Option<usize>) -> String {
    v.map(|b| b.to_string()).unwrap_or_else(|| "na".into())
}
