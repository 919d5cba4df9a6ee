use std::fs;
use std::path::Path;

use cellopt::cli::{run_from, Cli, EXIT_DOMAIN, EXIT_OK, EXIT_USAGE, RUN_MANIFEST_FILE};
use cellopt::dataset::{read_records, MANIFEST_FILE, RECORDS_FILE};
use cellopt::grpo::ToySoftmaxPolicy;
use cellopt::logic::{equiv_check, TruthTable};
use cellopt::netlist::parse_spice;
use cellopt::permute::canonical_hash;
use clap::CommandFactory;

fn run(args: &[&str]) -> i32 {
    let mut full = vec!["cellopt"];
    full.extend_from_slice(args);
    run_from(full)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const INV: &str = ".SUBCKT INV A Y VDD GND\nMP1 Y A VDD VDD PMOS\nMN1 Y A GND GND NMOS\n.ENDS\n";

#[test]
fn synth_writes_verified_cell() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(&["synth", "--function", "3:E8", "--out", p(dir.path())]),
        EXIT_OK
    );
    let cell = parse_spice(&fs::read_to_string(dir.path().join("F3_E8.sp")).unwrap()).unwrap();
    let tt = TruthTable::new(3, 0xE8).unwrap();
    assert!(equiv_check(&cell, &tt).unwrap().passed());

    assert_eq!(
        run(&[
            "synth",
            "--function",
            "3:96",
            "--name",
            "XOR3",
            "--out",
            p(dir.path())
        ]),
        EXIT_OK
    );
    let xor = fs::read_to_string(dir.path().join("XOR3.sp")).unwrap();
    assert!(xor.contains("A_N"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(&["synth", "--function", "3:00", "--out", p(dir.path())]),
        EXIT_USAGE
    );
    assert_eq!(run(&["synth", "--function", "nonsense"]), EXIT_USAGE);
    assert_eq!(run(&["frobnicate"]), EXIT_USAGE);
    assert_eq!(
        run(&["score", p(&dir.path().join("missing.sp"))]),
        EXIT_USAGE
    );
    assert_eq!(run(&["optimize"]), EXIT_USAGE);
}

#[test]
fn swap_round_trip_and_invalid_pivot() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(&["synth", "--function", "3:E8", "--out", p(dir.path())]),
        EXIT_OK
    );
    let seed = dir.path().join("F3_E8.sp");
    assert_eq!(run(&["swap", p(&seed), "--pivot", "Y"]), EXIT_DOMAIN);
    assert!(!dir.path().join("F3_E8.sp.swapped.sp").exists());

    let cell = parse_spice(&fs::read_to_string(&seed).unwrap()).unwrap();
    let pivot = cellopt::permute::list_valid_pivots(&cell)[0].net.clone();
    assert_eq!(run(&["swap", p(&seed), "--pivot", &pivot]), EXIT_OK);
    let once = dir.path().join("F3_E8.sp.swapped.sp");
    assert_eq!(run(&["swap", p(&once), "--pivot", &pivot]), EXIT_OK);
    let twice = dir.path().join("F3_E8.sp.swapped.sp.swapped.sp");
    let back = parse_spice(&fs::read_to_string(twice).unwrap()).unwrap();
    assert_eq!(canonical_hash(&back), canonical_hash(&cell));
}

#[test]
fn enumerate_writes_variants() {
    let dir = tempfile::tempdir().unwrap();
    let inv = dir.path().join("inv.sp");
    fs::write(&inv, INV).unwrap();
    let out = dir.path().join("variants");
    assert_eq!(
        run(&["enumerate", p(&inv), "--function", "1:1", "--out", p(&out)]),
        EXIT_OK
    );
    assert!(out.join("INV__v0.sp").exists());
    assert!(!out.join("INV__v1.sp").exists());

    assert_eq!(
        run(&["synth", "--function", "3:E8", "--out", p(dir.path())]),
        EXIT_OK
    );
    let maj = dir.path().join("F3_E8.sp");
    assert_eq!(
        run(&[
            "enumerate",
            p(&maj),
            "--cap",
            "3",
            "--function",
            "3:E8",
            "--out",
            p(&out),
            "--jobs",
            "2"
        ]),
        EXIT_OK
    );
    assert!(out.join("F3_E8__v2.sp").exists());
    assert!(!out.join("F3_E8__v3.sp").exists());
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let inv = dir.path().join("inv.sp");
    fs::write(&inv, INV).unwrap();
    assert_eq!(run(&["verify", p(&inv), "--function", "1:1"]), EXIT_OK);
    assert_eq!(run(&["verify", p(&inv), "--function", "1:2"]), EXIT_DOMAIN);
    assert_eq!(run(&["verify", p(&inv), "--function", "2:7"]), EXIT_USAGE);
}

#[test]
fn score_with_proxy_and_zero_model() {
    let dir = tempfile::tempdir().unwrap();
    let inv = dir.path().join("inv.sp");
    fs::write(&inv, INV).unwrap();
    assert_eq!(run(&["score", p(&inv)]), EXIT_OK);
    assert_eq!(run(&["score", p(&inv), "--reward", "bogus"]), EXIT_USAGE);
    let model = dir.path().join("missing.json");
    assert_eq!(
        run(&["score", p(&inv), "--reward", &format!("gnn:{}", p(&model))]),
        EXIT_USAGE
    );
}

#[test]
fn small_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let fns = "3:17,3:1E,3:69,3:96,3:E8,3:7F,3:01,3:8E";
    assert_eq!(
        run(&[
            "dataset",
            "build",
            "--functions",
            fns,
            "--out",
            p(&corpus),
            "--jobs",
            "2"
        ]),
        EXIT_OK
    );
    for f in [RECORDS_FILE, "stats.json", MANIFEST_FILE, RUN_MANIFEST_FILE] {
        assert!(corpus.join(f).exists(), "{f}");
    }
    let records = read_records(&corpus.join(RECORDS_FILE)).unwrap();
    assert!(records.iter().all(|r| r.equiv_verified));

    let reward_dir = dir.path().join("reward");
    assert_eq!(
        run(&[
            "train-reward",
            "--records",
            p(&corpus.join(RECORDS_FILE)),
            "--epochs",
            "2",
            "--dim",
            "4",
            "--layers",
            "1",
            "--out",
            p(&reward_dir),
        ]),
        EXIT_OK
    );
    let log: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(reward_dir.join("train_log.json")).unwrap())
            .unwrap();
    assert!(log["eval_accuracy"].is_number());

    let policy_dir = dir.path().join("policy");
    assert_eq!(
        run(&[
            "train-policy",
            "--records",
            p(&corpus.join(RECORDS_FILE)),
            "--manifest",
            p(&corpus.join(MANIFEST_FILE)),
            "--iterations",
            "5",
            "--out",
            p(&policy_dir),
        ]),
        EXIT_OK
    );
    let policy =
        ToySoftmaxPolicy::from_json(&fs::read_to_string(policy_dir.join("policy.json")).unwrap())
            .unwrap();
    assert_eq!(policy.theta.len(), 8);
    let history = fs::read_to_string(policy_dir.join("history.csv")).unwrap();
    assert_eq!(
        history.lines().next(),
        Some("iter,mean_reward,objective,kl,accepted_pivot")
    );
    assert_eq!(history.lines().count(), 6);

    let opt_dir = dir.path().join("opt");
    assert_eq!(
        run(&[
            "optimize",
            "--records",
            p(&corpus.join(RECORDS_FILE)),
            "--manifest",
            p(&corpus.join(MANIFEST_FILE)),
            "--policy",
            p(&policy_dir.join("policy.json")),
            "--out",
            p(&opt_dir),
        ]),
        EXIT_OK
    );
    let traces: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(opt_dir.join("traces.json")).unwrap()).unwrap();
    assert!(traces.is_array());

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(opt_dir.join(RUN_MANIFEST_FILE)).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["command"], "optimize");
}

#[test]
fn optimize_leaves_routable_cell_alone() {
    let dir = tempfile::tempdir().unwrap();
    let inv = dir.path().join("inv.sp");
    fs::write(&inv, INV).unwrap();
    let out = dir.path().join("opt");
    assert_eq!(run(&["optimize", p(&inv), "--out", p(&out)]), EXIT_OK);
    let written = parse_spice(&fs::read_to_string(out.join("INV.sp")).unwrap()).unwrap();
    assert_eq!(written, parse_spice(INV).unwrap());
    let trace: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("trace.json")).unwrap()).unwrap();
    assert_eq!(trace["steps"].as_array().unwrap().len(), 0);
}

#[test]
fn seed_falls_back_to_environment() {
    let cmd = Cli::command();
    let seed = cmd.get_arguments().find(|a| a.get_id() == "seed").unwrap();
    assert_eq!(
        seed.get_env().and_then(|e| e.to_str()),
        Some("TOPCELL_SEED")
    );
    cmd.debug_assert();
}
