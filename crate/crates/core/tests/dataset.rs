use std::collections::BTreeSet;
use std::fs;

use cellopt::dataset::{
    build_corpus, enumerate_functions, read_records, select_unroutable, split, write_corpus,
    CorpusConfig, CorpusRecord, DatasetError, FunctionId, MANIFEST_FILE, RECORDS_FILE, STATS_FILE,
};
use cellopt::logic::{equiv_check, TruthTable};
use proptest::prelude::*;

fn small_config(jobs: usize) -> CorpusConfig {
    let functions = [0x01u64, 0x17, 0x1E, 0x69, 0x80, 0x96, 0xE8, 0xFE]
        .iter()
        .map(|&b| TruthTable::new(3, b).unwrap())
        .collect();
    CorpusConfig {
        functions: Some(functions),
        jobs,
        ..CorpusConfig::default()
    }
}

fn fake_record(bits: u64, variant: u64, breaks: usize) -> CorpusRecord {
    CorpusRecord {
        function: FunctionId {
            n_inputs: 3,
            table_bits: bits,
        },
        variant_index: variant,
        netlist_text: String::new(),
        canonical_digest: bits << 8 | variant,
        proxy_breaks: breaks,
        label: if breaks == 0 { 1 } else { -1 },
        equiv_verified: true,
    }
}

#[test]
fn record_invariants_on_a_small_corpus() {
    let corpus = build_corpus(&small_config(1)).unwrap();
    let s = &corpus.stats;
    assert_eq!(s.functions, 8);
    assert_eq!(s.routable + s.unroutable, corpus.records.len());
    assert_eq!(s.unique, corpus.records.len());
    assert_eq!(s.emitted, s.unique + s.duplicates);
    for f in &s.per_function {
        assert_eq!(f.emitted, 100.min(1usize << f.pivots));
    }
    let mut seen = BTreeSet::new();
    for r in &corpus.records {
        assert!(r.equiv_verified);
        assert_eq!(r.label == 1, r.proxy_breaks == 0);
        assert!(seen.insert((r.function, r.canonical_digest)), "{}", r.key());
        let cell = r.netlist().unwrap();
        assert!(equiv_check(&cell, &r.function.table()).unwrap().passed());
    }
}

#[test]
fn parallel_build_matches_serial() {
    assert_eq!(
        build_corpus(&small_config(1)).unwrap(),
        build_corpus(&small_config(4)).unwrap()
    );
}

#[test]
fn rebuilds_are_byte_identical_and_read_back() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = build_corpus(&small_config(2)).unwrap();
    write_corpus(&first, a.path()).unwrap();
    write_corpus(&build_corpus(&small_config(3)).unwrap(), b.path()).unwrap();
    for file in [RECORDS_FILE, STATS_FILE] {
        assert_eq!(
            fs::read(a.path().join(file)).unwrap(),
            fs::read(b.path().join(file)).unwrap(),
            "{file}"
        );
    }
    let text = fs::read_to_string(a.path().join(RECORDS_FILE)).unwrap();
    assert!(!text.contains('\r'));
    assert_eq!(text.lines().count(), first.records.len());
    assert_eq!(
        read_records(&a.path().join(RECORDS_FILE)).unwrap(),
        first.records
    );
    // The split manifest is written by the CLI, not by the corpus writer.
    assert!(!a.path().join(MANIFEST_FILE).exists());
}

#[test]
fn unroutable_selection_partitions() {
    let records = vec![
        fake_record(1, 0, 0),
        fake_record(1, 1, 2),
        fake_record(2, 0, 1),
    ];
    let sel = select_unroutable(&records);
    assert_eq!(sel.len(), 2);
    assert!(sel.iter().all(|r| r.proxy_breaks > 0));
    assert!(!sel.contains(&records[0]));
}

#[test]
fn split_edge_cases() {
    let records = vec![fake_record(1, 0, 1), fake_record(2, 0, 1)];
    let all_train = split(&records, 1.0, 7).unwrap();
    assert!(all_train.eval.is_empty());
    assert_eq!(all_train.train.len(), 2);
    assert!(matches!(
        split(&records[..1], 0.8, 7),
        Err(DatasetError::TooFewFunctions(1))
    ));
    assert!(matches!(
        split(&records, 1.5, 7),
        Err(DatasetError::BadFraction(_))
    ));
}

#[test]
fn function_ids_display_like_tables() {
    let id = enumerate_functions()
        .into_iter()
        .find(|f| f.table_bits == 0xE8)
        .unwrap();
    assert_eq!(id.to_string(), "3:E8");
    assert_eq!(id.cell_name(), "F3_E8");
    assert_eq!(fake_record(0xE8, 5, 1).key(), "3:E8#v5");
}

fn record_set() -> impl Strategy<Value = Vec<CorpusRecord>> {
    prop::collection::btree_set((1u64..255, 0u64..6), 2..80).prop_map(|keys| {
        keys.into_iter()
            .map(|(f, v)| fake_record(f, v, (f % 3) as usize + 1))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn split_is_a_function_level_partition(records in record_set(),
                                           fraction in 0.0f64..=1.0,
                                           seed in any::<u64>()) {
        let functions: BTreeSet<FunctionId> = records.iter().map(|r| r.function).collect();
        prop_assume!(functions.len() >= 2);
        let m = split(&records, fraction, seed).unwrap();
        let train: BTreeSet<&String> = m.train.iter().collect();
        let eval: BTreeSet<&String> = m.eval.iter().collect();
        prop_assert!(train.is_disjoint(&eval));
        prop_assert_eq!(train.len() + eval.len(), records.len());
        let tf: BTreeSet<FunctionId> = m.train_functions.iter().copied().collect();
        let ef: BTreeSet<FunctionId> = m.eval_functions.iter().copied().collect();
        prop_assert!(tf.is_disjoint(&ef));
        prop_assert_eq!(tf.len(), (fraction * functions.len() as f64).ceil() as usize);
        for r in m.train_records(&records) {
            prop_assert!(tf.contains(&r.function));
        }
        for r in m.eval_records(&records) {
            prop_assert!(ef.contains(&r.function));
        }
        prop_assert_eq!(&split(&records, fraction, seed).unwrap(), &m);
    }

    #[test]
    fn manifest_json_round_trips(records in record_set(), seed in any::<u64>()) {
        let functions: BTreeSet<FunctionId> = records.iter().map(|r| r.function).collect();
        prop_assume!(functions.len() >= 2);
        let m = split(&records, 0.8, seed).unwrap();
        let back: cellopt::dataset::SplitManifest = serde_json::from_str(&m.to_json()).unwrap();
        prop_assert_eq!(back, m);
    }
}
