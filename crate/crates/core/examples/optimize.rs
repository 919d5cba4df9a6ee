//! Train the pivot policy with group-relative updates on unroutable cells,
//! then optimize a few held-out cells with greedy decoding.

use cellopt::dataset::{build_corpus, select_unroutable, split, CorpusConfig};
use cellopt::grpo::{optimize_cell, train_policy, DecodeMode, GrpoConfig, ToySoftmaxPolicy};
use cellopt::netlist::CellNetlist;
use cellopt::reward::RewardSource;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = build_corpus(&CorpusConfig::default())?;
    let unroutable = select_unroutable(&corpus.records);
    let manifest = split(&unroutable, 0.8, 42)?;
    let cells = |rs: Vec<&cellopt::dataset::CorpusRecord>| {
        rs.into_iter()
            .map(|r| r.netlist())
            .collect::<Result<Vec<CellNetlist>, _>>()
    };
    let train = cells(manifest.train_records(&unroutable))?;
    let eval = cells(manifest.eval_records(&unroutable))?;

    let reference = ToySoftmaxPolicy::default();
    let config = GrpoConfig {
        iterations: 200,
        ..GrpoConfig::default()
    };
    let (policy, history) = train_policy(
        &train,
        reference.clone(),
        &reference,
        &RewardSource::Proxy,
        &config,
    )?;
    let last = &history[history.len() - 1];
    println!("theta {:?}", policy.theta);
    println!(
        "last iteration: mean reward {:.3}, kl {:.4}",
        last.mean_reward, last.kl
    );

    let mut seen = std::collections::BTreeSet::new();
    let one_per_function = eval.iter().filter(|c| seen.insert(c.cell_name.clone()));
    for cell in one_per_function.take(12) {
        let t = optimize_cell(cell, &policy, &RewardSource::Proxy, 5, DecodeMode::Greedy);
        println!(
            "{:>8}: breaks {:?} -> {:?} in {} swaps ({:?})",
            cell.cell_name,
            t.initial_breaks,
            t.final_breaks,
            t.swaps(),
            t.stop
        );
    }
    Ok(())
}
