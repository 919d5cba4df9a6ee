//! Train the graph reward model on a small slice of the corpus and report
//! held-out accuracy.

use cellopt::dataset::{build_corpus, split, CorpusConfig};
use cellopt::logic::TruthTable;
use cellopt::reward::{accuracy, encode_cell_graph, train_reward_model, CellGraph, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let functions = (1u64..255)
        .step_by(4)
        .map(|b| TruthTable::new(3, b))
        .collect::<Result<Vec<_>, _>>()?;
    let corpus = build_corpus(&CorpusConfig {
        functions: Some(functions),
        ..CorpusConfig::default()
    })?;
    let manifest = split(&corpus.records, 0.8, 42)?;
    let graphs = |keys: Vec<&cellopt::dataset::CorpusRecord>| {
        keys.into_iter()
            .map(|r| Ok((encode_cell_graph(&r.netlist()?), f64::from(r.label))))
            .collect::<Result<Vec<(CellGraph, f64)>, cellopt::netlist::NetlistError>>()
    };
    let train = graphs(manifest.train_records(&corpus.records))?;
    let eval = graphs(manifest.eval_records(&corpus.records))?;

    let config = TrainConfig {
        epochs: 30,
        ..TrainConfig::default()
    };
    let (params, log) = train_reward_model(&train, &config)?;
    println!("{} train / {} eval graphs", train.len(), eval.len());
    println!(
        "loss {:.4} -> {:.4}",
        log.epoch_loss[0],
        log.epoch_loss[log.epoch_loss.len() - 1]
    );
    println!("train accuracy {:.3}", log.train_accuracy);
    println!("eval accuracy  {:.3}", accuracy(&eval, &params)?);
    Ok(())
}
