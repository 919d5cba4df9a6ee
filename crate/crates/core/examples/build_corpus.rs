//! Build the labeled topology corpus for all 3-input functions and write it
//! to a directory.
//!
//! ```text
//! cargo run --release --example build_corpus -- out/corpus
//! ```

use std::path::PathBuf;

use cellopt::dataset::{build_corpus, select_unroutable, split, write_corpus, CorpusConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "corpus".into()));
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let corpus = build_corpus(&CorpusConfig {
        jobs,
        ..CorpusConfig::default()
    })?;
    write_corpus(&corpus, &out)?;
    let s = &corpus.stats;
    println!(
        "{} functions, {} emitted, {} unique, {} routable, {} unroutable",
        s.functions, s.emitted, s.unique, s.routable, s.unroutable
    );
    let unroutable = select_unroutable(&corpus.records);
    let manifest = split(&unroutable, 0.8, 42)?;
    println!(
        "split: {} train / {} eval cells",
        manifest.train.len(),
        manifest.eval.len()
    );
    println!("wrote {}", out.display());
    Ok(())
}
