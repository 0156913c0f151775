//! Builds a planted-relevance corpus and prints the pruning sweep.
//!
//! Usage: planted_sweep [dim] [k_prime] [n_probe] [q_len] [band_lo] [band_hi] [overlap%]

use std::time::Instant;

use mve::eval::{sweep, SweepSettings};
use mve::retrieval::{Engine, IndexParams, Strategy};
use mve::synthetic::{planted_corpus, PlantedParams};
use mve::Embedder;

fn main() -> mve::Result<()> {
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("numeric argument"))
        .collect();
    let arg = |i: usize, default: usize| args.get(i).copied().unwrap_or(default);
    let (dim, k_prime, n_probe, q_len) = (arg(0, 32), arg(1, 50), arg(2, 10), arg(3, 32));

    let start = Instant::now();
    let corpus = planted_corpus(&PlantedParams {
        query_rank_band: (arg(4, 1), arg(5, 200)),
        word_overlap: arg(6, 50) as f64 / 100.0,
        ..PlantedParams::default()
    })?;
    let params = IndexParams {
        sample_fraction: 0.05,
        n_list: None,
        iterations: 20,
        seed: 42,
    };
    let engine = Engine::from_corpus(&corpus.docs, Embedder::new(dim, 42)?, &params)?;
    eprintln!(
        "built {} docs / {} embeddings / {} lists in {:?}",
        engine.store().num_docs(),
        engine.store().num_embeddings(),
        engine.index().n_list(),
        start.elapsed()
    );
    let settings = SweepSettings {
        q_len,
        k_prime,
        n_probe,
        k: 1000,
        alpha: 0.05,
    };
    let p_values: Vec<usize> = (1..=q_len).collect();
    let table = sweep(
        &corpus.queries,
        &corpus.qrels,
        &engine,
        &[Strategy::First, Strategy::Icf],
        &p_values,
        &settings,
    )?;
    eprintln!("swept in {:?}", start.elapsed());
    let b = &table.baseline;
    println!(
        "baseline mrr10={:.4} docs={:.1} rel={:.2}",
        b.mrr10, b.mean_docs, b.mean_rel_docs
    );
    print!("{}", table.to_csv());
    Ok(())
}
