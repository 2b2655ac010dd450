//! Accuracy / work trade-off on a synthetic collection.
//!
//! cargo run --release -p seismic-core --example sweep -- [docs] [queries]

use std::time::Instant;

use seismic_core::eval::{accuracy_at_k, exact_topk};
use seismic_core::synth::{zipf_dataset, ZipfSpec};
use seismic_core::{BuildParams, SearchParams, Searcher, SeismicIndex};

fn main() {
    let mut args = std::env::args().skip(1);
    let docs: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(10_000);
    let nq: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(100);
    let (set, queries) = zipf_dataset(ZipfSpec::default(), docs, nq, 42);
    let truth: Vec<_> = queries
        .iter()
        .map(|q| exact_topk(&set, q, 10).unwrap())
        .collect();

    let t = Instant::now();
    let index = SeismicIndex::build(&set, BuildParams::default()).unwrap();
    println!(
        "build {:?}, blocks {}, postings {}",
        t.elapsed(),
        index.num_blocks(),
        index.num_postings()
    );

    let searcher = Searcher::new(&index, None);
    for &(aq, hf) in &[(0.8, 0.9), (0.8, 0.7), (1.0, 0.9), (0.6, 0.9)] {
        let params = SearchParams::new(10, aq, hf);
        let (mut acc, mut evals) = (0.0, 0usize);
        for (q, t) in queries.iter().zip(&truth) {
            let out = searcher.search(q, &params).unwrap();
            acc += accuracy_at_k(t, &out.results, 10).unwrap();
            evals += out.stats.evaluated;
        }
        println!(
            "alpha_q {aq} heap_factor {hf}: accuracy@10 {:.3}, evaluated {:.1}% of N",
            acc / nq as f64,
            100.0 * evals as f64 / (nq * docs) as f64
        );
    }
}
