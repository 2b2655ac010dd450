//! Synthetic sparse collections for tests, examples and benchmarks.

use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, WeightedAliasIndex};

use crate::sparse::{SparseVector, VectorSet};

/// `nnz` distinct random dimensions below `dim` with uniform values,
/// scaled to unit ℓ1 norm.
pub fn random_normalized<R: Rng>(rng: &mut R, dim: u32, nnz: usize) -> SparseVector<f64> {
    let dims = sample(rng, dim as usize, nnz).into_vec();
    let raw: Vec<f64> = (0..nnz).map(|_| rng.gen_range(1e-3..1.0)).collect();
    let total: f64 = raw.iter().sum();
    SparseVector::from_pairs(
        dims.into_iter()
            .map(|d| d as u32)
            .zip(raw.into_iter().map(|v| v / total)),
    )
    .expect("positive values")
}

/// Every coordinate independently nonzero with probability `p`, value
/// uniform in (0, 1].
pub fn iid_set(n: usize, dim: u32, p: f64, seed: u64) -> VectorSet<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vectors = (0..n)
        .map(|_| {
            let mut dims = Vec::new();
            let mut values = Vec::new();
            for d in 0..dim {
                if rng.gen_bool(p) {
                    dims.push(d);
                    values.push(1.0 - rng.gen::<f32>());
                }
            }
            SparseVector::new(dims, values).expect("sorted positive")
        })
        .collect();
    VectorSet::new(dim, vectors).expect("dims in range")
}

/// Shape of a learned-sparse-style synthetic collection.
///
/// Dimension popularity follows a Zipf law. Each vector belongs to one of
/// `topics` latent topics; a fraction of its coordinates is drawn from that
/// topic's vocabulary, the rest from the global Zipf law. Weights are
/// log-normal, and topic coordinates carry a multiplicative boost.
#[derive(Clone, Debug)]
pub struct ZipfSpec {
    pub dim: u32,
    pub zipf_exponent: f64,
    pub topics: usize,
    pub topic_vocab: usize,
    pub doc_nnz: usize,
    pub query_nnz: usize,
    /// Fraction of a vector's coordinates taken from its topic.
    pub topic_share: f64,
    pub topic_boost: f32,
    pub weight_sigma: f64,
}

impl Default for ZipfSpec {
    fn default() -> Self {
        Self {
            dim: 5000,
            zipf_exponent: 1.0,
            topics: 100,
            topic_vocab: 60,
            doc_nnz: 60,
            query_nnz: 15,
            topic_share: 0.5,
            topic_boost: 2.0,
            weight_sigma: 0.8,
        }
    }
}

pub struct ZipfGenerator {
    spec: ZipfSpec,
    popularity: WeightedAliasIndex<f64>,
    topics: Vec<Vec<u32>>,
    weights: LogNormal<f64>,
    rng: ChaCha8Rng,
}

impl ZipfGenerator {
    pub fn new(spec: ZipfSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let popularity = WeightedAliasIndex::new(
            (0..spec.dim)
                .map(|r| (f64::from(r) + 1.0).powf(-spec.zipf_exponent))
                .collect(),
        )
        .expect("valid weights");
        let vocab = spec.topic_vocab.min(spec.dim as usize);
        let topics = (0..spec.topics)
            .map(|_| {
                let mut t: Vec<u32> = sample(&mut rng, spec.dim as usize, vocab)
                    .into_iter()
                    .map(|d| d as u32)
                    .collect();
                t.sort_unstable();
                t
            })
            .collect();
        let weights = LogNormal::new(0.0, spec.weight_sigma).expect("valid sigma");
        Self {
            spec,
            popularity,
            topics,
            weights,
            rng,
        }
    }

    fn vector(&mut self, nnz: usize) -> SparseVector<f32> {
        let topic = self.rng.gen_range(0..self.topics.len().max(1));
        let nnz = nnz.min(self.spec.dim as usize);
        let from_topic = ((nnz as f64 * self.spec.topic_share).round() as usize)
            .min(self.topics.get(topic).map_or(0, Vec::len));
        let mut entries: Vec<(u32, f32)> = Vec::with_capacity(nnz);
        if from_topic > 0 {
            let vocab = &self.topics[topic];
            for p in sample(&mut self.rng, vocab.len(), from_topic) {
                let w = self.weights.sample(&mut self.rng) as f32 * self.spec.topic_boost;
                entries.push((vocab[p], w));
            }
        }
        let mut guard = 0;
        while entries.len() < nnz && guard < 100 * nnz {
            guard += 1;
            let d = self.popularity.sample(&mut self.rng) as u32;
            if entries.iter().any(|(e, _)| *e == d) {
                continue;
            }
            entries.push((d, self.weights.sample(&mut self.rng) as f32));
        }
        SparseVector::from_pairs(
            entries
                .into_iter()
                .map(|(d, w)| (d, w.max(f32::MIN_POSITIVE))),
        )
        .expect("distinct dims")
    }

    pub fn collection(&mut self, n: usize) -> VectorSet<f32> {
        let nnz = self.spec.doc_nnz;
        let vectors = (0..n).map(|_| self.vector(nnz)).collect();
        VectorSet::new(self.spec.dim, vectors).expect("dims in range")
    }

    pub fn queries(&mut self, n: usize) -> VectorSet<f32> {
        let nnz = self.spec.query_nnz;
        let vectors = (0..n).map(|_| self.vector(nnz)).collect();
        VectorSet::new(self.spec.dim, vectors).expect("dims in range")
    }
}

/// Documents and queries from one generator.
pub fn zipf_dataset(
    spec: ZipfSpec,
    docs: usize,
    queries: usize,
    seed: u64,
) -> (VectorSet<f32>, VectorSet<f32>) {
    let mut g = ZipfGenerator::new(spec, seed);
    let d = g.collection(docs);
    let q = g.queries(queries);
    (d, q)
}
