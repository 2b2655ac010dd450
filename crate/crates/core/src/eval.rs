//! Exact oracle, accuracy, dataset statistics and latency measurement.

use std::collections::HashSet;
use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::GroundTruth;
use crate::query::{score, ResultList, ScoredId, SearchParams, Searcher};
use crate::sketch::alpha_mss;
use crate::sparse::{SparseVector, VectorSet};

/// Exhaustive top-k by inner product, ties by ascending id.
pub fn exact_topk(set: &VectorSet<f32>, q: &SparseVector<f32>, k: usize) -> Result<ResultList> {
    if set.is_empty() {
        return Err(Error::EmptyCollection);
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let mut all: Vec<ScoredId> = set
        .iter()
        .enumerate()
        .map(|(id, u)| ScoredId {
            id: id as u32,
            score: score(q, u),
        })
        .collect();
    all.sort_by(ScoredId::rank_cmp);
    all.truncate(k);
    Ok(all)
}

/// Exact answers for a batch of queries (parallel over queries).
pub fn ground_truth(
    set: &VectorSet<f32>,
    queries: &VectorSet<f32>,
    k: usize,
) -> Result<GroundTruth> {
    let rows = queries
        .vectors()
        .par_iter()
        .map(|q| exact_topk(set, q, k))
        .collect::<Result<Vec<_>>>()?;
    let k = k.min(set.len());
    Ok(GroundTruth { k, rows })
}

/// `|truth[..k] ∩ run[..k]| / k` over ids. A short run counts its missing
/// entries as misses.
pub fn accuracy_at_k(truth: &[ScoredId], run: &[ScoredId], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    if k > truth.len() {
        return Err(Error::InvalidParameter(format!(
            "k = {k} exceeds ground-truth depth {}",
            truth.len()
        )));
    }
    let wanted: HashSet<u32> = truth[..k].iter().map(|s| s.id).collect();
    let hits = run
        .iter()
        .take(k)
        .map(|s| s.id)
        .collect::<HashSet<_>>()
        .intersection(&wanted)
        .count();
    Ok(hits as f64 / k as f64)
}

/// Mean accuracy@k over a batch. Missing runs count as zero.
pub fn mean_accuracy(truth: &GroundTruth, runs: &[ResultList], k: usize) -> Result<f64> {
    if truth.rows.is_empty() {
        return Ok(0.0);
    }
    let empty = Vec::new();
    let mut total = 0.0;
    for (q, t) in truth.rows.iter().enumerate() {
        total += accuracy_at_k(t, runs.get(q).unwrap_or(&empty), k)?;
    }
    Ok(total / truth.rows.len() as f64)
}

/// Mean fraction of ℓ1 mass carried by the `j` largest entries, for
/// `j = 1..=max_keep` (entry `j - 1` of the result). Empty vectors are
/// ignored.
pub fn mass_curve(set: &VectorSet<f32>, max_keep: usize) -> Result<Vec<f64>> {
    if set.is_empty() {
        return Err(Error::EmptyCollection);
    }
    let mut sums = vec![0.0; max_keep];
    let mut counted = 0usize;
    for v in set {
        let total = v.l1_norm();
        if total <= 0.0 {
            continue;
        }
        counted += 1;
        let mut vals: Vec<f32> = v.values().to_vec();
        vals.sort_by(|a, b| b.total_cmp(a));
        let mut running = 0.0;
        for (j, slot) in sums.iter_mut().enumerate() {
            if let Some(&x) = vals.get(j) {
                running += f64::from(x);
            }
            *slot += (running / total).min(1.0);
        }
    }
    if counted == 0 {
        return Err(Error::ZeroVector);
    }
    Ok(sums.into_iter().map(|s| s / counted as f64).collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IpPreservation {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub pairs: usize,
}

/// Mean of `<q~, u~> / <q, u>` over sampled pairs with a positive inner
/// product, where `q~` and `u~` are per-vector α-MSS sketches. The interval
/// is a 95% normal approximation.
pub fn ip_preservation(
    set: &VectorSet<f32>,
    queries: &VectorSet<f32>,
    alpha_doc: f64,
    alpha_query: f64,
    sample_size: usize,
    seed: u64,
) -> Result<IpPreservation> {
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (qi, q) in queries.iter().enumerate() {
        for (ui, u) in set.iter().enumerate() {
            if q.dot(u) > 0.0 {
                pairs.push((qi, ui));
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::InvalidParameter(
            "no pair with a positive inner product".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = sample(&mut rng, pairs.len(), sample_size.clamp(1, pairs.len())).into_vec();

    let ratios: Vec<f64> = picked
        .into_iter()
        .map(|p| {
            let (qi, ui) = pairs[p];
            let (q, u) = (queries.get(qi), set.get(ui));
            let qs = alpha_mss(q, alpha_query)?;
            let us = alpha_mss(u, alpha_doc)?;
            Ok(qs.dot(&us) / q.dot(u))
        })
        .collect::<Result<_>>()?;
    let n = ratios.len() as f64;
    let mean = ratios.iter().sum::<f64>() / n;
    let var = if ratios.len() > 1 {
        ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let half = 1.96 * (var / n).sqrt();
    Ok(IpPreservation {
        mean,
        ci_low: mean - half,
        ci_high: mean + half,
        pairs: ratios.len(),
    })
}

/// Per-query ratio `||v_I||_1 / ||u_I||_1` where `u` is the nearest point,
/// `v` the `k_far`-th nearest and `I` the query support. Returned sorted
/// ascending; the empirical CDF at the `i`-th value is `(i + 1) / len`.
/// Queries overlapping no point are skipped.
pub fn norm_ratio_cdf(
    set: &VectorSet<f32>,
    queries: &VectorSet<f32>,
    k_far: usize,
) -> Result<Vec<f64>> {
    if k_far == 0 {
        return Err(Error::InvalidParameter("k_far must be at least 1".into()));
    }
    let mut ratios = Vec::new();
    for q in queries {
        if q.is_empty() {
            continue;
        }
        let top = exact_topk(set, q, k_far)?;
        if top.len() < k_far || top[0].score <= 0.0 {
            continue;
        }
        let support: HashSet<u32> = q.dims().iter().copied().collect();
        let near = set.get(top[0].id as usize).restrict(&support).l1_norm();
        let far = set
            .get(top[k_far - 1].id as usize)
            .restrict(&support)
            .l1_norm();
        ratios.push(far / near);
    }
    ratios.sort_by(f64::total_cmp);
    Ok(ratios)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchReport {
    /// Best-of-repetitions wall time per query, microseconds.
    pub per_query_us: Vec<f64>,
    pub mean_us: f64,
    pub median_us: f64,
    pub p95_us: f64,
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Single-threaded latency measurement around the search call only. Each
/// query is run `repetitions` times and its fastest run is kept.
pub fn bench(
    searcher: &Searcher<'_>,
    queries: &VectorSet<f32>,
    params: &SearchParams,
    repetitions: usize,
) -> Result<BenchReport> {
    if queries.is_empty() {
        return Ok(BenchReport::default());
    }
    let reps = repetitions.max(1);
    let mut scratch = searcher.scratch();
    let mut per_query = Vec::with_capacity(queries.len());
    for q in queries {
        let mut best = f64::INFINITY;
        for _ in 0..reps {
            let start = Instant::now();
            let out = searcher.search_with(q, params, &mut scratch)?;
            let elapsed = start.elapsed().as_secs_f64() * 1e6;
            std::hint::black_box(out);
            best = best.min(elapsed);
        }
        per_query.push(best);
    }
    let mut sorted = per_query.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(BenchReport {
        mean_us: per_query.iter().sum::<f64>() / per_query.len() as f64,
        median_us: percentile(&sorted, 0.5),
        p95_us: percentile(&sorted, 0.95),
        per_query_us: per_query,
    })
}
