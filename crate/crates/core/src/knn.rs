//! κ-NN graph: for each point, the ids of the κ other points with the
//! largest inner product, best first (ties by ascending id).

use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::index::SeismicIndex;
use crate::io::{put_u32, put_u64, Reader};
use crate::query::{score, ScoredId, SearchParams, Searcher};
use crate::sketch::derive_seed;
use crate::sparse::VectorSet;

/// Size of the random sample used to pad short neighbor lists.
const PAD_SAMPLE: usize = 1000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnnGraph {
    kappa: u32,
    n: usize,
    /// Row-major, `n * degree` ids.
    neighbors: Vec<u32>,
}

/// `floor(log2(n - 1)) + 1`: bits needed for an id below `n`.
fn id_bits(n: u64) -> u32 {
    64 - (n - 1).leading_zeros()
}

/// Storage cost of a κ-NN graph in bits: `(floor(log2(N-1)) + 1) * N * κ`.
pub fn graph_size_bits(n: u64, kappa: u32) -> Result<u64> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "graph size needs at least 2 points, got {n}"
        )));
    }
    Ok(u64::from(id_bits(n)) * n * u64::from(kappa))
}

fn id_width_bytes(n: usize) -> u8 {
    if n < 2 {
        return 1;
    }
    id_bits(n as u64).div_ceil(8).max(1) as u8
}

/// Ranks `candidates` and keeps the best `take`.
fn best_of(mut candidates: Vec<ScoredId>, take: usize) -> Vec<u32> {
    if candidates.len() > take && take > 0 {
        candidates.select_nth_unstable_by(take - 1, ScoredId::rank_cmp);
        candidates.truncate(take);
    }
    candidates.sort_by(ScoredId::rank_cmp);
    candidates.truncate(take);
    candidates.into_iter().map(|s| s.id).collect()
}

impl KnnGraph {
    /// A disabled graph (κ = 0) over `n` points.
    pub fn empty(n: usize) -> Self {
        Self {
            kappa: 0,
            n,
            neighbors: Vec::new(),
        }
    }

    pub fn kappa(&self) -> u32 {
        self.kappa
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Neighbors per point: `min(κ, N - 1)`.
    pub fn degree(&self) -> usize {
        (self.kappa as usize).min(self.n.saturating_sub(1))
    }

    pub fn neighbors(&self, id: u32) -> &[u32] {
        let d = self.degree();
        let start = id as usize * d;
        &self.neighbors[start..start + d]
    }

    fn from_rows(n: usize, kappa: u32, rows: Vec<Vec<u32>>) -> Self {
        let mut g = Self {
            kappa,
            n,
            neighbors: Vec::new(),
        };
        let d = g.degree();
        g.neighbors.reserve(n * d);
        for row in rows {
            debug_assert_eq!(row.len(), d);
            g.neighbors.extend(row);
        }
        g
    }

    /// Brute-force graph. Scores match [`crate::query::score`] bit for bit:
    /// each point's candidates are accumulated over its dimensions in
    /// ascending order, the same sequence of f64 additions as the merge dot.
    pub fn exact(set: &VectorSet<f32>, kappa: u32) -> Self {
        let n = set.len();
        if kappa == 0 || n < 2 {
            return Self::from_rows(n, kappa, vec![Vec::new(); n]);
        }
        let degree = (kappa as usize).min(n - 1);
        let mut postings: Vec<Vec<(u32, f32)>> = vec![Vec::new(); set.dim() as usize];
        for (id, v) in set.iter().enumerate() {
            for (d, &x) in v.iter() {
                postings[d as usize].push((id as u32, x));
            }
        }
        let rows = (0..n)
            .into_par_iter()
            .map_init(
                || (vec![0f64; n], Vec::<u32>::new()),
                |(acc, touched), u| {
                    let src = set.get(u);
                    for (d, &x) in src.iter() {
                        for &(v, y) in &postings[d as usize] {
                            if acc[v as usize] == 0.0 {
                                touched.push(v);
                            }
                            acc[v as usize] += f64::from(x) * f64::from(y);
                        }
                    }
                    let mut hits: Vec<ScoredId> = touched
                        .iter()
                        .filter(|&&v| v as usize != u)
                        .map(|&v| ScoredId {
                            id: v,
                            score: acc[v as usize] as f32,
                        })
                        .collect();
                    for &v in touched.iter() {
                        acc[v as usize] = 0.0;
                    }
                    touched.clear();
                    let mut row = best_of(std::mem::take(&mut hits), degree);
                    fill_lowest_ids(&mut row, u as u32, n, degree);
                    row
                },
            )
            .collect();
        Self::from_rows(n, kappa, rows)
    }

    /// Approximate graph: every point is searched against the index (without
    /// graph expansion) for its top `κ + 1`, itself is dropped, and short
    /// lists are padded.
    pub fn approximate(
        index: &SeismicIndex,
        kappa: u32,
        alpha_q: f64,
        heap_factor: f64,
    ) -> Result<Self> {
        let set = index.forward();
        let n = set.len();
        if kappa == 0 || n < 2 {
            return Ok(Self::from_rows(n, kappa, vec![Vec::new(); n]));
        }
        let degree = (kappa as usize).min(n - 1);
        let params = SearchParams::new(degree + 1, alpha_q, heap_factor);
        params.validate()?;
        let searcher = Searcher::new(index, None);
        let seed = index.params().seed;
        let rows = (0..n)
            .into_par_iter()
            .map_init(
                || searcher.scratch(),
                |scratch, u| -> Result<Vec<u32>> {
                    let src = set.get(u);
                    let mut row: Vec<u32> = if src.is_empty() {
                        Vec::new()
                    } else {
                        searcher
                            .search_with(src, &params, scratch)?
                            .results
                            .into_iter()
                            .map(|s| s.id)
                            .filter(|&v| v as usize != u)
                            .take(degree)
                            .collect()
                    };
                    if row.len() < degree {
                        pad_from_sample(&mut row, set, u, degree, derive_seed(seed, u as u64));
                    }
                    Ok(row)
                },
            )
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_rows(n, kappa, rows))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let width = id_width_bytes(self.n) as usize;
        let mut out = Vec::with_capacity(13 + self.neighbors.len() * width);
        put_u64(&mut out, self.n as u64);
        put_u32(&mut out, self.kappa);
        out.push(width as u8);
        for &id in &self.neighbors {
            out.extend_from_slice(&id.to_le_bytes()[..width]);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 13 {
            return Err(Error::Header("graph header needs 13 bytes".into()));
        }
        let mut r = Reader::new(bytes);
        let n = r.u64()?;
        let kappa = r.u32()?;
        let width = r.u8()?;
        let n = usize::try_from(n).map_err(|_| Error::Header(format!("{n} points")))?;
        if width == 0 || width > 4 || width != id_width_bytes(n) {
            return Err(Error::Header(format!(
                "bad id width {width} for {n} points"
            )));
        }
        let mut g = Self::from_rows(n, kappa, Vec::new());
        let total = r.ensure((n * g.degree()) as u64, width as usize)?;
        let mut neighbors = Vec::with_capacity(total);
        for _ in 0..total {
            let mut buf = [0u8; 4];
            buf[..width as usize].copy_from_slice(r.take(width as usize)?);
            let id = u32::from_le_bytes(buf);
            if id as usize >= n {
                return Err(Error::Inconsistent(format!(
                    "neighbor id {id} out of range"
                )));
            }
            neighbors.push(id);
        }
        if r.remaining() != 0 {
            return Err(Error::Inconsistent("trailing bytes in graph file".into()));
        }
        g.neighbors = neighbors;
        Ok(g)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    /// Fraction of edges of `self` also present in `reference` (as sets per point).
    pub fn edge_agreement(&self, reference: &KnnGraph) -> f64 {
        let d = self.degree().min(reference.degree());
        if d == 0 || self.n == 0 {
            return 1.0;
        }
        let mut hits = 0usize;
        for u in 0..self.n.min(reference.n) as u32 {
            let theirs = &reference.neighbors(u)[..d];
            hits += self.neighbors(u)[..d]
                .iter()
                .filter(|v| theirs.contains(v))
                .count();
        }
        hits as f64 / (d * self.n.min(reference.n)) as f64
    }
}

/// Appends the lowest ids not yet present (zero-score ties) until `degree`.
fn fill_lowest_ids(row: &mut Vec<u32>, source: u32, n: usize, degree: usize) {
    let mut next = 0u32;
    while row.len() < degree && (next as usize) < n {
        if next != source && !row.contains(&next) {
            row.push(next);
        }
        next += 1;
    }
}

/// Pads a short list with positively scored points from a seeded random
/// sample, then with the lowest unseen ids.
fn pad_from_sample(row: &mut Vec<u32>, set: &VectorSet<f32>, u: usize, degree: usize, seed: u64) {
    let n = set.len();
    let src = set.get(u);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampled = sample(&mut rng, n, PAD_SAMPLE.min(n)).into_vec();
    let extra: Vec<ScoredId> = sampled
        .into_iter()
        .map(|v| v as u32)
        .filter(|&v| v as usize != u && !row.contains(&v))
        .map(|v| ScoredId {
            id: v,
            score: score(src, set.get(v as usize)),
        })
        .filter(|s| s.score > 0.0)
        .collect();
    let need = degree - row.len();
    row.extend(best_of(extra, need));
    fill_lowest_ids(row, u as u32, n, degree);
}
