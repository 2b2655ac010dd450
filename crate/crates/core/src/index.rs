//! Blocked inverted index with per-block summaries.
//!
//! Build steps:
//!
//! 1. sketch the collection with [`set_alpha_mss`];
//! 2. form one inverted list per dimension from the sketched vectors;
//! 3. split each list into blocks with a single round of K-Means whose
//!    centroids are `ceil(beta * |L_i|)` sampled members;
//! 4. summarize each block by the coordinatewise maximum of its sketched
//!    members, truncate the summary with `gamma`-MSS and optionally quantize
//!    it to one byte per entry.
//!
//! The original vectors are kept as the forward index for exact scoring.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{
    decode_collection_from, encode_collection, put_f32, put_f64, put_u32, put_u64, Reader,
};
use crate::sketch::{alpha_mss, derive_seed, keep_count, set_alpha_mss};
use crate::sparse::{SparseVector, VectorSet};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BuildParams {
    /// Set α-MSS fraction, in (0, 1].
    pub alpha: f64,
    /// Blocks per list as a fraction of the list length, in (0, 1).
    pub beta: f64,
    /// Summary α-MSS fraction, in (0, 1].
    pub gamma: f64,
    pub quantize: bool,
    pub seed: u64,
}

impl Default for BuildParams {
    fn default() -> Self {
        Self {
            alpha: 0.4,
            beta: 0.2,
            gamma: 0.6,
            quantize: true,
            seed: 0,
        }
    }
}

impl BuildParams {
    pub fn validate(&self) -> Result<()> {
        let frac = |name: &str, x: f64| {
            if x > 0.0 && x <= 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must lie in (0, 1], got {x}"
                )))
            }
        };
        frac("alpha", self.alpha)?;
        frac("gamma", self.gamma)?;
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in (0, 1), got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// One-byte scalar quantization of a summary: `value ≈ min + code * delta`
/// with `delta = (max - min) / 256`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantizedSummary {
    dims: Vec<u32>,
    codes: Vec<u8>,
    min: f32,
    delta: f32,
}

impl QuantizedSummary {
    pub fn quantize(s: &SparseVector<f32>) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::InvalidParameter(
                "cannot quantize an empty summary".into(),
            ));
        }
        let values = s.values();
        let min = values.iter().copied().fold(f32::INFINITY, f32::min);
        let max = values.iter().copied().fold(f32::NEG_INFINITY, f32::max);
        let mut delta = ((f64::from(max) - f64::from(min)) / 256.0) as f32;
        // keep min + 256 * delta >= max after rounding delta to f32
        while f64::from(min) + 256.0 * f64::from(delta) < f64::from(max) {
            delta = f32::from_bits(delta.to_bits() + 1);
        }
        let codes = values
            .iter()
            .map(|&v| {
                if delta == 0.0 {
                    0
                } else {
                    let bin = ((f64::from(v) - f64::from(min)) / f64::from(delta)).floor();
                    bin.clamp(0.0, 255.0) as u8
                }
            })
            .collect();
        Ok(Self {
            dims: s.dims().to_vec(),
            codes,
            min,
            delta,
        })
    }

    pub fn dims(&self) -> &[u32] {
        &self.dims
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    pub fn min(&self) -> f32 {
        self.min
    }

    pub fn delta(&self) -> f32 {
        self.delta
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    #[inline]
    pub fn reconstruct(&self, position: usize) -> f64 {
        f64::from(self.min) + f64::from(self.codes[position]) * f64::from(self.delta)
    }

    /// Inner product of `q` with the reconstructed summary.
    pub fn score(&self, q: &SparseVector<f32>) -> f64 {
        let qd = q.dims();
        let qv = q.values();
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0;
        while i < qd.len() && j < self.dims.len() {
            match qd[i].cmp(&self.dims[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += f64::from(qv[i]) * self.reconstruct(j);
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Summary {
    Raw(SparseVector<f32>),
    Quantized(QuantizedSummary),
}

impl Summary {
    pub fn score(&self, q: &SparseVector<f32>) -> f64 {
        match self {
            Summary::Raw(s) => q.dot(s),
            Summary::Quantized(s) => s.score(q),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Summary::Raw(s) => s.len(),
            Summary::Quantized(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> &[u32] {
        match self {
            Summary::Raw(s) => s.dims(),
            Summary::Quantized(s) => s.dims(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    /// Member ids, ascending.
    pub ids: Vec<u32>,
    pub summary: Summary,
}

/// Partitions one inverted list into blocks.
///
/// `c = ceil(beta * n)` members (at least one, at most `n`) are sampled
/// without replacement as centroids; each member joins the centroid with
/// the largest inner product, ties going to the earliest sampled centroid.
/// Empty clusters are dropped. Each returned block lists ids ascending.
pub fn cluster_list(members: &[(u32, &SparseVector<f32>)], beta: f64, seed: u64) -> Vec<Vec<u32>> {
    let n = members.len();
    if n == 0 {
        return Vec::new();
    }
    let c = keep_count(beta, n);
    if c == 1 {
        let mut ids: Vec<u32> = members.iter().map(|(id, _)| *id).collect();
        ids.sort_unstable();
        return vec![ids];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centroids: Vec<usize> = sample(&mut rng, n, c).into_vec();

    // dim -> (centroid, value)
    let mut by_dim: HashMap<u32, Vec<(u32, f32)>> = HashMap::new();
    for (k, &m) in centroids.iter().enumerate() {
        for (d, &v) in members[m].1.iter() {
            by_dim.entry(d).or_default().push((k as u32, v));
        }
    }

    let mut scores = vec![0f64; c];
    let mut clusters: Vec<Vec<u32>> = vec![Vec::new(); c];
    for &(id, v) in members {
        scores.iter_mut().for_each(|s| *s = 0.0);
        for (d, &x) in v.iter() {
            if let Some(hits) = by_dim.get(&d) {
                for &(k, y) in hits {
                    scores[k as usize] += f64::from(x) * f64::from(y);
                }
            }
        }
        let mut best = 0;
        for k in 1..c {
            if scores[k] > scores[best] {
                best = k;
            }
        }
        clusters[best].push(id);
    }
    clusters
        .into_iter()
        .filter(|b| !b.is_empty())
        .map(|mut b| {
            b.sort_unstable();
            b
        })
        .collect()
}

/// Coordinatewise maximum of the members.
pub fn summarize(members: &[&SparseVector<f32>]) -> SparseVector<f32> {
    let mut entries: Vec<(u32, f32)> = members
        .iter()
        .flat_map(|v| v.iter().map(|(d, &x)| (d, x)))
        .collect();
    entries.sort_unstable_by_key(|(d, _)| *d);
    let mut dims: Vec<u32> = Vec::with_capacity(entries.len());
    let mut values: Vec<f32> = Vec::with_capacity(entries.len());
    for (d, x) in entries {
        if dims.last() == Some(&d) {
            let last = values.last_mut().unwrap();
            *last = last.max(x);
        } else {
            dims.push(d);
            values.push(x);
        }
    }
    SparseVector::from_sorted_unchecked(dims, values)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeismicIndex {
    params: BuildParams,
    lists: Vec<Vec<Block>>,
    forward: VectorSet<f32>,
}

fn build_list(
    dim: usize,
    ids: &[u32],
    sketched: &VectorSet<f32>,
    params: &BuildParams,
) -> Result<Vec<Block>> {
    if ids.is_empty() {
        return Ok(Vec::new());
    }
    let members: Vec<(u32, &SparseVector<f32>)> = ids
        .iter()
        .map(|&id| (id, sketched.get(id as usize)))
        .collect();
    let partition = cluster_list(&members, params.beta, derive_seed(params.seed, dim as u64));
    partition
        .into_iter()
        .map(|block_ids| {
            let vectors: Vec<&SparseVector<f32>> = block_ids
                .iter()
                .map(|&id| sketched.get(id as usize))
                .collect();
            let summary = alpha_mss(&summarize(&vectors), params.gamma)?;
            let summary = if params.quantize {
                Summary::Quantized(QuantizedSummary::quantize(&summary)?)
            } else {
                Summary::Raw(summary)
            };
            Ok(Block {
                ids: block_ids,
                summary,
            })
        })
        .collect()
}

const MAGIC: &[u8; 8] = b"SEISMIC\0";
const FORMAT_VERSION: u32 = 1;
const SUMMARY_RAW: u8 = 0;
const SUMMARY_QUANTIZED: u8 = 1;

impl SeismicIndex {
    /// Builds the index. Lists are processed in parallel on the current rayon
    /// pool; the result does not depend on the number of workers.
    pub fn build(set: &VectorSet<f32>, params: BuildParams) -> Result<Self> {
        params.validate()?;
        if set.is_empty() {
            return Err(Error::EmptyCollection);
        }
        let sketched = set_alpha_mss(set, params.alpha)?;
        let postings = sketched.posting_lists();
        let lists = postings
            .par_iter()
            .enumerate()
            .map(|(dim, ids)| build_list(dim, ids, &sketched, &params))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            params,
            lists,
            forward: set.clone(),
        })
    }

    pub fn params(&self) -> &BuildParams {
        &self.params
    }

    pub fn dim(&self) -> u32 {
        self.forward.dim()
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn forward(&self) -> &VectorSet<f32> {
        &self.forward
    }

    pub fn list(&self, dim: u32) -> &[Block] {
        self.lists.get(dim as usize).map_or(&[], Vec::as_slice)
    }

    pub fn lists(&self) -> &[Vec<Block>] {
        &self.lists
    }

    pub fn num_blocks(&self) -> usize {
        self.lists.iter().map(Vec::len).sum()
    }

    pub fn num_postings(&self) -> usize {
        self.lists.iter().flatten().map(|b| b.ids.len()).sum()
    }

    pub fn summary_entries(&self) -> usize {
        self.lists.iter().flatten().map(|b| b.summary.len()).sum()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, FORMAT_VERSION);
        put_f64(&mut out, self.params.alpha);
        put_f64(&mut out, self.params.beta);
        put_f64(&mut out, self.params.gamma);
        out.push(u8::from(self.params.quantize));
        put_u64(&mut out, self.params.seed);
        put_u64(&mut out, self.lists.len() as u64);
        for list in &self.lists {
            put_u32(&mut out, list.len() as u32);
            for block in list {
                put_u32(&mut out, block.ids.len() as u32);
                for &id in &block.ids {
                    put_u32(&mut out, id);
                }
                match &block.summary {
                    Summary::Raw(s) => {
                        out.push(SUMMARY_RAW);
                        put_u32(&mut out, s.len() as u32);
                        s.dims().iter().for_each(|&d| put_u32(&mut out, d));
                        s.values().iter().for_each(|&v| put_f32(&mut out, v));
                    }
                    Summary::Quantized(s) => {
                        out.push(SUMMARY_QUANTIZED);
                        put_u32(&mut out, s.len() as u32);
                        s.dims.iter().for_each(|&d| put_u32(&mut out, d));
                        put_f32(&mut out, s.min);
                        put_f32(&mut out, s.delta);
                        out.extend_from_slice(&s.codes);
                    }
                }
            }
        }
        out.extend_from_slice(&encode_collection(&self.forward));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if bytes.len() < MAGIC.len() + 4 || r.take(MAGIC.len())? != MAGIC {
            return Err(Error::Header("not an index file".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Version(version));
        }
        let params = BuildParams {
            alpha: r.f64()?,
            beta: r.f64()?,
            gamma: r.f64()?,
            quantize: r.u8()? != 0,
            seed: r.u64()?,
        };
        params.validate()?;
        let n_lists = r.u64()?;
        let n_lists = r.ensure(n_lists, 4)?;
        let mut lists = Vec::with_capacity(n_lists);
        for _ in 0..n_lists {
            let n_blocks = r.u32()?;
            let mut list = Vec::with_capacity(r.ensure(u64::from(n_blocks), 9)?);
            for _ in 0..n_blocks {
                let n_ids = u64::from(r.u32()?);
                let n_ids = r.ensure(n_ids, 4)?;
                let ids = (0..n_ids).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
                let kind = r.u8()?;
                let len = u64::from(r.u32()?);
                let len = r.ensure(len, 4)?;
                let dims = (0..len).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
                let summary = match kind {
                    SUMMARY_RAW => {
                        let values = (0..len).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
                        Summary::Raw(SparseVector::new(dims, values)?)
                    }
                    SUMMARY_QUANTIZED => {
                        let min = r.f32()?;
                        let delta = r.f32()?;
                        let codes = r.take(len)?.to_vec();
                        Summary::Quantized(QuantizedSummary {
                            dims,
                            codes,
                            min,
                            delta,
                        })
                    }
                    other => {
                        return Err(Error::Inconsistent(format!("unknown summary kind {other}")))
                    }
                };
                list.push(Block { ids, summary });
            }
            lists.push(list);
        }
        let forward = decode_collection_from(&mut r)?;
        if r.remaining() != 0 {
            return Err(Error::Inconsistent(format!(
                "{} trailing bytes at offset {}",
                r.remaining(),
                r.position()
            )));
        }
        if lists.len() != forward.dim() as usize {
            return Err(Error::Inconsistent(format!(
                "{} lists for dimensionality {}",
                lists.len(),
                forward.dim()
            )));
        }
        let n = forward.len() as u32;
        if lists
            .iter()
            .flatten()
            .flat_map(|b| &b.ids)
            .any(|&id| id >= n)
        {
            return Err(Error::Inconsistent("block references unknown id".into()));
        }
        Ok(Self {
            params,
            lists,
            forward,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}
