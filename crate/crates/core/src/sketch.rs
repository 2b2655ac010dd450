//! Sketches of sparse vectors and collections.
//!
//! * [`l1_threshold_sample`] / [`ts_estimate`]: randomized ℓ1 threshold
//!   sampling with an unbiased weighted inner-product estimator.
//! * [`alpha_mss`]: keep the fewest largest entries carrying at least an
//!   `alpha` fraction of the ℓ1 mass.
//! * [`set_alpha_mss`]: per dimension, keep the `ceil(alpha * |L_i|)` largest
//!   values of the column across the whole collection.

use std::cmp::Ordering;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{acc_from_f64, Scalar};
use crate::sparse::{SparseVector, VectorSet};

/// SplitMix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent 64-bit seed for a sub-stream (list, source point, ...).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    mix64(seed ^ mix64(stream.wrapping_add(0x6a09_e667_f3bc_c909)))
}

/// Seeded hash of a dimension index into `[0, 1)`.
///
/// `h(seed, i) = splitmix64(seed * φ64 + splitmix64(i + φ64)) / 2^64`, with
/// φ64 = 0x9e3779b97f4a7c15, truncated to the top 53 bits so the result is
/// exactly representable and strictly below 1. Fixed so sketches reproduce
/// across platforms.
#[inline]
pub fn unit_hash(seed: u64, dim: u32) -> f64 {
    const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
    let key = mix64(u64::from(dim).wrapping_add(GOLDEN));
    let h = mix64(seed.wrapping_mul(GOLDEN).wrapping_add(key));
    (h >> 11) as f64 / 9_007_199_254_740_992.0
}

/// Output of ℓ1 threshold sampling.
#[derive(Clone, Debug, PartialEq)]
pub struct TsSketch<T> {
    pub keys: Vec<u32>,
    pub values: Vec<T>,
    /// `target / ||u||_1`
    pub tau: f64,
    pub target: f64,
    pub seed: u64,
}

impl<T> TsSketch<T> {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

/// Keeps entry `i` iff `h(i) <= min(1, target * u_i / ||u||_1)`.
pub fn l1_threshold_sample<T: Scalar>(
    u: &SparseVector<T>,
    target: f64,
    seed: u64,
) -> Result<TsSketch<T>> {
    if target.is_nan() || target <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "sketch size must be positive, got {target}"
        )));
    }
    let norm = u.lp_norm(crate::sparse::Norm::L1);
    if norm.is_nan() || norm <= 0.0 {
        return Err(Error::ZeroVector);
    }
    let tau = target / norm;
    let mut keys = Vec::new();
    let mut values = Vec::new();
    for (d, v) in u.iter() {
        let threshold = (tau * v.to_f64_lossy()).min(1.0);
        if unit_hash(seed, d) <= threshold {
            keys.push(d);
            values.push(v.clone());
        }
    }
    Ok(TsSketch {
        keys,
        values,
        tau,
        target,
        seed,
    })
}

/// Inner-product estimate `sum_{i in K_u ∩ K_v} u_i v_i / min(1, u_i tau_u, v_i tau_v)`.
///
/// Both sketches must come from the same hash seed.
pub fn ts_estimate<T: Scalar>(a: &TsSketch<T>, b: &TsSketch<T>) -> f64 {
    debug_assert_eq!(a.seed, b.seed, "sketches built with different seeds");
    let (mut i, mut j) = (0, 0);
    let mut acc = 0.0;
    while i < a.keys.len() && j < b.keys.len() {
        match a.keys[i].cmp(&b.keys[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                let (x, y) = (a.values[i].to_f64_lossy(), b.values[j].to_f64_lossy());
                let p = 1f64.min(x * a.tau).min(y * b.tau);
                acc += x * y / p;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

fn check_fraction(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must lie in (0, 1], got {x}"
        )))
    }
}

/// Orders by value descending, then by the secondary key ascending.
fn desc_value_then_key<T: PartialOrd>(a: (&T, u32), b: (&T, u32)) -> Ordering {
    b.0.partial_cmp(a.0)
        .unwrap_or(Ordering::Equal)
        .then(a.1.cmp(&b.1))
}

/// Smallest set of largest entries whose ℓ1 sum reaches `alpha * ||u||_1`.
///
/// Ties in value are taken in ascending dimension order.
pub fn alpha_mss<T: Scalar>(u: &SparseVector<T>, alpha: f64) -> Result<SparseVector<T>> {
    check_fraction("alpha", alpha)?;
    let norm = u.l1_norm();
    if norm.partial_cmp(&T::Acc::zero()) != Some(Ordering::Greater) {
        return Err(Error::ZeroVector);
    }
    let goal = acc_from_f64::<T::Acc>(alpha) * norm;

    let mut order: Vec<usize> = (0..u.len()).collect();
    let (dims, values) = (u.dims(), u.values());
    order.sort_by(|&a, &b| desc_value_then_key((&values[a], dims[a]), (&values[b], dims[b])));

    let mut mass = T::Acc::zero();
    let mut kept = 0;
    for &p in &order {
        mass = mass + values[p].widen();
        kept += 1;
        if mass >= goal {
            break;
        }
    }
    let mut keep: Vec<usize> = order[..kept].to_vec();
    keep.sort_unstable();
    Ok(SparseVector::from_sorted_unchecked(
        keep.iter().map(|&p| dims[p]).collect(),
        keep.iter().map(|&p| values[p].clone()).collect(),
    ))
}

/// `ceil(fraction * n)` clamped to `[1, n]`; a 1e-9 slack absorbs products
/// such as `0.7 * 10 = 7.000000000000001`.
pub fn keep_count(fraction: f64, n: usize) -> usize {
    if n == 0 {
        return 0;
    }
    let raw = (fraction * n as f64 - 1e-9).ceil();
    (raw.max(1.0) as usize).min(n)
}

/// Collection-level α-MSS: in every column keep the `ceil(alpha * |L_i|)`
/// largest values and zero the rest. Ties keep lower row ids.
pub fn set_alpha_mss<T: Scalar>(set: &VectorSet<T>, alpha: f64) -> Result<VectorSet<T>> {
    check_fraction("alpha", alpha)?;
    let dim = set.dim() as usize;
    // column entries: (row, position within row)
    let mut columns: Vec<Vec<(u32, u32)>> = vec![Vec::new(); dim];
    for (row, v) in set.iter().enumerate() {
        for (pos, &d) in v.dims().iter().enumerate() {
            columns[d as usize].push((row as u32, pos as u32));
        }
    }

    let mut keep: Vec<Vec<bool>> = set.iter().map(|v| vec![false; v.len()]).collect();
    for column in &mut columns {
        if column.is_empty() {
            continue;
        }
        let value = |&(row, pos): &(u32, u32)| &set.get(row as usize).values()[pos as usize];
        column.sort_by(|a, b| desc_value_then_key((value(a), a.0), (value(b), b.0)));
        let lambda = keep_count(alpha, column.len());
        for &(row, pos) in &column[..lambda] {
            keep[row as usize][pos as usize] = true;
        }
    }

    let vectors = set
        .iter()
        .zip(keep)
        .map(|(v, mask)| {
            let (dims, values) = v
                .iter()
                .zip(mask)
                .filter(|(_, k)| *k)
                .map(|((d, x), _)| (d, x.clone()))
                .unzip();
            SparseVector::from_sorted_unchecked(dims, values)
        })
        .collect();
    Ok(VectorSet::new_unchecked(set.dim(), vectors))
}
