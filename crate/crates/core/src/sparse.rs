//! Sparse vectors and collections of them.
//!
//! A [`SparseVector`] stores its nonzero entries as parallel `dims`/`values`
//! arrays with strictly increasing dimensions and strictly positive values.

use std::cmp::Ordering;
use std::collections::HashSet;

use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct SparseVector<T> {
    dims: Vec<u32>,
    values: Vec<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
}

impl<T> Default for SparseVector<T> {
    fn default() -> Self {
        Self {
            dims: Vec::new(),
            values: Vec::new(),
        }
    }
}

impl<T: Scalar> SparseVector<T> {
    /// Builds a vector from parallel arrays, rejecting unsorted dims or
    /// nonpositive values.
    pub fn new(dims: Vec<u32>, values: Vec<T>) -> Result<Self> {
        if dims.len() != values.len() {
            return Err(Error::Inconsistent(format!(
                "{} dims but {} values",
                dims.len(),
                values.len()
            )));
        }
        if let Some(position) = dims.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::NonMonotone {
                row: 0,
                position: position + 1,
            });
        }
        if let Some(p) = values.iter().position(|v| !v.is_positive()) {
            return Err(Error::NonPositive {
                row: 0,
                dim: dims[p],
                value: values[p].to_f64_lossy(),
            });
        }
        Ok(Self { dims, values })
    }

    /// Builds a vector from `(dim, value)` pairs in any order.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, T)>) -> Result<Self> {
        let mut pairs: Vec<(u32, T)> = pairs.into_iter().collect();
        pairs.sort_by_key(|(d, _)| *d);
        let (dims, values) = pairs.into_iter().unzip();
        Self::new(dims, values)
    }

    pub(crate) fn from_sorted_unchecked(dims: Vec<u32>, values: Vec<T>) -> Self {
        debug_assert_eq!(dims.len(), values.len());
        debug_assert!(dims.windows(2).all(|w| w[0] < w[1]));
        Self { dims, values }
    }

    pub fn dims(&self) -> &[u32] {
        &self.dims
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &T)> + '_ {
        self.dims.iter().copied().zip(self.values.iter())
    }

    pub fn get(&self, dim: u32) -> Option<&T> {
        self.dims.binary_search(&dim).ok().map(|p| &self.values[p])
    }

    /// Largest dimension index present, if any.
    pub fn max_dim(&self) -> Option<u32> {
        self.dims.last().copied()
    }

    /// Inner product over common dimensions, accumulated in ascending
    /// dimension order.
    pub fn dot(&self, other: &Self) -> T::Acc {
        let mut acc = T::Acc::zero();
        let (mut i, mut j) = (0, 0);
        while i < self.dims.len() && j < other.dims.len() {
            match self.dims[i].cmp(&other.dims[j]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    acc = acc + self.values[i].widen() * other.values[j].widen();
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn l1_norm(&self) -> T::Acc {
        self.values
            .iter()
            .fold(T::Acc::zero(), |acc, v| acc + v.widen())
    }

    pub fn l2_norm_squared(&self) -> T::Acc {
        self.values.iter().fold(T::Acc::zero(), |acc, v| {
            let w = v.widen();
            acc + w.clone() * w
        })
    }

    /// ℓ1 or ℓ2 norm as an `f64`.
    pub fn lp_norm(&self, p: Norm) -> f64 {
        match p {
            Norm::L1 => self.l1_norm().to_f64().unwrap_or(f64::NAN),
            Norm::L2 => self.l2_norm_squared().to_f64().unwrap_or(f64::NAN).sqrt(),
        }
    }

    /// Keeps exactly the entries whose dimension satisfies `keep`.
    pub fn restrict_by(&self, mut keep: impl FnMut(u32) -> bool) -> Self {
        let (dims, values) = self
            .iter()
            .filter(|(d, _)| keep(*d))
            .map(|(d, v)| (d, v.clone()))
            .unzip();
        Self { dims, values }
    }

    pub fn restrict(&self, dims: &HashSet<u32>) -> Self {
        self.restrict_by(|d| dims.contains(&d))
    }

    /// True when every entry of `self` also appears, with the same value, in `other`.
    pub fn is_subvector_of(&self, other: &Self) -> bool {
        self.iter()
            .all(|(d, v)| other.get(d).is_some_and(|w| w == v))
    }

    /// Converts each value into another scalar type.
    pub fn cast<U: Scalar>(&self, mut f: impl FnMut(&T) -> Option<U>) -> Option<SparseVector<U>> {
        let values = self.values.iter().map(&mut f).collect::<Option<Vec<U>>>()?;
        Some(SparseVector {
            dims: self.dims.clone(),
            values,
        })
    }
}

/// A collection of sparse vectors sharing an ambient dimensionality.
/// Vector ids are their positions.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorSet<T> {
    dim: u32,
    vectors: Vec<SparseVector<T>>,
}

impl<T: Scalar> VectorSet<T> {
    pub fn new(dim: u32, vectors: Vec<SparseVector<T>>) -> Result<Self> {
        for v in &vectors {
            if let Some(m) = v.max_dim() {
                if m >= dim {
                    return Err(Error::DimensionOutOfRange {
                        dim: u64::from(m),
                        ambient: u64::from(dim),
                    });
                }
            }
        }
        Ok(Self { dim, vectors })
    }

    pub(crate) fn new_unchecked(dim: u32, vectors: Vec<SparseVector<T>>) -> Self {
        Self { dim, vectors }
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, id: usize) -> &SparseVector<T> {
        &self.vectors[id]
    }

    pub fn vectors(&self) -> &[SparseVector<T>] {
        &self.vectors
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SparseVector<T>> {
        self.vectors.iter()
    }

    pub fn nnz(&self) -> usize {
        self.vectors.iter().map(SparseVector::len).sum()
    }

    /// Ids of vectors with a nonzero coordinate in each dimension, ascending.
    pub fn posting_lists(&self) -> Vec<Vec<u32>> {
        let mut lists = vec![Vec::new(); self.dim as usize];
        for (id, v) in self.vectors.iter().enumerate() {
            for &d in v.dims() {
                lists[d as usize].push(id as u32);
            }
        }
        lists
    }

    /// Fraction of vectors that are nonzero in dimension `dim`.
    pub fn density(&self, dim: u32) -> Result<f64> {
        if dim >= self.dim {
            return Err(Error::DimensionOutOfRange {
                dim: u64::from(dim),
                ambient: u64::from(self.dim),
            });
        }
        if self.vectors.is_empty() {
            return Ok(0.0);
        }
        let hits = self.vectors.iter().filter(|v| v.get(dim).is_some()).count();
        Ok(hits as f64 / self.vectors.len() as f64)
    }
}

impl<'a, T> IntoIterator for &'a VectorSet<T> {
    type Item = &'a SparseVector<T>;
    type IntoIter = std::slice::Iter<'a, SparseVector<T>>;

    fn into_iter(self) -> Self::IntoIter {
        self.vectors.iter()
    }
}
