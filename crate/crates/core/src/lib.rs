//! Approximate maximum inner product search over nonnegative sparse vectors.
//!
//! The engine sketches the collection so that each inverted list keeps only
//! the largest values of its dimension, splits every list into blocks of
//! similar vectors, and attaches a (truncated, optionally quantized)
//! coordinatewise-maximum summary to each block. Queries rank blocks by
//! summary score, skip blocks that cannot beat the current top-k, re-score
//! candidates exactly against the forward index, and can expand the result
//! one hop through a κ-NN graph.
//!
//! Sparse primitives and sketches are generic over [`Scalar`] (`f32`, `f64`,
//! exact [`BigRational`]); the index stores `f32` values and accumulates
//! inner products in `f64`.

pub mod error;
pub mod eval;
pub mod index;
pub mod io;
pub mod knn;
pub mod query;
pub mod scalar;
pub mod sketch;
pub mod sparse;
pub mod synth;

pub use num_rational::BigRational;

pub use error::{Error, Result};
pub use eval::{accuracy_at_k, bench, exact_topk, ground_truth, mass_curve, norm_ratio_cdf};
pub use index::{BuildParams, QuantizedSummary, SeismicIndex, Summary};
pub use io::GroundTruth;
pub use knn::{graph_size_bits, KnnGraph};
pub use query::{search, ResultList, ScoredId, SearchParams, Searcher};
pub use scalar::Scalar;
pub use sketch::{alpha_mss, l1_threshold_sample, set_alpha_mss, ts_estimate, TsSketch};
pub use sparse::{Norm, SparseVector, VectorSet};

/// Storage-precision vector used by the index and the on-disk formats.
pub type SparseVecF32 = SparseVector<f32>;
pub type SparseVecF64 = SparseVector<f64>;
/// Exact-arithmetic vector for bound checks.
pub type ExactSparseVector = SparseVector<BigRational>;

pub type VectorSetF32 = VectorSet<f32>;
pub type VectorSetF64 = VectorSet<f64>;
pub type ExactVectorSet = VectorSet<BigRational>;
