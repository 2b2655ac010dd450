//! Binary and text formats.
//!
//! CSR collection layout (little-endian):
//!
//! ```text
//! nrows: u64 | ncols: u64 | nnz: u64
//! indptr:  (nrows + 1) x u64, indptr[0] = 0, indptr[nrows] = nnz
//! indices: nnz x u32, strictly increasing within a row
//! values:  nnz x f32, all > 0
//! ```
//!
//! Ground truth: `nq: u32 | k: u32 | nq*k ids (u32) | nq*k scores (f32)`.
//!
//! Results: TSV lines `query_ordinal\trank\tdoc_id\tscore`.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::query::ScoredId;
use crate::sparse::{SparseVector, VectorSet};

/// Little-endian cursor over a byte slice.
pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn position(&self) -> usize {
        self.pos
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Truncated {
                expected: self.pos + n,
                found: self.bytes.len(),
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    /// Checks that `count` items of `width` bytes are available before allocating.
    pub(crate) fn ensure(&self, count: u64, width: usize) -> Result<usize> {
        let need = count
            .checked_mul(width as u64)
            .and_then(|n| usize::try_from(n).ok())
            .ok_or_else(|| Error::Header(format!("length {count} overflows")))?;
        if self.remaining() < need {
            return Err(Error::Truncated {
                expected: self.pos + need,
                found: self.bytes.len(),
            });
        }
        Ok(count as usize)
    }
}

pub(crate) fn put_u32(out: &mut Vec<u8>, x: u32) {
    out.extend_from_slice(&x.to_le_bytes());
}

pub(crate) fn put_u64(out: &mut Vec<u8>, x: u64) {
    out.extend_from_slice(&x.to_le_bytes());
}

pub(crate) fn put_f32(out: &mut Vec<u8>, x: f32) {
    out.extend_from_slice(&x.to_le_bytes());
}

pub(crate) fn put_f64(out: &mut Vec<u8>, x: f64) {
    out.extend_from_slice(&x.to_le_bytes());
}

const CSR_HEADER_BYTES: usize = 24;

pub fn encode_collection(set: &VectorSet<f32>) -> Vec<u8> {
    let nnz = set.nnz();
    let mut out = Vec::with_capacity(CSR_HEADER_BYTES + 8 * (set.len() + 1) + 8 * nnz);
    put_u64(&mut out, set.len() as u64);
    put_u64(&mut out, u64::from(set.dim()));
    put_u64(&mut out, nnz as u64);
    let mut offset = 0u64;
    put_u64(&mut out, 0);
    for v in set {
        offset += v.len() as u64;
        put_u64(&mut out, offset);
    }
    for v in set {
        for &d in v.dims() {
            put_u32(&mut out, d);
        }
    }
    for v in set {
        for &x in v.values() {
            put_f32(&mut out, x);
        }
    }
    out
}

pub(crate) fn decode_collection_from(r: &mut Reader<'_>) -> Result<VectorSet<f32>> {
    if r.remaining() < CSR_HEADER_BYTES {
        return Err(Error::Header(format!(
            "need {CSR_HEADER_BYTES} header bytes, found {}",
            r.remaining()
        )));
    }
    let nrows = r.u64()?;
    let ncols = r.u64()?;
    let nnz = r.u64()?;
    let dim = u32::try_from(ncols)
        .map_err(|_| Error::Header(format!("ncols {ncols} exceeds u32 range")))?;
    let nrows_plus = nrows
        .checked_add(1)
        .ok_or_else(|| Error::Header("nrows overflows".into()))?;
    let nrows_plus = r.ensure(nrows_plus, 8)?;
    let mut indptr = Vec::with_capacity(nrows_plus);
    for _ in 0..nrows_plus {
        indptr.push(r.u64()?);
    }
    if indptr[0] != 0 {
        return Err(Error::Inconsistent(format!("indptr[0] = {}", indptr[0])));
    }
    if indptr[nrows_plus - 1] != nnz {
        return Err(Error::Inconsistent(format!(
            "header nnz {nnz} but indptr ends at {}",
            indptr[nrows_plus - 1]
        )));
    }
    if let Some(p) = indptr.windows(2).position(|w| w[0] > w[1]) {
        return Err(Error::Inconsistent(format!("indptr decreases at row {p}")));
    }
    let nnz = r.ensure(nnz, 8)?;
    let mut indices = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        indices.push(r.u32()?);
    }
    let mut values = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        values.push(r.f32()?);
    }

    let mut vectors = Vec::with_capacity(nrows_plus - 1);
    for row in 0..nrows_plus - 1 {
        let (lo, hi) = (indptr[row] as usize, indptr[row + 1] as usize);
        let dims = &indices[lo..hi];
        let vals = &values[lo..hi];
        if let Some(p) = dims.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::NonMonotone {
                row,
                position: p + 1,
            });
        }
        if let Some(p) = vals.iter().position(|v| v.is_nan() || *v <= 0.0) {
            return Err(Error::NonPositive {
                row,
                dim: dims[p],
                value: f64::from(vals[p]),
            });
        }
        if let Some(&m) = dims.last() {
            if m >= dim {
                return Err(Error::DimensionOutOfRange {
                    dim: u64::from(m),
                    ambient: ncols,
                });
            }
        }
        vectors.push(SparseVector::from_sorted_unchecked(
            dims.to_vec(),
            vals.to_vec(),
        ));
    }
    Ok(VectorSet::new_unchecked(dim, vectors))
}

pub fn decode_collection(bytes: &[u8]) -> Result<VectorSet<f32>> {
    let mut r = Reader::new(bytes);
    let set = decode_collection_from(&mut r)?;
    if r.remaining() != 0 {
        return Err(Error::Inconsistent(format!(
            "{} trailing bytes after payload",
            r.remaining()
        )));
    }
    Ok(set)
}

pub fn load_collection(path: impl AsRef<Path>) -> Result<VectorSet<f32>> {
    decode_collection(&fs::read(path)?)
}

pub fn save_collection(set: &VectorSet<f32>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_collection(set))?;
    Ok(())
}

/// Exact top-k answers for a query batch.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub k: usize,
    pub rows: Vec<Vec<ScoredId>>,
}

impl GroundTruth {
    pub fn encode(&self) -> Result<Vec<u8>> {
        if let Some(bad) = self.rows.iter().position(|r| r.len() != self.k) {
            return Err(Error::Inconsistent(format!(
                "query {bad} has {} entries, expected k = {}",
                self.rows[bad].len(),
                self.k
            )));
        }
        let mut out = Vec::with_capacity(8 + self.rows.len() * self.k * 8);
        put_u32(&mut out, self.rows.len() as u32);
        put_u32(&mut out, self.k as u32);
        for row in &self.rows {
            for s in row {
                put_u32(&mut out, s.id);
            }
        }
        for row in &self.rows {
            for s in row {
                put_f32(&mut out, s.score);
            }
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if bytes.len() < 8 {
            return Err(Error::Header("ground truth header needs 8 bytes".into()));
        }
        let nq = r.u32()? as u64;
        let k = r.u32()? as u64;
        let total = r.ensure(nq * k, 8)?;
        let ids: Vec<u32> = (0..total).map(|_| r.u32()).collect::<Result<_>>()?;
        let scores: Vec<f32> = (0..total).map(|_| r.f32()).collect::<Result<_>>()?;
        if r.remaining() != 0 {
            return Err(Error::Inconsistent("trailing bytes in ground truth".into()));
        }
        let k = k as usize;
        let rows = (0..nq as usize)
            .map(|q| {
                (0..k)
                    .map(|j| ScoredId {
                        id: ids[q * k + j],
                        score: scores[q * k + j],
                    })
                    .collect()
            })
            .collect();
        Ok(Self { k, rows })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::decode(&fs::read(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.encode()?)?;
        Ok(())
    }
}

pub fn write_results_tsv(mut out: impl Write, runs: &[Vec<ScoredId>]) -> Result<()> {
    for (q, row) in runs.iter().enumerate() {
        for (rank, s) in row.iter().enumerate() {
            writeln!(out, "{q}\t{}\t{}\t{:.6}", rank + 1, s.id, s.score)?;
        }
    }
    Ok(())
}

/// Parses a results TSV back into per-query lists. Queries with no lines
/// up to the largest ordinal seen come back empty.
pub fn read_results_tsv(input: impl std::io::Read) -> Result<Vec<Vec<ScoredId>>> {
    let mut runs: Vec<Vec<ScoredId>> = Vec::new();
    for (lineno, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Inconsistent(format!("results line {}: {line:?}", lineno + 1));
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(bad());
        }
        let q: usize = fields[0].parse().map_err(|_| bad())?;
        let id: u32 = fields[2].parse().map_err(|_| bad())?;
        let score: f32 = fields[3].parse().map_err(|_| bad())?;
        if runs.len() <= q {
            runs.resize_with(q + 1, Vec::new);
        }
        runs[q].push(ScoredId { id, score });
    }
    Ok(runs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small_set() -> VectorSet<f32> {
        VectorSet::new(
            10,
            vec![
                SparseVector::new(vec![0, 3], vec![0.5, 0.25]).unwrap(),
                SparseVector::default(),
                SparseVector::new(vec![9], vec![1.5]).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_three_vectors() {
        let set = small_set();
        let bytes = encode_collection(&set);
        let back = decode_collection(&bytes).unwrap();
        assert_eq!(back, set);
        assert_eq!(encode_collection(&back), bytes);
    }

    #[test]
    fn empty_file_is_header_error() {
        assert!(matches!(decode_collection(&[]), Err(Error::Header(_))));
    }

    #[test]
    fn nnz_inconsistent_with_indptr() {
        let mut bytes = encode_collection(&small_set());
        bytes[16..24].copy_from_slice(&4u64.to_le_bytes());
        assert!(matches!(
            decode_collection(&bytes),
            Err(Error::Inconsistent(_))
        ));
    }

    #[test]
    fn truncated_payload() {
        let bytes = encode_collection(&small_set());
        assert!(matches!(
            decode_collection(&bytes[..bytes.len() - 2]),
            Err(Error::Truncated { .. })
        ));
    }

    #[test]
    fn non_monotone_row() {
        let mut bytes = encode_collection(&small_set());
        // indices start after the 24-byte header and 4 indptr words
        let base = 24 + 4 * 8;
        bytes[base..base + 4].copy_from_slice(&5u32.to_le_bytes());
        assert!(matches!(
            decode_collection(&bytes),
            Err(Error::NonMonotone { row: 0, .. })
        ));
    }

    #[test]
    fn negative_value() {
        let mut bytes = encode_collection(&small_set());
        let base = 24 + 4 * 8 + 3 * 4;
        bytes[base..base + 4].copy_from_slice(&(-0.5f32).to_le_bytes());
        assert!(matches!(
            decode_collection(&bytes),
            Err(Error::NonPositive { row: 0, dim: 0, .. })
        ));
    }

    #[test]
    fn dimension_from_header() {
        let set = small_set();
        let back = decode_collection(&encode_collection(&set)).unwrap();
        assert_eq!(back.dim(), 10);
    }

    #[test]
    fn ground_truth_and_tsv_round_trip() {
        let gt = GroundTruth {
            k: 2,
            rows: vec![
                vec![
                    ScoredId { id: 3, score: 0.5 },
                    ScoredId { id: 1, score: 0.25 },
                ],
                vec![
                    ScoredId { id: 0, score: 1.0 },
                    ScoredId { id: 2, score: 0.0 },
                ],
            ],
        };
        assert_eq!(GroundTruth::decode(&gt.encode().unwrap()).unwrap(), gt);

        let mut buf = Vec::new();
        write_results_tsv(&mut buf, &gt.rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("0\t1\t3\t0.500000\n"));
        assert_eq!(read_results_tsv(&buf[..]).unwrap(), gt.rows);
    }

    proptest! {
        #[test]
        fn csr_round_trip_is_byte_identical(
            rows in proptest::collection::vec(
                proptest::collection::btree_map(0u32..50, 0.001f32..10.0, 0..8), 0..12)
        ) {
            let vectors = rows.into_iter().map(|m| SparseVector::from_pairs(m).unwrap()).collect();
            let set = VectorSet::new(50, vectors).unwrap();
            let bytes = encode_collection(&set);
            let back = decode_collection(&bytes).unwrap();
            prop_assert_eq!(&back, &set);
            prop_assert_eq!(encode_collection(&back), bytes);
        }
    }
}
