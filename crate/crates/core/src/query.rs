//! Query processing over a [`SeismicIndex`].
//!
//! The query is cut to its `alpha_q`-MSS to choose which inverted lists to
//! traverse. Inside a list, blocks are ranked by the inner product of the
//! full query with their summaries and visited best-first; once the heap
//! holds `k` results a block is skipped when its summary score is below
//! `heap.min() / heap_factor`. Visiting a block scores all its members
//! exactly against the forward index. Optionally the candidates are then
//! expanded one hop through the κ-NN graph.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::index::{Block, SeismicIndex};
use crate::knn::KnnGraph;
use crate::sketch::alpha_mss;
use crate::sparse::{SparseVector, VectorSet};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchParams {
    pub k: usize,
    pub alpha_q: f64,
    pub heap_factor: f64,
    pub use_graph: bool,
}

impl SearchParams {
    pub fn new(k: usize, alpha_q: f64, heap_factor: f64) -> Self {
        Self {
            k,
            alpha_q,
            heap_factor,
            use_graph: false,
        }
    }

    pub fn with_graph(mut self, use_graph: bool) -> Self {
        self.use_graph = use_graph;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be positive".into()));
        }
        for (name, x) in [("alpha_q", self.alpha_q), ("heap_factor", self.heap_factor)] {
            if !(x > 0.0 && x <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in (0, 1], got {x}"
                )));
            }
        }
        Ok(())
    }
}

/// A scored data point. Ranking order is score descending, then id ascending.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoredId {
    pub id: u32,
    pub score: f32,
}

impl ScoredId {
    /// `Less` when `self` ranks ahead of `other`.
    pub fn rank_cmp(&self, other: &Self) -> Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then(self.id.cmp(&other.id))
    }
}

pub type ResultList = Vec<ScoredId>;

/// Exact score used everywhere results are ranked: f64 accumulation,
/// reported as f32.
#[inline]
pub fn score(q: &SparseVector<f32>, u: &SparseVector<f32>) -> f32 {
    q.dot(u) as f32
}

/// Max-heap entry whose top is the worst-ranked element.
#[derive(Clone, Copy, Debug)]
struct Worst(ScoredId);

impl PartialEq for Worst {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Worst {}

impl PartialOrd for Worst {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Worst {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.rank_cmp(&other.0)
    }
}

/// Bounded top-k collection.
#[derive(Clone, Debug)]
pub struct TopK {
    k: usize,
    heap: BinaryHeap<Worst>,
}

impl TopK {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.heap.len() >= self.k
    }

    /// Worst retained entry, if the heap is full.
    pub fn threshold(&self) -> Option<ScoredId> {
        if self.is_full() {
            self.heap.peek().map(|w| w.0)
        } else {
            None
        }
    }

    /// Inserts when the heap is not full or `candidate` outranks the worst
    /// entry. Returns whether it was kept.
    pub fn offer(&mut self, candidate: ScoredId) -> bool {
        if self.k == 0 {
            return false;
        }
        if let Some(worst) = self.threshold() {
            if candidate.rank_cmp(&worst) != Ordering::Less {
                return false;
            }
        }
        self.heap.push(Worst(candidate));
        if self.heap.len() > self.k {
            self.heap.pop();
        }
        true
    }

    pub fn ids(&self) -> Vec<u32> {
        self.heap.iter().map(|w| w.0.id).collect()
    }

    /// Entries in ranking order.
    pub fn to_sorted_vec(&self) -> ResultList {
        let mut v: Vec<ScoredId> = self.heap.iter().map(|w| w.0).collect();
        v.sort_by(ScoredId::rank_cmp);
        v
    }

    pub fn into_sorted_vec(self) -> ResultList {
        self.to_sorted_vec()
    }
}

/// Per-query scratch: visited marks over the collection, reset between queries.
#[derive(Clone, Debug, Default)]
pub struct Scratch {
    visited: Vec<bool>,
    touched: Vec<u32>,
}

impl Scratch {
    pub fn new(n: usize) -> Self {
        Self {
            visited: vec![false; n],
            touched: Vec::new(),
        }
    }

    fn reset(&mut self, n: usize) {
        for &id in &self.touched {
            self.visited[id as usize] = false;
        }
        self.touched.clear();
        if self.visited.len() != n {
            self.visited = vec![false; n];
        }
    }

    /// Marks `id`; returns false if it was already marked.
    #[inline]
    pub fn visit(&mut self, id: u32) -> bool {
        let slot = &mut self.visited[id as usize];
        if *slot {
            return false;
        }
        *slot = true;
        self.touched.push(id);
        true
    }

    pub fn is_visited(&self, id: u32) -> bool {
        self.visited[id as usize]
    }

    /// Ids evaluated so far, in evaluation order.
    pub fn evaluated(&self) -> &[u32] {
        &self.touched
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Forward-index inner products computed.
    pub evaluated: usize,
    pub blocks_visited: usize,
    pub blocks_skipped: usize,
    pub lists_traversed: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOutput {
    pub results: ResultList,
    pub stats: SearchStats,
}

/// Scores every not-yet-visited member of a block and offers it to the heap.
pub fn evaluate_block(
    ids: &[u32],
    forward: &VectorSet<f32>,
    q: &SparseVector<f32>,
    heap: &mut TopK,
    scratch: &mut Scratch,
    stats: &mut SearchStats,
) {
    for &id in ids {
        if !scratch.visit(id) {
            continue;
        }
        stats.evaluated += 1;
        heap.offer(ScoredId {
            id,
            score: score(q, forward.get(id as usize)),
        });
    }
}

/// One-hop expansion: scores the unvisited graph neighbors of every point
/// currently in the heap.
pub fn expand_with_graph(
    heap: &mut TopK,
    graph: &KnnGraph,
    forward: &VectorSet<f32>,
    q: &SparseVector<f32>,
    scratch: &mut Scratch,
    stats: &mut SearchStats,
) {
    if graph.kappa() == 0 {
        return;
    }
    let seeds = heap.to_sorted_vec();
    for s in seeds {
        evaluate_block(graph.neighbors(s.id), forward, q, heap, scratch, stats);
    }
}

fn traverse_list(
    blocks: &[Block],
    forward: &VectorSet<f32>,
    q: &SparseVector<f32>,
    heap_factor: f64,
    heap: &mut TopK,
    scratch: &mut Scratch,
    stats: &mut SearchStats,
) {
    let mut ranked: Vec<(f64, usize)> = blocks
        .iter()
        .enumerate()
        .map(|(j, b)| (b.summary.score(q), j))
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    for (pos, &(r, j)) in ranked.iter().enumerate() {
        if let Some(worst) = heap.threshold() {
            // compared at the precision scores are reported in
            if f64::from(r as f32) < f64::from(worst.score) / heap_factor {
                // later blocks score lower and the heap minimum only grows
                stats.blocks_skipped += ranked.len() - pos;
                return;
            }
        }
        stats.blocks_visited += 1;
        evaluate_block(&blocks[j].ids, forward, q, heap, scratch, stats);
    }
}

/// Reusable query engine over an index and an optional κ-NN graph.
#[derive(Clone, Copy, Debug)]
pub struct Searcher<'a> {
    index: &'a SeismicIndex,
    graph: Option<&'a KnnGraph>,
}

impl<'a> Searcher<'a> {
    pub fn new(index: &'a SeismicIndex, graph: Option<&'a KnnGraph>) -> Self {
        Self { index, graph }
    }

    pub fn index(&self) -> &'a SeismicIndex {
        self.index
    }

    pub fn scratch(&self) -> Scratch {
        Scratch::new(self.index.len())
    }

    pub fn search(&self, q: &SparseVector<f32>, params: &SearchParams) -> Result<SearchOutput> {
        let mut scratch = self.scratch();
        self.search_with(q, params, &mut scratch)
    }

    pub fn search_with(
        &self,
        q: &SparseVector<f32>,
        params: &SearchParams,
        scratch: &mut Scratch,
    ) -> Result<SearchOutput> {
        params.validate()?;
        if q.is_empty() {
            return Err(Error::ZeroVector);
        }
        let forward = self.index.forward();
        scratch.reset(forward.len());
        let mut stats = SearchStats::default();
        let mut heap = TopK::new(params.k);

        let cut = alpha_mss(q, params.alpha_q)?;
        // strongest query coordinates first
        let mut order: Vec<(u32, f32)> = cut.iter().map(|(d, &v)| (d, v)).collect();
        order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

        for (dim, _) in order {
            let blocks = self.index.list(dim);
            if blocks.is_empty() {
                continue;
            }
            stats.lists_traversed += 1;
            traverse_list(
                blocks,
                forward,
                q,
                params.heap_factor,
                &mut heap,
                scratch,
                &mut stats,
            );
        }

        if params.use_graph {
            if let Some(graph) = self.graph {
                expand_with_graph(&mut heap, graph, forward, q, scratch, &mut stats);
            }
        }

        Ok(SearchOutput {
            results: heap.into_sorted_vec(),
            stats,
        })
    }
}

/// Convenience wrapper around [`Searcher::search`].
pub fn search(
    index: &SeismicIndex,
    graph: Option<&KnnGraph>,
    q: &SparseVector<f32>,
    params: &SearchParams,
) -> Result<SearchOutput> {
    Searcher::new(index, graph).search(q, params)
}
