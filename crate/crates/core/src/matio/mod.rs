//! Ingestion and shared plumbing for sparse Boolean matrices.
//!
//! [`EdgeList`] is the uncompressed ground truth every format is built from
//! and checked against. Indices are 0-based everywhere except at the
//! MatrixMarket boundary.

mod container;
mod parse;

pub use container::{ContainerHeader, FormatTag, CONTAINER_MAGIC, HEADER_LEN};
pub use parse::{parse_edge_list, parse_input, parse_matrix_market, write_edge_list};

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Largest dimension representable with 32-bit column indices.
pub const MAX_DIM: usize = 1 << 32;

/// Sparse Boolean matrix as a sorted, duplicate-free list of 1-cells.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct EdgeList {
    n_rows: usize,
    n_cols: usize,
    edges: Vec<(u32, u32)>,
}

impl EdgeList {
    /// Sorts and deduplicates `edges`, then checks bounds.
    pub fn from_edges(n_rows: usize, n_cols: usize, mut edges: Vec<(u32, u32)>) -> Result<Self> {
        edges.sort_unstable();
        edges.dedup();
        Self::from_sorted(n_rows, n_cols, edges)
    }

    /// Takes `edges` as-is; they must already be strictly increasing.
    pub fn from_sorted(n_rows: usize, n_cols: usize, edges: Vec<(u32, u32)>) -> Result<Self> {
        if n_rows > MAX_DIM || n_cols > MAX_DIM {
            return Err(Error::Dimension(format!(
                "{n_rows}x{n_cols} exceeds 32-bit indexing"
            )));
        }
        if let Some(w) = edges.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "edges not strictly increasing at {:?} -> {:?}",
                w[0], w[1]
            )));
        }
        if let Some(&(r, c)) = edges
            .iter()
            .find(|&&(r, c)| r as usize >= n_rows || c as usize >= n_cols)
        {
            return Err(Error::Dimension(format!(
                "edge ({r},{c}) outside {n_rows}x{n_cols}"
            )));
        }
        Ok(Self {
            n_rows,
            n_cols,
            edges,
        })
    }

    pub fn empty(n_rows: usize, n_cols: usize) -> Self {
        Self::from_sorted(n_rows, n_cols, Vec::new()).expect("valid dimensions")
    }

    pub fn identity(n: usize) -> Self {
        let edges = (0..n as u32).map(|i| (i, i)).collect();
        Self::from_sorted(n, n, edges).expect("valid dimensions")
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Number of 1-cells.
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn into_edges(self) -> Vec<(u32, u32)> {
        self.edges
    }

    pub fn contains(&self, r: u32, c: u32) -> bool {
        self.edges.binary_search(&(r, c)).is_ok()
    }

    /// Index of the first edge in row `r` (or `m` when `r == n_rows`).
    pub fn row_start(&self, r: usize) -> usize {
        self.edges.partition_point(|&(er, _)| (er as usize) < r)
    }

    /// Column indices of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = u32> + '_ {
        let (s, e) = (self.row_start(r), self.row_start(r + 1));
        self.edges[s..e].iter().map(|&(_, c)| c)
    }

    /// Edge count of every row, length `n_rows`.
    pub fn row_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_rows];
        for &(r, _) in &self.edges {
            counts[r as usize] += 1;
        }
        counts
    }

    /// Rows `[range.start, range.end)` as a standalone matrix with rebased row indices.
    pub fn row_block(&self, range: RowRange) -> EdgeList {
        assert!(range.end <= self.n_rows, "row block {range:?} out of bounds");
        let (s, e) = (self.row_start(range.start), self.row_start(range.end));
        let base = range.start as u32;
        EdgeList {
            n_rows: range.len(),
            n_cols: self.n_cols,
            edges: self.edges[s..e].iter().map(|&(r, c)| (r - base, c)).collect(),
        }
    }
}

/// `(r,c) -> (c,r)`, re-sorted.
pub fn transpose(a: &EdgeList) -> EdgeList {
    let mut edges: Vec<(u32, u32)> = a.edges.iter().map(|&(r, c)| (c, r)).collect();
    edges.sort_unstable();
    EdgeList {
        n_rows: a.n_cols,
        n_cols: a.n_rows,
        edges,
    }
}

/// Out-degree of every vertex of the original (untransposed) matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeVector(pub Vec<u64>);

impl DegreeVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    /// Sidecar layout: u64 count, then one u64 per vertex, little-endian.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&(self.0.len() as u64).to_le_bytes())?;
        for d in &self.0 {
            w.write_all(&d.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        let mut rd = crate::bits::Reader::new(&buf, "degrees");
        let n = rd.len_u64(buf.len() / 8)?;
        let degs = (0..n).map(|_| rd.u64()).collect::<Result<Vec<_>>>()?;
        rd.finish()?;
        Ok(Self(degs))
    }
}

pub fn out_degrees(a: &EdgeList) -> DegreeVector {
    DegreeVector(a.row_counts().into_iter().map(|c| c as u64).collect())
}

/// Half-open row interval `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RowRange {
    pub start: usize,
    pub end: usize,
}

impl RowRange {
    pub fn new(start: usize, end: usize) -> Self {
        assert!(start <= end, "inverted range {start}..{end}");
        Self { start, end }
    }

    pub fn full(n: usize) -> Self {
        Self { start: 0, end: n }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, r: usize) -> bool {
        self.start <= r && r < self.end
    }
}

/// Splits rows into exactly `t` contiguous ranges holding about `m/t` edges each.
///
/// Boundary `k` is the row whose edge prefix count is closest to `k*m/t`
/// (ties go to the lower row). Without edges the rows themselves are balanced.
pub fn partition_rows(a: &EdgeList, t: usize) -> Result<Vec<RowRange>> {
    if t == 0 {
        return Err(Error::InvalidArgument("thread count must be at least 1".into()));
    }
    let mut weights = a.row_counts();
    if a.m() == 0 {
        weights.iter_mut().for_each(|w| *w = 1);
    }
    Ok(partition_weights(&weights, t))
}

pub(crate) fn partition_weights(weights: &[usize], t: usize) -> Vec<RowRange> {
    let n = weights.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0u128);
    for &w in weights {
        prefix.push(prefix.last().unwrap() + w as u128);
    }
    let total = prefix[n];
    let tt = t as u128;
    let mut bounds = Vec::with_capacity(t + 1);
    bounds.push(0usize);
    for k in 1..t as u128 {
        // Compare |prefix[r]*t - k*total| to stay in integers.
        let target = k * total;
        let hi = prefix.partition_point(|&p| p * tt < target).min(n);
        let mut best = hi;
        if hi > 0 && target - prefix[hi - 1] * tt <= prefix[hi] * tt - target {
            let below = prefix[hi - 1];
            best = prefix.partition_point(|&p| p < below);
        }
        let best = best.max(*bounds.last().unwrap());
        bounds.push(best);
    }
    bounds.push(n);
    bounds
        .windows(2)
        .map(|w| RowRange::new(w[0], w[1]))
        .collect()
}
