//! Power-iteration PageRank over a compressed transposed adjacency matrix.
//!
//! With `A` the adjacency matrix, `D` its out-degree diagonal and `n` the
//! number of vertices, one step computes
//!
//! ```text
//! v      = D⁻¹ π          (0 for dangling vertices)
//! y      = Aᵗ v           (the compressed format's SpMV)
//! s      = Σ π[u] over dangling u
//! π'[u]  = α/n + (1 − α)(y[u] + s/n)
//! ```
//!
//! which is the teleporting walk with every empty row replaced by the
//! uniform distribution, applied without materializing those rows.

use rayon::ThreadPool;

use crate::error::{Error, Result};
use crate::format::BlockedMatrix;
use crate::matio::DegreeVector;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PageRankConfig {
    /// Teleport probability.
    pub alpha: f64,
    pub max_iters: usize,
    /// Stop once the L1 change between iterates drops below this.
    pub tol: Option<f64>,
}

impl Default for PageRankConfig {
    fn default() -> Self {
        Self {
            alpha: 0.15,
            max_iters: 100,
            tol: None,
        }
    }
}

impl PageRankConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        if self.tol.is_some_and(|t| t.is_nan() || t < 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be non-negative, got {:?}", self.tol)));
        }
        Ok(())
    }
}

/// Σ |a[i] − b[i]|.
pub fn l1_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "vector lengths");
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

#[derive(Clone, Debug)]
pub struct PageRankState {
    pi: Vec<f64>,
    next: Vec<f64>,
    scaled: Vec<f64>,
    out_deg: DegreeVector,
    block_scratch: Vec<Vec<f64>>,
    iters_done: usize,
    last_l1: f64,
}

impl PageRankState {
    /// Uniform `π₀ = 1/n`.
    pub fn new(out_deg: DegreeVector) -> Self {
        let n = out_deg.len();
        Self {
            pi: vec![1.0 / n as f64; n],
            next: vec![0.0; n],
            scaled: vec![0.0; n],
            out_deg,
            block_scratch: Vec::new(),
            iters_done: 0,
            last_l1: f64::INFINITY,
        }
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn iters_done(&self) -> usize {
        self.iters_done
    }

    pub fn last_l1(&self) -> f64 {
        self.last_l1
    }

    pub fn into_pi(self) -> Vec<f64> {
        self.pi
    }

    fn check(&self, at: &BlockedMatrix) -> Result<()> {
        let n = self.pi.len();
        if at.n_rows() != n || at.n_cols() != n {
            return Err(Error::Dimension(format!(
                "matrix is {}x{}, degree vector has {n} entries",
                at.n_rows(),
                at.n_cols()
            )));
        }
        if self.out_deg.total() != at.nnz() {
            return Err(Error::Dimension(format!(
                "degrees sum to {}, matrix has {} nonzeros",
                self.out_deg.total(),
                at.nnz()
            )));
        }
        Ok(())
    }

    /// One power-iteration step; `at` must hold the transposed adjacency
    /// matrix. SpMV runs on the calling rayon pool.
    pub fn step(&mut self, at: &BlockedMatrix, cfg: &PageRankConfig) -> Result<()> {
        self.check(at)?;
        let n = self.pi.len();
        if n == 0 {
            self.iters_done += 1;
            self.last_l1 = 0.0;
            return Ok(());
        }
        if self.block_scratch.len() != at.blocks().len() {
            self.block_scratch = at.scratch();
        }
        let mut dangling = 0.0;
        for ((v, &p), &d) in self.scaled.iter_mut().zip(&self.pi).zip(&self.out_deg.0) {
            if d == 0 {
                *v = 0.0;
                dangling += p;
            } else {
                *v = p / d as f64;
            }
        }
        at.spmv_blocks(&self.scaled, &mut self.next, &mut self.block_scratch);
        let inv_n = 1.0 / n as f64;
        let teleport = cfg.alpha * inv_n;
        let spread = dangling * inv_n;
        for y in self.next.iter_mut() {
            *y = teleport + (1.0 - cfg.alpha) * (*y + spread);
        }
        self.last_l1 = l1_diff(&self.next, &self.pi);
        std::mem::swap(&mut self.pi, &mut self.next);
        self.iters_done += 1;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PageRankResult {
    pub pi: Vec<f64>,
    pub iters: usize,
    pub l1_history: Vec<f64>,
}

pub fn thread_pool(threads: usize) -> Result<ThreadPool> {
    if threads == 0 {
        return Err(Error::InvalidArgument("thread count must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {threads} threads: {e}")))
}

/// Runs until `max_iters` or until the L1 change drops below `tol`.
pub fn pagerank(at: &BlockedMatrix, out_deg: &DegreeVector, cfg: &PageRankConfig, threads: usize) -> Result<PageRankResult> {
    pagerank_observed(at, out_deg, cfg, threads, |_, _| {})
}

/// Like [`pagerank`], calling `observe(iteration, π)` after every step.
pub fn pagerank_observed(
    at: &BlockedMatrix,
    out_deg: &DegreeVector,
    cfg: &PageRankConfig,
    threads: usize,
    mut observe: impl FnMut(usize, &[f64]),
) -> Result<PageRankResult> {
    cfg.validate()?;
    let pool = thread_pool(threads)?;
    let mut st = PageRankState::new(out_deg.clone());
    st.check(at)?;
    let mut l1_history = Vec::with_capacity(cfg.max_iters);
    while st.iters_done() < cfg.max_iters {
        pool.install(|| st.step(at, cfg))?;
        l1_history.push(st.last_l1());
        observe(st.iters_done(), st.pi());
        if cfg.tol.is_some_and(|t| st.last_l1() < t) {
            break;
        }
    }
    Ok(PageRankResult {
        iters: st.iters_done(),
        pi: st.into_pi(),
        l1_history,
    })
}

/// One `vertex score` line per vertex, scores with 17 significant digits.
pub fn write_scores(pi: &[f64]) -> String {
    use std::fmt::Write as _;
    let mut s = String::with_capacity(pi.len() * 28);
    for (v, p) in pi.iter().enumerate() {
        let _ = writeln!(s, "{v} {p:.16e}");
    }
    s
}
