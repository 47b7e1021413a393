//! Succinct k²-tree with rank-free SpMV.
//!
//! Bits are laid out in level order: `T` holds levels `1..h` (the root's
//! children are level 1), `L` holds level `h`, one bit per cell. Within a
//! block the k² children are in row-major order.
//!
//! A depth-first visit with children in row-major order meets the nodes of
//! each level in exactly their level order. Keeping one cursor per level is
//! therefore enough to find every node's child block without rank support.
//! Subtrees outside the requested row range are skipped level by level
//! using the popcount of their (contiguous) descendant spans.

use crate::bits::{BitVec, Reader};
use crate::error::{Error, Result};
use crate::matio::{ContainerHeader, EdgeList, RowRange};

pub const DEFAULT_K: u32 = 2;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct K2Tree {
    k: u32,
    height: usize,
    n_rows: usize,
    n_cols: usize,
    t: BitVec,
    l: BitVec,
    /// First bit of each level `1..h` inside `t`; entry `h` is `t.len()`.
    level_start: Vec<usize>,
}

/// Minimal `h >= 1` with `k^h >= dim`.
fn height_for(k: u64, dim: u64) -> usize {
    let (mut h, mut side) = (1, k);
    while side < dim {
        side *= k;
        h += 1;
    }
    h
}

fn check_k(k: u32) -> Result<()> {
    if !(2..=255).contains(&k) {
        return Err(Error::InvalidArgument(format!("k-squared tree arity must be in 2..=255, got {k}")));
    }
    Ok(())
}

impl K2Tree {
    pub fn build(a: &EdgeList, k: u32) -> Result<Self> {
        check_k(k)?;
        let k64 = k as u64;
        let h = height_for(k64, a.n_rows().max(a.n_cols()) as u64);
        let kk = (k * k) as u128;

        // Sort edges by their k-ary Morton key: digit l (from the top) is the
        // row-major child index at level l.
        let mut keys: Vec<u128> = a
            .edges()
            .iter()
            .map(|&(r, c)| {
                let (mut r, mut c) = (r as u64, c as u64);
                let (mut key, mut scale) = (0u128, 1u128);
                for _ in 0..h {
                    key += scale * ((r % k64) * k64 + c % k64) as u128;
                    r /= k64;
                    c /= k64;
                    scale *= kk;
                }
                key
            })
            .collect();
        keys.sort_unstable();

        let mut levels = vec![BitVec::new(); h];
        let top_div = kk.pow(h as u32 - 1);
        build_node(&keys, top_div, kk, 0, &mut levels);

        let l = levels.pop().expect("h >= 1");
        let mut level_start = Vec::with_capacity(h);
        let mut t = BitVec::new();
        for lv in levels {
            level_start.push(t.len());
            for i in 0..lv.len() {
                t.push(lv.get(i));
            }
        }
        level_start.push(t.len());
        Ok(Self {
            k,
            height: h,
            n_rows: a.n_rows(),
            n_cols: a.n_cols(),
            t,
            l,
            level_start,
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Padded side `k^h`.
    pub fn side(&self) -> u64 {
        (self.k as u64).pow(self.height as u32)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn t_bits(&self) -> &BitVec {
        &self.t
    }

    pub fn l_bits(&self) -> &BitVec {
        &self.l
    }

    pub fn nnz(&self) -> usize {
        self.l.count_ones()
    }

    fn block(&self) -> usize {
        (self.k * self.k) as usize
    }

    /// Bit `pos` of level `level` (1-based), position relative to the level's bitvector.
    #[inline]
    fn bit(&self, level: usize, pos: usize) -> bool {
        if level == self.height {
            self.l.get(pos)
        } else {
            self.t.get(pos)
        }
    }

    fn initial_cursors(&self) -> Vec<usize> {
        // Index 0 unused so cursors are addressed by 1-based level.
        let mut cur = vec![0usize; self.height + 1];
        cur[1..self.height].copy_from_slice(&self.level_start[..self.height - 1]);
        cur
    }

    /// Skips the subtree whose child block is the next block at `level`.
    fn skip(&self, level: usize, cur: &mut [usize]) {
        let mut blocks = 1usize;
        for (lv, c) in cur.iter_mut().enumerate().skip(level) {
            let s = *c;
            let e = s + blocks * self.block();
            *c = e;
            if lv == self.height {
                break;
            }
            blocks = self.t.count_ones_in(s, e);
            if blocks == 0 {
                break;
            }
        }
    }

    /// Visits every 1-cell of rows intersecting `range`, in depth-first order.
    fn visit(&self, range: RowRange, mut f: impl FnMut(usize, usize)) {
        let mut cur = self.initial_cursors();
        self.visit_node(1, 0, 0, self.side(), range, &mut cur, &mut f);
    }

    #[allow(clippy::too_many_arguments)]
    fn visit_node(
        &self,
        level: usize,
        row_off: u64,
        col_off: u64,
        size: u64,
        range: RowRange,
        cur: &mut [usize],
        f: &mut impl FnMut(usize, usize),
    ) {
        let k = self.k as u64;
        let sub = size / k;
        let base = cur[level];
        cur[level] += self.block();
        for i in 0..k {
            let r0 = row_off + i * sub;
            let overlaps = r0 < range.end as u64 && r0 + sub > range.start as u64;
            for j in 0..k {
                if !self.bit(level, base + (i * k + j) as usize) {
                    continue;
                }
                let c0 = col_off + j * sub;
                if level == self.height {
                    if overlaps && (c0 as usize) < self.n_cols && (r0 as usize) < self.n_rows {
                        f(r0 as usize, c0 as usize);
                    }
                } else if overlaps {
                    self.visit_node(level + 1, r0, c0, sub, range, cur, f);
                } else {
                    self.skip(level + 1, cur);
                }
            }
        }
    }

    /// `y[r - range.start] = sum of x[c]` over 1-cells `(r, c)` with `r` in `range`.
    pub fn spmv_into(&self, x: &[f64], range: RowRange, y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols, "x length");
        assert!(range.end <= self.n_rows, "range {range:?} beyond {} rows", self.n_rows);
        assert_eq!(y.len(), range.len(), "output length");
        y.fill(0.0);
        if range.is_empty() {
            return;
        }
        self.visit(range, |r, c| y[r - range.start] += x[c]);
    }

    pub fn spmv(&self, x: &[f64], range: RowRange) -> Vec<f64> {
        let mut y = vec![0.0; range.len()];
        self.spmv_into(x, range, &mut y);
        y
    }

    /// Single-cell lookup descending one child per level.
    pub fn access(&self, r: usize, c: usize) -> Result<bool> {
        if r >= self.n_rows || c >= self.n_cols {
            return Err(Error::InvalidArgument(format!(
                "cell ({r},{c}) outside {}x{}",
                self.n_rows, self.n_cols
            )));
        }
        let k = self.k as u64;
        let kk = self.block();
        let mut div = self.side() / k;
        // Offset of the current child block in the concatenation T ++ L.
        let mut block = 0usize;
        for level in 1..=self.height {
            let digit = ((r as u64 / div) % k * k + (c as u64 / div) % k) as usize;
            let p = block + digit;
            if level == self.height {
                return Ok(self.l.get(p - self.t.len()));
            }
            if !self.t.get(p) {
                return Ok(false);
            }
            block = self.t.count_ones_in(0, p + 1) * kk;
            div /= k;
        }
        unreachable!("loop returns at the leaf level")
    }

    pub fn to_edge_list(&self) -> EdgeList {
        let mut edges = Vec::with_capacity(self.nnz());
        self.visit(RowRange::full(self.n_rows), |r, c| edges.push((r as u32, c as u32)));
        edges.sort_unstable();
        EdgeList::from_sorted(self.n_rows, self.n_cols, edges).expect("tree cells lie inside the matrix")
    }

    /// Payload: u8 k, u8 h, u64 |T|, u64 |L|, then `T` and `L` each packed
    /// LSB-first and padded to a byte boundary.
    pub fn write_payload(&self, out: &mut Vec<u8>) {
        out.push(self.k as u8);
        out.push(self.height as u8);
        out.extend_from_slice(&(self.t.len() as u64).to_le_bytes());
        out.extend_from_slice(&(self.l.len() as u64).to_le_bytes());
        self.t.write_bytes(out);
        self.l.write_bytes(out);
    }

    pub fn read_payload(h: &ContainerHeader, r: &mut Reader<'_>) -> Result<Self> {
        let bad = |msg: String| Error::corrupt("k2", msg);
        let k = r.u8()? as u32;
        let height = r.u8()? as usize;
        check_k(k).map_err(|e| bad(e.to_string()))?;
        let (n_rows, n_cols) = (h.n_rows as usize, h.n_cols as usize);
        let want_h = height_for(k as u64, n_rows.max(n_cols) as u64);
        if height != want_h {
            return Err(bad(format!("height {height}, expected {want_h}")));
        }
        let bound = r.remaining().saturating_mul(8);
        let t_len = r.len_u64(bound)?;
        let l_len = r.len_u64(bound)?;
        let t = BitVec::from_bytes(r.take(t_len.div_ceil(8))?, t_len)?;
        let l = BitVec::from_bytes(r.take(l_len.div_ceil(8))?, l_len)?;

        let kk = (k * k) as usize;
        let mut level_start = Vec::with_capacity(height);
        let (mut pos, mut blocks) = (0usize, 1usize);
        for _ in 1..height {
            level_start.push(pos);
            let end = pos + blocks * kk;
            if end > t.len() {
                return Err(bad("T shorter than its level structure".into()));
            }
            blocks = t.count_ones_in(pos, end);
            pos = end;
        }
        level_start.push(pos);
        if pos != t.len() || blocks * kk != l.len() {
            return Err(bad(format!("|T|={} |L|={} inconsistent with level structure", t.len(), l.len())));
        }
        if l.count_ones() as u64 != h.m {
            return Err(bad(format!("{} leaf bits set, header says m={}", l.count_ones(), h.m)));
        }
        Ok(Self {
            k,
            height,
            n_rows,
            n_cols,
            t,
            l,
            level_start,
        })
    }
}

/// Emits the k² child bits of the node spanning `keys`, then recurses into
/// nonempty children. `div` extracts the child digit at this level.
fn build_node(keys: &[u128], div: u128, kk: u128, level: usize, levels: &mut [BitVec]) {
    let mut spans = Vec::with_capacity(kk as usize);
    let mut rest = keys;
    for child in 0..kk {
        let n = rest.partition_point(|&key| (key / div) % kk <= child);
        let (span, tail) = rest.split_at(n);
        levels[level].push(!span.is_empty());
        spans.push(span);
        rest = tail;
    }
    if level + 1 < levels.len() {
        for span in spans.into_iter().filter(|s| !s.is_empty()) {
            build_node(span, div / kk, kk, level + 1, levels);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csr::dense_oracle;
    use crate::matio::FormatTag;
    use crate::testutil::{assert_close, random_edges, random_vector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_4x4_bits() {
        // Root block: quadrants (0,0) and (1,1) hold ones -> 1001; each of
        // those 2x2 identity blocks -> 1001.
        let t = K2Tree::build(&EdgeList::identity(4), 2).unwrap();
        assert_eq!(t.height(), 2);
        assert_eq!(t.t_bits().to_string(), "1001");
        assert_eq!(t.l_bits().to_string(), "10011001");
        assert_eq!(t.to_edge_list(), EdgeList::identity(4));
    }

    #[test]
    fn single_level_and_empty() {
        let t = K2Tree::build(&EdgeList::identity(2), 2).unwrap();
        assert!(t.t_bits().is_empty());
        assert_eq!(t.l_bits().to_string(), "1001");

        let t = K2Tree::build(&EdgeList::empty(8, 8), 2).unwrap();
        assert_eq!(t.t_bits().to_string(), "0000");
        assert!(t.l_bits().is_empty());
        assert_eq!(t.to_edge_list(), EdgeList::empty(8, 8));

        let one = EdgeList::from_edges(1, 1, vec![(0, 0)]).unwrap();
        let t = K2Tree::build(&one, 2).unwrap();
        assert_eq!((t.height(), t.l_bits().to_string().as_str()), (1, "1000"));
        assert_eq!(t.to_edge_list(), one);
    }

    #[test]
    fn arity_checked() {
        assert!(K2Tree::build(&EdgeList::identity(3), 1).is_err());
        assert!(K2Tree::build(&EdgeList::identity(3), 256).is_err());
    }

    #[test]
    fn height_is_minimal() {
        assert_eq!(K2Tree::build(&EdgeList::empty(5, 3), 2).unwrap().side(), 8);
        assert_eq!(K2Tree::build(&EdgeList::empty(16, 16), 4).unwrap().height(), 2);
        assert_eq!(K2Tree::build(&EdgeList::empty(17, 2), 4).unwrap().height(), 3);
    }

    #[test]
    fn spmv_examples() {
        let t = K2Tree::build(&EdgeList::identity(4), 2).unwrap();
        assert_eq!(t.spmv(&[1.0, 2.0, 3.0, 4.0], RowRange::full(4)), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(t.spmv(&[1.0, 2.0, 3.0, 4.0], RowRange::new(1, 3)), vec![2.0, 3.0]);
        let z = K2Tree::build(&EdgeList::empty(5, 5), 2).unwrap();
        assert_eq!(z.spmv(&[1.0; 5], RowRange::full(5)), vec![0.0; 5]);
    }

    #[test]
    fn spmv_random_100_vs_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in [2, 3, 4] {
            for _ in 0..10 {
                let a = random_edges(&mut rng, 100, 100, 0.05);
                let x = random_vector(&mut rng, 100);
                let t = K2Tree::build(&a, k).unwrap();
                assert_close(&t.spmv(&x, RowRange::full(100)), &dense_oracle(&a, &x).unwrap(), 1e-12);
                // Pruned partial ranges agree with the matching slice.
                let (s, e) = (rng.random_range(0..100), rng.random_range(0..=100));
                let range = RowRange::new(s.min(e), s.max(e));
                let full = t.spmv(&x, RowRange::full(100));
                assert_eq!(t.spmv(&x, range), full[range.start..range.end].to_vec());
            }
        }
    }

    #[test]
    fn access_exhaustive() {
        let t = K2Tree::build(&EdgeList::identity(4), 2).unwrap();
        assert!(t.access(1, 1).unwrap());
        assert!(!t.access(1, 0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (rows, cols, k) in [(64, 64, 2), (37, 50, 2), (64, 20, 4), (10, 10, 3)] {
            let a = random_edges(&mut rng, rows, cols, 0.1);
            let t = K2Tree::build(&a, k).unwrap();
            for r in 0..rows {
                for c in 0..cols {
                    assert_eq!(t.access(r, c).unwrap(), a.contains(r as u32, c as u32), "({r},{c})");
                }
            }
        }
    }

    #[test]
    fn padded_cells_rejected() {
        let t = K2Tree::build(&EdgeList::identity(3), 2).unwrap();
        assert!(t.access(3, 0).is_err());
        assert!(t.access(0, 3).is_err());
    }

    #[test]
    fn payload_roundtrip_and_corruption() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_edges(&mut rng, 40, 33, 0.1);
        let t = K2Tree::build(&a, 2).unwrap();
        let h = ContainerHeader { tag: FormatTag::K2, n_rows: 40, n_cols: 33, m: a.m() as u64 };
        let mut buf = Vec::new();
        t.write_payload(&mut buf);
        let mut rd = Reader::new(&buf, "k2");
        assert_eq!(K2Tree::read_payload(&h, &mut rd).unwrap(), t);
        rd.finish().unwrap();

        let wrong_m = ContainerHeader { m: h.m + 1, ..h };
        assert!(K2Tree::read_payload(&wrong_m, &mut Reader::new(&buf, "k2")).is_err());
        let mut trunc = buf.clone();
        trunc.pop();
        assert!(K2Tree::read_payload(&h, &mut Reader::new(&trunc, "k2")).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]
        #[test]
        fn enumerate_roundtrip(
            rows in 0usize..40, cols in 0usize..40, k in 2u32..5,
            raw in proptest::collection::vec((0u32..40, 0u32..40), 0..150),
        ) {
            let edges: Vec<_> = raw.iter().copied().filter(|&(r, c)| (r as usize) < rows && (c as usize) < cols).collect();
            let a = EdgeList::from_edges(rows, cols, edges.clone()).unwrap();
            let t = K2Tree::build(&a, k).unwrap();
            prop_assert_eq!(t.nnz(), a.m());
            prop_assert_eq!(t.t_bits().len() % (k * k) as usize, 0);
            prop_assert_eq!(t.l_bits().len() % (k * k) as usize, 0);
            prop_assert!(t.t_bits().len() + t.l_bits().len() <= ((k * k) as usize * a.m() * t.height()).max((k * k) as usize));
            prop_assert_eq!(t.to_edge_list(), a.clone());

            // Shape does not depend on insertion order.
            let mut rev = edges;
            rev.reverse();
            let b = EdgeList::from_edges(rows, cols, rev).unwrap();
            prop_assert_eq!(K2Tree::build(&b, k).unwrap(), t);
        }
    }
}
