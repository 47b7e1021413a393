use crate::bits::{bit_width, IntVec, Reader};
use crate::error::{Error, Result};
use crate::matio::{ContainerHeader, RowRange};

use super::{Grammar, VsSequence, DELIMITER};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Plain 32-bit ids.
    Re32,
    /// Packed array, `1 + floor(log2 N_max)` bits per id.
    Reiv,
}

impl Variant {
    fn name(self) -> &'static str {
        match self {
            Variant::Re32 => "re32",
            Variant::Reiv => "reiv",
        }
    }
}

/// `R` flattened as `A_0 B_0 A_1 B_1 ...` followed by `C`, in one stream.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Stream {
    Re32(Vec<u32>),
    Reiv(IntVec),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackedGrammar {
    stream: Stream,
    n_rules: usize,
    n_rows: usize,
    n_cols: usize,
}

/// Read-only view used by the kernels; monomorphized per variant.
trait Ids {
    fn at(&self, i: usize) -> u32;
}

impl Ids for [u32] {
    #[inline]
    fn at(&self, i: usize) -> u32 {
        self[i]
    }
}

impl Ids for IntVec {
    #[inline]
    fn at(&self, i: usize) -> u32 {
        self.get(i) as u32
    }
}

impl PackedGrammar {
    pub fn pack(g: &Grammar, variant: Variant) -> Self {
        let ids = g.rules.iter().flatten().chain(&g.c).copied();
        let stream = match variant {
            Variant::Re32 => Stream::Re32(ids.collect()),
            Variant::Reiv => {
                let width = bit_width(g.max_symbol() as u64);
                Stream::Reiv(IntVec::from_values(width, ids.map(u64::from)))
            }
        };
        Self {
            stream,
            n_rules: g.rules.len(),
            n_rows: g.n_rows,
            n_cols: g.n_cols,
        }
    }

    pub fn unpack(&self) -> Grammar {
        let ids: Vec<u32> = match &self.stream {
            Stream::Re32(v) => v.clone(),
            Stream::Reiv(iv) => iv.iter().map(|v| v as u32).collect(),
        };
        let (r, c) = ids.split_at(2 * self.n_rules);
        Grammar {
            rules: r.chunks_exact(2).map(|p| [p[0], p[1]]).collect(),
            c: c.to_vec(),
            n_rows: self.n_rows,
            n_cols: self.n_cols,
        }
    }

    pub fn variant(&self) -> Variant {
        match self.stream {
            Stream::Re32(_) => Variant::Re32,
            Stream::Reiv(_) => Variant::Reiv,
        }
    }

    /// Bits per id in the reiv packing, `None` for re32.
    pub fn bit_width(&self) -> Option<u8> {
        match &self.stream {
            Stream::Re32(_) => None,
            Stream::Reiv(iv) => Some(iv.width()),
        }
    }

    pub fn n_rules(&self) -> usize {
        self.n_rules
    }

    pub fn top_len(&self) -> usize {
        self.stream_len() - 2 * self.n_rules
    }

    fn stream_len(&self) -> usize {
        match &self.stream {
            Stream::Re32(v) => v.len(),
            Stream::Reiv(iv) => iv.len(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn values(&self) -> &[f64] {
        &[1.0]
    }

    pub fn symbol_space(&self) -> u64 {
        self.n_cols as u64 + 1 + self.n_rules as u64
    }

    pub fn expand(&self) -> Result<VsSequence> {
        let g = self.unpack();
        g.validate().map_err(|m| Error::corrupt(self.variant().name(), m))?;
        g.expand()
    }

    /// `y = A x` over rows in `range`, writing `y[r - range.start]`. `w` is
    /// the per-nonterminal scratch array, reused across calls.
    pub fn spmv_right_into(&self, x: &[f64], range: RowRange, y: &mut [f64], w: &mut Vec<f64>) {
        assert_eq!(x.len(), self.n_cols, "x length");
        assert!(range.end <= self.n_rows, "range {range:?} beyond {} rows", self.n_rows);
        assert_eq!(y.len(), range.len(), "output length");
        match &self.stream {
            Stream::Re32(v) => self.right_kernel(v.as_slice(), x, range, y, w),
            Stream::Reiv(iv) => self.right_kernel(iv, x, range, y, w),
        }
    }

    pub fn spmv_right(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.spmv_right_into(x, RowRange::full(self.n_rows), &mut y, &mut Vec::new());
        y
    }

    fn right_kernel<S: Ids + ?Sized>(&self, ids: &S, x: &[f64], range: RowRange, y: &mut [f64], w: &mut Vec<f64>) {
        let first_nt = self.n_cols as u32 + 1;
        w.clear();
        w.resize(self.n_rules, 0.0);
        let eval = |s: u32, w: &[f64]| {
            if s >= first_nt {
                w[(s - first_nt) as usize]
            } else {
                x[(s - 1) as usize]
            }
        };
        for i in 0..self.n_rules {
            w[i] = eval(ids.at(2 * i), w) + eval(ids.at(2 * i + 1), w);
        }
        let (mut row, mut acc) = (0usize, 0.0);
        for pos in 2 * self.n_rules..self.stream_len() {
            let s = ids.at(pos);
            if s == DELIMITER {
                if range.contains(row) {
                    y[row - range.start] = acc;
                }
                row += 1;
                if row >= range.end {
                    break;
                }
                acc = 0.0;
            } else if row >= range.start {
                acc += eval(s, w);
            }
        }
    }

    /// `y^T = z^T A`: top-sequence occurrences seed `W`, a backward rule
    /// scan pushes each `W[i]` to its two sides, and terminals collect into `y`.
    pub fn spmv_left(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.n_rows, "z length");
        match &self.stream {
            Stream::Re32(v) => self.left_kernel(v.as_slice(), z),
            Stream::Reiv(iv) => self.left_kernel(iv, z),
        }
    }

    fn left_kernel<S: Ids + ?Sized>(&self, ids: &S, z: &[f64]) -> Vec<f64> {
        let first_nt = self.n_cols as u32 + 1;
        let mut w = vec![0.0; self.n_rules];
        let mut y = vec![0.0; self.n_cols];
        let mut row = 0usize;
        for pos in 2 * self.n_rules..self.stream_len() {
            match ids.at(pos) {
                DELIMITER => row += 1,
                s if s >= first_nt => w[(s - first_nt) as usize] += z[row],
                s => y[(s - 1) as usize] += z[row],
            }
        }
        for i in (0..self.n_rules).rev() {
            let wi = w[i];
            for s in [ids.at(2 * i), ids.at(2 * i + 1)] {
                if s >= first_nt {
                    w[(s - first_nt) as usize] += wi;
                } else {
                    y[(s - 1) as usize] += wi;
                }
            }
        }
        y
    }

    /// Payload: u64 |R|, u64 |C|, u32 symbol-space size, u8 bit width (reiv
    /// only, omitted when `R` and `C` are both empty), then the `R` stream followed by `C`. re32 writes u32 ids;
    /// reiv writes one LSB-first packed array padded to a byte boundary.
    pub fn write_payload(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.n_rules as u64).to_le_bytes());
        out.extend_from_slice(&(self.top_len() as u64).to_le_bytes());
        out.extend_from_slice(&(self.symbol_space() as u32).to_le_bytes());
        match &self.stream {
            Stream::Re32(v) => {
                for id in v {
                    out.extend_from_slice(&id.to_le_bytes());
                }
            }
            Stream::Reiv(iv) => {
                if iv.is_empty() {
                    return;
                }
                out.push(iv.width());
                iv.write_bytes(out);
            }
        }
    }

    pub fn read_payload(h: &ContainerHeader, variant: Variant, r: &mut Reader<'_>) -> Result<Self> {
        let name = variant.name();
        let bad = |msg: String| Error::corrupt(name, msg);
        let bound = r.remaining().saturating_mul(8);
        let n_rules = r.len_u64(bound)?;
        let top_len = r.len_u64(bound)?;
        let space = r.u32()? as u64;
        let (n_rows, n_cols) = (h.n_rows as usize, h.n_cols as usize);
        if space != n_cols as u64 + 1 + n_rules as u64 {
            return Err(bad(format!("symbol space {space} inconsistent with {n_cols} columns and {n_rules} rules")));
        }
        let len = 2 * n_rules + top_len;
        let stream = match variant {
            Variant::Re32 => {
                let bytes = r.take(len.checked_mul(4).ok_or_else(|| bad("stream length overflow".into()))?)?;
                Stream::Re32(bytes.chunks_exact(4).map(|b| u32::from_le_bytes(b.try_into().unwrap())).collect())
            }
            Variant::Reiv if len == 0 => Stream::Reiv(IntVec::from_values(1, [])),
            Variant::Reiv => {
                let width = r.u8()?;
                if !(1..=32).contains(&width) {
                    return Err(bad(format!("bit width {width}")));
                }
                let bytes = r.take((len * width as usize).div_ceil(8))?;
                Stream::Reiv(IntVec::from_bytes(bytes, width, len)?)
            }
        };
        let pg = Self {
            stream,
            n_rules,
            n_rows,
            n_cols,
        };
        let g = pg.unpack();
        g.validate().map_err(bad)?;
        if let Some(width) = pg.bit_width() {
            let want = bit_width(g.max_symbol() as u64);
            if width != want {
                return Err(bad(format!("bit width {width}, largest id needs {want}")));
            }
        }
        if g.nnz() != h.m {
            return Err(bad(format!("grammar expands to {} nonzeros, header says {}", g.nnz(), h.m)));
        }
        Ok(pg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csr::{dense_left_oracle, dense_oracle};
    use crate::grammar::{repair, vs_encode};
    use crate::matio::{EdgeList, FormatTag};
    use crate::testutil::{assert_close, clustered_edges, random_vector};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn example() -> EdgeList {
        // Rows {0,2}, {0,2}, {1,3}, {0,2}.
        let rows: [&[u32]; 4] = [&[0, 2], &[0, 2], &[1, 3], &[0, 2]];
        let edges = rows
            .iter()
            .enumerate()
            .flat_map(|(r, cs)| cs.iter().map(move |&c| (r as u32, c)))
            .collect();
        EdgeList::from_edges(4, 4, edges).unwrap()
    }

    #[test]
    fn right_multiply_example() {
        let a = example();
        let g = repair(&vs_encode(&a));
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(dense_oracle(&a, &x).unwrap(), vec![4.0, 4.0, 6.0, 4.0]);
        for v in [Variant::Re32, Variant::Reiv] {
            let pg = PackedGrammar::pack(&g, v);
            assert_eq!(pg.spmv_right(&x), vec![4.0, 4.0, 6.0, 4.0]);
            assert_eq!(pg.spmv_right(&[0.0; 4]), vec![0.0; 4]);
            let mut y = vec![0.0; 2];
            pg.spmv_right_into(&x, RowRange::new(1, 3), &mut y, &mut Vec::new());
            assert_eq!(y, vec![4.0, 6.0]);
        }
        // The first rule is N0 -> (1,0)(1,2), evaluated to x0 + x2.
        assert_eq!(g.rules()[0], [1, 3]);
    }

    #[test]
    fn left_multiply_example() {
        let a = example();
        let z = [1.0, 0.0, 1.0, 2.0];
        assert_eq!(dense_left_oracle(&a, &z).unwrap(), vec![3.0, 1.0, 3.0, 1.0]);
        let pg = PackedGrammar::pack(&repair(&vs_encode(&a)), Variant::Reiv);
        assert_eq!(pg.spmv_left(&z), vec![3.0, 1.0, 3.0, 1.0]);
        assert_eq!(pg.spmv_left(&[0.0; 4]), vec![0.0; 4]);
        for u in 0..4 {
            let mut e = [0.0; 4];
            e[u] = 1.0;
            let row: Vec<f64> = (0..4).map(|c| if a.contains(u as u32, c) { 1.0 } else { 0.0 }).collect();
            assert_eq!(pg.spmv_left(&e), row);
        }
    }

    #[test]
    fn empty_grammar() {
        let g = repair(&vs_encode(&EdgeList::empty(3, 5)));
        let pg = PackedGrammar::pack(&g, Variant::Reiv);
        assert_eq!(pg.bit_width(), Some(1));
        assert_eq!(pg.spmv_right(&[1.0; 5]), vec![0.0; 3]);
        let g = repair(&vs_encode(&EdgeList::empty(0, 0)));
        let mut buf = Vec::new();
        PackedGrammar::pack(&g, Variant::Re32).write_payload(&mut buf);
        assert_eq!(buf.len(), 8 + 8 + 4);
    }

    #[test]
    fn reiv_width_rule() {
        // N_max = 5 -> 1 + floor(log2 5) = 3 bits.
        let g = Grammar::new(vec![[1, 2]], vec![3, 0, 3, 0], 2, 2).unwrap();
        let g5 = Grammar::new(vec![[1, 2], [3, 1], [4, 2]], vec![5, 0], 1, 2).unwrap();
        assert_eq!(g5.max_symbol(), 5);
        assert_eq!(PackedGrammar::pack(&g5, Variant::Reiv).bit_width(), Some(3));
        assert_eq!(PackedGrammar::pack(&g, Variant::Reiv).bit_width(), Some(2));
    }

    #[test]
    fn corrupt_payloads() {
        let a = example();
        let g = repair(&vs_encode(&a));
        let h = ContainerHeader { tag: FormatTag::Gr32, n_rows: 4, n_cols: 4, m: a.m() as u64 };
        let mut buf = Vec::new();
        PackedGrammar::pack(&g, Variant::Re32).write_payload(&mut buf);
        assert!(PackedGrammar::read_payload(&h, Variant::Re32, &mut Reader::new(&buf, "re32")).is_ok());
        // Make rule 0 reference itself.
        let mut cyc = buf.clone();
        cyc[20..24].copy_from_slice(&5u32.to_le_bytes());
        let err = PackedGrammar::read_payload(&h, Variant::Re32, &mut Reader::new(&cyc, "re32")).unwrap_err();
        assert!(err.to_string().contains("re32"), "{err}");
        let wrong_m = ContainerHeader { m: 3, ..h };
        assert!(PackedGrammar::read_payload(&wrong_m, Variant::Re32, &mut Reader::new(&buf, "re32")).is_err());
    }

    proptest! {
        #[test]
        fn pack_unpack_and_products(rows in 1usize..30, cols in 1usize..30, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = clustered_edges(&mut rng, rows, cols, 3, 0.3);
            let g = repair(&vs_encode(&a));
            let x = random_vector(&mut rng, cols);
            let z = random_vector(&mut rng, rows);
            let mut sizes = Vec::new();
            for v in [Variant::Re32, Variant::Reiv] {
                let pg = PackedGrammar::pack(&g, v);
                prop_assert_eq!(pg.unpack(), g.clone());
                prop_assert_eq!(pg.expand().unwrap(), vs_encode(&a));
                let h = ContainerHeader { tag: FormatTag::Gr32, n_rows: rows as u64, n_cols: cols as u64, m: a.m() as u64 };
                let mut buf = Vec::new();
                pg.write_payload(&mut buf);
                let mut rd = Reader::new(&buf, "g");
                prop_assert_eq!(PackedGrammar::read_payload(&h, v, &mut rd).unwrap(), pg.clone());
                prop_assert!(rd.finish().is_ok());
                sizes.push(buf.len());

                let y = pg.spmv_right(&x);
                assert_close(&y, &dense_oracle(&a, &x).unwrap(), 1e-9);
                let yl = pg.spmv_left(&z);
                assert_close(&yl, &dense_left_oracle(&a, &z).unwrap(), 1e-9);
                let lhs: f64 = z.iter().zip(&y).map(|(a, b)| a * b).sum();
                let rhs: f64 = yl.iter().zip(&x).map(|(a, b)| a * b).sum();
                prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1e-300));
            }
            prop_assert!(sizes[1] <= sizes[0]);
        }
    }
}
