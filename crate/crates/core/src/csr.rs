//! Uncompressed CSR baseline and the dense reference oracles.

use crate::bits::Reader;
use crate::error::{Error, Result};
use crate::matio::{ContainerHeader, EdgeList, RowRange};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<u64>,
    col_idx: Vec<u32>,
}

impl CsrMatrix {
    pub fn build(a: &EdgeList) -> Self {
        let mut row_ptr = vec![0u64; a.n_rows() + 1];
        for &(r, _) in a.edges() {
            row_ptr[r as usize + 1] += 1;
        }
        for i in 0..a.n_rows() {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n_rows: a.n_rows(),
            n_cols: a.n_cols(),
            row_ptr,
            col_idx: a.edges().iter().map(|&(_, c)| c).collect(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[u64] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[u32] {
        &self.col_idx
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.col_idx[self.row_ptr[r] as usize..self.row_ptr[r + 1] as usize]
    }

    /// `y[r - range.start] = sum of x[c]` over row `r`, columns in increasing order.
    pub fn spmv_into(&self, x: &[f64], range: RowRange, y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols, "x length");
        assert!(range.end <= self.n_rows, "range {range:?} beyond {} rows", self.n_rows);
        assert_eq!(y.len(), range.len(), "output length");
        for (out, r) in y.iter_mut().zip(range.start..range.end) {
            *out = self.row(r).iter().map(|&c| x[c as usize]).sum();
        }
    }

    pub fn spmv(&self, x: &[f64], range: RowRange) -> Vec<f64> {
        let mut y = vec![0.0; range.len()];
        self.spmv_into(x, range, &mut y);
        y
    }

    pub fn to_edge_list(&self) -> EdgeList {
        let edges = (0..self.n_rows)
            .flat_map(|r| self.row(r).iter().map(move |&c| (r as u32, c)))
            .collect();
        EdgeList::from_sorted(self.n_rows, self.n_cols, edges).expect("CSR invariants hold")
    }

    /// Payload: `row_ptr` as u64 then `col_idx` as u32, little-endian.
    pub fn write_payload(&self, out: &mut Vec<u8>) {
        out.reserve(self.row_ptr.len() * 8 + self.col_idx.len() * 4);
        for p in &self.row_ptr {
            out.extend_from_slice(&p.to_le_bytes());
        }
        for c in &self.col_idx {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }

    pub fn read_payload(h: &ContainerHeader, r: &mut Reader<'_>) -> Result<Self> {
        let bad = |msg: String| Error::corrupt("csr", msg);
        let (n_rows, n_cols, m) = (h.n_rows as usize, h.n_cols as usize, h.m as usize);
        if n_rows.saturating_add(1).saturating_mul(8) > r.remaining() {
            return Err(bad(format!("payload too short for {n_rows} rows")));
        }
        let row_ptr = (0..=n_rows).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
        if m.saturating_mul(4) > r.remaining() {
            return Err(bad(format!("payload too short for {m} columns")));
        }
        let col_idx = (0..m).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        if row_ptr[0] != 0 || row_ptr[n_rows] != m as u64 || row_ptr.windows(2).any(|w| w[0] > w[1]) {
            return Err(bad("row_ptr not a valid offset array".into()));
        }
        for i in 0..n_rows {
            let row = &col_idx[row_ptr[i] as usize..row_ptr[i + 1] as usize];
            if row.windows(2).any(|w| w[0] >= w[1]) || row.iter().any(|&c| c as usize >= n_cols) {
                return Err(bad(format!("row {i} has invalid column indices")));
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
        })
    }
}

/// Largest matrix the dense oracles will materialize.
pub const DENSE_ORACLE_MAX_CELLS: u128 = 1 << 22;

fn materialize(a: &EdgeList) -> Result<Vec<u8>> {
    let cells = a.n_rows() as u128 * a.n_cols() as u128;
    if cells > DENSE_ORACLE_MAX_CELLS {
        return Err(Error::TooLarge(cells));
    }
    let mut dense = vec![0u8; cells as usize];
    for &(r, c) in a.edges() {
        dense[r as usize * a.n_cols() + c as usize] = 1;
    }
    Ok(dense)
}

/// `y = A x` from an explicit 0/1 matrix, row-major accumulation.
pub fn dense_oracle(a: &EdgeList, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != a.n_cols() {
        return Err(Error::Dimension(format!("x has {} entries, A has {} columns", x.len(), a.n_cols())));
    }
    let dense = materialize(a)?;
    let n = a.n_cols();
    Ok((0..a.n_rows())
        .map(|r| {
            let mut acc = 0.0;
            for c in 0..n {
                if dense[r * n + c] == 1 {
                    acc += x[c];
                }
            }
            acc
        })
        .collect())
}

/// `y^T = z^T A` from an explicit 0/1 matrix.
pub fn dense_left_oracle(a: &EdgeList, z: &[f64]) -> Result<Vec<f64>> {
    if z.len() != a.n_rows() {
        return Err(Error::Dimension(format!("z has {} entries, A has {} rows", z.len(), a.n_rows())));
    }
    let dense = materialize(a)?;
    let n = a.n_cols();
    Ok((0..n)
        .map(|c| {
            let mut acc = 0.0;
            for r in 0..a.n_rows() {
                if dense[r * n + c] == 1 {
                    acc += z[r];
                }
            }
            acc
        })
        .collect())
}
