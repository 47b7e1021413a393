//! RePair-compressed matrices.
//!
//! A matrix is first flattened row by row into a `(V, S)` sequence, `S`
//! interleaving `(value, column)` pairs with one delimiter per row. RePair
//! turns `S` into rules `R` and a top sequence `C`; both products
//! (`y = A x` and `y^T = z^T A`) are then evaluated straight from `R` and
//! `C` in `O(|R| + |C|)` time.
//!
//! Symbol ids shared by [`Grammar`] and [`PackedGrammar`]:
//!
//! | id                     | meaning                            |
//! |------------------------|------------------------------------|
//! | `0`                    | row delimiter                      |
//! | `1 ..= n_cols`         | terminal `(1, j)` stored as `j + 1`|
//! | `n_cols + 1 + i`       | nonterminal `N_i`                  |

mod packed;
mod repair;

pub use packed::{PackedGrammar, Variant};
pub use repair::{repair, repair_naive};

use crate::error::{Error, Result};
use crate::matio::EdgeList;

pub const DELIMITER: u32 = 0;

/// One symbol of the `(V, S)` encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VsSymbol {
    /// Nonzero with value `V[value]` in column `col`.
    Pair { value: u32, col: u32 },
    /// End of row `i`.
    RowDelim(u32),
}

#[derive(Clone, Debug, PartialEq)]
pub struct VsSequence {
    values: Vec<f64>,
    symbols: Vec<VsSymbol>,
    n_rows: usize,
    n_cols: usize,
}

impl VsSequence {
    /// Checks the delimiter and column-order invariants.
    pub fn new(values: Vec<f64>, symbols: Vec<VsSymbol>, n_rows: usize, n_cols: usize) -> Result<Self> {
        let bad = |msg: String| Error::InvalidArgument(format!("(V,S) sequence: {msg}"));
        let mut row = 0u32;
        let mut last_col: Option<u32> = None;
        for s in &symbols {
            match *s {
                VsSymbol::Pair { value, col } => {
                    if value as usize >= values.len() {
                        return Err(bad(format!("value index {value} outside dictionary")));
                    }
                    if col as usize >= n_cols {
                        return Err(bad(format!("column {col} outside {n_cols}")));
                    }
                    if row as usize >= n_rows {
                        return Err(bad("pair after the last row delimiter".into()));
                    }
                    if last_col.is_some_and(|c| c >= col) {
                        return Err(bad(format!("row {row}: columns not increasing at {col}")));
                    }
                    last_col = Some(col);
                }
                VsSymbol::RowDelim(i) => {
                    if i != row {
                        return Err(bad(format!("delimiter z{i} where z{row} expected")));
                    }
                    row += 1;
                    last_col = None;
                }
            }
        }
        if row as usize != n_rows {
            return Err(bad(format!("{row} delimiters for {n_rows} rows")));
        }
        Ok(Self {
            values,
            symbols,
            n_rows,
            n_cols,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn symbols(&self) -> &[VsSymbol] {
        &self.symbols
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Symbol ids in the shared layout; Boolean sequences only.
    pub(crate) fn to_ids(&self) -> Vec<u32> {
        self.symbols
            .iter()
            .map(|s| match *s {
                VsSymbol::Pair { col, .. } => col + 1,
                VsSymbol::RowDelim(_) => DELIMITER,
            })
            .collect()
    }

    pub(crate) fn from_ids(ids: &[u32], n_rows: usize, n_cols: usize) -> Result<Self> {
        let mut row = 0u32;
        let symbols = ids
            .iter()
            .map(|&id| {
                if id == DELIMITER {
                    row += 1;
                    VsSymbol::RowDelim(row - 1)
                } else {
                    VsSymbol::Pair { value: 0, col: id - 1 }
                }
            })
            .collect();
        Self::new(vec![1.0], symbols, n_rows, n_cols)
    }
}

/// Row-major scan: one `(0, j)` pair per 1-cell, a delimiter after each row.
/// `V` is `[1.0]`, so every pair has value index 0.
pub fn vs_encode(a: &EdgeList) -> VsSequence {
    let mut symbols = Vec::with_capacity(a.m() + a.n_rows());
    let mut edges = a.edges().iter().peekable();
    for r in 0..a.n_rows() as u32 {
        while let Some(&(_, c)) = edges.next_if(|&&(er, _)| er == r) {
            symbols.push(VsSymbol::Pair { value: 0, col: c });
        }
        symbols.push(VsSymbol::RowDelim(r));
    }
    VsSequence {
        values: vec![1.0],
        symbols,
        n_rows: a.n_rows(),
        n_cols: a.n_cols(),
    }
}

/// Inverse of [`vs_encode`]; every stored value must be nonzero.
pub fn vs_decode(s: &VsSequence) -> Result<EdgeList> {
    let mut edges = Vec::new();
    let mut row = 0u32;
    for sym in &s.symbols {
        match *sym {
            VsSymbol::Pair { value, col } => {
                if s.values[value as usize] == 0.0 {
                    return Err(Error::InvalidArgument("explicit zero in (V,S) sequence".into()));
                }
                edges.push((row, col));
            }
            VsSymbol::RowDelim(_) => row += 1,
        }
    }
    EdgeList::from_sorted(s.n_rows, s.n_cols, edges)
}

/// RePair output over the shared symbol ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grammar {
    pub(crate) rules: Vec<[u32; 2]>,
    pub(crate) c: Vec<u32>,
    pub(crate) n_rows: usize,
    pub(crate) n_cols: usize,
}

impl Grammar {
    /// Validates ids and rule order.
    pub fn new(rules: Vec<[u32; 2]>, c: Vec<u32>, n_rows: usize, n_cols: usize) -> Result<Self> {
        let g = Self {
            rules,
            c,
            n_rows,
            n_cols,
        };
        g.validate().map_err(|msg| Error::InvalidArgument(format!("grammar: {msg}")))?;
        Ok(g)
    }

    pub fn rules(&self) -> &[[u32; 2]] {
        &self.rules
    }

    pub fn top(&self) -> &[u32] {
        &self.c
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

    /// First nonterminal id.
    pub fn first_nonterminal(&self) -> u64 {
        self.n_cols as u64 + 1
    }

    pub fn symbol_space(&self) -> u64 {
        self.first_nonterminal() + self.rules.len() as u64
    }

    pub fn is_terminal(&self, id: u32) -> bool {
        id != DELIMITER && (id as u64) < self.first_nonterminal()
    }

    /// Largest id appearing in `R` or `C`.
    pub fn max_symbol(&self) -> u32 {
        self.rules
            .iter()
            .flatten()
            .chain(&self.c)
            .copied()
            .max()
            .unwrap_or(0)
    }

    pub(crate) fn validate(&self) -> std::result::Result<(), String> {
        let first_nt = self.first_nonterminal();
        for (i, rule) in self.rules.iter().enumerate() {
            for &s in rule {
                if s == DELIMITER {
                    return Err(format!("rule {i} contains a row delimiter"));
                }
                if s as u64 >= first_nt && s as u64 - first_nt >= i as u64 {
                    return Err(format!("rule {i} references N{} (forward or cyclic)", s as u64 - first_nt));
                }
            }
        }
        let space = self.symbol_space();
        if let Some(&bad) = self.c.iter().find(|&&s| s as u64 >= space) {
            return Err(format!("top sequence symbol {bad} outside symbol space {space}"));
        }
        let delims = self.c.iter().filter(|&&s| s == DELIMITER).count();
        if delims != self.n_rows {
            return Err(format!("{delims} row delimiters for {} rows", self.n_rows));
        }
        if self.c.last().is_some_and(|&s| s != DELIMITER) {
            return Err("top sequence does not end with a row delimiter".into());
        }
        Ok(())
    }

    /// Full expansion of `C` through `R` as symbol ids.
    pub(crate) fn expand_ids(&self) -> Vec<u32> {
        let first_nt = self.first_nonterminal() as u32;
        let mut out = Vec::with_capacity(self.c.len());
        let mut stack = Vec::new();
        for &s in &self.c {
            stack.push(s);
            while let Some(s) = stack.pop() {
                if s >= first_nt {
                    let [a, b] = self.rules[(s - first_nt) as usize];
                    stack.push(b);
                    stack.push(a);
                } else {
                    out.push(s);
                }
            }
        }
        out
    }

    pub fn expand(&self) -> Result<VsSequence> {
        VsSequence::from_ids(&self.expand_ids(), self.n_rows, self.n_cols)
    }

    /// Number of terminals each nonterminal expands to.
    pub(crate) fn rule_lengths(&self) -> Vec<u64> {
        let first_nt = self.first_nonterminal() as u32;
        let mut lens: Vec<u64> = Vec::with_capacity(self.rules.len());
        for &[a, b] in &self.rules {
            let len = |s: u32, lens: &[u64]| if s >= first_nt { lens[(s - first_nt) as usize] } else { 1 };
            let n = len(a, &lens) + len(b, &lens);
            lens.push(n);
        }
        lens
    }

    /// Number of nonzeros represented.
    pub fn nnz(&self) -> u64 {
        let first_nt = self.first_nonterminal() as u32;
        let lens = self.rule_lengths();
        self.c
            .iter()
            .map(|&s| match s {
                DELIMITER => 0,
                s if s >= first_nt => lens[(s - first_nt) as usize],
                _ => 1,
            })
            .sum()
    }
}
