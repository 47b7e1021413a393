//! Reference-copy adjacency encoding.
//!
//! Each row is stored either as its plain column list or as a diff
//! (additions, deletions) against an earlier row at most `window` rows
//! back. A row's product is then the referenced row's product plus the
//! additions minus the deletions.

use std::collections::{BTreeSet, HashMap};

use crate::bits::{write_varint, Reader};
use crate::error::{Error, Result};
use crate::matio::{ContainerHeader, EdgeList, RowRange};

pub const DEFAULT_WINDOW: usize = 7;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RowEncoding {
    /// Absolute index of the referenced (earlier) row.
    pub reference: Option<u32>,
    pub additions: Vec<u32>,
    pub deletions: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefCopyMatrix {
    n_rows: usize,
    n_cols: usize,
    window: usize,
    rows: Vec<RowEncoding>,
}

/// `(row \ reference, reference \ row)` for sorted lists.
fn diff(row: &[u32], reference: &[u32]) -> (Vec<u32>, Vec<u32>) {
    let (mut add, mut del) = (Vec::new(), Vec::new());
    let (mut i, mut j) = (0, 0);
    while i < row.len() && j < reference.len() {
        match row[i].cmp(&reference[j]) {
            std::cmp::Ordering::Less => {
                add.push(row[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                del.push(reference[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    add.extend_from_slice(&row[i..]);
    del.extend_from_slice(&reference[j..]);
    (add, del)
}

/// `reference \ deletions ∪ additions`, sorted.
fn apply(reference: &[u32], enc: &RowEncoding) -> Vec<u32> {
    let kept = reference.iter().filter(|c| enc.deletions.binary_search(c).is_err());
    let mut out: Vec<u32> = kept.chain(&enc.additions).copied().collect();
    out.sort_unstable();
    out
}

impl RefCopyMatrix {
    /// Picks, per row, the cheapest of "no reference" (cost `|row|`) and every
    /// in-window reference (cost `|add| + |del| + 1`). Ties keep the plain
    /// list, then the nearest reference. References whose deletions exceed
    /// half the referenced row are not considered.
    pub fn build(a: &EdgeList, window: usize) -> Self {
        let cols: Vec<u32> = a.edges().iter().map(|&(_, c)| c).collect();
        let starts: Vec<usize> = (0..=a.n_rows()).map(|r| a.row_start(r)).collect();
        let lists: Vec<&[u32]> = starts.windows(2).map(|w| &cols[w[0]..w[1]]).collect();
        let rows = (0..a.n_rows())
            .map(|i| {
                let row = lists[i];
                let mut best = RowEncoding {
                    reference: None,
                    additions: row.to_vec(),
                    deletions: Vec::new(),
                };
                let mut best_cost = row.len();
                for d in 1..=window.min(i) {
                    let j = i - d;
                    let (add, del) = diff(row, lists[j]);
                    if 2 * del.len() > lists[j].len() {
                        continue;
                    }
                    let cost = add.len() + del.len() + 1;
                    if cost < best_cost {
                        best_cost = cost;
                        best = RowEncoding {
                            reference: Some(j as u32),
                            additions: add,
                            deletions: del,
                        };
                    }
                }
                best
            })
            .collect();
        Self {
            n_rows: a.n_rows(),
            n_cols: a.n_cols(),
            window,
            rows,
        }
    }
}

impl RefCopyMatrix {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn rows(&self) -> &[RowEncoding] {
        &self.rows
    }

    /// Σ(|additions| + |deletions|) over all rows.
    pub fn diff_size(&self) -> usize {
        self.rows.iter().map(|r| r.additions.len() + r.deletions.len()).sum()
    }

    fn row_value(&self, i: usize, x: &[f64], base: f64) -> f64 {
        let enc = &self.rows[i];
        let mut v = base;
        for &c in &enc.additions {
            v += x[c as usize];
        }
        for &c in &enc.deletions {
            v -= x[c as usize];
        }
        v
    }

    /// Rows before `range.start` reachable through reference chains of rows in `range`.
    fn prefix_rows(&self, range: RowRange) -> Vec<u32> {
        let mut pending: BTreeSet<u32> = self.rows[range.start..range.end]
            .iter()
            .filter_map(|e| e.reference)
            .filter(|&r| (r as usize) < range.start)
            .collect();
        let mut needed = Vec::new();
        while let Some(r) = pending.pop_last() {
            needed.push(r);
            if let Some(rr) = self.rows[r as usize].reference {
                pending.insert(rr);
            }
        }
        needed.reverse();
        needed
    }

    /// `y[i - range.start] = y[ref] + Σ_add x - Σ_del x`, rows in increasing
    /// order. The output slice doubles as the cache of referenced results;
    /// references that leave the range are evaluated transiently first.
    pub fn spmv_into(&self, x: &[f64], range: RowRange, y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols, "x length");
        assert!(range.end <= self.n_rows, "range {range:?} beyond {} rows", self.n_rows);
        assert_eq!(y.len(), range.len(), "output length");
        let mut prefix: HashMap<u32, f64> = HashMap::new();
        for r in self.prefix_rows(range) {
            let base = self.rows[r as usize].reference.map_or(0.0, |rr| prefix[&rr]);
            prefix.insert(r, self.row_value(r as usize, x, base));
        }
        for i in range.start..range.end {
            let base = match self.rows[i].reference {
                None => 0.0,
                Some(r) if (r as usize) < range.start => prefix[&r],
                Some(r) => y[r as usize - range.start],
            };
            y[i - range.start] = self.row_value(i, x, base);
        }
    }

    pub fn spmv(&self, x: &[f64], range: RowRange) -> Vec<f64> {
        let mut y = vec![0.0; range.len()];
        self.spmv_into(x, range, &mut y);
        y
    }

    pub fn to_edge_list(&self) -> EdgeList {
        let mut lists: Vec<Vec<u32>> = Vec::with_capacity(self.n_rows);
        for enc in &self.rows {
            let row = match enc.reference {
                Some(r) => apply(&lists[r as usize], enc),
                None => enc.additions.clone(),
            };
            lists.push(row);
        }
        let edges = lists
            .iter()
            .enumerate()
            .flat_map(|(r, cs)| cs.iter().map(move |&c| (r as u32, c)))
            .collect();
        EdgeList::from_sorted(self.n_rows, self.n_cols, edges).expect("encoding invariants hold")
    }

    /// Payload: u32 window, then per row a flags byte (bit 0: has
    /// reference), varint reference gap, varint list lengths and the
    /// gap-coded column lists (first value, then successive differences
    /// minus one).
    pub fn write_payload(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.window as u32).to_le_bytes());
        for (i, enc) in self.rows.iter().enumerate() {
            out.push(enc.reference.is_some() as u8);
            if let Some(r) = enc.reference {
                write_varint(out, (i - r as usize) as u64);
            }
            write_varint(out, enc.additions.len() as u64);
            if enc.reference.is_some() {
                write_varint(out, enc.deletions.len() as u64);
            }
            write_gaps(out, &enc.additions);
            write_gaps(out, &enc.deletions);
        }
    }

    pub fn read_payload(h: &ContainerHeader, r: &mut Reader<'_>) -> Result<Self> {
        let bad = |msg: String| Error::corrupt("refcopy", msg);
        let (n_rows, n_cols) = (h.n_rows as usize, h.n_cols as usize);
        let window = r.u32()? as usize;
        if n_rows > r.remaining() {
            return Err(bad(format!("payload too short for {n_rows} rows")));
        }
        let mut rows = Vec::with_capacity(n_rows);
        let mut lists: Vec<Vec<u32>> = Vec::with_capacity(n_rows);
        let mut m = 0u64;
        for i in 0..n_rows {
            let flags = r.u8()?;
            if flags > 1 {
                return Err(bad(format!("row {i}: flags {flags:#x}")));
            }
            let reference = if flags == 1 {
                let gap = r.varint()?;
                if gap == 0 || gap > window as u64 || gap > i as u64 {
                    return Err(bad(format!("row {i}: reference gap {gap} (window {window})")));
                }
                Some((i as u64 - gap) as u32)
            } else {
                None
            };
            let n_add = r.varint()? as usize;
            let n_del = if reference.is_some() { r.varint()? as usize } else { 0 };
            let additions = read_gaps(r, n_add, n_cols).map_err(|m| bad(format!("row {i}: {m}")))?;
            let deletions = read_gaps(r, n_del, n_cols).map_err(|m| bad(format!("row {i}: {m}")))?;
            let enc = RowEncoding {
                reference,
                additions,
                deletions,
            };
            let row = match reference {
                Some(rr) => {
                    let base = &lists[rr as usize];
                    if enc.additions.iter().any(|c| base.binary_search(c).is_ok())
                        || enc.deletions.iter().any(|c| base.binary_search(c).is_err())
                    {
                        return Err(bad(format!("row {i}: diff inconsistent with row {rr}")));
                    }
                    apply(base, &enc)
                }
                None => enc.additions.clone(),
            };
            m += row.len() as u64;
            lists.push(row);
            rows.push(enc);
        }
        if m != h.m {
            return Err(bad(format!("rows hold {m} nonzeros, header says {}", h.m)));
        }
        Ok(Self {
            n_rows,
            n_cols,
            window,
            rows,
        })
    }
}

fn write_gaps(out: &mut Vec<u8>, cols: &[u32]) {
    let mut prev: Option<u32> = None;
    for &c in cols {
        let v = match prev {
            None => c as u64,
            Some(p) => (c - p - 1) as u64,
        };
        write_varint(out, v);
        prev = Some(c);
    }
}

fn read_gaps(r: &mut Reader<'_>, n: usize, n_cols: usize) -> std::result::Result<Vec<u32>, String> {
    if n > r.remaining() {
        return Err(format!("list of {n} entries exceeds payload"));
    }
    let mut out = Vec::with_capacity(n);
    let mut next_min = 0u64;
    for _ in 0..n {
        let v = r.varint().map_err(|e| e.to_string())?;
        let c = next_min.checked_add(v).ok_or("column overflow")?;
        if c >= n_cols as u64 {
            return Err(format!("column {c} outside {n_cols}"));
        }
        out.push(c as u32);
        next_min = c + 1;
    }
    Ok(out)
}
