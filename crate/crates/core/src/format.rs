//! Row-blocked compressed matrices over any of the five formats.
//!
//! A [`BlockedMatrix`] splits rows into contiguous blocks, each compressed
//! independently. On disk each block is one framed container; a file is the
//! blocks' containers back to back, in row order.

use rayon::prelude::*;

use crate::bits::Reader;
use crate::csr::CsrMatrix;
use crate::error::{Error, Result};
use crate::grammar::{repair, vs_encode, PackedGrammar, Variant};
use crate::k2tree::{K2Tree, DEFAULT_K};
use crate::matio::{partition_rows, ContainerHeader, EdgeList, FormatTag, RowRange, HEADER_LEN};
use crate::refcopy::{RefCopyMatrix, DEFAULT_WINDOW};

/// Per-format construction parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuildParams {
    pub k: u32,
    pub window: usize,
}

impl Default for BuildParams {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            window: DEFAULT_WINDOW,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Block {
    Csr(CsrMatrix),
    K2(K2Tree),
    Grammar(PackedGrammar),
    RefCopy(RefCopyMatrix),
}

impl Block {
    pub fn build(a: &EdgeList, tag: FormatTag, params: BuildParams) -> Result<Self> {
        Ok(match tag {
            FormatTag::Csr => Block::Csr(CsrMatrix::build(a)),
            FormatTag::K2 => Block::K2(K2Tree::build(a, params.k)?),
            FormatTag::Gr32 | FormatTag::GrIv => {
                let variant = if tag == FormatTag::Gr32 { Variant::Re32 } else { Variant::Reiv };
                if a.n_cols() as u64 + 1 + (a.m() + a.n_rows()) as u64 >= u32::MAX as u64 {
                    return Err(Error::InvalidArgument(format!(
                        "{}x{} matrix with {} nonzeros exceeds 32-bit grammar symbols",
                        a.n_rows(),
                        a.n_cols(),
                        a.m()
                    )));
                }
                Block::Grammar(PackedGrammar::pack(&repair(&vs_encode(a)), variant))
            }
            FormatTag::RefCopy => Block::RefCopy(RefCopyMatrix::build(a, params.window)),
        })
    }

    pub fn tag(&self) -> FormatTag {
        match self {
            Block::Csr(_) => FormatTag::Csr,
            Block::K2(_) => FormatTag::K2,
            Block::Grammar(g) => match g.variant() {
                Variant::Re32 => FormatTag::Gr32,
                Variant::Reiv => FormatTag::GrIv,
            },
            Block::RefCopy(_) => FormatTag::RefCopy,
        }
    }

    pub fn n_rows(&self) -> usize {
        match self {
            Block::Csr(b) => b.n_rows(),
            Block::K2(b) => b.n_rows(),
            Block::Grammar(b) => b.n_rows(),
            Block::RefCopy(b) => b.n_rows(),
        }
    }

    pub fn n_cols(&self) -> usize {
        match self {
            Block::Csr(b) => b.n_cols(),
            Block::K2(b) => b.n_cols(),
            Block::Grammar(b) => b.n_cols(),
            Block::RefCopy(b) => b.n_cols(),
        }
    }

    /// `y = A x` over rows in `range`. `scratch` is only used by grammars.
    pub fn spmv_into(&self, x: &[f64], range: RowRange, y: &mut [f64], scratch: &mut Vec<f64>) {
        match self {
            Block::Csr(b) => b.spmv_into(x, range, y),
            Block::K2(b) => b.spmv_into(x, range, y),
            Block::Grammar(b) => b.spmv_right_into(x, range, y, scratch),
            Block::RefCopy(b) => b.spmv_into(x, range, y),
        }
    }

    pub fn to_edge_list(&self) -> Result<EdgeList> {
        Ok(match self {
            Block::Csr(b) => b.to_edge_list(),
            Block::K2(b) => b.to_edge_list(),
            Block::Grammar(b) => crate::grammar::vs_decode(&b.expand()?)?,
            Block::RefCopy(b) => b.to_edge_list(),
        })
    }

    fn write_payload(&self, out: &mut Vec<u8>) {
        match self {
            Block::Csr(b) => b.write_payload(out),
            Block::K2(b) => b.write_payload(out),
            Block::Grammar(b) => b.write_payload(out),
            Block::RefCopy(b) => b.write_payload(out),
        }
    }

    /// Header plus payload.
    pub fn write(&self, m: u64, out: &mut Vec<u8>) {
        ContainerHeader {
            tag: self.tag(),
            n_rows: self.n_rows() as u64,
            n_cols: self.n_cols() as u64,
            m,
        }
        .write(out);
        self.write_payload(out);
    }

    /// Reads one framed block, returning it with its header.
    pub fn read(r: &mut Reader<'_>) -> Result<(ContainerHeader, Self)> {
        let h = ContainerHeader::read(r)?;
        let block = match h.tag {
            FormatTag::Csr => Block::Csr(CsrMatrix::read_payload(&h, r)?),
            FormatTag::K2 => Block::K2(K2Tree::read_payload(&h, r)?),
            FormatTag::Gr32 => Block::Grammar(PackedGrammar::read_payload(&h, Variant::Re32, r)?),
            FormatTag::GrIv => Block::Grammar(PackedGrammar::read_payload(&h, Variant::Reiv, r)?),
            FormatTag::RefCopy => Block::RefCopy(RefCopyMatrix::read_payload(&h, r)?),
        };
        Ok((h, block))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockedMatrix {
    tag: FormatTag,
    n_rows: usize,
    n_cols: usize,
    blocks: Vec<Block>,
    block_nnz: Vec<u64>,
    ranges: Vec<RowRange>,
}

impl BlockedMatrix {
    /// Compresses `a` as `n_blocks` edge-balanced row blocks.
    pub fn build(a: &EdgeList, tag: FormatTag, params: BuildParams, n_blocks: usize) -> Result<Self> {
        let ranges = partition_rows(a, n_blocks)?;
        Self::build_with_ranges(a, tag, params, ranges)
    }

    pub fn build_with_ranges(a: &EdgeList, tag: FormatTag, params: BuildParams, ranges: Vec<RowRange>) -> Result<Self> {
        check_ranges(&ranges, a.n_rows())?;
        let parts: Vec<(Block, u64)> = ranges
            .par_iter()
            .map(|&r| {
                let sub = a.row_block(r);
                let nnz = sub.m() as u64;
                Block::build(&sub, tag, params).map(|b| (b, nnz))
            })
            .collect::<Result<_>>()?;
        let (blocks, block_nnz) = parts.into_iter().unzip();
        Ok(Self {
            tag,
            n_rows: a.n_rows(),
            n_cols: a.n_cols(),
            blocks,
            block_nnz,
            ranges,
        })
    }

    pub fn tag(&self) -> FormatTag {
        self.tag
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> u64 {
        self.block_nnz.iter().sum()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn ranges(&self) -> &[RowRange] {
        &self.ranges
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for (b, &m) in self.blocks.iter().zip(&self.block_nnz) {
            b.write(m, &mut out);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "container");
        let mut blocks = Vec::new();
        let mut block_nnz = Vec::new();
        let mut ranges = Vec::new();
        let mut row = 0usize;
        let mut tag_cols: Option<(FormatTag, usize)> = None;
        while r.remaining() > 0 || blocks.is_empty() {
            if r.remaining() < HEADER_LEN {
                return Err(Error::corrupt("container", format!("{} stray bytes at offset {}", r.remaining(), r.position())));
            }
            let (h, b) = Block::read(&mut r)?;
            match tag_cols {
                None => tag_cols = Some((h.tag, h.n_cols as usize)),
                Some((t, c)) if t != h.tag || c != h.n_cols as usize => {
                    return Err(Error::corrupt(
                        h.tag.name(),
                        format!("block {} is {}x{} {}, expected {} columns of {}", blocks.len(), h.n_rows, h.n_cols, h.tag, c, t),
                    ));
                }
                Some(_) => {}
            }
            ranges.push(RowRange::new(row, row + b.n_rows()));
            row += b.n_rows();
            block_nnz.push(h.m);
            blocks.push(b);
        }
        let (tag, n_cols) = tag_cols.expect("at least one block");
        Ok(Self {
            tag,
            n_rows: row,
            n_cols,
            blocks,
            block_nnz,
            ranges,
        })
    }

    pub fn to_edge_list(&self) -> Result<EdgeList> {
        let mut edges = Vec::with_capacity(self.nnz() as usize);
        for (b, r) in self.blocks.iter().zip(&self.ranges) {
            let base = r.start as u32;
            edges.extend(b.to_edge_list()?.edges().iter().map(|&(er, c)| (er + base, c)));
        }
        EdgeList::from_sorted(self.n_rows, self.n_cols, edges)
    }

    /// One scratch buffer per block, for [`Self::spmv_blocks`].
    pub fn scratch(&self) -> Vec<Vec<f64>> {
        vec![Vec::new(); self.blocks.len()]
    }

    /// `y = A x`, blocks evaluated in parallel on the current rayon pool.
    /// Each block writes only its own slice of `y`, so the result does not
    /// depend on how blocks are scheduled.
    pub fn spmv_blocks(&self, x: &[f64], y: &mut [f64], scratch: &mut [Vec<f64>]) {
        assert_eq!(x.len(), self.n_cols, "x length");
        assert_eq!(y.len(), self.n_rows, "y length");
        assert_eq!(scratch.len(), self.blocks.len(), "scratch per block");
        let mut chunks = Vec::with_capacity(self.blocks.len());
        let mut rest = y;
        for r in &self.ranges {
            let (head, tail) = rest.split_at_mut(r.len());
            chunks.push(head);
            rest = tail;
        }
        self.blocks
            .par_iter()
            .zip(chunks)
            .zip(scratch.par_iter_mut())
            .for_each(|((b, chunk), w)| b.spmv_into(x, RowRange::full(b.n_rows()), chunk, w));
    }

    pub fn spmv(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.spmv_blocks(x, &mut y, &mut self.scratch());
        y
    }
}

fn check_ranges(ranges: &[RowRange], n_rows: usize) -> Result<()> {
    if ranges.is_empty() {
        return Err(Error::InvalidArgument("at least one row block required".into()));
    }
    let mut next = 0;
    for r in ranges {
        if r.start != next {
            return Err(Error::InvalidArgument(format!("row blocks not contiguous at {r:?}")));
        }
        next = r.end;
    }
    if next != n_rows {
        return Err(Error::InvalidArgument(format!("row blocks cover {next} of {n_rows} rows")));
    }
    Ok(())
}
