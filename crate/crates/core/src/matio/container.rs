//! Common framing for serialized compressed matrices.
//!
//! ```text
//! 8 bytes  magic "GSPMV\0\0\0"
//! 1 byte   format tag
//! u64 LE   n_rows
//! u64 LE   n_cols
//! u64 LE   m
//! ...      format payload
//! ```

use crate::bits::Reader;
use crate::error::{Error, Result};

pub const CONTAINER_MAGIC: [u8; 8] = *b"GSPMV\0\0\0";
pub const HEADER_LEN: usize = 8 + 1 + 3 * 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum FormatTag {
    Csr = 0,
    K2 = 1,
    Gr32 = 2,
    GrIv = 3,
    RefCopy = 4,
}

impl FormatTag {
    pub const ALL: [FormatTag; 5] = [
        FormatTag::Csr,
        FormatTag::K2,
        FormatTag::Gr32,
        FormatTag::GrIv,
        FormatTag::RefCopy,
    ];

    pub fn from_u8(b: u8) -> Option<Self> {
        Self::ALL.get(b as usize).copied()
    }

    /// Name used by the CLI and in CSV output.
    pub fn name(self) -> &'static str {
        match self {
            FormatTag::Csr => "csr",
            FormatTag::K2 => "k2",
            FormatTag::Gr32 => "re32",
            FormatTag::GrIv => "reiv",
            FormatTag::RefCopy => "refcopy",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }
}

impl std::fmt::Display for FormatTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ContainerHeader {
    pub tag: FormatTag,
    pub n_rows: u64,
    pub n_cols: u64,
    pub m: u64,
}

impl ContainerHeader {
    pub fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&CONTAINER_MAGIC);
        out.push(self.tag as u8);
        out.extend_from_slice(&self.n_rows.to_le_bytes());
        out.extend_from_slice(&self.n_cols.to_le_bytes());
        out.extend_from_slice(&self.m.to_le_bytes());
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self> {
        let magic = r.take(8)?;
        if magic != CONTAINER_MAGIC {
            return Err(Error::corrupt("container", format!("bad magic {magic:?}")));
        }
        let tag_byte = r.u8()?;
        let tag = FormatTag::from_u8(tag_byte)
            .ok_or_else(|| Error::corrupt("container", format!("unknown format tag {tag_byte}")))?;
        Ok(Self {
            tag,
            n_rows: r.u64()?,
            n_cols: r.u64()?,
            m: r.u64()?,
        })
    }
}
