use std::fmt::Write as _;

use super::{EdgeList, MAX_DIM};
use crate::error::{Error, Result};

fn parse_index(tok: &str, line: usize) -> Result<u64> {
    if tok.is_empty() || !tok.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::Parse {
            line,
            msg: format!("expected a non-negative integer, found {tok:?}"),
        });
    }
    tok.parse::<u64>().map_err(|_| Error::IndexOverflow {
        line,
        value: tok.to_string(),
    })
}

fn to_u32(v: u64, line: usize) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::IndexOverflow {
        line,
        value: v.to_string(),
    })
}

/// Parses whitespace-separated `src dst` lines.
///
/// Lines starting with `#` or `%` are comments, except a leading
/// `# n_rows n_cols` header which fixes the dimensions.
pub fn parse_edge_list(text: &[u8]) -> Result<EdgeList> {
    let text = std::str::from_utf8(text).map_err(|e| Error::Parse {
        line: 0,
        msg: format!("not UTF-8: {e}"),
    })?;
    let mut header: Option<(usize, usize)> = None;
    let mut seen_content = false;
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        if let Some(rest) = l.strip_prefix('#') {
            if !seen_content && header.is_none() {
                let toks: Vec<&str> = rest.split_whitespace().collect();
                if toks.len() == 2 && toks.iter().all(|t| t.bytes().all(|b| b.is_ascii_digit())) {
                    let r = parse_index(toks[0], line)?;
                    let c = parse_index(toks[1], line)?;
                    if r > MAX_DIM as u64 || c > MAX_DIM as u64 {
                        return Err(Error::IndexOverflow {
                            line,
                            value: format!("{r} {c}"),
                        });
                    }
                    header = Some((r as usize, c as usize));
                }
            }
            continue;
        }
        if l.starts_with('%') {
            continue;
        }
        seen_content = true;
        let mut toks = l.split_whitespace();
        let (Some(a), Some(b), None) = (toks.next(), toks.next(), toks.next()) else {
            return Err(Error::Parse {
                line,
                msg: format!("expected \"src dst\", found {l:?}"),
            });
        };
        let src = to_u32(parse_index(a, line)?, line)?;
        let dst = to_u32(parse_index(b, line)?, line)?;
        edges.push((src, dst));
    }
    let (n_rows, n_cols) = match header {
        Some(dims) => dims,
        None => {
            let n = edges
                .iter()
                .map(|&(r, c)| r.max(c) as usize + 1)
                .max()
                .unwrap_or(0);
            (n, n)
        }
    };
    EdgeList::from_edges(n_rows, n_cols, edges)
}

/// Writes the edge-list text format, always with a dimension header.
pub fn write_edge_list(a: &EdgeList) -> String {
    let mut s = String::with_capacity(a.m() * 12 + 24);
    let _ = writeln!(s, "# {} {}", a.n_rows(), a.n_cols());
    for &(r, c) in a.edges() {
        let _ = writeln!(s, "{r} {c}");
    }
    s
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Field {
    Pattern,
    Integer,
    Real,
}

/// Parses the coordinate subset of MatrixMarket: `pattern`, `integer` or
/// `real` fields with `general` or `symmetric` symmetry. Nonzero values
/// become 1-cells; explicit zeros are dropped.
pub fn parse_matrix_market(text: &[u8]) -> Result<EdgeList> {
    let text = std::str::from_utf8(text).map_err(|e| Error::Parse {
        line: 0,
        msg: format!("not UTF-8: {e}"),
    })?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, banner) = lines
        .next()
        .ok_or_else(|| Error::UnsupportedBanner("empty input".into()))?;
    let toks: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if toks.len() != 5 || toks[0] != "%%matrixmarket" || toks[1] != "matrix" || toks[2] != "coordinate" {
        return Err(Error::UnsupportedBanner(banner.to_string()));
    }
    let field = match toks[3].as_str() {
        "pattern" => Field::Pattern,
        "integer" => Field::Integer,
        "real" => Field::Real,
        _ => return Err(Error::UnsupportedBanner(banner.to_string())),
    };
    let symmetric = match toks[4].as_str() {
        "general" => false,
        "symmetric" => true,
        _ => return Err(Error::UnsupportedBanner(banner.to_string())),
    };

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = body.next().ok_or_else(|| Error::Parse {
        line: 1,
        msg: "missing size line".into(),
    })?;
    let dims: Vec<&str> = size.split_whitespace().collect();
    if dims.len() != 3 {
        return Err(Error::Parse {
            line: size_line,
            msg: format!("expected \"rows cols nnz\", found {size:?}"),
        });
    }
    let n_rows = parse_index(dims[0], size_line)?;
    let n_cols = parse_index(dims[1], size_line)?;
    let nnz = parse_index(dims[2], size_line)?;
    if n_rows > MAX_DIM as u64 || n_cols > MAX_DIM as u64 {
        return Err(Error::IndexOverflow {
            line: size_line,
            value: size.to_string(),
        });
    }
    if symmetric && n_rows != n_cols {
        return Err(Error::Dimension(format!(
            "symmetric matrix must be square, got {n_rows}x{n_cols}"
        )));
    }

    let want_vals = if field == Field::Pattern { 2 } else { 3 };
    let mut edges = Vec::with_capacity(nnz.min(1 << 26) as usize * if symmetric { 2 } else { 1 });
    let mut entries = 0u64;
    for (line, l) in body {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != want_vals {
            return Err(Error::Parse {
                line,
                msg: format!("expected {want_vals} fields, found {l:?}"),
            });
        }
        entries += 1;
        let r = parse_index(toks[0], line)?;
        let c = parse_index(toks[1], line)?;
        if r == 0 || c == 0 || r > n_rows || c > n_cols {
            return Err(Error::Dimension(format!(
                "line {line}: entry ({r},{c}) outside 1..={n_rows} x 1..={n_cols}"
            )));
        }
        let nonzero = match field {
            Field::Pattern => true,
            Field::Integer => toks[2].parse::<i64>().map_err(|e| Error::Parse {
                line,
                msg: format!("bad integer value {:?}: {e}", toks[2]),
            })? != 0,
            Field::Real => toks[2].parse::<f64>().map_err(|e| Error::Parse {
                line,
                msg: format!("bad real value {:?}: {e}", toks[2]),
            })? != 0.0,
        };
        if !nonzero {
            continue;
        }
        let (r, c) = ((r - 1) as u32, (c - 1) as u32);
        edges.push((r, c));
        if symmetric && r != c {
            edges.push((c, r));
        }
    }
    if entries != nnz {
        return Err(Error::Dimension(format!(
            "size line declares {nnz} entries, found {entries}"
        )));
    }
    EdgeList::from_edges(n_rows as usize, n_cols as usize, edges)
}

/// Dispatches on content: a `%%MatrixMarket` banner selects the MatrixMarket
/// parser, anything else is read as an edge list.
pub fn parse_input(text: &[u8]) -> Result<EdgeList> {
    let head = &text[..text.len().min(14)];
    if head.eq_ignore_ascii_case(b"%%MatrixMarket") {
        parse_matrix_market(text)
    } else {
        parse_edge_list(text)
    }
}
