//! Plain-text formats: Matrix Market coordinate files, one-value-per-line vectors,
//! and partition files (one node id per coordinate).

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Partition, SparseMatrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn read_matrix_market<F: Scalar>(path: impl AsRef<Path>) -> Result<SparseMatrix<F>> {
    let path = path.as_ref();
    parse_matrix_market(open(path)?).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Parses a `coordinate real general` Matrix Market stream (1-based indices).
pub fn parse_matrix_market<F: Scalar, R: BufRead>(reader: R) -> Result<SparseMatrix<F>> {
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let header = header.map_err(|e| Error::io("<stream>", e))?;
    let fields: Vec<String> = header
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if fields.len() < 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(parse_err(1, "missing %%MatrixMarket matrix header"));
    }
    if fields[2] != "coordinate" {
        return Err(parse_err(1, format!("unsupported format '{}'", fields[2])));
    }
    if fields[3] != "real" && fields[3] != "integer" {
        return Err(parse_err(1, format!("unsupported field '{}'", fields[3])));
    }
    if fields[4] != "general" {
        return Err(parse_err(
            1,
            format!("unsupported symmetry '{}'", fields[4]),
        ));
    }

    let mut size: Option<(usize, usize, usize)> = None;
    let mut entries: Vec<(usize, usize, F)> = Vec::new();
    let mut first_seen: HashMap<(usize, usize), usize> = HashMap::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io("<stream>", e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let tok: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                if tok.len() != 3 {
                    return Err(parse_err(lineno, "size line must be 'rows cols nnz'"));
                }
                let p = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|_| parse_err(lineno, format!("bad integer '{s}'")))
                };
                let dims = (p(tok[0])?, p(tok[1])?, p(tok[2])?);
                entries.reserve(dims.2);
                size = Some(dims);
            }
            Some((n, d, _)) => {
                if tok.len() != 3 {
                    return Err(parse_err(lineno, "entry line must be 'row col value'"));
                }
                let r: usize = tok[0]
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad row index '{}'", tok[0])))?;
                let c: usize = tok[1]
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad column index '{}'", tok[1])))?;
                let v: F = tok[2]
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad value '{}'", tok[2])))?;
                if r == 0 || c == 0 || r > n || c > d {
                    return Err(parse_err(
                        lineno,
                        format!("index ({r}, {c}) outside {n} x {d}"),
                    ));
                }
                if !v.is_finite() {
                    return Err(parse_err(lineno, "non-finite value"));
                }
                if v == F::zero() {
                    return Err(Error::ZeroEntry { line: lineno });
                }
                if first_seen.insert((r - 1, c - 1), lineno).is_some() {
                    return Err(Error::DuplicateEntry {
                        row: r,
                        col: c,
                        line: lineno,
                    });
                }
                entries.push((r - 1, c - 1, v));
            }
        }
    }
    let (n, d, nnz) = size.ok_or_else(|| parse_err(1, "missing size line"))?;
    if entries.len() != nnz {
        return Err(parse_err(
            0,
            format!("header announces {nnz} entries, found {}", entries.len()),
        ));
    }
    SparseMatrix::from_triplets(n, d, entries)
}

/// Writes column-major `coordinate real general` with 17 significant digits.
pub fn write_matrix_market<F: Scalar>(path: impl AsRef<Path>, a: &SparseMatrix<F>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", a.n_rows(), a.n_cols(), a.nnz())?;
        for j in 0..a.n_cols() {
            for (r, v) in a.col(j).iter() {
                writeln!(w, "{} {} {:.16e}", r + 1, j + 1, v)?;
            }
        }
        w.flush()
    };
    body().map_err(|e| Error::io(path, e))
}

/// Reads one number per line; blank lines and `#` comments are skipped.
pub fn read_vector<F: Scalar>(path: impl AsRef<Path>) -> Result<Vec<F>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for (idx, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: F = t
            .parse()
            .map_err(|_| parse_err(idx + 1, format!("bad number '{t}'")))?;
        out.push(v);
    }
    Ok(out)
}

pub fn write_vector<F: Scalar>(path: impl AsRef<Path>, v: &[F]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let mut body = || -> std::io::Result<()> {
        for x in v {
            writeln!(w, "{:.16e}", x)?;
        }
        w.flush()
    };
    body().map_err(|e| Error::io(path, e))
}

/// Reads `d` node ids. When `c` is `None` it is inferred as `max id + 1`.
pub fn read_partition(path: impl AsRef<Path>, c: Option<usize>) -> Result<Partition> {
    let path = path.as_ref();
    let mut ids = Vec::new();
    for (idx, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let id: usize = t
            .parse()
            .map_err(|_| parse_err(idx + 1, format!("bad node id '{t}'")))?;
        ids.push(id);
    }
    let c = c.unwrap_or_else(|| ids.iter().max().map_or(0, |m| m + 1));
    Partition::from_assignment(ids, c)
}

pub fn write_partition(path: impl AsRef<Path>, p: &Partition) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let mut body = || -> std::io::Result<()> {
        for id in p.assignment() {
            writeln!(w, "{id}")?;
        }
        w.flush()
    };
    body().map_err(|e| Error::io(path, e))
}
