//! Matrix Market coordinate format: real general (and symmetric, expanded on
//! read). Indices are 1-based on disk, sorted CSR in memory. Values are
//! written with shortest round-trip formatting so read(write(A)) == A.

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

pub fn read_matrix_market<R: Read>(reader: R) -> Result<SparseMatrix> {
    let mut lines = BufReader::new(reader).lines();
    let mut line_no = 0usize;

    let header = loop {
        match lines.next() {
            Some(line) => {
                line_no += 1;
                let line = line?;
                if line_no == 1 {
                    break line;
                }
            }
            None => {
                return Err(Error::Parse {
                    line: 0,
                    message: "empty file".into(),
                })
            }
        }
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() < 5
        || !fields[0].eq_ignore_ascii_case("%%MatrixMarket")
        || !fields[1].eq_ignore_ascii_case("matrix")
        || !fields[2].eq_ignore_ascii_case("coordinate")
    {
        return Err(Error::Parse {
            line: 1,
            message: "expected '%%MatrixMarket matrix coordinate real general' header".into(),
        });
    }
    if !fields[3].eq_ignore_ascii_case("real") && !fields[3].eq_ignore_ascii_case("integer") {
        return Err(Error::Parse {
            line: 1,
            message: format!("unsupported field type '{}'", fields[3]),
        });
    }
    let symmetric = match fields[4].to_ascii_lowercase().as_str() {
        "general" => false,
        "symmetric" => true,
        other => {
            return Err(Error::Parse {
                line: 1,
                message: format!("unsupported symmetry '{other}'"),
            })
        }
    };

    let mut dims: Option<(usize, usize, usize)> = None;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    for line in lines {
        line_no += 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        if dims.is_none() {
            let m = parse_usize(parts.next(), line_no)?;
            let n = parse_usize(parts.next(), line_no)?;
            let nnz = parse_usize(parts.next(), line_no)?;
            dims = Some((m, n, nnz));
            triplets.reserve(nnz);
            continue;
        }
        let (n_rows, n_cols, _) = dims.unwrap();
        let i = parse_usize(parts.next(), line_no)?;
        let j = parse_usize(parts.next(), line_no)?;
        let v = parse_f64(parts.next(), line_no)?;
        if i < 1 || i > n_rows || j < 1 || j > n_cols {
            return Err(Error::Parse {
                line: line_no,
                message: format!("entry ({i},{j}) outside {n_rows}x{n_cols}"),
            });
        }
        triplets.push((i - 1, j - 1, v));
        if symmetric && i != j {
            triplets.push((j - 1, i - 1, v));
        }
    }
    let (n_rows, n_cols, nnz_declared) = dims.ok_or(Error::Parse {
        line: line_no,
        message: "missing size line".into(),
    })?;
    let stored = if symmetric {
        triplets.iter().filter(|t| t.0 <= t.1).count()
    } else {
        triplets.len()
    };
    if stored != nnz_declared {
        return Err(Error::Parse {
            line: line_no,
            message: format!("declared {nnz_declared} entries, found {stored}"),
        });
    }
    SparseMatrix::from_triplets(n_rows, n_cols, &triplets)
}

pub fn read_matrix_market_file<P: AsRef<Path>>(path: P) -> Result<SparseMatrix> {
    let file = std::fs::File::open(path)?;
    read_matrix_market(file)
}

pub fn write_matrix_market<W: Write>(writer: W, a: &SparseMatrix) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.n_rows(), a.n_cols(), a.nnz())?;
    for (i, j, v) in a.iter_triplets() {
        writeln!(w, "{} {} {}", i + 1, j + 1, v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_matrix_market_file<P: AsRef<Path>>(path: P, a: &SparseMatrix) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_matrix_market(file, a)
}

fn parse_usize(tok: Option<&str>, line: usize) -> Result<usize> {
    tok.ok_or(Error::Parse {
        line,
        message: "missing field".into(),
    })?
    .parse()
    .map_err(|_| Error::Parse {
        line,
        message: "bad integer".into(),
    })
}

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64> {
    tok.ok_or(Error::Parse {
        line,
        message: "missing value".into(),
    })?
    .parse()
    .map_err(|_| Error::Parse {
        line,
        message: "bad real value".into(),
    })
}
