//! On-disk matrix formats: CSV, Matrix Market (coordinate and array), and a
//! trivial dense-binary format (magic "NMAT", u64 rows, u64 cols,
//! little-endian f64 row-major).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::NonnegMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    MatrixMarket,
    Csv,
    DenseBinary,
}

const BINARY_MAGIC: &[u8; 4] = b"NMAT";

/// Reads a matrix from disk, rejecting negative or non-finite entries.
pub fn read_matrix(path: &Path, format: MatrixFormat) -> Result<NonnegMatrix> {
    match format {
        MatrixFormat::Csv => read_csv(path),
        MatrixFormat::MatrixMarket => read_matrix_market(path),
        MatrixFormat::DenseBinary => read_binary(path),
    }
}

/// Writes a matrix to disk. CSV uses '.' decimal, ',' separator, and 17
/// significant digits so values round-trip.
pub fn write_matrix(matrix: &NonnegMatrix, path: &Path, format: MatrixFormat) -> Result<()> {
    match format {
        MatrixFormat::Csv => write_csv(matrix, path),
        MatrixFormat::MatrixMarket => write_matrix_market(matrix, path),
        MatrixFormat::DenseBinary => write_binary(matrix, path),
    }
}

fn parse_value(tok: &str, line: usize) -> Result<f64> {
    tok.trim().parse::<f64>().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse '{}' as a number", tok.trim()),
    })
}

fn read_csv(path: &Path) -> Result<NonnegMatrix> {
    let file = BufReader::new(File::open(path)?);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in file.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>> = line
            .split(',')
            .map(|tok| parse_value(tok, idx + 1))
            .collect();
        let row = row?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("row has {} columns, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "empty CSV file".into(),
        });
    }
    let (m, n) = (rows.len(), rows[0].len());
    NonnegMatrix::from_row_major(m, n, rows.into_iter().flatten().collect())
}

fn write_csv(matrix: &NonnegMatrix, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for row in matrix.as_array().rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

fn read_matrix_market(path: &Path) -> Result<NonnegMatrix> {
    let file = BufReader::new(File::open(path)?);
    let mut lines = file.lines().enumerate();

    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "missing Matrix Market header".into(),
    })?;
    let header = header?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() < 4 || !toks[0].eq_ignore_ascii_case("%%MatrixMarket") || toks[1] != "matrix" {
        return Err(Error::Parse {
            line: 1,
            msg: "expected '%%MatrixMarket matrix <format> <field> [symmetry]'".into(),
        });
    }
    let layout = toks[2];
    let field = toks[3];
    let symmetry = toks.get(4).copied().unwrap_or("general");
    if field != "real" && field != "integer" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unsupported field '{field}' (only real/integer)"),
        });
    }
    let symmetric = match symmetry {
        "general" => false,
        "symmetric" => true,
        other => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("unsupported symmetry '{other}'"),
            })
        }
    };

    // skip comments, find the size line
    let mut size_line = None;
    for (idx, line) in &mut lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        size_line = Some((idx + 1, trimmed.to_string()));
        break;
    }
    let (size_lineno, size_line) = size_line.ok_or(Error::Parse {
        line: 0,
        msg: "missing size line".into(),
    })?;
    let dims: Vec<&str> = size_line.split_whitespace().collect();

    let parse_dim = |tok: &str| -> Result<usize> {
        tok.parse::<usize>().map_err(|_| Error::Parse {
            line: size_lineno,
            msg: format!("bad dimension '{tok}'"),
        })
    };

    match layout {
        "coordinate" => {
            if dims.len() != 3 {
                return Err(Error::Parse {
                    line: size_lineno,
                    msg: "coordinate size line must be 'm n nnz'".into(),
                });
            }
            let (m, n, nnz) = (
                parse_dim(dims[0])?,
                parse_dim(dims[1])?,
                parse_dim(dims[2])?,
            );
            let mut data = Array2::<f64>::zeros((m, n));
            let mut seen = 0usize;
            for (idx, line) in &mut lines {
                let line = line?;
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('%') {
                    continue;
                }
                let toks: Vec<&str> = trimmed.split_whitespace().collect();
                if toks.len() != 3 {
                    return Err(Error::Parse {
                        line: idx + 1,
                        msg: "coordinate entry must be 'i j value'".into(),
                    });
                }
                let i = parse_dim(toks[0])?;
                let j = parse_dim(toks[1])?;
                let v = parse_value(toks[2], idx + 1)?;
                if i == 0 || j == 0 || i > m || j > n {
                    return Err(Error::Parse {
                        line: idx + 1,
                        msg: format!("index ({i}, {j}) out of bounds for {m}x{n}"),
                    });
                }
                data[[i - 1, j - 1]] = v;
                if symmetric {
                    data[[j - 1, i - 1]] = v;
                }
                seen += 1;
            }
            if seen != nnz {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("expected {nnz} entries, found {seen}"),
                });
            }
            NonnegMatrix::new(data)
        }
        "array" => {
            if dims.len() != 2 {
                return Err(Error::Parse {
                    line: size_lineno,
                    msg: "array size line must be 'm n'".into(),
                });
            }
            let (m, n) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
            // array format lists entries in column-major order
            let mut values = Vec::with_capacity(m * n);
            for (idx, line) in &mut lines {
                let line = line?;
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('%') {
                    continue;
                }
                for tok in trimmed.split_whitespace() {
                    values.push(parse_value(tok, idx + 1)?);
                }
            }
            if values.len() != m * n {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("expected {} values, found {}", m * n, values.len()),
                });
            }
            let mut data = Array2::<f64>::zeros((m, n));
            for j in 0..n {
                for i in 0..m {
                    data[[i, j]] = values[j * m + i];
                }
            }
            NonnegMatrix::new(data)
        }
        other => Err(Error::Parse {
            line: 1,
            msg: format!("unsupported Matrix Market layout '{other}'"),
        }),
    }
}

fn write_matrix_market(matrix: &NonnegMatrix, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let a = matrix.as_array();
    writeln!(out, "%%MatrixMarket matrix array real general")?;
    writeln!(out, "{} {}", a.nrows(), a.ncols())?;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            writeln!(out, "{:.16e}", a[[i, j]])?;
        }
    }
    Ok(())
}

fn read_binary(path: &Path) -> Result<NonnegMatrix> {
    let mut file = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    file.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::Parse {
            line: 0,
            msg: "bad magic, expected 'NMAT'".into(),
        });
    }
    let mut word = [0u8; 8];
    file.read_exact(&mut word)?;
    let rows = u64::from_le_bytes(word) as usize;
    file.read_exact(&mut word)?;
    let cols = u64::from_le_bytes(word) as usize;
    let count = rows.checked_mul(cols).ok_or(Error::Parse {
        line: 0,
        msg: "dimension overflow".into(),
    })?;
    let mut buf = Vec::with_capacity(count);
    for _ in 0..count {
        file.read_exact(&mut word)?;
        buf.push(f64::from_le_bytes(word));
    }
    NonnegMatrix::from_row_major(rows, cols, buf)
}

fn write_binary(matrix: &NonnegMatrix, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(BINARY_MAGIC)?;
    out.write_all(&(matrix.rows() as u64).to_le_bytes())?;
    out.write_all(&(matrix.cols() as u64).to_le_bytes())?;
    for row in matrix.as_array().rows() {
        for &v in row.iter() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}
