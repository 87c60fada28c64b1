use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::SparseSpdMatrix;
use crate::error::SparseError;

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<SparseSpdMatrix, SparseError> {
    read_matrix_market_from(File::open(path)?)
}

/// Parses a `coordinate real symmetric` Matrix Market stream with 1-based indices.
/// A `general` header is accepted when the entries are exactly symmetric.
pub fn read_matrix_market_from(reader: impl Read) -> Result<SparseSpdMatrix, SparseError> {
    let reader = BufReader::new(reader);
    let mut lines = reader.lines().enumerate();
    let perr = |line: usize, message: &str| SparseError::ParseError {
        line,
        message: message.to_string(),
    };

    let (_, header) = lines.next().ok_or_else(|| perr(1, "empty input"))?;
    let header = header?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(perr(1, "missing %%MatrixMarket header"));
    }
    if tokens[1] != "matrix" || tokens[2] != "coordinate" {
        return Err(perr(1, "only sparse coordinate matrices are supported"));
    }
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(perr(1, &format!("unsupported field type '{}'", tokens[3])));
    }
    let general = match tokens[4].as_str() {
        "symmetric" => false,
        "general" => true,
        other => return Err(SparseError::NotSymmetric(format!("symmetry type '{other}'"))),
    };

    let mut size: Option<(usize, usize)> = None;
    let mut triplets = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(perr(lineno, "size line needs rows, columns and entry count"));
                }
                let parse = |s: &str| s.parse::<usize>().map_err(|_| perr(lineno, "bad size value"));
                let (m, n, nnz) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
                if m != n {
                    return Err(SparseError::NotSymmetric(format!("matrix is {m}x{n}")));
                }
                size = Some((n, nnz));
                triplets.reserve(nnz);
            }
            Some((n, _)) => {
                if fields.len() != 3 {
                    return Err(perr(lineno, "entry needs row, column and value"));
                }
                let i = fields[0].parse::<usize>().map_err(|_| perr(lineno, "bad row index"))?;
                let j = fields[1].parse::<usize>().map_err(|_| perr(lineno, "bad column index"))?;
                let v = fields[2].parse::<f64>().map_err(|_| perr(lineno, "bad value"))?;
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(perr(lineno, &format!("index ({i}, {j}) outside 1..={n}")));
                }
                triplets.push((i - 1, j - 1, v));
            }
        }
    }
    let (n, nnz) = size.ok_or_else(|| perr(1, "missing size line"))?;
    if triplets.len() != nnz {
        return Err(perr(0, &format!("expected {nnz} entries, found {}", triplets.len())));
    }
    if general {
        triplets = fold_general(triplets)?;
    }
    SparseSpdMatrix::from_triplets(n, &triplets)
}

/// Keeps the lower triangle of a `general` file after checking every off-diagonal
/// entry has an identical mirror.
fn fold_general(mut t: Vec<(usize, usize, f64)>) -> Result<Vec<(usize, usize, f64)>, SparseError> {
    t.sort_by_key(|e| (e.0, e.1));
    let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(t.len());
    for e in t {
        match merged.last_mut() {
            Some(last) if (last.0, last.1) == (e.0, e.1) => last.2 += e.2,
            _ => merged.push(e),
        }
    }
    let lookup = |i: usize, j: usize| merged.binary_search_by(|e| (e.0, e.1).cmp(&(i, j))).ok().map(|p| merged[p].2);
    let mut lower = Vec::new();
    for &(i, j, v) in &merged {
        if i == j {
            lower.push((i, j, v));
        } else if lookup(j, i) != Some(v) {
            return Err(SparseError::NotSymmetric(format!("entry ({}, {}) has no matching mirror", i + 1, j + 1)));
        } else if i > j {
            lower.push((i, j, v));
        }
    }
    Ok(lower)
}

pub fn write_matrix_market(path: impl AsRef<Path>, a: &SparseSpdMatrix) -> Result<(), SparseError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix_market_to(&mut w, a)?;
    w.flush()?;
    Ok(())
}

/// Writes the lower triangle with shortest round-trip decimal values.
pub fn write_matrix_market_to(w: &mut impl Write, a: &SparseSpdMatrix) -> Result<(), SparseError> {
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{} {} {}", a.n(), a.n(), a.nnz_lower())?;
    for c in 0..a.n() {
        let (rows, vals) = a.column(c);
        for (&r, &v) in rows.iter().zip(vals) {
            writeln!(w, "{} {} {}", r + 1, c + 1, v)?;
        }
    }
    Ok(())
}
