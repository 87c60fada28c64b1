use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::OrderingError;

/// One point in three dimensions per matrix index. Two-dimensional inputs use `z = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Coordinates {
    points: Vec<[f64; 3]>,
}

impl Coordinates {
    pub fn new(points: Vec<[f64; 3]>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> [f64; 3] {
        self.points[i]
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    /// Coordinates of the selected indices, in that order.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            points: idx.iter().map(|&i| self.points[i]).collect(),
        }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, OrderingError> {
        Self::read_from(std::fs::File::open(path)?)
    }

    /// Whitespace-separated `x y [z]` per line; `#` starts a comment line.
    pub fn read_from(reader: impl Read) -> Result<Self, OrderingError> {
        let mut points = Vec::new();
        for (k, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let vals: Result<Vec<f64>, _> = t.split_whitespace().map(str::parse::<f64>).collect();
            let vals = vals.map_err(|e| OrderingError::ParseError {
                line: k + 1,
                message: e.to_string(),
            })?;
            let p = match vals.as_slice() {
                [x] => [*x, 0.0, 0.0],
                [x, y] => [*x, *y, 0.0],
                [x, y, z] => [*x, *y, *z],
                _ => {
                    return Err(OrderingError::ParseError {
                        line: k + 1,
                        message: format!("expected 1 to 3 values, found {}", vals.len()),
                    })
                }
            };
            points.push(p);
        }
        Ok(Self { points })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        for p in &self.points {
            writeln!(w, "{} {} {}", p[0], p[1], p[2])?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_short_rows() {
        let c = Coordinates::read_from("# grid\n0 1\n2.5 3 4\n".as_bytes()).unwrap();
        assert_eq!(c.points(), &[[0.0, 1.0, 0.0], [2.5, 3.0, 4.0]]);
        let mut buf = Vec::new();
        c.write_to(&mut buf).unwrap();
        assert_eq!(Coordinates::read_from(buf.as_slice()).unwrap(), c);
        assert!(Coordinates::read_from("1 2 3 4\n".as_bytes()).is_err());
    }
}
