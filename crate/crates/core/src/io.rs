//! Dense vector and matrix files.
//!
//! Binary layout: a six byte magic (`MLVEC1` or `MLMAT1`), the dimensions as
//! little-endian `u64` (`n`, or `rows` then `cols`), then row-major
//! little-endian `f64` values. Anything without a magic is read as CSV with
//! one matrix row per line; a vector may be a single row or a single column.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

pub const VECTOR_MAGIC: &[u8; 6] = b"MLVEC1";
pub const MATRIX_MAGIC: &[u8; 6] = b"MLMAT1";

fn binary_err(path: &Path, offset: usize, message: impl Into<String>) -> Error {
    Error::BinaryFormat {
        path: path.display().to_string(),
        offset: offset as u64,
        message: message.into(),
    }
}

fn text_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::TextFormat {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

struct Cursor<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize, what: &str) -> Result<&[u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(binary_err(
                self.path,
                self.bytes.len(),
                format!("file truncated while reading {what}: needed {n} bytes, {} left", self.bytes.len() - self.pos),
            ));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        let b = self.take(8, what)?;
        Ok(u64::from_le_bytes(b.try_into().expect("eight bytes")))
    }

    fn values(&mut self, count: u64) -> Result<Vec<f64>> {
        let needed = count.checked_mul(8).filter(|&n| n <= (self.bytes.len() - self.pos) as u64);
        let Some(needed) = needed else {
            return Err(binary_err(
                self.path,
                self.bytes.len(),
                format!(
                    "file truncated: header declares {count} values but only {} bytes of data follow",
                    self.bytes.len() - self.pos
                ),
            ));
        };
        let start = self.pos;
        let data = self.take(needed as usize, "values")?;
        let mut out = Vec::with_capacity(count as usize);
        for (i, chunk) in data.chunks_exact(8).enumerate() {
            let v = f64::from_le_bytes(chunk.try_into().expect("eight bytes"));
            if !v.is_finite() {
                return Err(binary_err(self.path, start + 8 * i, format!("non-finite value {v}")));
            }
            out.push(v);
        }
        Ok(out)
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(binary_err(
                self.path,
                self.pos,
                format!("{} trailing bytes after the declared data", self.bytes.len() - self.pos),
            ));
        }
        Ok(())
    }
}

fn parse_csv_rows(path: &Path, text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx as u64 + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut row = Vec::new();
        for (col, field) in trimmed.split(',').enumerate() {
            let field = field.trim();
            let v: f64 = field
                .parse()
                .map_err(|_| text_err(path, lineno, format!("column {}: cannot parse `{field}` as a number", col + 1)))?;
            if !v.is_finite() {
                return Err(text_err(path, lineno, format!("column {}: non-finite value", col + 1)));
            }
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(text_err(
                    path,
                    lineno,
                    format!("expected {} columns, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<Array1<f64>> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    if bytes.starts_with(VECTOR_MAGIC) {
        let mut cur = Cursor { path, bytes: &bytes, pos: 6 };
        let n = cur.u64("vector length")?;
        let values = cur.values(n)?;
        cur.finish()?;
        return Ok(Array1::from(values));
    }
    if bytes.starts_with(MATRIX_MAGIC) {
        return Err(binary_err(path, 0, "expected a vector but found a matrix header"));
    }
    let text = std::str::from_utf8(&bytes).map_err(|e| binary_err(path, e.valid_up_to(), "neither a binary vector nor UTF-8 text"))?;
    let rows = parse_csv_rows(path, text)?;
    match rows.as_slice() {
        [] => Err(text_err(path, 1, "no values")),
        [single] => Ok(Array1::from(single.clone())),
        many if many[0].len() == 1 => Ok(many.iter().map(|r| r[0]).collect()),
        many => Err(text_err(
            path,
            1,
            format!("expected a single row or column, found {}x{}", many.len(), many[0].len()),
        )),
    }
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    if bytes.starts_with(MATRIX_MAGIC) {
        let mut cur = Cursor { path, bytes: &bytes, pos: 6 };
        let rows = cur.u64("row count")?;
        let cols = cur.u64("column count")?;
        let count = rows
            .checked_mul(cols)
            .ok_or_else(|| binary_err(path, 6, format!("dimensions {rows}x{cols} overflow")))?;
        let values = cur.values(count)?;
        cur.finish()?;
        return Ok(Array2::from_shape_vec((rows as usize, cols as usize), values).expect("length checked"));
    }
    if bytes.starts_with(VECTOR_MAGIC) {
        return Err(binary_err(path, 0, "expected a matrix but found a vector header"));
    }
    let text = std::str::from_utf8(&bytes).map_err(|e| binary_err(path, e.valid_up_to(), "neither a binary matrix nor UTF-8 text"))?;
    let rows = parse_csv_rows(path, text)?;
    if rows.is_empty() {
        return Err(text_err(path, 1, "no values"));
    }
    let cols = rows[0].len();
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(Array2::from_shape_vec((rows.len(), cols), flat).expect("rectangular rows"))
}

pub fn write_vector(path: impl AsRef<Path>, v: &Array1<f64>) -> Result<()> {
    let mut out = Vec::with_capacity(14 + 8 * v.len());
    out.extend_from_slice(VECTOR_MAGIC);
    out.extend_from_slice(&(v.len() as u64).to_le_bytes());
    for x in v {
        out.extend_from_slice(&x.to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_matrix(path: impl AsRef<Path>, m: &Array2<f64>) -> Result<()> {
    let mut out = Vec::with_capacity(22 + 8 * m.len());
    out.extend_from_slice(MATRIX_MAGIC);
    out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for x in m.iter() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

/// One value per line.
pub fn write_vector_csv(path: impl AsRef<Path>, v: &Array1<f64>) -> Result<()> {
    let mut s = String::new();
    for x in v {
        s.push_str(&format!("{x:e}\n"));
    }
    fs::write(path, s)?;
    Ok(())
}
