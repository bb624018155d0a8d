//! Text serialization of matrices.
//!
//! Format: first line `m n`, then m lines of n space-separated decimal
//! values. Values are written in shortest round-trip form, so save/load is
//! bit-exact. Readers reject NaN and infinities.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::linalg::matrix::Matrix;

/// Line-counting reader so parse errors carry a 1-based line number.
pub(crate) struct LineReader<R: BufRead> {
    inner: R,
    pub line: usize,
}

impl<R: BufRead> LineReader<R> {
    pub fn new(inner: R) -> Self {
        LineReader { inner, line: 0 }
    }

    /// The next line, or a ParseError mentioning `what` at EOF.
    pub fn expect_line(&mut self, what: &str) -> Result<String> {
        let mut buf = String::new();
        let n = self.inner.read_line(&mut buf)?;
        if n == 0 {
            return Err(Error::ParseError {
                line: self.line + 1,
                msg: format!("unexpected end of file, expected {what}"),
            });
        }
        self.line += 1;
        Ok(buf.trim_end_matches(['\n', '\r']).to_string())
    }

    pub fn err(&self, msg: impl Into<String>) -> Error {
        Error::ParseError { line: self.line, msg: msg.into() }
    }
}

pub(crate) fn parse_f64_field(s: &str, line: usize) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::ParseError { line, msg: format!("bad number '{s}'") })?;
    if !v.is_finite() {
        return Err(Error::ParseError { line, msg: format!("non-finite value '{s}'") });
    }
    Ok(v)
}

pub(crate) fn parse_vector_line(s: &str, expected: usize, line: usize) -> Result<Vec<f64>> {
    let vals: Vec<f64> = s
        .split_whitespace()
        .map(|t| parse_f64_field(t, line))
        .collect::<Result<_>>()?;
    if vals.len() != expected {
        return Err(Error::ParseError {
            line,
            msg: format!("expected {expected} values, found {}", vals.len()),
        });
    }
    Ok(vals)
}

pub(crate) fn write_vector_line<W: Write>(w: &mut W, v: &[f64]) -> Result<()> {
    let mut first = true;
    for x in v {
        if !first {
            write!(w, " ")?;
        }
        write!(w, "{x}")?;
        first = false;
    }
    writeln!(w)?;
    Ok(())
}

/// Write `m n` and the matrix block.
pub fn write_matrix<W: Write>(w: &mut W, a: &Matrix) -> Result<()> {
    writeln!(w, "{} {}", a.nrows(), a.ncols())?;
    write_matrix_block(w, a)
}

pub(crate) fn write_matrix_block<W: Write>(w: &mut W, a: &Matrix) -> Result<()> {
    for i in 0..a.nrows() {
        write_vector_line(w, a.row(i))?;
    }
    Ok(())
}

/// Read a matrix written by [`write_matrix`].
pub fn read_matrix<R: BufRead>(r: R) -> Result<Matrix> {
    let mut lr = LineReader::new(r);
    let header = lr.expect_line("matrix header 'm n'")?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(lr.err("header must be 'm n'"));
    }
    let m: usize = dims[0].parse().map_err(|_| lr.err("bad row count"))?;
    let n: usize = dims[1].parse().map_err(|_| lr.err("bad column count"))?;
    if m == 0 || n == 0 {
        return Err(lr.err("matrix must be at least 1 x 1"));
    }
    read_matrix_block(&mut lr, m, n)
}

pub(crate) fn read_matrix_block<R: BufRead>(
    lr: &mut LineReader<R>,
    m: usize,
    n: usize,
) -> Result<Matrix> {
    let mut data = Vec::with_capacity(m * n);
    for _ in 0..m {
        let line = lr.expect_line("matrix row")?;
        data.extend(parse_vector_line(&line, n, lr.line)?);
    }
    Ok(Matrix::from_vec(m, n, data))
}
