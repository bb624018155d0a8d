//! Dense row-major matrix storage and the row-normalized wrapper used by the
//! solvers.

use crate::error::{Error, Result};

/// Tolerance on | ||a_i|| - 1 | for a row to count as normalized.
pub const ROW_NORM_TOL: f64 = 1e-12;

/// Row norms at or below this are treated as zero and refuse normalization.
pub const ZERO_ROW_TOL: f64 = 1e-14;

/// Dense matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Build from a flat row-major buffer. Panics if the length disagrees.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "flat buffer length must be rows * cols");
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let m = rows.len();
        let n = if m == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(m * n);
        for r in rows {
            assert_eq!(r.len(), n, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix { rows: m, cols: n, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut a = Matrix::zeros(n, n);
        for i in 0..n {
            a.data[i * n + i] = 1.0;
        }
        a
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// y = A^T x.
    pub fn transpose_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "transpose_matvec dimension mismatch");
        let mut y = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                for (yj, aij) in y.iter_mut().zip(self.row(i)) {
                    *yj += xi * aij;
                }
            }
        }
        y
    }

    /// A^T A, the cols x cols Gram matrix.
    pub fn gram(&self) -> Matrix {
        let n = self.cols;
        let mut g = Matrix::zeros(n, n);
        for i in 0..self.rows {
            let a = self.row(i);
            for (p, &ap) in a.iter().enumerate() {
                if ap != 0.0 {
                    for (q, &aq) in a.iter().enumerate().skip(p) {
                        g.data[p * n + q] += ap * aq;
                    }
                }
            }
        }
        for p in 0..n {
            for q in 0..p {
                g.data[p * n + q] = g.data[q * n + p];
            }
        }
        g
    }

    /// A A^T, the rows x rows Gram matrix.
    pub fn gram_transposed(&self) -> Matrix {
        let m = self.rows;
        let mut g = Matrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = dot(self.row(i), self.row(j));
                g.data[i * m + j] = v;
                g.data[j * m + i] = v;
            }
        }
        g
    }

    /// The submatrix consisting of the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: indices.len(), cols: self.cols, data }
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Dense matrix whose rows all have unit Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct RowNormalizedMatrix {
    inner: Matrix,
}

impl RowNormalizedMatrix {
    /// Wrap a matrix, checking the unit-row invariant and finiteness.
    pub fn new(m: Matrix) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(Error::InvariantViolation("matrix must be at least 1 x 1".into()));
        }
        if !m.is_finite() {
            return Err(Error::InvariantViolation("matrix entries must be finite".into()));
        }
        for i in 0..m.nrows() {
            let nrm = norm(m.row(i));
            if (nrm - 1.0).abs() > ROW_NORM_TOL {
                return Err(Error::InvariantViolation(format!(
                    "row {i} has norm {nrm}, not within {ROW_NORM_TOL} of 1"
                )));
            }
        }
        Ok(RowNormalizedMatrix { inner: m })
    }

    pub fn nrows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.inner.row(i)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.inner
    }
}

/// Scale every row of `raw` to unit norm. Returns the normalized matrix and
/// the original row norms.
pub fn normalize_rows(raw: &Matrix) -> Result<(RowNormalizedMatrix, Vec<f64>)> {
    if raw.nrows() == 0 || raw.ncols() == 0 {
        return Err(Error::InvariantViolation("matrix must be at least 1 x 1".into()));
    }
    if !raw.is_finite() {
        return Err(Error::InvariantViolation("matrix entries must be finite".into()));
    }
    let mut out = raw.clone();
    let mut scales = Vec::with_capacity(raw.nrows());
    for i in 0..raw.nrows() {
        let nrm = norm(raw.row(i));
        if nrm <= ZERO_ROW_TOL {
            return Err(Error::ZeroRow(i));
        }
        for j in 0..raw.ncols() {
            out.set(i, j, raw.get(i, j) / nrm);
        }
        scales.push(nrm);
    }
    Ok((RowNormalizedMatrix { inner: out }, scales))
}

/// Absolute equation violations |<a_i, x> - b_i| at the iterate `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualVector {
    values: Vec<f64>,
}

impl ResidualVector {
    /// Wrap raw residual values; all must be nonnegative and finite.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvariantViolation(
                "residuals must be nonnegative and finite".into(),
            ));
        }
        Ok(ResidualVector { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Residuals of the system `A x = b` at the iterate `x`.
pub fn residuals(a: &RowNormalizedMatrix, x: &[f64], b: &[f64]) -> Result<ResidualVector> {
    if x.len() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            got: x.len(),
            what: "iterate length",
        });
    }
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.len(),
            what: "right-hand side length",
        });
    }
    let values = (0..a.nrows()).map(|i| (dot(a.row(i), x) - b[i]).abs()).collect();
    Ok(ResidualVector { values })
}
