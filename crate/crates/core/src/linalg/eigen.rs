//! Extremal singular values via power iteration on the Gram operator.
//!
//! Plain power iteration stalls when the top of the spectrum is clustered, so
//! the iteration operator is squared repeatedly first: after j squarings one
//! application of the operator equals 2^j classical power steps, which makes
//! the convergence rate independent of the spectral gap. The eigenvalue is
//! then read off as a Rayleigh quotient against the original Gram matrix, so
//! rounding accumulated in the squarings only enters at second order.

use crate::error::{Error, Result};
use crate::linalg::matrix::{dot, norm, Matrix};

/// Default relative accuracy for spectral quantities.
pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-10;

/// Squarings applied to the iteration operator; 2^50 power steps per
/// application crushes every component more than ~4e-15 below the top.
const SQUARINGS: usize = 50;

/// Iteration cap: 10 * n * ceil(ln(1/tol)) refinement steps.
fn iteration_cap(n: usize, tol: f64) -> usize {
    10 * n.max(1) * (1.0 / tol).ln().ceil() as usize
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix.
pub fn top_eigenvalue_psd(g: &Matrix, tol: f64) -> Result<f64> {
    top_eigenvalue_psd_capped(g, tol, iteration_cap(g.ncols(), tol))
}

fn top_eigenvalue_psd_capped(g: &Matrix, tol: f64, cap: usize) -> Result<f64> {
    assert_eq!(g.nrows(), g.ncols(), "Gram matrix must be square");
    assert!(tol > 0.0, "tol must be positive");
    let n = g.ncols();

    let scale = g.frobenius_norm_sq().sqrt();
    if scale == 0.0 {
        return Ok(0.0);
    }

    // b = (g / scale)^(2^SQUARINGS), renormalized after every squaring.
    let mut b = g.clone();
    rescale(&mut b, scale);
    for _ in 0..SQUARINGS {
        let sq = square_symmetric(&b);
        let s = sq.frobenius_norm_sq().sqrt();
        if s == 0.0 || !s.is_finite() {
            // numerically rank-zero after crushing; top eigenvector is lost,
            // fall back to the current b
            break;
        }
        b = sq;
        rescale(&mut b, s);
    }

    // Deterministic starts: all-ones first, then basis vectors.
    let mut iters = 0usize;
    for start in 0..=n {
        let mut v = if start == 0 {
            vec![1.0 / (n as f64).sqrt(); n]
        } else {
            let mut e = vec![0.0; n];
            e[start - 1] = 1.0;
            e
        };
        // Project onto the dominant eigenspace of g via b.
        let mut ok = true;
        for _ in 0..2 {
            let w = b.matvec(&v);
            let wn = norm(&w);
            if wn <= 1e-8 {
                ok = false;
                break;
            }
            v = w.iter().map(|x| x / wn).collect();
        }
        if !ok {
            continue; // start vector (numerically) orthogonal to the top eigenspace
        }
        loop {
            let gv = g.matvec(&v);
            let theta = dot(&v, &gv);
            let res_sq: f64 =
                gv.iter().zip(&v).map(|(a, b)| (a - theta * b) * (a - theta * b)).sum();
            if res_sq.sqrt() <= tol * theta.abs().max(scale * 1e-14) {
                return Ok(theta.max(0.0));
            }
            iters += 1;
            if iters >= cap {
                return Err(Error::NoConvergence { what: "gram power iteration", iters });
            }
            let w = b.matvec(&v);
            let wn = norm(&w);
            if wn <= 1e-300 {
                break;
            }
            v = w.iter().map(|x| x / wn).collect();
        }
    }
    Err(Error::NoConvergence { what: "gram power iteration", iters })
}

fn rescale(m: &mut Matrix, s: f64) {
    let n = m.ncols();
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, m.get(i, j) / s);
        }
    }
}

fn square_symmetric(m: &Matrix) -> Matrix {
    let n = m.ncols();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = dot(m.row(i), m.row(j)); // m symmetric: row i of m^2 = m row_i . row_j
            out.set(i, j, v);
            out.set(j, i, v);
        }
    }
    out
}

/// Largest singular value of `a` to relative accuracy `tol`.
///
/// Works on the smaller of the two Gram matrices, so wide matrices are fine.
pub fn sigma_max(a: &Matrix, tol: f64) -> Result<f64> {
    assert!(a.nrows() > 0 && a.ncols() > 0, "matrix must be nonempty");
    let g = if a.ncols() <= a.nrows() { a.gram() } else { a.gram_transposed() };
    Ok(top_eigenvalue_psd(&g, tol)?.sqrt())
}

/// Smallest singular value of `a` to relative accuracy `tol`.
///
/// Returns 0 immediately when `a` has fewer rows than columns. Otherwise
/// computes lambda_min(A^T A) = lambda_max(A^T A) - lambda_max(shift * I - A^T A).
pub fn sigma_min(a: &Matrix, tol: f64) -> Result<f64> {
    assert!(a.nrows() > 0 && a.ncols() > 0, "matrix must be nonempty");
    if a.nrows() < a.ncols() {
        return Ok(0.0);
    }
    let g = a.gram();
    let lambda_max = top_eigenvalue_psd(&g, tol)?;
    if lambda_max == 0.0 {
        return Ok(0.0);
    }
    let n = g.ncols();
    let mut h = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v = if i == j { lambda_max - g.get(i, j) } else { -g.get(i, j) };
            h.set(i, j, v);
        }
    }
    let lambda_min = lambda_max - top_eigenvalue_psd(&h, tol)?;
    Ok(lambda_min.max(0.0).sqrt())
}
