//! Dense linear algebra: matrix storage, row normalization, extremal singular
//! values, residuals, and quantile selection.

pub mod eigen;
pub mod io;
pub mod matrix;
pub mod quantile;

pub use eigen::{sigma_max, sigma_min, top_eigenvalue_psd, DEFAULT_SPECTRAL_TOL};
pub use matrix::{
    dot, norm, normalize_rows, residuals, Matrix, ResidualVector, RowNormalizedMatrix,
    ROW_NORM_TOL, ZERO_ROW_TOL,
};
pub use quantile::{quantile_count, quantile_select, QuantileSelection};
