//! Order-statistic selection of the admissible equation set.

use crate::error::{Error, Result};
use crate::linalg::matrix::ResidualVector;

/// The q-quantile admissible set: the floor(q*m) rows with smallest residual.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileSelection {
    /// The floor(q*m)-th smallest residual; every selected residual is <= it.
    pub threshold: f64,
    /// Selected row indices, ascending. Ties on the threshold residual are
    /// broken toward smaller row index, so the set size is exact.
    pub indices: Vec<usize>,
}

/// floor(q * m), with a 1e-9 absolute guard so that decimal q like 0.7 whose
/// nearest double sits just below the rational value does not lose a slot.
pub fn quantile_count(m: usize, q: f64) -> usize {
    ((q * m as f64 + 1e-9).floor() as usize).min(m)
}

/// Pick the floor(q*m) indices with smallest residual in O(m) expected time.
pub fn quantile_select(r: &ResidualVector, q: f64) -> Result<QuantileSelection> {
    let m = r.len();
    let k = quantile_count(m, q);
    if k == 0 {
        return Err(Error::EmptyQuantile { q, count: m });
    }
    let mut pairs: Vec<(f64, usize)> =
        r.values().iter().copied().enumerate().map(|(i, v)| (v, i)).collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    pairs.select_nth_unstable_by(k - 1, cmp);
    let threshold = pairs[k - 1].0;
    let mut indices: Vec<usize> = pairs[..k].iter().map(|&(_, i)| i).collect();
    indices.sort_unstable();
    Ok(QuantileSelection { threshold, indices })
}
