//! Kaczmarz projection step, row-selection strategies, the blind solver
//! loop, and the exact one-step expectation oracle.
//!
//! Blindness contract: the iteration sees only the matrix, the observed
//! right-hand side, and the solver config. Ground truth enters solely through
//! [`TraceOracle`], which decorates the trace with true errors and corruption
//! flags but can never influence a pick.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corruption::CorruptedSystem;
use crate::error::{Error, Result};
use crate::linalg::matrix::{dot, ResidualVector, RowNormalizedMatrix};
use crate::linalg::quantile::{quantile_count, quantile_select};
use crate::rng::{stream_rng, StreamPurpose};

/// How the next equation is picked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionStrategy {
    /// Classical Random Kaczmarz: uniform over all rows (rows are unit-norm).
    Uniform,
    /// Uniform over the floor(q*m) rows with smallest residual.
    Quantile { q: f64 },
    /// Quantile estimated from t sampled rows; only t residuals are computed.
    SampledQuantile { q: f64, t: usize },
    /// Deterministic most-violated equation.
    Motzkin,
    /// Row i with probability residual_i^p / sum_j residual_j^p.
    Powered { p: f64 },
}

impl SelectionStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            SelectionStrategy::Uniform => "uniform",
            SelectionStrategy::Quantile { .. } => "quantile",
            SelectionStrategy::SampledQuantile { .. } => "sampled-quantile",
            SelectionStrategy::Motzkin => "motzkin",
            SelectionStrategy::Powered { .. } => "powered",
        }
    }

    /// Whether the strategy needs the full residual vector each iteration.
    fn needs_residuals(&self) -> bool {
        !matches!(self, SelectionStrategy::Uniform | SelectionStrategy::SampledQuantile { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub strategy: SelectionStrategy,
    pub max_iters: usize,
    /// Oracle-mode stop threshold on ||x_k - x_true||; 0 runs the full budget.
    pub stop_tol: f64,
    pub seed: u64,
    /// Start iterate; defaults to the zero vector.
    pub x0: Option<Vec<f64>>,
}

impl SolverConfig {
    pub fn new(strategy: SelectionStrategy, max_iters: usize, seed: u64) -> Self {
        SolverConfig { strategy, max_iters, stop_tol: 0.0, seed, x0: None }
    }

    fn validate(&self, m: usize, n: usize) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be >= 1".into()));
        }
        if !(self.stop_tol >= 0.0 && self.stop_tol.is_finite()) {
            return Err(Error::InvalidConfig("stop_tol must be finite and >= 0".into()));
        }
        match self.strategy {
            SelectionStrategy::Quantile { q } => {
                if !(q > 0.0 && q < 1.0) {
                    return Err(Error::InvalidConfig(format!("q = {q} outside (0, 1)")));
                }
                if quantile_count(m, q) == 0 {
                    return Err(Error::EmptyQuantile { q, count: m });
                }
            }
            SelectionStrategy::SampledQuantile { q, t } => {
                if !(q > 0.0 && q < 1.0) {
                    return Err(Error::InvalidConfig(format!("q = {q} outside (0, 1)")));
                }
                if t == 0 || t > m {
                    return Err(Error::InvalidConfig(format!("t = {t} outside 1..={m}")));
                }
            }
            SelectionStrategy::Powered { p } if !(p >= 0.0 && p.is_finite()) => {
                return Err(Error::InvalidConfig(format!("p = {p} must be finite and >= 0")));
            }
            _ => {}
        }
        if let Some(x0) = &self.x0 {
            if x0.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: x0.len(),
                    what: "x0 length",
                });
            }
        }
        Ok(())
    }
}

/// Ground-truth view used only to annotate traces.
#[derive(Debug, Clone, Copy)]
pub struct TraceOracle<'a> {
    pub x_true: &'a [f64],
    /// Sorted corrupted indices.
    pub corrupt_set: &'a [usize],
}

impl<'a> TraceOracle<'a> {
    pub fn from_system(sys: &'a CorruptedSystem) -> Self {
        TraceOracle { x_true: &sys.x_true, corrupt_set: &sys.corrupt_set }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalStatus {
    Converged,
    BudgetExhausted,
}

impl TerminalStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            TerminalStatus::Converged => "Converged",
            TerminalStatus::BudgetExhausted => "BudgetExhausted",
        }
    }
}

/// One iteration record.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// 1-based iteration number.
    pub iter: usize,
    /// ||x_iter - x_true||^2 after the step; NaN without an oracle.
    pub err_sq: f64,
    /// Quantile threshold used for the pick; NaN for strategies without one.
    pub quantile_threshold: f64,
    pub picked_index: usize,
    /// Whether the picked row is corrupted; None without an oracle.
    pub picked_corrupted: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    /// ||x_0 - x_true||^2; NaN without an oracle.
    pub initial_err_sq: f64,
    pub records: Vec<TraceRecord>,
    pub status: TerminalStatus,
    pub final_x: Vec<f64>,
}

impl ConvergenceTrace {
    pub fn final_err_sq(&self) -> f64 {
        self.records.last().map_or(self.initial_err_sq, |r| r.err_sq)
    }

    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    /// CSV with header `iter,err_sq,quantile_Q,picked_index,picked_corrupted,status`.
    /// The status column is empty except on the final row.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "iter,err_sq,quantile_Q,picked_index,picked_corrupted,status")?;
        if self.records.is_empty() {
            // converged at x0: no picks to report
            writeln!(w, "0,{},NaN,,,{}", self.initial_err_sq, self.status.as_str())?;
            return Ok(());
        }
        let last = self.records.len() - 1;
        for (k, r) in self.records.iter().enumerate() {
            let corrupted = match r.picked_corrupted {
                Some(true) => "1",
                Some(false) => "0",
                None => "",
            };
            let status = if k == last { self.status.as_str() } else { "" };
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.iter, r.err_sq, r.quantile_threshold, r.picked_index, corrupted, status
            )?;
        }
        Ok(())
    }
}

/// Project `x` onto the hyperplane `<a, y> = b_i` of a unit-norm row.
pub fn project_step(x: &[f64], a: &[f64], b_i: f64) -> Vec<f64> {
    debug_assert!((dot(a, a).sqrt() - 1.0).abs() <= 1e-12, "row must be unit norm");
    let r = b_i - dot(a, x);
    x.iter().zip(a).map(|(xi, ai)| xi + r * ai).collect()
}

#[inline]
fn project_in_place(x: &mut [f64], a: &[f64], b_i: f64) {
    let r = b_i - dot(a, x);
    for (xi, ai) in x.iter_mut().zip(a) {
        *xi += r * ai;
    }
}

/// Uniform row pick.
pub fn select_uniform(m: usize, rng: &mut ChaCha8Rng) -> usize {
    rng.random_range(0..m)
}

/// Uniform pick inside the q-quantile admissible set.
pub fn select_quantile(r: &ResidualVector, q: f64, rng: &mut ChaCha8Rng) -> Result<usize> {
    let sel = quantile_select(r, q)?;
    Ok(sel.indices[rng.random_range(0..sel.indices.len())])
}

/// Sampled-quantile pick: draw `t` rows without replacement, compute only
/// those residuals, and pick uniformly inside their lower q-quantile.
///
/// The empirical quantile of a sample keeps at least one element, so the
/// admissible set has size max(1, floor(q*t)). Row sampling and the final
/// pick use separate streams, which makes `t = m` reproduce [`select_quantile`]
/// pick-for-pick on the same pick stream.
pub fn select_quantile_sampled(
    mut residual_at: impl FnMut(usize) -> f64,
    m: usize,
    q: f64,
    t: usize,
    sample_rng: &mut ChaCha8Rng,
    pick_rng: &mut ChaCha8Rng,
) -> Result<(usize, f64)> {
    if t == 0 || t > m {
        return Err(Error::InvalidConfig(format!("t = {t} outside 1..={m}")));
    }
    let sampled = rand::seq::index::sample(sample_rng, m, t);
    let mut pairs: Vec<(f64, usize)> = sampled.iter().map(|i| (residual_at(i), i)).collect();
    let k = quantile_count(t, q).max(1);
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    pairs.select_nth_unstable_by(k - 1, cmp);
    let threshold = pairs[k - 1].0;
    let mut indices: Vec<usize> = pairs[..k].iter().map(|&(_, i)| i).collect();
    indices.sort_unstable();
    Ok((indices[pick_rng.random_range(0..k)], threshold))
}

/// Most-violated equation; ties go to the smaller index.
pub fn select_motzkin(r: &ResidualVector) -> usize {
    let mut best = 0usize;
    for (i, &v) in r.values().iter().enumerate() {
        if v > r.values()[best] {
            best = i;
        }
    }
    best
}

/// Row i with probability residual_i^p / sum_j residual_j^p; p = 0 is uniform.
pub fn select_powered(r: &ResidualVector, p: f64, rng: &mut ChaCha8Rng) -> Result<usize> {
    let vals = r.values();
    let max = vals.iter().fold(0.0f64, |a, &b| a.max(b));
    if max == 0.0 {
        if p == 0.0 {
            // 0^0 = 1: uniform even on an all-zero residual vector
            return Ok(rng.random_range(0..vals.len()));
        }
        return Err(Error::AllZeroResiduals);
    }
    // normalize by the max residual so r^p cannot overflow
    let weights: Vec<f64> = vals.iter().map(|&v| (v / max).powf(p)).collect();
    let total: f64 = weights.iter().sum();
    let u = rng.random_range(0.0..total);
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return Ok(i);
        }
    }
    Ok(vals.len() - 1)
}

/// Run the configured solver on `(a, b_observed)`.
///
/// The oracle, when given, fills in `err_sq` and corruption flags and enables
/// the `stop_tol` stopping rule; it has no effect on the pick sequence.
pub fn run_solver(
    a: &RowNormalizedMatrix,
    b_observed: &[f64],
    config: &SolverConfig,
    oracle: Option<TraceOracle<'_>>,
) -> Result<ConvergenceTrace> {
    let m = a.nrows();
    let n = a.ncols();
    if b_observed.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: b_observed.len(),
            what: "right-hand side length",
        });
    }
    config.validate(m, n)?;
    if config.stop_tol > 0.0 && oracle.is_none() {
        return Err(Error::InvalidConfig(
            "stop_tol > 0 needs ground truth; blind runs use the full budget".into(),
        ));
    }
    if let Some(o) = &oracle {
        if o.x_true.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: o.x_true.len(),
                what: "x_true length",
            });
        }
    }

    let mut x = config.x0.clone().unwrap_or_else(|| vec![0.0; n]);
    let err_sq_of = |x: &[f64]| -> f64 {
        oracle.as_ref().map_or(f64::NAN, |o| {
            x.iter().zip(o.x_true).map(|(a, b)| (a - b) * (a - b)).sum()
        })
    };
    let initial_err_sq = err_sq_of(&x);
    let stop_sq = config.stop_tol * config.stop_tol;

    let mut trace = ConvergenceTrace {
        initial_err_sq,
        records: Vec::new(),
        status: TerminalStatus::BudgetExhausted,
        final_x: Vec::new(),
    };
    if config.stop_tol > 0.0 && initial_err_sq <= stop_sq {
        trace.status = TerminalStatus::Converged;
        trace.final_x = x;
        return Ok(trace);
    }

    let mut pick_rng = stream_rng(config.seed, StreamPurpose::SolverPicks, 0);
    let mut sample_rng = stream_rng(config.seed, StreamPurpose::SolverSampling, 0);

    for iter in 1..=config.max_iters {
        let res = if config.strategy.needs_residuals() {
            Some(crate::linalg::residuals(a, &x, b_observed)?)
        } else {
            None
        };
        let (picked, threshold) = match config.strategy {
            SelectionStrategy::Uniform => (select_uniform(m, &mut pick_rng), f64::NAN),
            SelectionStrategy::Quantile { q } => {
                let sel = quantile_select(res.as_ref().unwrap(), q)?;
                let i = sel.indices[pick_rng.random_range(0..sel.indices.len())];
                (i, sel.threshold)
            }
            SelectionStrategy::SampledQuantile { q, t } => select_quantile_sampled(
                |i| (dot(a.row(i), &x) - b_observed[i]).abs(),
                m,
                q,
                t,
                &mut sample_rng,
                &mut pick_rng,
            )?,
            SelectionStrategy::Motzkin => (select_motzkin(res.as_ref().unwrap()), f64::NAN),
            SelectionStrategy::Powered { p } => {
                match select_powered(res.as_ref().unwrap(), p, &mut pick_rng) {
                    Ok(i) => (i, f64::NAN),
                    Err(Error::AllZeroResiduals) => {
                        // fixed point of the observed system: every projection
                        // is a no-op, so stop instead of erroring
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
        };

        project_in_place(&mut x, a.row(picked), b_observed[picked]);
        let err_sq = err_sq_of(&x);
        trace.records.push(TraceRecord {
            iter,
            err_sq,
            quantile_threshold: threshold,
            picked_index: picked,
            picked_corrupted: oracle
                .as_ref()
                .map(|o| o.corrupt_set.binary_search(&picked).is_ok()),
        });
        if config.stop_tol > 0.0 && err_sq <= stop_sq {
            trace.status = TerminalStatus::Converged;
            break;
        }
    }
    trace.final_x = x;
    Ok(trace)
}

/// Exhaustive one-step expectation at a given iterate: the exact uniform
/// average of the squared true error over every admissible pick.
#[derive(Debug, Clone)]
pub struct StepExpectation {
    /// Mean of ||x_next - x_true||^2 over the admissible set B.
    pub expected_err_sq: f64,
    /// (row index, ||x_next - x_true||^2) for every row of B, ascending.
    pub per_index: Vec<(usize, f64)>,
    /// Quantile threshold defining B.
    pub threshold: f64,
    /// The admissible set B (ascending).
    pub admissible: Vec<usize>,
    /// S = corrupted rows inside B (ascending).
    pub corrupted_in_quantile: Vec<usize>,
}

impl StepExpectation {
    /// Mean squared error over a subset of B (ascending index list).
    pub fn mean_over(&self, subset: &[usize]) -> Option<f64> {
        if subset.is_empty() {
            return None;
        }
        let mut total = 0.0;
        for &i in subset {
            let pos = self.per_index.binary_search_by_key(&i, |&(j, _)| j).ok()?;
            total += self.per_index[pos].1;
        }
        Some(total / subset.len() as f64)
    }

    /// B \ S, the uncorrupted part of the admissible set.
    pub fn uncorrupted_in_quantile(&self) -> Vec<usize> {
        self.admissible
            .iter()
            .copied()
            .filter(|i| self.corrupted_in_quantile.binary_search(i).is_err())
            .collect()
    }
}

/// Enumerate every pick in the q-quantile set of `x_k` and average the exact
/// squared error after one projection. Verification-only: reads ground truth.
pub fn exact_step_expectation(
    system: &CorruptedSystem,
    x_k: &[f64],
    q: f64,
) -> Result<StepExpectation> {
    let n = system.n();
    if x_k.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x_k.len(), what: "x_k length" });
    }
    let r = crate::linalg::residuals(&system.a, x_k, &system.b_observed)?;
    let sel = quantile_select(&r, q)?;
    let mut per_index = Vec::with_capacity(sel.indices.len());
    let mut total = 0.0;
    for &i in &sel.indices {
        let x_next = project_step(x_k, system.a.row(i), system.b_observed[i]);
        let d: f64 =
            x_next.iter().zip(&system.x_true).map(|(a, b)| (a - b) * (a - b)).sum();
        per_index.push((i, d));
        total += d;
    }
    let corrupted_in_quantile: Vec<usize> =
        sel.indices.iter().copied().filter(|&i| system.is_corrupted(i)).collect();
    Ok(StepExpectation {
        expected_err_sq: total / sel.indices.len() as f64,
        per_index,
        threshold: sel.threshold,
        admissible: sel.indices,
        corrupted_in_quantile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corruption::{corrupt, generate_gaussian_system, CorruptionModel, CorruptionSpec};
    use crate::linalg::matrix::{Matrix, RowNormalizedMatrix};

    fn identity_system(b: Vec<f64>) -> (RowNormalizedMatrix, Vec<f64>) {
        let n = b.len();
        (RowNormalizedMatrix::new(Matrix::identity(n)).unwrap(), b)
    }

    #[test]
    fn project_onto_coordinate_plane() {
        let x = project_step(&[3.0, 4.0], &[1.0, 0.0], 0.0);
        assert_eq!(x, vec![0.0, 4.0]);
    }

    #[test]
    fn project_fixed_point_on_hyperplane() {
        let a = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];
        let x = [1.0, -1.0]; // already on <a, x> = 0
        let y = project_step(&x, &a, 0.0);
        assert!((y[0] - 1.0).abs() < 1e-15 && (y[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn project_along_diagonal() {
        let a = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];
        let y = project_step(&[1.0, 1.0], &a, 0.0);
        assert!(y[0].abs() < 1e-15 && y[1].abs() < 1e-15);
    }

    #[test]
    fn projection_is_idempotent() {
        let mut rng = stream_rng(5, StreamPurpose::SolverPicks, 0);
        for _ in 0..100 {
            let mut a: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let nrm = crate::linalg::norm(&a);
            if nrm < 1e-6 {
                continue;
            }
            a.iter_mut().for_each(|v| *v /= nrm);
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-5.0..5.0)).collect();
            let b: f64 = rng.random_range(-5.0..5.0);
            let once = project_step(&x, &a, b);
            let twice = project_step(&once, &a, b);
            for (u, v) in once.iter().zip(&twice) {
                assert!((u - v).abs() <= 1e-10);
            }
            assert!((dot(&a, &once) - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn uncorrupted_projection_never_expands() {
        let sys = generate_gaussian_system(30, 5, 40).unwrap();
        let mut rng = stream_rng(6, StreamPurpose::SolverPicks, 0);
        for _ in 0..50 {
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
            let before: f64 =
                x.iter().zip(&sys.x_true).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            for i in 0..30 {
                let y = project_step(&x, sys.a.row(i), sys.b_true[i]);
                let after: f64 = y
                    .iter()
                    .zip(&sys.x_true)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                assert!(after <= before + 1e-12);
            }
        }
    }

    #[test]
    fn uniform_on_single_row() {
        let mut rng = stream_rng(1, StreamPurpose::SolverPicks, 0);
        for _ in 0..10 {
            assert_eq!(select_uniform(1, &mut rng), 0);
        }
    }

    #[test]
    fn uniform_frequencies() {
        let mut rng = stream_rng(2, StreamPurpose::SolverPicks, 0);
        let mut counts = [0usize; 4];
        for _ in 0..40_000 {
            counts[select_uniform(4, &mut rng)] += 1;
        }
        for c in counts {
            let f = c as f64 / 40_000.0;
            assert!((f - 0.25).abs() < 0.02, "frequency {f}");
        }
    }

    #[test]
    fn uniform_sequence_reproducible() {
        let mut a = stream_rng(3, StreamPurpose::SolverPicks, 0);
        let mut b = stream_rng(3, StreamPurpose::SolverPicks, 0);
        for _ in 0..100 {
            assert_eq!(select_uniform(10, &mut a), select_uniform(10, &mut b));
        }
    }

    #[test]
    fn quantile_singleton_always_picked() {
        let r = ResidualVector::new(vec![0.0, 5.0, 5.0, 5.0]).unwrap();
        let mut rng = stream_rng(4, StreamPurpose::SolverPicks, 0);
        for _ in 0..20 {
            assert_eq!(select_quantile(&r, 0.25, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn quantile_ties_pick_lowest_indices_uniformly() {
        let r = ResidualVector::new(vec![1.0; 6]).unwrap();
        let mut rng = stream_rng(5, StreamPurpose::SolverPicks, 0);
        let mut counts = [0usize; 6];
        for _ in 0..30_000 {
            counts[select_quantile(&r, 0.5, &mut rng).unwrap()] += 1;
        }
        assert_eq!(counts[3] + counts[4] + counts[5], 0);
        for &c in &counts[..3] {
            let f = c as f64 / 30_000.0;
            assert!((f - 1.0 / 3.0).abs() < 0.02);
        }
    }

    #[test]
    fn quantile_pick_respects_threshold() {
        let mut rng = stream_rng(6, StreamPurpose::SolverPicks, 0);
        for _ in 0..100 {
            let vals: Vec<f64> = (0..17).map(|_| rng.random_range(0.0..9.0)).collect();
            let r = ResidualVector::new(vals.clone()).unwrap();
            let sel = quantile_select(&r, 0.4).unwrap();
            let i = select_quantile(&r, 0.4, &mut rng).unwrap();
            assert!(vals[i] <= sel.threshold);
        }
    }

    #[test]
    fn sampled_with_t_equal_m_matches_exact_stream_for_stream() {
        let sys = generate_gaussian_system(40, 4, 50).unwrap();
        let x = vec![0.25; 4];
        let r = crate::linalg::residuals(&sys.a, &x, &sys.b_observed).unwrap();
        let mut exact_rng = stream_rng(9, StreamPurpose::SolverPicks, 0);
        let mut pick_rng = stream_rng(9, StreamPurpose::SolverPicks, 0);
        let mut sample_rng = stream_rng(9, StreamPurpose::SolverSampling, 0);
        for _ in 0..200 {
            let exact = select_quantile(&r, 0.6, &mut exact_rng).unwrap();
            let (sampled, _) = select_quantile_sampled(
                |i| r.values()[i],
                40,
                0.6,
                40,
                &mut sample_rng,
                &mut pick_rng,
            )
            .unwrap();
            assert_eq!(exact, sampled);
        }
    }

    #[test]
    fn sampled_with_t_one_is_uniform_over_rows() {
        let r = ResidualVector::new((0..8).map(|i| i as f64).collect()).unwrap();
        let mut sample_rng = stream_rng(10, StreamPurpose::SolverSampling, 0);
        let mut pick_rng = stream_rng(10, StreamPurpose::SolverPicks, 0);
        let mut counts = [0usize; 8];
        for _ in 0..40_000 {
            let (i, _) = select_quantile_sampled(
                |i| r.values()[i],
                8,
                0.5,
                1,
                &mut sample_rng,
                &mut pick_rng,
            )
            .unwrap();
            counts[i] += 1;
        }
        for c in counts {
            let f = c as f64 / 40_000.0;
            assert!((f - 0.125).abs() < 0.02, "frequency {f}");
        }
    }

    #[test]
    fn sampled_computes_exactly_t_residuals() {
        let mut evals = 0usize;
        let mut sample_rng = stream_rng(11, StreamPurpose::SolverSampling, 0);
        let mut pick_rng = stream_rng(11, StreamPurpose::SolverPicks, 0);
        select_quantile_sampled(
            |_| {
                evals += 1;
                1.0
            },
            100,
            0.5,
            13,
            &mut sample_rng,
            &mut pick_rng,
        )
        .unwrap();
        assert_eq!(evals, 13);
    }

    #[test]
    fn sampled_median_never_lands_in_top_percentile() {
        // 50 samples, q = 0.5: a pick of true rank above the 99th percentile
        // needs >= 26 of the 50 samples in the top 1%, which never happens.
        let m = 1000usize;
        let vals: Vec<f64> = (0..m).map(|i| i as f64).collect();
        let cutoff = 990.0;
        let mut sample_rng = stream_rng(12, StreamPurpose::SolverSampling, 0);
        let mut pick_rng = stream_rng(12, StreamPurpose::SolverPicks, 0);
        let mut hits = 0usize;
        for _ in 0..1_000_000 {
            let (i, _) = select_quantile_sampled(
                |i| vals[i],
                m,
                0.5,
                50,
                &mut sample_rng,
                &mut pick_rng,
            )
            .unwrap();
            if vals[i] >= cutoff {
                hits += 1;
            }
        }
        assert_eq!(hits, 0);
    }

    #[test]
    fn motzkin_picks_argmax_with_tie_break() {
        let r = ResidualVector::new(vec![1.0, 3.0, 2.0]).unwrap();
        assert_eq!(select_motzkin(&r), 1);
        let r = ResidualVector::new(vec![5.0, 5.0]).unwrap();
        assert_eq!(select_motzkin(&r), 0);
    }

    #[test]
    fn motzkin_matches_linear_scan_oracle() {
        let mut rng = stream_rng(13, StreamPurpose::SolverPicks, 0);
        for _ in 0..100 {
            let vals: Vec<f64> = (0..23).map(|_| rng.random_range(0.0..7.0_f64).round()).collect();
            let r = ResidualVector::new(vals.clone()).unwrap();
            let mut best = 0;
            for i in 0..vals.len() {
                if vals[i] > vals[best] {
                    best = i;
                }
            }
            assert_eq!(select_motzkin(&r), best);
        }
    }

    #[test]
    fn powered_zero_exponent_is_uniform() {
        let r = ResidualVector::new(vec![1.0, 10.0, 100.0]).unwrap();
        let mut rng = stream_rng(14, StreamPurpose::SolverPicks, 0);
        let mut counts = [0usize; 3];
        for _ in 0..30_000 {
            counts[select_powered(&r, 0.0, &mut rng).unwrap()] += 1;
        }
        for c in counts {
            assert!((c as f64 / 30_000.0 - 1.0 / 3.0).abs() < 0.02);
        }
    }

    #[test]
    fn powered_single_support() {
        let r = ResidualVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        let mut rng = stream_rng(15, StreamPurpose::SolverPicks, 0);
        for _ in 0..50 {
            assert_eq!(select_powered(&r, 2.0, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn powered_frequencies_match_weights() {
        let r = ResidualVector::new(vec![1.0, 2.0]).unwrap();
        let mut rng = stream_rng(16, StreamPurpose::SolverPicks, 0);
        let mut hit1 = 0usize;
        for _ in 0..100_000 {
            if select_powered(&r, 2.0, &mut rng).unwrap() == 1 {
                hit1 += 1;
            }
        }
        let f = hit1 as f64 / 100_000.0;
        assert!((f - 0.8).abs() < 0.02, "frequency {f}");
    }

    #[test]
    fn powered_all_zero_is_error() {
        let r = ResidualVector::new(vec![0.0, 0.0]).unwrap();
        let mut rng = stream_rng(17, StreamPurpose::SolverPicks, 0);
        assert!(matches!(select_powered(&r, 2.0, &mut rng), Err(Error::AllZeroResiduals)));
    }

    #[test]
    fn solver_converges_on_overdetermined_system() {
        let sys = generate_gaussian_system(12, 2, 55).unwrap();
        let config = SolverConfig {
            strategy: SelectionStrategy::Quantile { q: 0.75 },
            max_iters: 2000,
            stop_tol: 1e-12,
            seed: 3,
            x0: None,
        };
        let trace =
            run_solver(&sys.a, &sys.b_observed, &config, Some(TraceOracle::from_system(&sys)))
                .unwrap();
        assert_eq!(trace.status, TerminalStatus::Converged);
        assert!(trace.final_err_sq() <= 1e-24);
    }

    #[test]
    fn quantile_stall_on_square_system_is_reported_not_hidden() {
        // On I2 with floor(q m) = 1 the quantile set is always the satisfied
        // row once one coordinate is fixed: picks become no-ops and the run
        // exhausts its budget. The trace shows the stall.
        let (a, b) = identity_system(vec![1.0, 2.0]);
        let x_true = vec![1.0, 2.0];
        let config = SolverConfig {
            strategy: SelectionStrategy::Quantile { q: 0.5 },
            max_iters: 50,
            stop_tol: 0.0,
            seed: 3,
            x0: None,
        };
        let oracle = TraceOracle { x_true: &x_true, corrupt_set: &[] };
        let trace = run_solver(&a, &b, &config, Some(oracle)).unwrap();
        assert_eq!(trace.status, TerminalStatus::BudgetExhausted);
        assert_eq!(trace.records.len(), 50);
        let last = trace.records.last().unwrap();
        assert_eq!(last.quantile_threshold, 0.0);
        assert!(last.err_sq > 0.0);
    }

    #[test]
    fn solver_honors_configured_start_iterate() {
        let sys = generate_gaussian_system(30, 4, 61).unwrap();
        let mut config = SolverConfig {
            strategy: SelectionStrategy::Quantile { q: 0.7 },
            max_iters: 3000,
            stop_tol: 1e-10,
            seed: 5,
            x0: Some(sys.x_true.clone()),
        };
        let oracle = TraceOracle::from_system(&sys);
        // starting at the solution converges immediately, with no picks
        let trace = run_solver(&sys.a, &sys.b_observed, &config, Some(oracle)).unwrap();
        assert_eq!(trace.status, TerminalStatus::Converged);
        assert!(trace.records.is_empty());
        // a far-away start still converges
        config.x0 = Some(vec![100.0; 4]);
        let trace = run_solver(&sys.a, &sys.b_observed, &config, Some(oracle)).unwrap();
        assert_eq!(trace.status, TerminalStatus::Converged);
        // wrong-length start is rejected
        config.x0 = Some(vec![0.0; 3]);
        assert!(matches!(
            run_solver(&sys.a, &sys.b_observed, &config, Some(oracle)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn solver_is_deterministic() {
        let sys = generate_gaussian_system(30, 4, 60).unwrap();
        let config = SolverConfig {
            strategy: SelectionStrategy::Quantile { q: 0.7 },
            max_iters: 50,
            stop_tol: 0.0,
            seed: 5,
            x0: None,
        };
        let t1 =
            run_solver(&sys.a, &sys.b_observed, &config, Some(TraceOracle::from_system(&sys)))
                .unwrap();
        let t2 =
            run_solver(&sys.a, &sys.b_observed, &config, Some(TraceOracle::from_system(&sys)))
                .unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn solver_never_reads_corrupt_set() {
        let sys = generate_gaussian_system(25, 3, 70).unwrap();
        let corrupted = corrupt(
            &sys,
            &CorruptionSpec {
                beta: 0.2,
                model: CorruptionModel::RandomGaussian { scale: None },
                seed: 8,
            },
        )
        .unwrap();
        let config = SolverConfig {
            strategy: SelectionStrategy::Quantile { q: 0.6 },
            max_iters: 80,
            stop_tol: 0.0,
            seed: 21,
            x0: None,
        };
        let blind = run_solver(&corrupted.a, &corrupted.b_observed, &config, None).unwrap();
        let with_oracle = run_solver(
            &corrupted.a,
            &corrupted.b_observed,
            &config,
            Some(TraceOracle::from_system(&corrupted)),
        )
        .unwrap();
        // a lying oracle must not change the picks either
        let fake_set: Vec<usize> = (0..25).step_by(2).collect();
        let lying = TraceOracle { x_true: &corrupted.x_true, corrupt_set: &fake_set };
        let with_lying =
            run_solver(&corrupted.a, &corrupted.b_observed, &config, Some(lying)).unwrap();

        let picks = |t: &ConvergenceTrace| -> Vec<usize> {
            t.records.iter().map(|r| r.picked_index).collect()
        };
        assert_eq!(picks(&blind), picks(&with_oracle));
        assert_eq!(picks(&blind), picks(&with_lying));
        assert_eq!(with_oracle.final_x, blind.final_x);
        assert!(blind.records.iter().all(|r| r.err_sq.is_nan() && r.picked_corrupted.is_none()));
    }

    #[test]
    fn uniform_mean_decay_respects_rate_bound() {
        // uniform RK on uncorrupted Gaussian systems: mean err decay per step
        // stays below 1 - sigma_min^2 / m within Monte Carlo noise
        let m = 100;
        let n = 10;
        let steps = 60;
        let seeds = 40;
        let mut mean_err = vec![0.0f64; steps + 1];
        let mut bound = 0.0f64;
        for seed in 0..seeds {
            let sys = generate_gaussian_system(m, n, 9000 + seed).unwrap();
            let smin = crate::linalg::sigma_min(sys.a.matrix(), 1e-10).unwrap();
            bound = bound.max(1.0 - smin * smin / m as f64);
            let config = SolverConfig {
                strategy: SelectionStrategy::Uniform,
                max_iters: steps,
                stop_tol: 0.0,
                seed: 777 + seed,
                x0: None,
            };
            let trace =
                run_solver(&sys.a, &sys.b_observed, &config, Some(TraceOracle::from_system(&sys)))
                    .unwrap();
            mean_err[0] += trace.initial_err_sq;
            for (k, r) in trace.records.iter().enumerate() {
                mean_err[k + 1] += r.err_sq;
            }
        }
        // aggregate decay over the run must respect the worst per-instance bound
        let overall = (mean_err[steps] / mean_err[0]).powf(1.0 / steps as f64);
        assert!(
            overall <= bound + 0.02,
            "measured mean decay {overall} vs bound {bound}"
        );
    }

    #[test]
    fn exact_expectation_on_identity() {
        let n = 4;
        let sys = CorruptedSystem {
            a: RowNormalizedMatrix::new(Matrix::identity(n)).unwrap(),
            x_true: vec![1.0, -2.0, 3.0, 0.5],
            b_true: vec![1.0, -2.0, 3.0, 0.5],
            b_observed: vec![1.0, -2.0, 3.0, 0.5],
            corrupt_set: vec![],
            beta: 0.0,
        };
        let x_k = vec![0.0; n];
        let exp = exact_step_expectation(&sys, &x_k, 1.0).unwrap();
        let err: f64 = sys.x_true.iter().map(|v| v * v).sum();
        let expected = (1.0 - 1.0 / n as f64) * err;
        assert!((exp.expected_err_sq - expected).abs() <= 1e-12 * err);
        assert_eq!(exp.admissible.len(), n);
        assert!(exp.corrupted_in_quantile.is_empty());
    }

    #[test]
    fn exact_expectation_contracts_without_corruption() {
        let sys = generate_gaussian_system(20, 3, 80).unwrap();
        let x_k = vec![0.5, -0.5, 1.0];
        let err: f64 =
            x_k.iter().zip(&sys.x_true).map(|(a, b)| (a - b) * (a - b)).sum();
        let exp = exact_step_expectation(&sys, &x_k, 0.75).unwrap();
        assert!(exp.expected_err_sq <= err + 1e-12);
        for &(_, d) in &exp.per_index {
            assert!(d <= err + 1e-12);
        }
    }

    #[test]
    fn exact_expectation_matches_monte_carlo() {
        let sys = generate_gaussian_system(24, 3, 90).unwrap();
        let corrupted = corrupt(
            &sys,
            &CorruptionSpec {
                beta: 0.25,
                model: CorruptionModel::ConstantOffset { value: 4.0 },
                seed: 2,
            },
        )
        .unwrap();
        let x_k = vec![0.3, 0.3, -0.7];
        let q = 0.5;
        let exp = exact_step_expectation(&corrupted, &x_k, q).unwrap();

        let r = crate::linalg::residuals(&corrupted.a, &x_k, &corrupted.b_observed).unwrap();
        let mut rng = stream_rng(33, StreamPurpose::SolverPicks, 0);
        let trials = 20_000usize;
        let mut samples = Vec::with_capacity(trials);
        for _ in 0..trials {
            let i = select_quantile(&r, q, &mut rng).unwrap();
            let x_next = project_step(&x_k, corrupted.a.row(i), corrupted.b_observed[i]);
            let d: f64 = x_next
                .iter()
                .zip(&corrupted.x_true)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            samples.push(d);
        }
        let mean: f64 = samples.iter().sum::<f64>() / trials as f64;
        let var: f64 =
            samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / trials as f64;
        let se = (var / trials as f64).sqrt();
        assert!(
            (mean - exp.expected_err_sq).abs() <= 3.0 * se + 1e-12,
            "mc mean {mean}, exact {}, se {se}",
            exp.expected_err_sq
        );
    }

    #[test]
    fn trace_csv_shape() {
        let (a, b) = identity_system(vec![1.0, 2.0]);
        let x_true = vec![1.0, 2.0];
        let config = SolverConfig {
            strategy: SelectionStrategy::Uniform,
            max_iters: 3,
            stop_tol: 0.0,
            seed: 1,
            x0: None,
        };
        let trace =
            run_solver(&a, &b, &config, Some(TraceOracle { x_true: &x_true, corrupt_set: &[] }))
                .unwrap();
        let mut out = Vec::new();
        trace.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "iter,err_sq,quantile_Q,picked_index,picked_corrupted,status");
        assert_eq!(lines.len(), 4); // header + one row per iteration
        assert!(lines[3].ends_with("BudgetExhausted"));
        assert!(lines[1].ends_with(","), "non-final rows carry no status: {}", lines[1]);
    }
}
