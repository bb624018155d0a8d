//! Subset-restricted extremal singular values, the convergence condition and
//! rate constant, and the truncated-Gaussian threshold heuristic.

use crate::error::{Error, Result};
use crate::linalg::eigen::{sigma_max, sigma_min, DEFAULT_SPECTRAL_TOL};
use crate::linalg::matrix::{dot, norm, Matrix};
use crate::linalg::quantile::quantile_count;
use crate::rng::{stream_rng, StreamPurpose};
use rand_distr::{Distribution, StandardNormal};

/// Refuse exact enumeration beyond this many subsets.
pub const EXACT_SUBSET_CAP: u64 = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsetMode {
    Min,
    Max,
}

/// How the subset extremum is estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubsetMethod {
    /// Enumerate every subset. Exact, but refuses when C(m, s) exceeds
    /// [`EXACT_SUBSET_CAP`].
    Exact,
    /// Random subsets. For the min this is an upper bound on the true value,
    /// for the max a lower bound.
    Sampled { trials: usize, seed: u64 },
    /// Min only: for each random direction x, take the s rows with smallest
    /// <a_i, x>^2 and evaluate ||A_S x||. An upper bound on the true min.
    Greedy { directions: usize, seed: u64 },
}

/// Provenance of a subset-extremal value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsetEstimate {
    Exact,
    SampledUpperBound,
    SampledLowerBound,
    GreedyDirectionUpperBound,
}

impl SubsetEstimate {
    pub fn as_str(&self) -> &'static str {
        match self {
            SubsetEstimate::Exact => "exact",
            SubsetEstimate::SampledUpperBound => "sampled-upper-bound",
            SubsetEstimate::SampledLowerBound => "sampled-lower-bound",
            SubsetEstimate::GreedyDirectionUpperBound => "greedy-direction-upper-bound",
        }
    }
}

/// C(m, s), or None once it exceeds `cap`.
pub fn binomial_capped(m: u64, s: u64, cap: u64) -> Option<u64> {
    if s > m {
        return Some(0);
    }
    let s = s.min(m - s);
    let mut acc: u128 = 1;
    for i in 0..s {
        // exact at every step: each prefix is itself a binomial coefficient
        acc = acc * (m - i) as u128 / (i + 1) as u128;
        if acc > cap as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// Extremal singular value over row subsets of size `s`, with the achieving
/// subset. See [`SubsetMethod`] for the exact/sampled/greedy semantics.
pub fn sigma_subset_extremal(
    a: &Matrix,
    s: usize,
    mode: SubsetMode,
    method: SubsetMethod,
) -> Result<(f64, Vec<usize>, SubsetEstimate)> {
    let pool: Vec<usize> = (0..a.nrows()).collect();
    sigma_subset_extremal_restricted(a, &pool, s, mode, method)
}

/// Same, but subsets are drawn from `pool` instead of all rows. Used by the
/// verification oracle to restrict to uncorrupted rows.
pub fn sigma_subset_extremal_restricted(
    a: &Matrix,
    pool: &[usize],
    s: usize,
    mode: SubsetMode,
    method: SubsetMethod,
) -> Result<(f64, Vec<usize>, SubsetEstimate)> {
    let p = pool.len();
    if s == 0 || s > p {
        return Err(Error::BadSubsetSize { s, m: p });
    }
    let tol = DEFAULT_SPECTRAL_TOL;
    let eval = |subset: &[usize]| -> Result<f64> {
        let sub = a.select_rows(subset);
        match mode {
            SubsetMode::Min => sigma_min(&sub, tol),
            SubsetMode::Max => sigma_max(&sub, tol),
        }
    };
    match method {
        SubsetMethod::Exact => {
            if binomial_capped(p as u64, s as u64, EXACT_SUBSET_CAP).is_none() {
                return Err(Error::TooManySubsets { m: p, s, cap: EXACT_SUBSET_CAP });
            }
            let mut best: Option<(f64, Vec<usize>)> = None;
            let mut idx: Vec<usize> = (0..s).collect();
            loop {
                let subset: Vec<usize> = idx.iter().map(|&i| pool[i]).collect();
                let v = eval(&subset)?;
                let better = match (&best, mode) {
                    (None, _) => true,
                    (Some((b, _)), SubsetMode::Min) => v < *b,
                    (Some((b, _)), SubsetMode::Max) => v > *b,
                };
                if better {
                    best = Some((v, subset));
                }
                if !advance_combination(&mut idx, p) {
                    break;
                }
            }
            let (v, w) = best.unwrap();
            Ok((v, w, SubsetEstimate::Exact))
        }
        SubsetMethod::Sampled { trials, seed } => {
            if trials == 0 {
                return Err(Error::InvalidConfig("sampled method needs trials >= 1".into()));
            }
            let mut rng = stream_rng(seed, StreamPurpose::SpectralSubsets, 0);
            let mut best: Option<(f64, Vec<usize>)> = None;
            for _ in 0..trials {
                let mut subset: Vec<usize> =
                    rand::seq::index::sample(&mut rng, p, s).iter().map(|i| pool[i]).collect();
                subset.sort_unstable();
                let v = eval(&subset)?;
                let better = match (&best, mode) {
                    (None, _) => true,
                    (Some((b, _)), SubsetMode::Min) => v < *b,
                    (Some((b, _)), SubsetMode::Max) => v > *b,
                };
                if better {
                    best = Some((v, subset));
                }
            }
            let (v, w) = best.unwrap();
            let flag = match mode {
                SubsetMode::Min => SubsetEstimate::SampledUpperBound,
                SubsetMode::Max => SubsetEstimate::SampledLowerBound,
            };
            Ok((v, w, flag))
        }
        SubsetMethod::Greedy { directions, seed } => {
            if mode != SubsetMode::Min {
                return Err(Error::InvalidConfig("greedy method estimates the minimum only".into()));
            }
            if directions == 0 {
                return Err(Error::InvalidConfig("greedy method needs directions >= 1".into()));
            }
            let n = a.ncols();
            let mut rng = stream_rng(seed, StreamPurpose::SpectralDirections, 0);
            let mut best: Option<(f64, Vec<usize>)> = None;
            for _ in 0..directions {
                let x: Vec<f64> = loop {
                    let d: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let nrm = norm(&d);
                    if nrm > 1e-12 {
                        break d.iter().map(|v| v / nrm).collect();
                    }
                };
                let mut scored: Vec<(f64, usize)> =
                    pool.iter().map(|&i| (dot(a.row(i), &x).powi(2), i)).collect();
                scored.select_nth_unstable_by(s - 1, |l, r| {
                    l.0.total_cmp(&r.0).then(l.1.cmp(&r.1))
                });
                let mut subset: Vec<usize> = scored[..s].iter().map(|&(_, i)| i).collect();
                subset.sort_unstable();
                let v = scored[..s].iter().map(|&(sq, _)| sq).sum::<f64>().sqrt();
                if best.as_ref().is_none_or(|(b, _)| v < *b) {
                    best = Some((v, subset));
                }
            }
            let (v, w) = best.unwrap();
            Ok((v, w, SubsetEstimate::GreedyDirectionUpperBound))
        }
    }
}

/// Next s-combination of 0..p in lexicographic order; false when done.
fn advance_combination(idx: &mut [usize], p: usize) -> bool {
    let s = idx.len();
    let mut i = s;
    while i > 0 {
        i -= 1;
        if idx[i] != i + p - s {
            idx[i] += 1;
            for j in i + 1..s {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn check_domain(q: f64, beta: f64) -> Result<()> {
    if !(beta >= 0.0 && beta < q && q + beta < 1.0) {
        return Err(Error::ParameterDomain { q, beta });
    }
    Ok(())
}

/// Left-hand side of the convergence condition,
/// q/(q-beta) * (2 sqrt(beta)/sqrt(1-q-beta) + beta/(1-q-beta)).
pub fn condition_lhs(q: f64, beta: f64) -> Result<f64> {
    check_domain(q, beta)?;
    let gap = 1.0 - q - beta;
    Ok(q / (q - beta) * (2.0 * beta.sqrt() / gap.sqrt() + beta / gap))
}

/// The per-step contraction deficit
/// c = (q-beta) sigma_sub_min^2 / (q^2 m) - sigma_max^2/(q m) * (2 sqrt(beta)/sqrt(1-q-beta) + beta/(1-q-beta)).
///
/// Returns Some(c) exactly when c > 0, i.e. when the condition holds for
/// these spectral values. A positive c from a sampled upper bound on
/// sigma_sub_min is not a certificate; check the method flag.
pub fn convergence_rate(
    sigma_max: f64,
    sigma_sub_min: f64,
    q: f64,
    beta: f64,
    m: usize,
) -> Result<Option<f64>> {
    check_domain(q, beta)?;
    if !(sigma_max >= 0.0 && sigma_sub_min >= 0.0) {
        return Err(Error::InvalidConfig("singular values must be nonnegative".into()));
    }
    let mf = m as f64;
    let gap = 1.0 - q - beta;
    let penalty = sigma_max * sigma_max / (q * mf) * (2.0 * beta.sqrt() / gap.sqrt() + beta / gap);
    let gain = (q - beta) * sigma_sub_min * sigma_sub_min / (q * q * mf);
    let c = gain - penalty;
    Ok(if c > 0.0 { Some(c) } else { None })
}

/// Spectral picture of one matrix at parameters (q, beta).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSummary {
    pub sigma_max: f64,
    /// Estimate of the subset-restricted minimal singular value at subset
    /// size `subset_size`.
    pub sigma_sub_min: f64,
    pub sigma_sub_min_method: SubsetEstimate,
    /// floor(q m) - ceil(beta m), the guaranteed size of the uncorrupted part
    /// of the admissible set.
    pub subset_size: usize,
    /// Largest singular value over subsets of size ceil(beta m); None when
    /// the corruption budget is zero.
    pub sigma_beta_max: Option<f64>,
    pub condition_lhs: f64,
    /// sigma_sub_min^2 / sigma_max^2.
    pub condition_rhs: f64,
    /// Present iff the condition holds for these values.
    pub rate_c: Option<f64>,
}

/// Subset size for the sub-minimal singular value: floor(q m) - ceil(beta m).
pub fn subset_size(m: usize, q: f64, beta: f64) -> usize {
    quantile_count(m, q).saturating_sub(crate::corruption::support_count(m, beta))
}

/// Compute a [`SpectralSummary`] for `a` at `(q, beta)` with the given subset
/// method (applied to sigma_sub_min; sigma_beta_max uses the same method,
/// falling back to sampling when exact enumeration would blow the cap).
pub fn spectral_summary(
    a: &Matrix,
    q: f64,
    beta: f64,
    method: SubsetMethod,
) -> Result<SpectralSummary> {
    check_domain(q, beta)?;
    let m = a.nrows();
    let smax = sigma_max(a, DEFAULT_SPECTRAL_TOL)?;
    let s = subset_size(m, q, beta);
    if s == 0 {
        return Err(Error::BadSubsetSize { s, m });
    }
    let (ssub, _, flag) = sigma_subset_extremal(a, s, SubsetMode::Min, method)?;

    let beta_count = crate::corruption::support_count(m, beta);
    let sigma_beta_max = if beta_count == 0 {
        None
    } else {
        let beta_method = match method {
            SubsetMethod::Exact
                if binomial_capped(m as u64, beta_count as u64, EXACT_SUBSET_CAP).is_none() =>
            {
                SubsetMethod::Sampled { trials: 200, seed: 0 }
            }
            SubsetMethod::Greedy { directions, seed } => {
                SubsetMethod::Sampled { trials: directions, seed }
            }
            other => other,
        };
        Some(sigma_subset_extremal(a, beta_count, SubsetMode::Max, beta_method)?.0)
    };

    let lhs = condition_lhs(q, beta)?;
    let rhs = if smax > 0.0 { ssub * ssub / (smax * smax) } else { 0.0 };
    let rate_c = convergence_rate(smax, ssub, q, beta, m)?;
    let summary = SpectralSummary {
        sigma_max: smax,
        sigma_sub_min: ssub,
        sigma_sub_min_method: flag,
        subset_size: s,
        sigma_beta_max,
        condition_lhs: lhs,
        condition_rhs: rhs,
        rate_c,
    };
    debug_assert!(summary.sigma_sub_min <= summary.sigma_max + 1e-9);
    Ok(summary)
}

// ---------------------------------------------------------------------------
// Truncated-Gaussian heuristic
// ---------------------------------------------------------------------------

/// The heuristic triple at a given Gaussian mass (= q - beta).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicResult {
    pub mass: f64,
    /// Half-width alpha with P(|N(0,1)| <= alpha) = mass.
    pub alpha: f64,
    /// Second moment of N(0,1) truncated to [-alpha, alpha]:
    /// mass - 2 alpha phi(alpha).
    pub ratio: f64,
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// P(|N(0,1)| <= alpha) = erf(alpha / sqrt(2)).
pub fn centered_gaussian_mass(alpha: f64) -> f64 {
    libm::erf(alpha / std::f64::consts::SQRT_2)
}

/// Invert [`centered_gaussian_mass`]: the alpha with mass(alpha) = mass.
///
/// Bisection on the erf-based CDF; the bracket [0, 9] covers every
/// representable mass below 1.
pub fn heuristic_alpha(mass: f64) -> Result<f64> {
    if !(mass > 0.0 && mass < 1.0) {
        return Err(Error::MassOutOfRange(mass));
    }
    let (mut lo, mut hi) = (0.0f64, 9.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if centered_gaussian_mass(mid) < mass {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Truncated second moment (1/sqrt(2pi)) int_{-a}^{a} x^2 e^{-x^2/2} dx at the
/// alpha implied by `mass`; closed form mass - 2 alpha phi(alpha).
pub fn heuristic_ratio(mass: f64) -> Result<f64> {
    let alpha = heuristic_alpha(mass)?;
    Ok(mass - 2.0 * alpha * normal_pdf(alpha))
}

pub fn heuristic(mass: f64) -> Result<HeuristicResult> {
    let alpha = heuristic_alpha(mass)?;
    Ok(HeuristicResult { mass, alpha, ratio: mass - 2.0 * alpha * normal_pdf(alpha) })
}

/// Largest beta (to 1e-6) with condition_lhs(q, beta) < heuristic_ratio(q - beta),
/// i.e. the corruption budget certified by the heuristic for a tall Gaussian
/// matrix at quantile q. Returns 0 when no positive beta qualifies.
pub fn corollary_threshold(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::MassOutOfRange(q));
    }
    let holds = |beta: f64| -> bool {
        if beta <= 0.0 {
            return true;
        }
        match (condition_lhs(q, beta), heuristic_ratio(q - beta)) {
            (Ok(lhs), Ok(ratio)) => lhs < ratio,
            _ => false,
        }
    };
    let hi_cap = q.min(1.0 - q);
    if !holds(1e-12) {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (1e-12, hi_cap);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corruption::generate_gaussian_system;

    #[test]
    fn binomial_values() {
        assert_eq!(binomial_capped(14, 10, EXACT_SUBSET_CAP), Some(1001));
        assert_eq!(binomial_capped(12, 9, EXACT_SUBSET_CAP), Some(220));
        assert_eq!(binomial_capped(5, 0, EXACT_SUBSET_CAP), Some(1));
        assert_eq!(binomial_capped(100, 50, EXACT_SUBSET_CAP), None);
    }

    #[test]
    fn duplicate_rows_make_subset_singular() {
        let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]);
        let (v, w, flag) =
            sigma_subset_extremal(&a, 2, SubsetMode::Min, SubsetMethod::Exact).unwrap();
        assert!(v.abs() < 1e-9);
        assert_eq!(w, vec![0, 2]);
        assert_eq!(flag, SubsetEstimate::Exact);
    }

    #[test]
    fn single_subset_is_whole_matrix() {
        let a = Matrix::identity(3);
        let (v, w, _) = sigma_subset_extremal(&a, 3, SubsetMode::Min, SubsetMethod::Exact).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
        assert_eq!(w, vec![0, 1, 2]);
    }

    #[test]
    fn sampled_and_greedy_upper_bound_exact_min() {
        let sys = generate_gaussian_system(14, 2, 17).unwrap();
        let a = sys.a.matrix();
        let (exact, _, _) =
            sigma_subset_extremal(a, 10, SubsetMode::Min, SubsetMethod::Exact).unwrap();
        let (sampled, _, flag_s) = sigma_subset_extremal(
            a,
            10,
            SubsetMode::Min,
            SubsetMethod::Sampled { trials: 200, seed: 1 },
        )
        .unwrap();
        let (greedy, _, flag_g) = sigma_subset_extremal(
            a,
            10,
            SubsetMode::Min,
            SubsetMethod::Greedy { directions: 200, seed: 1 },
        )
        .unwrap();
        assert!(exact <= sampled + 1e-9, "exact {exact} sampled {sampled}");
        assert!(exact <= greedy + 1e-9, "exact {exact} greedy {greedy}");
        assert_eq!(flag_s, SubsetEstimate::SampledUpperBound);
        assert_eq!(flag_g, SubsetEstimate::GreedyDirectionUpperBound);
    }

    #[test]
    fn sampled_max_lower_bounds_exact() {
        let sys = generate_gaussian_system(12, 2, 19).unwrap();
        let a = sys.a.matrix();
        let (exact, _, _) =
            sigma_subset_extremal(a, 4, SubsetMode::Max, SubsetMethod::Exact).unwrap();
        let (sampled, _, flag) = sigma_subset_extremal(
            a,
            4,
            SubsetMode::Max,
            SubsetMethod::Sampled { trials: 50, seed: 2 },
        )
        .unwrap();
        assert!(sampled <= exact + 1e-9);
        assert_eq!(flag, SubsetEstimate::SampledLowerBound);
    }

    #[test]
    fn exact_min_is_monotone_in_subset_size() {
        let sys = generate_gaussian_system(10, 2, 23).unwrap();
        let a = sys.a.matrix();
        let mut prev = -1.0;
        for s in 1..=10 {
            let (v, _, _) =
                sigma_subset_extremal(a, s, SubsetMode::Min, SubsetMethod::Exact).unwrap();
            assert!(v >= prev - 1e-10, "s = {s}: {v} < {prev}");
            prev = v;
        }
    }

    #[test]
    fn pool_restriction_excludes_rows() {
        // duplicate rows 0 and 2 make {0,2} singular; removing row 2 from the
        // pool lifts the restricted minimum above zero
        let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]);
        let (all, _, _) =
            sigma_subset_extremal(&a, 2, SubsetMode::Min, SubsetMethod::Exact).unwrap();
        assert!(all.abs() < 1e-9);
        let (restricted, w, _) = sigma_subset_extremal_restricted(
            &a,
            &[0, 1],
            2,
            SubsetMode::Min,
            SubsetMethod::Exact,
        )
        .unwrap();
        assert!((restricted - 1.0).abs() < 1e-9);
        assert_eq!(w, vec![0, 1]);
    }

    #[test]
    fn cap_refuses_huge_enumerations() {
        let sys = generate_gaussian_system(60, 2, 29).unwrap();
        assert!(matches!(
            sigma_subset_extremal(sys.a.matrix(), 30, SubsetMode::Min, SubsetMethod::Exact),
            Err(Error::TooManySubsets { .. })
        ));
    }

    #[test]
    fn bad_subset_sizes_rejected() {
        let a = Matrix::identity(3);
        assert!(matches!(
            sigma_subset_extremal(&a, 0, SubsetMode::Min, SubsetMethod::Exact),
            Err(Error::BadSubsetSize { .. })
        ));
        assert!(matches!(
            sigma_subset_extremal(&a, 4, SubsetMode::Min, SubsetMethod::Exact),
            Err(Error::BadSubsetSize { .. })
        ));
    }

    #[test]
    fn condition_lhs_values() {
        assert_eq!(condition_lhs(0.5, 0.0).unwrap(), 0.0);
        let v = condition_lhs(0.88, 0.0056).unwrap();
        assert!((v - 0.494_596_157_915_585).abs() < 1e-12, "lhs = {v}");
        // q + beta = 1 is outside the domain
        assert!(matches!(condition_lhs(0.5, 0.5), Err(Error::ParameterDomain { .. })));
        assert!(matches!(condition_lhs(0.1, 0.2), Err(Error::ParameterDomain { .. })));
        // above 1: the condition can never hold there
        let big = condition_lhs(0.75, 0.0625).unwrap();
        assert!((big - 1.623_309_678_231_91).abs() < 1e-12, "lhs = {big}");
    }

    #[test]
    fn rate_collapses_at_beta_zero() {
        let c = convergence_rate(2.0, 1.5, 0.8, 0.0, 100).unwrap().unwrap();
        assert!((c - 1.5 * 1.5 / (0.8 * 100.0)).abs() < 1e-15);
    }

    #[test]
    fn rate_absent_when_sub_min_zero() {
        assert_eq!(convergence_rate(2.0, 0.0, 0.8, 0.1, 100).unwrap(), None);
    }

    #[test]
    fn rate_presence_matches_condition() {
        let mut rng = stream_rng(31, StreamPurpose::SpectralSubsets, 0);
        use rand::Rng;
        for _ in 0..500 {
            let q: f64 = rng.random_range(0.05..0.95);
            let beta: f64 = rng.random_range(0.0..q.min(1.0 - q));
            if q + beta >= 1.0 || beta >= q {
                continue;
            }
            let smax: f64 = rng.random_range(0.5..4.0);
            let ssub: f64 = rng.random_range(0.0..smax);
            let m = rng.random_range(5..200);
            let lhs = condition_lhs(q, beta).unwrap();
            let rhs = ssub * ssub / (smax * smax);
            let rate = convergence_rate(smax, ssub, q, beta, m).unwrap();
            let margin = (lhs - rhs).abs();
            if margin < 1e-12 {
                continue; // too close to call either way in floating point
            }
            assert_eq!(rate.is_some(), lhs < rhs, "q={q} beta={beta}");
        }
    }

    #[test]
    fn identity_restricted_to_fewer_rows_than_columns_gives_no_rate() {
        // I4 at q = 0.75, beta = 0: subsets of 3 rows of I4 have a kernel
        let a = Matrix::identity(4);
        let summary = spectral_summary(&a, 0.75, 0.0, SubsetMethod::Exact).unwrap();
        assert_eq!(summary.subset_size, 3);
        assert!(summary.sigma_sub_min.abs() < 1e-9);
        assert_eq!(summary.rate_c, None);
    }

    #[test]
    fn summary_respects_trivial_inequality() {
        for seed in 0..5 {
            let sys = generate_gaussian_system(14, 2, 400 + seed).unwrap();
            let s = spectral_summary(sys.a.matrix(), 0.8, 0.1, SubsetMethod::Exact).unwrap();
            assert!(s.sigma_sub_min <= s.sigma_max + 1e-9);
            assert!((s.condition_rhs - s.sigma_sub_min.powi(2) / s.sigma_max.powi(2)).abs() < 1e-12);
            assert!(s.sigma_beta_max.is_some());
        }
    }

    #[test]
    fn alpha_matches_known_masses() {
        // one-sigma mass
        let a = heuristic_alpha(0.682_689_492_137_086).unwrap();
        assert!((a - 1.0).abs() < 1e-9, "alpha = {a}");
        let a = heuristic_alpha(0.6827).unwrap();
        assert!((a - 1.000_021_713_322_999).abs() < 1e-9);
        let a = heuristic_alpha(0.8744).unwrap();
        assert!((a - 1.531_685_752_122_543).abs() < 1e-9);
        // round trip at extreme masses
        for mass in [1e-9, 1e-4, 0.5, 0.99, 1.0 - 1e-9] {
            let al = heuristic_alpha(mass).unwrap();
            assert!((centered_gaussian_mass(al) - mass).abs() < 1e-12);
        }
        assert!(matches!(heuristic_alpha(0.0), Err(Error::MassOutOfRange(_))));
        assert!(matches!(heuristic_alpha(1.0), Err(Error::MassOutOfRange(_))));
    }

    #[test]
    fn ratio_limits_and_values() {
        let r = heuristic_ratio(0.8744).unwrap();
        assert!((r - 0.496_245_730_643_405).abs() < 1e-9, "ratio = {r}");
        // mass -> 1: full second moment; mass -> 0: vanishes
        assert!((heuristic_ratio(1.0 - 1e-12).unwrap() - 1.0).abs() < 1e-9);
        assert!(heuristic_ratio(1e-12).unwrap() < 1e-9);
        // monotone increasing in mass
        let mut prev = 0.0;
        for i in 1..100 {
            let r = heuristic_ratio(i as f64 / 100.0).unwrap();
            assert!(r > prev);
            prev = r;
        }
    }

    #[test]
    fn corollary_threshold_reference_value() {
        let b = corollary_threshold(0.88).unwrap();
        assert!((0.0054..=0.0058).contains(&b), "beta* = {b}");
        assert!((b - 0.005_630_659_360_123).abs() < 1e-6);
    }

    #[test]
    fn corollary_threshold_vanishes_near_extreme_q() {
        let b = corollary_threshold(0.999_999).unwrap();
        assert!(b < 1e-5, "beta* = {b}");
    }

    #[test]
    fn condition_sides_are_monotone_in_beta() {
        // grid scan: lhs increasing, ratio(q - beta) decreasing
        let q: f64 = 0.88;
        let mut prev_lhs = -1.0;
        let mut prev_ratio = 2.0;
        for i in 0..1000 {
            let beta = i as f64 * (q.min(1.0 - q) - 1e-6) / 1000.0;
            let lhs = condition_lhs(q, beta).unwrap();
            let ratio = heuristic_ratio(q - beta).unwrap();
            assert!(lhs >= prev_lhs);
            assert!(ratio <= prev_ratio);
            prev_lhs = lhs;
            prev_ratio = ratio;
        }
    }
}
