//! Synthetic ground-truth systems and beta-sparse right-hand-side
//! corruptions.
//!
//! The ground truth `(A, x_true, b_true)` is kept alongside the observed
//! right-hand side so that experiments can measure the true error. Solvers
//! never look at it; see the blindness contract in [`crate::solvers`].

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::io::{
    parse_vector_line, read_matrix_block, write_matrix_block, write_vector_line, LineReader,
};
use crate::linalg::matrix::{dot, norm, Matrix, RowNormalizedMatrix, ZERO_ROW_TOL};
use crate::rng::{stream_rng, StreamPurpose};

/// How corrupted entries are produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorruptionModel {
    /// Add `scale * N(0,1)` on a uniformly random support. With `scale:
    /// None` the scale defaults to `10 * max_i |b_true[i]|`, large enough to
    /// be ruinous for an unguarded solver.
    RandomGaussian { scale: Option<f64> },
    /// Add a fixed offset on a uniformly random support.
    ConstantOffset { value: f64 },
    /// Negate the entry on a uniformly random support.
    SignFlip,
    /// Adversarial support: corrupt the rows best aligned with a random
    /// direction, i.e. a cluster of rows that capture similar information.
    /// Values are Gaussian at the default scale.
    AlignedCluster,
}

impl CorruptionModel {
    pub fn name(&self) -> &'static str {
        match self {
            CorruptionModel::RandomGaussian { .. } => "random-gaussian",
            CorruptionModel::ConstantOffset { .. } => "constant-offset",
            CorruptionModel::SignFlip => "sign-flip",
            CorruptionModel::AlignedCluster => "aligned-cluster",
        }
    }
}

/// A corruption request: fraction, model, and its own RNG seed.
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionSpec {
    pub beta: f64,
    pub model: CorruptionModel,
    pub seed: u64,
}

/// A linear system with known ground truth and a possibly corrupted observed
/// right-hand side.
///
/// Invariants (checked on construction and on load):
/// - `b_true = A x_true` entrywise within 1e-10;
/// - `b_observed[i] = b_true[i]` for every `i` not in `corrupt_set`;
/// - `corrupt_set` is sorted, unique, and no larger than ceil(beta * m).
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptedSystem {
    pub a: RowNormalizedMatrix,
    pub x_true: Vec<f64>,
    pub b_true: Vec<f64>,
    pub b_observed: Vec<f64>,
    /// Sorted indices of rows whose observed entry may differ from the truth.
    pub corrupt_set: Vec<usize>,
    /// The corruption fraction this system was built with.
    pub beta: f64,
}

/// ceil(beta * m) with a 1e-9 guard: decimal beta whose nearest double sits
/// just above the rational value (0.01 * 200 = 2.0000000000000004) must not
/// gain a slot.
pub fn support_count(m: usize, beta: f64) -> usize {
    if beta <= 0.0 {
        return 0;
    }
    (((beta * m as f64 - 1e-9).ceil().max(0.0)) as usize).min(m)
}

impl CorruptedSystem {
    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// The realized corruption fraction |C| / m, which is what the lemma
    /// bounds are checked against.
    pub fn constructed_beta(&self) -> f64 {
        self.corrupt_set.len() as f64 / self.m() as f64
    }

    pub fn is_corrupted(&self, i: usize) -> bool {
        self.corrupt_set.binary_search(&i).is_ok()
    }

    fn validate(&self) -> Result<()> {
        let m = self.m();
        let n = self.n();
        if self.x_true.len() != n || self.b_true.len() != m || self.b_observed.len() != m {
            return Err(Error::InvariantViolation("vector lengths disagree with A".into()));
        }
        for i in 0..m {
            let pred = dot(self.a.row(i), &self.x_true);
            if (pred - self.b_true[i]).abs() > 1e-10 {
                return Err(Error::InvariantViolation(format!(
                    "b_true[{i}] = {} but A x_true = {pred}",
                    self.b_true[i]
                )));
            }
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::InvariantViolation(format!("beta = {} outside [0, 1)", self.beta)));
        }
        if self.corrupt_set.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvariantViolation("corrupt_set must be sorted and unique".into()));
        }
        if self.corrupt_set.last().is_some_and(|&i| i >= m) {
            return Err(Error::InvariantViolation("corrupt index out of range".into()));
        }
        if self.corrupt_set.len() > support_count(m, self.beta) {
            return Err(Error::InvariantViolation(format!(
                "|C| = {} exceeds ceil(beta m) = {}",
                self.corrupt_set.len(),
                support_count(m, self.beta)
            )));
        }
        for i in 0..m {
            if !self.is_corrupted(i) && self.b_observed[i] != self.b_true[i] {
                return Err(Error::InvariantViolation(format!(
                    "b_observed[{i}] differs from b_true outside the corrupt set"
                )));
            }
        }
        Ok(())
    }
}

/// An uncorrupted system with rows uniform on the unit sphere and Gaussian
/// ground truth. Deterministic in `seed`; the matrix and x_true come from
/// separate substreams.
pub fn generate_gaussian_system(m: usize, n: usize, seed: u64) -> Result<CorruptedSystem> {
    if n == 0 || m < n {
        return Err(Error::BadDimensions { m, n });
    }
    let mut mat_rng = stream_rng(seed, StreamPurpose::Matrix, 0);
    let mut data = Vec::with_capacity(m * n);
    for _ in 0..m {
        loop {
            let row: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut mat_rng)).collect();
            let nrm = norm(&row);
            if nrm > ZERO_ROW_TOL {
                data.extend(row.iter().map(|v| v / nrm));
                break;
            }
        }
    }
    let a = RowNormalizedMatrix::new(Matrix::from_vec(m, n, data))?;

    let mut x_rng = stream_rng(seed, StreamPurpose::GroundTruth, 0);
    let x_true: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut x_rng)).collect();
    let b_true = a.matrix().matvec(&x_true);

    Ok(CorruptedSystem {
        a,
        b_observed: b_true.clone(),
        x_true,
        b_true,
        corrupt_set: Vec::new(),
        beta: 0.0,
    })
}

/// Apply a corruption to the observed right-hand side. The ground truth and
/// matrix are untouched; any previous corruption is overwritten.
pub fn corrupt(system: &CorruptedSystem, spec: &CorruptionSpec) -> Result<CorruptedSystem> {
    if !(0.0..1.0).contains(&spec.beta) {
        return Err(Error::BetaOutOfRange(spec.beta));
    }
    let m = system.m();
    let count = support_count(m, spec.beta);

    let mut out = system.clone();
    out.beta = spec.beta;
    out.b_observed = out.b_true.clone();
    out.corrupt_set.clear();
    if count == 0 {
        return Ok(out);
    }

    let mut support_rng = stream_rng(spec.seed, StreamPurpose::CorruptionSupport, 0);
    let mut support: Vec<usize> = match spec.model {
        CorruptionModel::AlignedCluster => {
            // rows most aligned with a random direction
            let n = system.n();
            let dir: Vec<f64> = loop {
                let d: Vec<f64> =
                    (0..n).map(|_| StandardNormal.sample(&mut support_rng)).collect();
                let nrm = norm(&d);
                if nrm > ZERO_ROW_TOL {
                    break d.iter().map(|v| v / nrm).collect();
                }
            };
            let mut scored: Vec<(f64, usize)> = (0..m)
                .map(|i| (dot(system.a.row(i), &dir).abs(), i))
                .collect();
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            scored[..count].iter().map(|&(_, i)| i).collect()
        }
        _ => {
            let mut all: Vec<usize> = (0..m).collect();
            all.shuffle(&mut support_rng);
            all.truncate(count);
            all
        }
    };
    support.sort_unstable();

    let mut value_rng = stream_rng(spec.seed, StreamPurpose::CorruptionValues, 0);
    let default_scale = {
        let b_inf = system.b_true.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if b_inf > 0.0 {
            10.0 * b_inf
        } else {
            10.0
        }
    };
    for &i in &support {
        out.b_observed[i] = match spec.model {
            CorruptionModel::RandomGaussian { scale } => {
                let s = scale.unwrap_or(default_scale);
                let g: f64 = StandardNormal.sample(&mut value_rng);
                out.b_true[i] + s * g
            }
            CorruptionModel::ConstantOffset { value } => out.b_true[i] + value,
            CorruptionModel::SignFlip => -out.b_true[i],
            CorruptionModel::AlignedCluster => {
                let g: f64 = StandardNormal.sample(&mut value_rng);
                out.b_true[i] + default_scale * g
            }
        };
    }
    out.corrupt_set = support;
    out.validate()?;
    Ok(out)
}

/// File layout:
///
/// ```text
/// m n beta
/// <m matrix rows>
/// <x_true>
/// <b_true>
/// <b_observed>
/// |C|
/// <sorted corrupt indices, omitted when |C| = 0>
/// ```
pub fn save_system(system: &CorruptedSystem, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{} {} {}", system.m(), system.n(), system.beta)?;
    write_matrix_block(&mut w, system.a.matrix())?;
    write_vector_line(&mut w, &system.x_true)?;
    write_vector_line(&mut w, &system.b_true)?;
    write_vector_line(&mut w, &system.b_observed)?;
    writeln!(w, "{}", system.corrupt_set.len())?;
    if !system.corrupt_set.is_empty() {
        let strs: Vec<String> = system.corrupt_set.iter().map(|i| i.to_string()).collect();
        writeln!(w, "{}", strs.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_system(path: &Path) -> Result<CorruptedSystem> {
    let reader = BufReader::new(File::open(path)?);
    load_system_from(reader)
}

pub fn load_system_from<R: BufRead>(reader: R) -> Result<CorruptedSystem> {
    let mut lr = LineReader::new(reader);
    let header = lr.expect_line("system header 'm n beta'")?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(lr.err("header must be 'm n beta'"));
    }
    let m: usize = parts[0].parse().map_err(|_| lr.err("bad row count"))?;
    let n: usize = parts[1].parse().map_err(|_| lr.err("bad column count"))?;
    let beta: f64 = parts[2].parse().map_err(|_| lr.err("bad beta"))?;
    if m == 0 || n == 0 {
        return Err(lr.err("system must be at least 1 x 1"));
    }
    let raw = read_matrix_block(&mut lr, m, n)?;
    let a = RowNormalizedMatrix::new(raw)?;
    let x_line = lr.expect_line("x_true")?;
    let x_true = parse_vector_line(&x_line, n, lr.line)?;
    let bt_line = lr.expect_line("b_true")?;
    let b_true = parse_vector_line(&bt_line, m, lr.line)?;
    let bo_line = lr.expect_line("b_observed")?;
    let b_observed = parse_vector_line(&bo_line, m, lr.line)?;
    let c_line = lr.expect_line("corrupt set size")?;
    let c: usize = c_line.trim().parse().map_err(|_| lr.err("bad corrupt set size"))?;
    let corrupt_set = if c > 0 {
        let idx_line = lr.expect_line("corrupt indices")?;
        let idx: Vec<usize> = idx_line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| lr.err(format!("bad index '{t}'"))))
            .collect::<Result<_>>()?;
        if idx.len() != c {
            return Err(lr.err(format!("expected {c} indices, found {}", idx.len())));
        }
        idx
    } else {
        Vec::new()
    };
    let system = CorruptedSystem { a, x_true, b_true, b_observed, corrupt_set, beta };
    system.validate()?;
    Ok(system)
}
