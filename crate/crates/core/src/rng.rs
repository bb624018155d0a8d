//! Seeded, splittable random streams.
//!
//! Every randomized component draws from its own substream derived from a
//! single 64-bit master seed. The splitting rule is
//!
//! ```text
//! stream(master, purpose, index) = ChaCha8 seeded with
//!     mix(mix(master ^ PURPOSE_SALT * (purpose + 1)) ^ index * INDEX_SALT)
//! ```
//!
//! where `mix` is the SplitMix64 finalizer. One purpose per component means
//! changing, say, the corruption model never perturbs the generated matrix or
//! the solver's pick sequence.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PURPOSE_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
const INDEX_SALT: u64 = 0xd134_2543_de82_ef95;

/// What a substream is used for. Each variant owns one independent stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    /// Rows of a generated matrix.
    Matrix = 0,
    /// The ground-truth solution vector.
    GroundTruth = 1,
    /// Which right-hand-side entries get corrupted.
    CorruptionSupport = 2,
    /// The corrupted values themselves.
    CorruptionValues = 3,
    /// Row picks inside a solver run.
    SolverPicks = 4,
    /// Row subsampling for the sampled-quantile selector.
    SolverSampling = 5,
    /// Random subsets in sampled spectral estimation.
    SpectralSubsets = 6,
    /// Random directions in greedy spectral estimation.
    SpectralDirections = 7,
    /// Per-trial seed derivation in the experiment harness.
    Trial = 8,
    /// Per-method solver-seed derivation inside one trial.
    MethodSeed = 9,
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 64-bit seed of the substream `(master, purpose, index)`.
pub fn stream_seed(master: u64, purpose: StreamPurpose, index: u64) -> u64 {
    let salted = master ^ PURPOSE_SALT.wrapping_mul(purpose as u64 + 1);
    mix(mix(salted) ^ index.wrapping_mul(INDEX_SALT))
}

/// The substream itself. `index` distinguishes parallel uses of one purpose
/// (e.g. trial number); pass 0 when there is only one.
pub fn stream_rng(master: u64, purpose: StreamPurpose, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(master, purpose, index))
}
