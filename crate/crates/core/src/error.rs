//! Error types shared across the crate.
//!
//! Every failure mode that terminates a computation is a variant here;
//! diagnostic monitors that merely *report* unfavorable measurements return
//! report structs instead and never error.

use thiserror::Error;

/// Unified error type for model construction, region bookkeeping, the
/// diagonalization scheme and the spectral oracle.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Sampling data fails the monotonicity requirement on `[0, 1)`.
    #[error("monotonicity violation: f({x}) = {fx} but f({y}) = {fy} with {x} < {y}")]
    MonotonicityViolation { x: f64, y: f64, fx: f64, fy: f64 },

    /// `n . omega` is an exact integer for some lattice vector `n != 0`,
    /// so the orbit collides with itself and no resonance scale exists.
    #[error("resonant frequency: n . omega is an integer for n = {n:?}")]
    ResonantFrequency { n: Vec<i64> },

    /// Two rotation regions at the same step intersect; the block-orthogonal
    /// transform of that step is not well defined.
    #[error("region overlap at step {step}: centers {center_a:?} and {center_b:?}")]
    RegionOverlap {
        step: u32,
        center_a: Vec<i64>,
        center_b: Vec<i64>,
    },

    /// A 2x2 rotation was requested outside the diagonally dominant regime
    /// `|h| <= (1 - margin) * |b - a|`.
    #[error("dominance violation: a = {a}, b = {b}, h = {h}")]
    DominanceViolation { a: f64, b: f64, h: f64 },

    /// An absorption query with `k1 > k2` or `k1` below the resonance level
    /// of the queried lattice vector.
    #[error("invalid absorption query: k1 = {k1}, k2 = {k2}, level = {level}")]
    InvalidAbsorptionQuery { k1: u32, k2: u32, level: u32 },

    /// A hard tolerance was exceeded while strict checking was requested.
    #[error("tolerance breach at step {step}: measured {measured:.3e} > bound {bound:.3e}")]
    ToleranceBreach {
        step: u32,
        measured: f64,
        bound: f64,
    },

    /// An iterative solver failed to reach its target.
    #[error("no convergence: {what} (achieved {achieved:.3e}, target {target:.3e})")]
    NoConvergence {
        what: String,
        achieved: f64,
        target: f64,
    },

    /// Two multisets that must be compared element-by-element have different
    /// cardinalities.
    #[error("cardinality mismatch: {left} vs {right}")]
    CardinalityMismatch { left: usize, right: usize },

    /// The comparison domain for a branch check does not satisfy the
    /// containment or small-divisor conditions required for the comparison
    /// to be meaningful.
    #[error("domain condition violated: {reason}")]
    DomainConditionViolated { reason: String },

    /// An operation requiring a bounded sampling function was invoked with an
    /// unbounded one.
    #[error("sampling function is not of bounded (sawtooth) type")]
    NotSawtoothType,

    /// Malformed lattice box (duplicate sites, mixed dimensions, empty).
    #[error("invalid box: {0}")]
    InvalidBox(String),

    /// The ambient box is too small for the requested number of steps.
    #[error("ambient box radius {got} too small: need at least {needed}")]
    AmbientTooSmall { needed: i64, got: i64 },

    /// Any other invalid argument combination.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
