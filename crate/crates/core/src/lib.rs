//! Iterative block-Jacobi diagonalization of quasiperiodic lattice operators
//! with monotone sampling functions, together with a brute-force spectral
//! oracle used to cross-check every quantity the iteration produces.
//!
//! The crate is organized around four layers:
//!
//! * [`model`] — sampling functions on the circle, frequency vectors with a
//!   weak Diophantine check, finite lattice boxes, and assembly of the
//!   discrete operator `eps * Laplacian + diag(f(x + omega . n))`.
//! * [`regions`] — the shrinking torus-interval ladder, resonance levels, and
//!   the basic/extended lattice regions that carry the rotation blocks.
//! * [`scheme`] — the iteration itself: exact 2x2 rotations assembled into
//!   block-orthogonal transforms, one interval scale per step, with order and
//!   magnitude bookkeeping and convergence monitors.
//! * [`oracle`] — an independent dense/tridiagonal eigensolver and everything
//!   built on top of it: branch labeling, integrated density of states,
//!   spectral-gap detection and rank-one coupling sweeps.
//!
//! The scheme and the oracle never share numerical routes: the scheme output
//! is always checked against spectra obtained by plain matrix diagonalization.

pub mod circle;
pub mod error;
pub mod mat;
pub mod model;
pub mod oracle;
pub mod regions;
pub mod scheme;

pub use error::Error;
pub use model::frequency::Frequency;
pub use model::lattice::{LatticeBox, Site};
pub use model::operator::SymOperator;
pub use model::potential::PotentialSpec;
pub use regions::{RegionFamily, TorusInterval};
pub use scheme::state::{run_scheme, RunOutcome, SchemeParams, SchemeState};
pub use scheme::OrderLedger;

/// Golden-mean frequency `(sqrt(5) - 1) / 2`, the default one-dimensional
/// reference frequency for examples and acceptance runs.
pub const GOLDEN_MEAN: f64 = 0.618_033_988_749_894_9;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
