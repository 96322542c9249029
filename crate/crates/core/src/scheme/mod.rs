//! Iterative partial diagonalization of the quasiperiodic operator by
//! products of perturbative plane rotations.
//!
//! The layout mirrors the structure of a run:
//! - [`magnitude`]: the order-pricing ladder and the absorption inequality
//!   that trades small denominators against combinatorial slack;
//! - [`rotation`]: the exact 2x2 block rotation under diagonal dominance;
//! - [`state`]: per-step planning (resonance centers, lexicographic offset
//!   order, ambient clipping), application, stopping rules, and the
//!   extraction of the tracked eigenpair;
//! - [`monitors`]: report-only checks of the inductive bookkeeping (entry
//!   orders, diagonal drift, approximate monotonicity, exact supports).

pub mod magnitude;
pub mod monitors;
pub mod rotation;
pub mod state;

pub use monitors::OrderLedger;
