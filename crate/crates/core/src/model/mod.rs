//! Model layer: sampling functions, frequency vectors, lattice boxes and
//! assembly of the quasiperiodic operator on a finite box.

pub mod frequency;
pub mod lattice;
pub mod operator;
pub mod potential;
