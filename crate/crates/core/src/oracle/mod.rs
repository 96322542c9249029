//! Independent verification layer: direct eigensolvers and spectrum-level
//! studies that never reuse the rotation-scheme code paths, so agreement
//! between the two routes is evidence rather than tautology.

pub mod branches;
pub mod eig;
pub mod spectrum;
pub mod tridiag;

pub use branches::{branch_distance_check, canonical_lambda, label_branches, BranchTable};
pub use eig::{dense_eig, dense_eig_mat, multiset_distance, EigDecomposition};
pub use spectrum::{
    eigenvalue_function, gap_detect, ids, rank_one_sweep, EigenvalueTable, Gap, RankOneTrace,
    SpectrumReport,
};
pub use tridiag::SymTridiag;
