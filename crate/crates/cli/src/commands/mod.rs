//! The three subcommands. Each one computes, writes its data products, and
//! finishes with the manifest; the manifest's `all_pass` mirrors the exit
//! code.

pub mod diagonalize;
pub mod spectrum;
pub mod verify;
