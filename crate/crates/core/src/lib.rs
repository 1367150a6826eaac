//! Log-linear models of random permutations.

pub mod error;
pub mod perm;
pub mod rank;
pub mod subspaces;
pub mod decompose;
pub mod fit;
pub mod classic;
pub mod counts;

pub use error::{Error, Result};
