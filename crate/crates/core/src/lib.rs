//! Selective inference for Gaussian latent block models.
//!
//! A bicluster structure is estimated by minimizing the squared residue over
//! every row/column membership with at most `K x H` blocks. The statistic
//! `T = ||E x|| / sigma0` is then referred to a chi law truncated to the set of
//! `t` values for which the same structure would have been selected, which
//! yields a p-value that stays valid after selection.
//!
//! Modules:
//! - [`block`]: data layout, block sums and the implicit projector `E^(g)`.
//! - [`enumerate`]: canonical enumeration and counting of block structures.
//! - [`estimate`]: exhaustive, simulated annealing and alternating estimators.
//! - [`inference`]: decomposition, truncation and selective p-values.
//! - [`specfun`]: incomplete gamma/beta, chi/F laws, KS statistic, seeded RNG.
//! - [`harness`]: Monte-Carlo scenarios, CSV records and summaries.

pub mod block;
pub mod enumerate;
mod error;
pub mod estimate;
pub mod harness;
pub mod inference;
pub mod specfun;

pub use block::{BlockStructure, DataMatrix, DataVector};
pub use error::{Error, Result};
