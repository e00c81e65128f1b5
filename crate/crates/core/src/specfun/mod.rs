//! Special functions and statistics utilities.
//!
//! Everything here is implemented locally (power series plus modified Lentz
//! continued fractions) so results are bit-stable across platforms.

mod beta;
mod gamma;
mod ks;
mod rng;

pub use beta::{f_cdf, f_sf, f_upper_quantile, reg_inc_beta, reg_inc_beta_pair};
pub use gamma::{chi_cdf, chi_sf, ln_gamma, ln_reg_lower_gamma, reg_lower_gamma, reg_upper_gamma};
pub use ks::ks_uniform_statistic;
pub use rng::{gaussian_sample, SeededRng};

pub(crate) const MAX_ITER: usize = 500;
pub(crate) const TINY: f64 = 1e-300;
