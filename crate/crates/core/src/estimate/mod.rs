//! Estimators of the minimum squared residue structure `g_hat`.

mod alternating;
pub(crate) mod anneal;
mod exhaustive;
mod schedule;

use std::fmt;
use std::str::FromStr;

use crate::block::{BlockStructure, DataVector};
use crate::Error;

pub use alternating::{tan_witten_from, tan_witten_minimizer, AlternatingRun, MAX_PASSES};
pub use anneal::sa_minimizer;
pub use exhaustive::{exact_minimizer, exact_minimizer_sequential};
pub use schedule::{Cooling, CoolingSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Exact,
    Anneal,
    TanWitten,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Anneal => "sa",
            Method::TanWitten => "tanwitten",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "exact" => Ok(Method::Exact),
            "sa" => Ok(Method::Anneal),
            "tanwitten" => Ok(Method::TanWitten),
            other => Err(Error::Parse(format!("unknown estimator `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub g_hat: BlockStructure,
    /// `squared_residue(x, g_hat)`.
    pub residue: f64,
    /// Structures scanned, annealing iterations, or alternating passes.
    pub steps: u64,
    pub method: Method,
}

/// `||x||^2 - (1^T x)^2 / np`, the single-block objective. It bounds the
/// depth of every local minimum, so it is a valid constant for the
/// logarithmic schedule.
pub fn log_schedule_constant(x: &DataVector) -> f64 {
    let xs = x.as_slice();
    let sq: f64 = xs.iter().map(|v| v * v).sum();
    let total: f64 = xs.iter().sum();
    (sq - total * total / xs.len() as f64).max(0.0)
}

/// `||x||^2 - sum_kh S_kh^2 / count_kh` from raw (possibly non-canonical)
/// block sums. Empty blocks are skipped.
pub(crate) fn objective_from_sums(sq_norm: f64, sums: &[f64], row_sizes: &[usize], col_sizes: &[usize]) -> f64 {
    let h_count = col_sizes.len();
    let mut between = 0.0;
    for (k, &rk) in row_sizes.iter().enumerate() {
        if rk == 0 {
            continue;
        }
        for (h, &ch) in col_sizes.iter().enumerate() {
            if ch == 0 {
                continue;
            }
            let s = sums[k * h_count + h];
            between += s * s / (rk * ch) as f64;
        }
    }
    sq_norm - between
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::{squared_residue, BlockStructure};

    #[test]
    fn log_constant_examples() {
        let c = DataVector::new(2, 2, vec![3.0; 4]).unwrap();
        assert_eq!(log_schedule_constant(&c), 0.0);
        let x = DataVector::new(2, 1, vec![1.0, -1.0]).unwrap();
        assert_eq!(log_schedule_constant(&x), 2.0);
    }

    #[test]
    fn log_constant_is_single_block_objective() {
        let mut rng = crate::specfun::SeededRng::new(8);
        for _ in 0..10 {
            let v: Vec<f64> = (0..20).map(|_| rng.standard_normal()).collect();
            let x = DataVector::new(4, 5, v).unwrap();
            let g = BlockStructure::single_block(4, 5, 1, 1).unwrap();
            let expected = 20.0 * squared_residue(&x, &g).unwrap();
            assert!((log_schedule_constant(&x) - expected).abs() < 1e-10 * expected.max(1.0));
        }
    }

    #[test]
    fn method_round_trip() {
        for m in [Method::Exact, Method::Anneal, Method::TanWitten] {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("nope".parse::<Method>().is_err());
    }
}
