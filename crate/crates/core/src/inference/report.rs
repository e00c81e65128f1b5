use super::chi::{decompose, exact_truncation, sa_truncation};
use super::ftest::{truncated_f_p_value, unknown_variance_statistic, unknown_variance_truncation, Interval, ReferenceBlock};
use super::{naive_p_value, selective_p_value};
use crate::block::{BlockStructure, DataVector};
use crate::estimate::CoolingSchedule;
use crate::specfun::{f_sf, SeededRng};
use crate::{Error, Result};

/// How the selection boundary is searched.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    Exact,
    Anneal(CoolingSchedule),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnownVarianceReport {
    pub t: f64,
    pub dof: usize,
    pub beta: f64,
    pub g_tilde: Option<BlockStructure>,
    pub p_selective: f64,
    pub p_naive: f64,
    /// `E^(g_hat) x = 0`; both p-values are reported as 1.
    pub degenerate: bool,
}

/// Truncated-chi test of `g_hat` with known `sigma0`.
pub fn known_variance_test(
    x: &DataVector,
    g_hat: &BlockStructure,
    k: usize,
    h: usize,
    sigma0: f64,
    truncation: &Truncation,
    rng: &mut SeededRng,
) -> Result<KnownVarianceReport> {
    let dof = x.len().saturating_sub(g_hat.occupied_blocks());
    let decomp = match decompose(x, g_hat, sigma0) {
        Ok(d) => d,
        Err(Error::DegenerateResidual) => {
            return Ok(KnownVarianceReport {
                t: 0.0,
                dof,
                beta: f64::INFINITY,
                g_tilde: None,
                p_selective: 1.0,
                p_naive: 1.0,
                degenerate: true,
            })
        }
        Err(e) => return Err(e),
    };
    let trunc = match truncation {
        Truncation::Exact => exact_truncation(&decomp, g_hat, k, h)?,
        Truncation::Anneal(schedule) => sa_truncation(&decomp, g_hat, k, h, schedule, rng)?,
    };
    Ok(KnownVarianceReport {
        t: decomp.t,
        dof: decomp.dof,
        beta: trunc.beta,
        g_tilde: trunc.g_tilde,
        p_selective: selective_p_value(decomp.t, decomp.dof, trunc.beta)?,
        p_naive: naive_p_value(decomp.t, decomp.dof)?,
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnknownVarianceReport {
    pub t_f: f64,
    pub d1: usize,
    pub d2: usize,
    pub block: (usize, usize),
    /// Selection set in the scale of `t_f`.
    pub intervals: Vec<Interval>,
    pub p_selective: f64,
    pub p_naive: f64,
    /// The reference block is exactly constant; p-values are reported as 1.
    pub degenerate: bool,
}

/// Truncated-F test of `g_hat` with unknown variance.
///
/// `c_f^2 T_F` is F-distributed with `(d2, d1)` degrees of freedom under the
/// null, so p-values are computed on that scale.
pub fn unknown_variance_test(
    x: &DataVector,
    g_hat: &BlockStructure,
    k: usize,
    h: usize,
    reference: ReferenceBlock,
) -> Result<UnknownVarianceReport> {
    let pieces = match unknown_variance_statistic(x, g_hat, reference) {
        Ok(p) => p,
        Err(Error::DegenerateResidual) => {
            let size = g_hat.row_sizes()[g_hat.row_labels()[0] - 1] * g_hat.col_sizes()[g_hat.col_labels()[0] - 1];
            let d1 = size.saturating_sub(1);
            let d2 = (x.len() - g_hat.occupied_blocks()).saturating_sub(d1);
            return Ok(UnknownVarianceReport {
                t_f: 0.0,
                d1,
                d2,
                block: (g_hat.row_labels()[0], g_hat.col_labels()[0]),
                intervals: vec![Interval { lo: 0.0, hi: f64::INFINITY }],
                p_selective: 1.0,
                p_naive: 1.0,
                degenerate: true,
            });
        }
        Err(e) => return Err(e),
    };
    let intervals = unknown_variance_truncation(&pieces, g_hat, k, h)?;
    let s = pieces.law_scale();
    let scaled: Vec<Interval> = intervals.iter().map(|iv| Interval { lo: s * iv.lo, hi: s * iv.hi }).collect();
    let stat = s * pieces.t_f;
    Ok(UnknownVarianceReport {
        t_f: pieces.t_f,
        d1: pieces.d1,
        d2: pieces.d2,
        block: pieces.block,
        p_selective: truncated_f_p_value(stat, pieces.d2, pieces.d1, &scaled)?,
        p_naive: f_sf(pieces.d2, pieces.d1, stat)?,
        intervals,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::exact_minimizer;

    #[test]
    fn degenerate_known_variance() {
        let g = BlockStructure::new(&[1, 2], &[1, 2], 2, 2).unwrap();
        let x = DataVector::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let rep = known_variance_test(&x, &g, 2, 2, 1.0, &Truncation::Exact, &mut SeededRng::new(0)).unwrap();
        assert!(rep.degenerate);
        assert_eq!((rep.p_selective, rep.p_naive), (1.0, 1.0));
    }

    #[test]
    fn known_variance_ordering() {
        let mut rng = SeededRng::new(1);
        for _ in 0..10 {
            let x = DataVector::new(4, 4, (0..16).map(|_| rng.standard_normal()).collect()).unwrap();
            let g = exact_minimizer(&x, 2, 2).unwrap().g_hat;
            let rep = known_variance_test(&x, &g, 2, 2, 1.0, &Truncation::Exact, &mut SeededRng::new(0)).unwrap();
            assert!(rep.beta >= rep.t);
            assert!(0.0 < rep.p_selective && rep.p_selective <= rep.p_naive && rep.p_naive <= 1.0);
        }
    }

    #[test]
    fn unknown_variance_report_is_consistent() {
        let mut rng = SeededRng::new(2);
        let x = DataVector::new(5, 5, (0..25).map(|_| rng.standard_normal()).collect()).unwrap();
        let g = exact_minimizer(&x, 2, 2).unwrap().g_hat;
        let rep = unknown_variance_test(&x, &g, 2, 2, ReferenceBlock::Largest).unwrap();
        assert!(rep.intervals.iter().any(|iv| iv.contains(rep.t_f)));
        assert!((0.0..=1.0).contains(&rep.p_selective));
        assert!((0.0..=1.0).contains(&rep.p_naive));
    }
}
