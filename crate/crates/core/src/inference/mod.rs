//! Selective tests of a selected block structure.
//!
//! With known variance the statistic `T = ||E x|| / sigma0` follows a chi law
//! truncated to `[0, beta]`. With unknown variance a ratio of within-block
//! residuals follows a truncated F law. Both tests condition on the data
//! directions, so the truncation set is one-dimensional.

mod chi;
mod ftest;
mod report;

pub use chi::{
    decompose, exact_truncation, sa_truncation, truncation_coeffs, Decomposition, QuadCoeffs, TruncationResult,
};
pub use ftest::{
    selection_intervals, truncated_f_p_value, unknown_variance_statistic, unknown_variance_truncation,
    FTestPieces, Interval, ReferenceBlock,
};
pub use report::{known_variance_test, unknown_variance_test, KnownVarianceReport, Truncation, UnknownVarianceReport};

use crate::specfun::{chi_sf, ln_reg_lower_gamma, reg_lower_gamma, reg_upper_gamma};
use crate::{Error, Result};

fn check_dof(dof: usize) -> Result<()> {
    if dof < 1 {
        return Err(Error::Domain("degrees of freedom must be at least 1".into()));
    }
    Ok(())
}

fn check_statistic(t: f64) -> Result<()> {
    if !(t >= 0.0) || t.is_infinite() {
        return Err(Error::Domain(format!("statistic must be finite and non-negative, got {t}")));
    }
    Ok(())
}

/// `1 - P(dof/2, T^2/2) / P(dof/2, beta^2/2)`, the chi survival function
/// truncated to `[0, beta]`; `0` when `T > beta`.
pub fn selective_p_value(t: f64, dof: usize, beta: f64) -> Result<f64> {
    check_dof(dof)?;
    check_statistic(t)?;
    if beta.is_nan() || beta < 0.0 {
        return Err(Error::Domain(format!("truncation bound must be non-negative, got {beta}")));
    }
    if beta.is_infinite() {
        return chi_sf(dof, t);
    }
    if t >= beta {
        return Ok(0.0);
    }
    let a = dof as f64 / 2.0;
    let (xt, xb) = (t * t / 2.0, beta * beta / 2.0);
    let pb = reg_lower_gamma(a, xb)?;
    let p = if pb > 0.5 {
        // Upper tail: difference of survival values avoids cancellation.
        let (qt, qb) = (reg_upper_gamma(a, xt)?, reg_upper_gamma(a, xb)?);
        (qt - qb) / pb
    } else if pb > 1e-280 {
        (pb - reg_lower_gamma(a, xt)?) / pb
    } else {
        -(ln_reg_lower_gamma(a, xt)? - ln_reg_lower_gamma(a, xb)?).exp_m1()
    };
    Ok(p.clamp(0.0, 1.0))
}

/// `1 - P(dof/2, T^2/2)`, ignoring selection.
pub fn naive_p_value(t: f64, dof: usize) -> Result<f64> {
    check_dof(dof)?;
    check_statistic(t)?;
    chi_sf(dof, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64, depth: u32) -> f64 {
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), eps, depth)
    }

    #[test]
    fn endpoints() {
        assert_eq!(selective_p_value(0.0, 3, 2.0).unwrap(), 1.0);
        assert_eq!(selective_p_value(2.0, 3, 2.0).unwrap(), 0.0);
        assert_eq!(selective_p_value(2.5, 3, 2.0).unwrap(), 0.0);
        assert_eq!(naive_p_value(0.0, 4).unwrap(), 1.0);
        assert!(selective_p_value(1.0, 0, 2.0).is_err());
        assert!(naive_p_value(-1.0, 2).is_err());
    }

    #[test]
    fn unbounded_equals_naive() {
        for &(t, dof) in &[(0.3, 1), (1.7, 5), (4.0, 12)] {
            assert_eq!(selective_p_value(t, dof, f64::INFINITY).unwrap(), naive_p_value(t, dof).unwrap());
        }
    }

    #[test]
    fn two_dof_closed_forms() {
        let e = |v: f64| (-v).exp();
        let expected = (e(0.5) - e(2.0)) / (1.0 - e(2.0));
        let got = selective_p_value(1.0, 2, 2.0).unwrap();
        assert!((got - expected).abs() < 1e-14);
        assert!((got - 0.5449).abs() < 1e-4);
        assert!((naive_p_value(1.0, 2).unwrap() - e(0.5)).abs() < 1e-14);
    }

    #[test]
    fn two_dof_quadrature_oracle() {
        // chi(2) density t exp(-t^2/2) on [T, beta] over [0, beta].
        let density = |t: f64| t * (-t * t / 2.0).exp();
        let num = simpson(&density, 1.0, 2.0, 1e-14, 40);
        let den = simpson(&density, 0.0, 2.0, 1e-14, 40);
        assert!((selective_p_value(1.0, 2, 2.0).unwrap() - num / den).abs() < 1e-10);
    }

    #[test]
    fn naive_dominates_selective() {
        for dof in [1, 3, 10, 40] {
            for &beta in &[0.5, 2.0, 7.0, 30.0] {
                for i in 0..20 {
                    let t = beta * i as f64 / 20.0;
                    let s = selective_p_value(t, dof, beta).unwrap();
                    let n = naive_p_value(t, dof).unwrap();
                    assert!((0.0..=1.0).contains(&s));
                    assert!(s <= n + 1e-15, "dof={dof} beta={beta} t={t}");
                }
            }
        }
    }

    #[test]
    fn tiny_bounds_stay_finite() {
        // P(dof/2, beta^2/2) underflows here; the ratio still resolves.
        let p = selective_p_value(1e-3, 400, 2e-3).unwrap();
        let expected = 1.0 - 0.5f64.powi(400);
        assert!((p - expected).abs() < 1e-9, "{p}");
        let mid = selective_p_value(0.999e-3, 400, 1e-3).unwrap();
        assert!(mid > 0.3 && mid < 0.4, "{mid}");
    }

    #[test]
    fn upper_tail_precision() {
        // Far into the tail both P values round to 1; survival differences do not.
        let p = selective_p_value(12.0, 3, 12.5).unwrap();
        let density = |t: f64| t * t * (-t * t / 2.0).exp();
        let num = simpson(&density, 12.0, 12.5, 1e-40, 50);
        let den = simpson(&density, 0.0, 12.5, 1e-16, 50);
        assert!(((p - num / den) / (num / den)).abs() < 1e-6, "{p} vs {}", num / den);
    }
}
