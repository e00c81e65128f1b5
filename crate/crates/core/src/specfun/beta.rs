use super::gamma::ln_gamma;
use super::{MAX_ITER, TINY};
use crate::{Error, Result};

/// `(I_x(a, b), 1 - I_x(a, b))` with `y = 1 - x` supplied by the caller so
/// that neither side loses precision near the endpoints.
fn beta_pair(a: f64, b: f64, x: f64, y: f64) -> Result<(f64, f64)> {
    if !(a > 0.0) || !(b > 0.0) || !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!(
            "incomplete beta needs a, b > 0 and x in [0, 1] (a={a}, b={b}, x={x})"
        )));
    }
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    if y == 0.0 {
        return Ok((1.0, 0.0));
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * y.ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        let i = (ln_front.exp() * continued_fraction(a, b, x)? / a).min(1.0);
        Ok((i, 1.0 - i))
    } else {
        let j = (ln_front.exp() * continued_fraction(b, a, y)? / b).min(1.0);
        Ok((1.0 - j, j))
    }
}

fn continued_fraction(a: f64, b: f64, x: f64) -> Result<f64> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < f64::EPSILON {
            return Ok(h);
        }
    }
    Err(Error::Convergence("incomplete beta continued fraction"))
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    beta_pair(a, b, x, 1.0 - x).map(|(i, _)| i)
}

/// `(I_x(a, b), 1 - I_x(a, b))`.
pub fn reg_inc_beta_pair(a: f64, b: f64, x: f64) -> Result<(f64, f64)> {
    beta_pair(a, b, x, 1.0 - x)
}

fn check_f(d1: usize, d2: usize) -> Result<()> {
    if d1 == 0 || d2 == 0 {
        return Err(Error::Domain("F degrees of freedom must be >= 1".into()));
    }
    Ok(())
}

fn f_pair(d1: usize, d2: usize, x: f64) -> Result<(f64, f64)> {
    check_f(d1, d2)?;
    if x <= 0.0 || x.is_nan() {
        return Ok((0.0, 1.0));
    }
    if x == f64::INFINITY {
        return Ok((1.0, 0.0));
    }
    let (a, b) = (d1 as f64, d2 as f64);
    let denom = a * x + b;
    beta_pair(a / 2.0, b / 2.0, a * x / denom, b / denom)
}

/// CDF of the F distribution with `(d1, d2)` degrees of freedom.
pub fn f_cdf(d1: usize, d2: usize, x: f64) -> Result<f64> {
    f_pair(d1, d2, x).map(|(c, _)| c)
}

/// Survival function of the F distribution.
pub fn f_sf(d1: usize, d2: usize, x: f64) -> Result<f64> {
    f_pair(d1, d2, x).map(|(_, s)| s)
}

/// The `x` with `f_sf(d1, d2, x) = tail`, by bisection on a log scale.
pub fn f_upper_quantile(d1: usize, d2: usize, tail: f64) -> Result<f64> {
    check_f(d1, d2)?;
    if !(tail > 0.0 && tail < 1.0) {
        return Err(Error::Domain(format!("tail probability {tail} not in (0, 1)")));
    }
    let (a, b) = (d1 as f64, d2 as f64);
    // sf(x) = I_y(d2/2, d1/2) with y = d2 / (d1 x + d2), increasing in y
    let (mut lo, mut hi) = (-740.0f64, 0.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let y = mid.exp();
        let (s, _) = beta_pair(b / 2.0, a / 2.0, y, -mid.exp_m1())?;
        if s < tail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let y = (0.5 * (lo + hi)).exp();
    Ok(b * (1.0 - y) / (a * y))
}
