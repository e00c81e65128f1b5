use crate::{Error, Result};

/// Scaled Kolmogorov-Smirnov distance `D sqrt(r)` between the empirical CDF
/// of `p_values` and the uniform CDF on `[0, 1]`.
pub fn ks_uniform_statistic(p_values: &[f64]) -> Result<f64> {
    if p_values.is_empty() {
        return Err(Error::Empty("KS statistic needs at least one value"));
    }
    let mut sorted = p_values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let r = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let above = (i + 1) as f64 / r - p;
            let below = p - i as f64 / r;
            above.abs().max(below.abs())
        })
        .fold(0.0, f64::max);
    Ok(d * r.sqrt())
}
