use serde::{Deserialize, Serialize};

use super::records::TrialRecord;
use crate::specfun::ks_uniform_statistic;
use crate::{Error, Result};

/// Rejection rates at one level. A rate is `None` when no trial falls in
/// its denominator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaRates {
    pub alpha: f64,
    pub fpr_selective: Option<f64>,
    pub fpr_naive: Option<f64>,
    pub tpr_selective: Option<f64>,
    pub tpr_naive: Option<f64>,
}

/// Aggregate metrics of a batch. Trials whose estimate matches the null
/// structure count as null trials, the rest as alternatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub trials: usize,
    pub null_trials: usize,
    pub alternative_trials: usize,
    pub degenerate_trials: usize,
    pub accuracy: f64,
    /// `D sqrt(r)` of the null-trial p-values against the uniform law.
    pub ks_selective: Option<f64>,
    pub ks_naive: Option<f64>,
    pub rates: Vec<AlphaRates>,
}

fn rate(ps: &[f64], alpha: f64) -> Option<f64> {
    (!ps.is_empty()).then(|| ps.iter().filter(|&&p| p <= alpha).count() as f64 / ps.len() as f64)
}

pub fn summarize(records: &[TrialRecord], alphas: &[f64]) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::Empty("no trial records to summarize"));
    }
    if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::Domain(format!("alpha must lie in [0, 1], got {a}")));
    }
    let (null, alt): (Vec<&TrialRecord>, Vec<&TrialRecord>) = records.iter().partition(|r| r.matched_null);
    let sel = |rs: &[&TrialRecord]| rs.iter().map(|r| r.p_selective).collect::<Vec<_>>();
    let naive = |rs: &[&TrialRecord]| rs.iter().map(|r| r.p_naive).collect::<Vec<_>>();
    let (null_sel, null_naive) = (sel(&null), naive(&null));
    let (alt_sel, alt_naive) = (sel(&alt), naive(&alt));
    let ks = |ps: &[f64]| if ps.is_empty() { Ok(None) } else { ks_uniform_statistic(ps).map(Some) };
    Ok(Summary {
        trials: records.len(),
        null_trials: null.len(),
        alternative_trials: alt.len(),
        degenerate_trials: records.iter().filter(|r| r.degenerate).count(),
        accuracy: null.len() as f64 / records.len() as f64,
        ks_selective: ks(&null_sel)?,
        ks_naive: ks(&null_naive)?,
        rates: alphas
            .iter()
            .map(|&alpha| AlphaRates {
                alpha,
                fpr_selective: rate(&null_sel, alpha),
                fpr_naive: rate(&null_naive, alpha),
                tpr_selective: rate(&alt_sel, alpha),
                tpr_naive: rate(&alt_naive, alpha),
            })
            .collect(),
    })
}
